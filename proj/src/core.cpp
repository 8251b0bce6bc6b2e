#include "karc/core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace karc {

namespace {

bool core_debug() {
  static const bool on = std::getenv("KARC_CORE_DEBUG") != nullptr;
  return on;
}

// The defect tolerance the transcription can actually reach depends on the
// dynamics' stiffness; the returned trajectory is re-rolled through the exact
// dynamics either way, so a looser knot tolerance does not loosen the result.
OptimizerParams tuned_opt(const OptimizerParams& base, const RobotModel& model) {
  OptimizerParams op = base;
  if (model.kind == ModelKind::Quadrotor2) op.eps_dyn = std::max(op.eps_dyn, 1e-4);
  return op;
}

double pieces_duration(const std::vector<Trajectory>& pieces) {
  double total = 0.0;
  for (const Trajectory& piece : pieces) total += piece.duration();
  return total;
}

int pieces_sample_count(const std::vector<Trajectory>& pieces) {
  int count = 0;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const int horizon = pieces[p].horizon();
    count += (p == 0) ? horizon : horizon - 1;
  }
  return count;
}

// Flat sample k -> (piece, in-piece state index). Junction states belong to
// the earlier piece; repeated first states of later pieces are skipped.
void locate_flat(const std::vector<Trajectory>& pieces, int k, int& piece, int& index) {
  int remaining = k;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const int count = (p == 0) ? pieces[p].horizon() : pieces[p].horizon() - 1;
    if (remaining < count) {
      piece = static_cast<int>(p);
      index = (p == 0) ? remaining : remaining + 1;
      return;
    }
    remaining -= count;
  }
  throw std::out_of_range("locate_flat: sample index past the end of the trajectory");
}

const State& flat_state(const std::vector<Trajectory>& pieces, int k) {
  int piece = 0, index = 0;
  locate_flat(pieces, k, piece, index);
  return pieces[piece].states[index];
}

SampledTrack pieces_track(const RobotModel& model, const std::vector<Trajectory>& pieces) {
  SampledTrack track;
  track.times.reserve(pieces_sample_count(pieces));
  track.positions.reserve(track.times.capacity());
  double base = 0.0;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const Trajectory& piece = pieces[p];
    for (int k = (p == 0) ? 0 : 1; k < piece.horizon(); ++k) {
      track.times.push_back(base + k * piece.dt);
      track.positions.push_back(position_of(model, piece.states[k]));
    }
    base += piece.duration();
  }
  return track;
}

// Chunk whose wall-time span covers t; the junction instant maps to the
// earlier chunk, matching the flat-sample convention.
int piece_covering(const std::vector<Trajectory>& pieces, double t) {
  double end = 0.0;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    end += pieces[p].duration();
    if (t <= end + 1e-12) return static_cast<int>(p);
  }
  return static_cast<int>(pieces.size()) - 1;
}

std::optional<Conflict> conflict_from(const PairViolation& v,
                                      const std::vector<const std::vector<Trajectory>*>& pieces) {
  if (!v.found) return std::nullopt;
  Conflict c;
  c.robot_i = v.i;
  c.robot_j = v.j;
  c.time = v.time;
  c.sample_i = v.sample_i;
  c.sample_j = v.sample_j;
  c.state_i = flat_state(*pieces[v.i], v.sample_i);
  c.state_j = flat_state(*pieces[v.j], v.sample_j);
  c.distance = v.distance;
  return c;
}

void refresh_queries(Subproblem& sub, const std::vector<RobotProgress>& progress) {
  sub.queries.resize(sub.robots.size());
  for (std::size_t idx = 0; idx < sub.robots.size(); ++idx) {
    const RobotProgress& pr = progress[sub.robots[idx]];
    Query& q = sub.queries[idx];
    q.start = pr.pieces[sub.start_piece[idx]].states.front();
    q.goal = pr.segment_goals[sub.goal_segment[idx]];
    q.alpha = pr.alpha;
  }
}

// Geometric reference for re-optimizing a window: the configurations of the
// chunks being replaced, junction duplicates dropped.
std::vector<Pose> window_reference(const RobotModel& model, const RobotProgress& pr,
                                   int start_piece) {
  std::vector<Pose> reference;
  for (std::size_t p = start_piece; p < pr.pieces.size(); ++p) {
    const Trajectory& piece = pr.pieces[p];
    for (int k = (static_cast<int>(p) == start_piece) ? 0 : 1; k < piece.horizon(); ++k) {
      reference.push_back(extract_configuration(model, piece.states[k]));
    }
  }
  return reference;
}

}  // namespace

double PiecewiseTrajectory::duration() const { return pieces_duration(pieces); }

double PiecewiseTrajectory::piece_start_time(int p) const {
  double t = 0.0;
  for (int q = 0; q < p; ++q) t += pieces[q].duration();
  return t;
}

int PiecewiseTrajectory::sample_count() const { return pieces_sample_count(pieces); }

void PiecewiseTrajectory::locate_sample(int k, int& piece, int& index) const {
  locate_flat(pieces, k, piece, index);
}

SampledTrack PiecewiseTrajectory::track(const RobotModel& model) const {
  return pieces_track(model, pieces);
}

const State& PiecewiseTrajectory::sample_state(int k) const { return flat_state(pieces, k); }

SegmentedPath segment_path(const KinematicPath& path, int m) {
  const int T = static_cast<int>(path.waypoints.size());
  if (m < 1) throw std::invalid_argument("segment_path: need at least one segment");
  if (T < 1) throw std::invalid_argument("segment_path: empty path");
  const int chunk = (T + m - 1) / m;  // ceil(T / m)
  SegmentedPath out;
  out.segments.reserve(m);
  out.milestones.reserve(m);
  int next = 0;
  while (next < T) {
    const int take = std::min(chunk, T - next);
    KinematicPath run;
    run.waypoints.assign(path.waypoints.begin() + next, path.waypoints.begin() + next + take);
    next += take;
    out.milestones.push_back(run.waypoints.back());
    out.segments.push_back(std::move(run));
  }
  while (static_cast<int>(out.segments.size()) < m) {
    KinematicPath rep;
    rep.waypoints.push_back(path.waypoints.back());
    out.milestones.push_back(path.waypoints.back());
    out.segments.push_back(std::move(rep));
  }
  return out;
}

std::optional<Conflict> find_conflict(const std::vector<RobotModel>& models,
                                      const std::vector<Trajectory>& trajectories, double d_min) {
  if (models.size() != trajectories.size())
    throw std::invalid_argument("find_conflict: one model per trajectory required");
  std::vector<SampledTrack> tracks(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].states.empty())
      throw std::invalid_argument("find_conflict: empty trajectory");
    tracks[i] = track_of(models[i], trajectories[i]);
  }
  const PairViolation v = earliest_separation_violation(tracks, d_min);
  if (!v.found) return std::nullopt;
  Conflict c;
  c.robot_i = v.i;
  c.robot_j = v.j;
  c.time = v.time;
  c.sample_i = v.sample_i;
  c.sample_j = v.sample_j;
  c.state_i = trajectories[v.i].states[v.sample_i];
  c.state_j = trajectories[v.j].states[v.sample_j];
  c.distance = v.distance;
  return c;
}

std::optional<Conflict> find_conflict(const std::vector<RobotModel>& models,
                                      const std::vector<PiecewiseTrajectory>& trajectories,
                                      double d_min) {
  if (models.size() != trajectories.size())
    throw std::invalid_argument("find_conflict: one model per trajectory required");
  std::vector<SampledTrack> tracks(trajectories.size());
  std::vector<const std::vector<Trajectory>*> pieces(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].pieces.empty())
      throw std::invalid_argument("find_conflict: empty trajectory");
    tracks[i] = trajectories[i].track(models[i]);
    pieces[i] = &trajectories[i].pieces;
  }
  return conflict_from(earliest_separation_violation(tracks, d_min), pieces);
}

Subproblem create_subproblem(const Conflict& conflict, const std::vector<RobotProgress>& progress,
                             const std::vector<int>& extra_robots) {
  std::vector<int> robots{conflict.robot_i, conflict.robot_j};
  robots.insert(robots.end(), extra_robots.begin(), extra_robots.end());
  std::sort(robots.begin(), robots.end());
  robots.erase(std::unique(robots.begin(), robots.end()), robots.end());

  Subproblem sub;
  sub.level = 0;
  for (int r : robots) {
    if (r < 0 || r >= static_cast<int>(progress.size()) || progress[r].pieces.empty())
      throw std::invalid_argument("create_subproblem: robot without a committed plan");
    const RobotProgress& pr = progress[r];
    int piece = 0, index = 0;
    if (r == conflict.robot_i) {
      locate_flat(pr.pieces, conflict.sample_i, piece, index);
    } else if (r == conflict.robot_j) {
      locate_flat(pr.pieces, conflict.sample_j, piece, index);
    } else {
      piece = piece_covering(pr.pieces, conflict.time);
    }
    sub.robots.push_back(r);
    sub.start_piece.push_back(piece);
    sub.goal_segment.push_back(pr.piece_end_segment.back());
  }
  refresh_queries(sub, progress);
  return sub;
}

bool adapt_subproblem(Subproblem& sub, const std::vector<RobotProgress>& progress) {
  bool widened = false;
  std::vector<int> start = sub.start_piece;
  std::vector<int> goal = sub.goal_segment;
  for (std::size_t idx = 0; idx < sub.robots.size(); ++idx) {
    const int segments = static_cast<int>(progress[sub.robots[idx]].segment_goals.size());
    if (start[idx] > 0) {
      --start[idx];
      widened = true;
    }
    if (goal[idx] < segments - 1) {
      ++goal[idx];
      widened = true;
    }
  }
  if (!widened) return false;
  sub.start_piece = std::move(start);
  sub.goal_segment = std::move(goal);
  ++sub.level;
  refresh_queries(sub, progress);
  return true;
}

SubproblemResult solve_subproblem(Subproblem& sub, const std::vector<RobotModel>& models,
                                  const Workspace& ws, double d_min,
                                  const std::vector<RobotProgress>& progress,
                                  const KarcParams& params, const Deadline& deadline) {
  SubproblemResult out;
  std::vector<RobotModel> local_models;
  for (int r : sub.robots) local_models.push_back(models[r]);

  for (;;) {
    const std::uint64_t salt = derive_seed(sub.salt, 7, static_cast<std::uint64_t>(sub.level));
    const auto t_level = std::chrono::steady_clock::now();
    const auto level_elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_level).count();
    };

    const auto rung_planner = [&](std::uint64_t stream) {
      PlannerParams pp = params.planner;
      pp.seed = derive_seed(params.seed, stream, salt);
      return pp;
    };

    // If two subproblem goals cannot possibly be occupied d_min apart, no
    // solver can succeed at this level; widen instead of burning budget.
    bool goals_feasible = true;
    for (std::size_t i = 0; i < sub.robots.size(); ++i)
      for (std::size_t j = i + 1; j < sub.robots.size(); ++j) {
        const double gap = (position_of(models[sub.robots[i]], sub.queries[i].goal) -
                            position_of(models[sub.robots[j]], sub.queries[j].goal))
                               .norm();
        if (gap + sub.queries[i].alpha + sub.queries[j].alpha < d_min) goals_feasible = false;
      }
    if (!goals_feasible) {
      if (core_debug())
        std::cerr << "[core] subproblem level " << sub.level << ": goals cannot separate, widening"
                  << std::endl;
      if (deadline.expired() || !adapt_subproblem(sub, progress)) return out;
      continue;
    }
    if (core_debug()) {
      std::cerr << "[core] subproblem level " << sub.level << " robots";
      for (std::size_t idx = 0; idx < sub.robots.size(); ++idx)
        std::cerr << " " << sub.robots[idx] << "(p" << sub.start_piece[idx] << "->g"
                  << sub.goal_segment[idx] << ")";
      std::cerr << std::endl;
    }

    // Rung 1: prioritized trajectory optimization, warm-started from the
    // chunks being replaced.
    if (!deadline.expired()) {
      std::vector<TranscriptionProblem> problems;
      problems.reserve(sub.robots.size());
      for (std::size_t idx = 0; idx < sub.robots.size(); ++idx) {
        const int r = sub.robots[idx];
        const Query& q = sub.queries[idx];
        std::vector<Pose> reference = window_reference(models[r], progress[r], sub.start_piece[idx]);
        TranscriptionProblem problem =
            transcribe(models[r], ws, reference, q.start, q.goal, q.alpha);
        problem.moving.d_min = d_min;
        problems.push_back(std::move(problem));
      }
      OptimizerParams op = tuned_opt(params.opt, local_models.front());
      op.jitter_seed = derive_seed(params.seed, 11, salt);
      std::vector<OptResult> results = optimize_prioritized(problems, op);
      if (core_debug()) {
        std::cerr << "[core]   rung prioritized:";
        for (const OptResult& res : results) std::cerr << " " << (res.success ? "ok" : "FAIL");
        std::cerr << " (" << level_elapsed() << " s)" << std::endl;
      }
      if (std::all_of(results.begin(), results.end(),
                      [](const OptResult& res) { return res.success; })) {
        out.solved = true;
        out.rung = Rung::PrioritizedOpt;
        out.level = sub.level;
        for (OptResult& res : results) out.chunks.push_back(std::move(res.trajectory));
        return out;
      }
    }

    // Rung 2: decoupled kinodynamic RRT.
    if (!deadline.expired()) {
      const PlannerParams pp = rung_planner(12);
      auto found = plan_decoupled_rrt(local_models, ws, sub.queries, d_min, pp, deadline);
      if (core_debug())
        std::cerr << "[core]   rung decoupled: " << (found ? "ok" : "FAIL") << " ("
                  << level_elapsed() << " s)" << std::endl;
      if (found) {
        out.solved = true;
        out.rung = Rung::DecoupledRrt;
        out.level = sub.level;
        out.chunks = std::move(*found);
        return out;
      }
    }

    // Rung 3: composite kinodynamic RRT in the joint state space.
    if (!deadline.expired()) {
      const PlannerParams pp = rung_planner(13);
      auto found = plan_composite_rrt(local_models, ws, sub.queries, d_min, pp, deadline);
      if (core_debug())
        std::cerr << "[core]   rung composite: " << (found ? "ok" : "FAIL") << " ("
                  << level_elapsed() << " s)" << std::endl;
      if (found) {
        out.solved = true;
        out.rung = Rung::CompositeRrt;
        out.level = sub.level;
        out.chunks = std::move(*found);
        return out;
      }
    }

    if (deadline.expired()) return out;
    if (!adapt_subproblem(sub, progress)) return out;
  }
}

Solution plan(const Scenario& scenario, const KarcParams& params) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const int n = static_cast<int>(scenario.robots.size());
  if (n == 0) throw std::invalid_argument("plan: scenario has no robots");
  if (params.segments < 1) throw std::invalid_argument("plan: segments must be >= 1");
  if (params.timeout_s <= 0.0) throw std::invalid_argument("plan: timeout must be positive");
  for (const ScenarioRobot& robot : scenario.robots) {
    if (robot.start.size() != robot.model.state_dim() ||
        robot.goal.size() != robot.model.state_dim())
      throw std::invalid_argument("plan: state dimension mismatch for robot " + robot.id);
    if (!in_free_space(robot.model.body, extract_configuration(robot.model, robot.start),
                       scenario.workspace))
      throw std::invalid_argument("plan: start of robot " + robot.id + " is not in free space");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double gap =
          (position_of(scenario.robots[i].model, scenario.robots[i].start) -
           position_of(scenario.robots[j].model, scenario.robots[j].start))
              .norm();
      if (gap < scenario.d_min - 1e-12)
        throw std::invalid_argument("plan: starts of robots " + scenario.robots[i].id + " and " +
                                    scenario.robots[j].id + " are closer than d_min");
    }
  }

  const Deadline deadline(params.timeout_s);
  const Workspace& ws = scenario.workspace;
  std::vector<RobotModel> models;
  models.reserve(n);
  for (const ScenarioRobot& robot : scenario.robots) models.push_back(robot.model);

  Solution sol;
  sol.robots.resize(n);
  std::vector<RobotProgress> progress(n);

  const auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };
  const auto log_line = [&](const nlohmann::json& j) {
    if (params.log) *params.log << j.dump() << '\n';
  };
  const auto finish = [&](bool success, std::string reason) {
    sol.success = success;
    sol.failure_reason = std::move(reason);
    for (int r = 0; r < n; ++r) sol.robots[r].pieces = std::move(progress[r].pieces);
    sol.metrics.path_cost = 0.0;
    for (const PiecewiseTrajectory& pw : sol.robots)
      if (!pw.pieces.empty()) sol.metrics.path_cost += pw.duration();
    sol.metrics.runtime_s = elapsed();
    log_line({{"record", success ? "solution" : "failure"},
              {"reason", sol.failure_reason},
              {"path_cost_s", sol.metrics.path_cost},
              {"conflicts", sol.metrics.conflicts_resolved},
              {"runtime_s", sol.metrics.runtime_s}});
    return sol;
  };

  // Geometric seeding: one kinematic path per robot, robots independent.
  std::vector<std::optional<KinematicPath>> seeds(n);
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n; ++r) {
    PlannerParams pp = params.planner;
    pp.seed = derive_seed(params.seed, 1, static_cast<std::uint64_t>(r));
    seeds[r] = plan_kinematic(models[r], ws,
                              Query{scenario.robots[r].start, scenario.robots[r].goal,
                                    scenario.robots[r].alpha},
                              pp, deadline);
  }
  for (int r = 0; r < n; ++r) {
    if (!seeds[r])
      return finish(false, "geometric seeding failed for robot " + scenario.robots[r].id);
  }

  // Segmentation and the subgoal ladder. Intermediate subgoals are milestone
  // configurations at rest; the last subgoal is the exact goal state.
  const int m = params.segments;
  std::vector<SegmentedPath> segpaths(n);
  for (int r = 0; r < n; ++r) {
    segpaths[r] = segment_path(*seeds[r], m);
    RobotProgress& pr = progress[r];
    pr.alpha = scenario.robots[r].alpha;
    pr.segment_goals.reserve(m);
    for (int s = 0; s < m; ++s) {
      pr.segment_goals.push_back(s + 1 == m
                                     ? scenario.robots[r].goal
                                     : state_from_pose(models[r], segpaths[r].milestones[s]));
    }
  }

  std::uint64_t resolution_counter = 0;
  for (int s = 0; s < m; ++s) {
    if (deadline.expired()) return finish(false, "timed out during segment planning");

    std::vector<int> todo;
    for (int r = 0; r < n; ++r) {
      const RobotProgress& pr = progress[r];
      if (pr.pieces.empty() || pr.piece_end_segment.back() < s) todo.push_back(r);
    }

    std::vector<std::optional<Trajectory>> chunk(todo.size());
    std::vector<char> fallback(todo.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (int ti = 0; ti < static_cast<int>(todo.size()); ++ti) {
      const int r = todo[ti];
      const RobotProgress& pr = progress[r];
      const State start_state = pr.pieces.empty() ? scenario.robots[r].start
                                                  : pr.pieces.back().states.back();
      const State& goal_state = pr.segment_goals[s];
      TranscriptionProblem problem = transcribe(models[r], ws, segpaths[r].segments[s].waypoints,
                                                start_state, goal_state, pr.alpha);
      const std::uint64_t slot = (static_cast<std::uint64_t>(r) * 4096u + s) * 8u;
      for (int attempt = 0; attempt < 3 && !chunk[ti] && !deadline.expired(); ++attempt) {
        OptimizerParams op = tuned_opt(params.opt, models[r]);
        op.jitter_seed = derive_seed(params.seed, 2, slot + attempt);
        OptResult opt = optimize_single(problem, op);
        if (opt.success) chunk[ti] = std::move(opt.trajectory);
      }
      for (int attempt = 0; attempt < 2 && !chunk[ti] && !deadline.expired(); ++attempt) {
        PlannerParams pp = params.planner;
        pp.seed = derive_seed(params.seed, 3, slot + attempt);
        auto found = plan_kinodynamic_rrt(models[r], ws, Query{start_state, goal_state, pr.alpha},
                                          MovingObstacleSet{}, pp, deadline);
        if (found) {
          chunk[ti] = std::move(*found);
          fallback[ti] = 1;
        }
      }
    }
    int segment_fallbacks = 0;
    for (std::size_t ti = 0; ti < todo.size(); ++ti) {
      const int r = todo[ti];
      if (!chunk[ti])
        return finish(false, "segment " + std::to_string(s) + " planning failed for robot " +
                                 scenario.robots[r].id);
      progress[r].pieces.push_back(std::move(*chunk[ti]));
      progress[r].piece_end_segment.push_back(s);
      if (fallback[ti]) {
        ++sol.metrics.optimizer_fallbacks;
        ++segment_fallbacks;
      }
    }

    // Conflict resolution until the whole committed prefix is separation-free.
    std::vector<std::vector<int>> entangled;
    int segment_conflicts = 0;
    int rung_counts[3] = {0, 0, 0};
    for (int round = 0;; ++round) {
      if (deadline.expired()) return finish(false, "timed out resolving conflicts");
      std::vector<SampledTrack> tracks(n);
      std::vector<const std::vector<Trajectory>*> pieces(n);
      for (int r = 0; r < n; ++r) {
        tracks[r] = pieces_track(models[r], progress[r].pieces);
        pieces[r] = &progress[r].pieces;
      }
      const auto conflict =
          conflict_from(earliest_separation_violation(tracks, scenario.d_min), pieces);
      if (!conflict) break;
      if (core_debug())
        std::cerr << "[core] segment " << s << " round " << round << ": conflict "
                  << conflict->robot_i << "-" << conflict->robot_j << " t=" << conflict->time
                  << " dist=" << conflict->distance << std::endl;
      if (round >= params.max_conflict_rounds)
        return finish(false, "conflict budget exhausted in segment " + std::to_string(s));

      // A robot already entangled in this segment pulls its whole group in.
      std::vector<int> extra;
      for (auto it = entangled.begin(); it != entangled.end();) {
        const bool overlap =
            std::find(it->begin(), it->end(), conflict->robot_i) != it->end() ||
            std::find(it->begin(), it->end(), conflict->robot_j) != it->end();
        if (overlap) {
          extra.insert(extra.end(), it->begin(), it->end());
          it = entangled.erase(it);
        } else {
          ++it;
        }
      }
      Subproblem sub = create_subproblem(*conflict, progress, extra);
      sub.salt = derive_seed(params.seed, 9, resolution_counter++);
      SubproblemResult res = solve_subproblem(sub, models, ws, scenario.d_min, progress, params,
                                              deadline);
      if (!res.solved) {
        return finish(false, "conflict between robots " + scenario.robots[conflict->robot_i].id +
                                 " and " + scenario.robots[conflict->robot_j].id +
                                 " in segment " + std::to_string(s) + " could not be resolved");
      }
      for (std::size_t idx = 0; idx < sub.robots.size(); ++idx) {
        RobotProgress& pr = progress[sub.robots[idx]];
        pr.pieces.resize(sub.start_piece[idx]);
        pr.piece_end_segment.resize(sub.start_piece[idx]);
        pr.pieces.push_back(std::move(res.chunks[idx]));
        pr.piece_end_segment.push_back(sub.goal_segment[idx]);
      }
      entangled.push_back(sub.robots);
      ++sol.metrics.conflicts_resolved;
      ++segment_conflicts;
      ++rung_counts[static_cast<int>(res.rung)];
      sol.metrics.max_level = std::max(sol.metrics.max_level, res.level);
    }
    sol.metrics.prioritized_successes += rung_counts[0];
    sol.metrics.decoupled_successes += rung_counts[1];
    sol.metrics.composite_successes += rung_counts[2];

    if (params.log) {
      nlohmann::json planned = nlohmann::json::array();
      for (int r : todo) planned.push_back(scenario.robots[r].id);
      log_line({{"record", "segment"},
                {"segment", s},
                {"planned", planned},
                {"fallbacks", segment_fallbacks},
                {"conflicts", segment_conflicts},
                {"rungs",
                 {{"prioritized", rung_counts[0]},
                  {"decoupled", rung_counts[1]},
                  {"composite", rung_counts[2]}}},
                {"elapsed_s", elapsed()}});
    }
  }

  return finish(true, "");
}

}  // namespace karc
