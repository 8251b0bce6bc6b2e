#include "karc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace karc {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool within_state_bounds(const RobotModel& model, const State& x) {
  for (const auto& b : model.state_bounds)
    if (x[b.index] < b.lo || x[b.index] > b.hi) return false;
  return true;
}

State sample_state(const RobotModel& model, const Workspace& ws, std::mt19937_64& rng) {
  State x = State::Zero(model.state_dim());
  for (int d = 0; d < ws.dim; ++d) {
    std::uniform_real_distribution<double> coord(ws.lo[d], ws.hi[d]);
    x[d] = coord(rng);
  }
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int idx : model.angle_indices()) x[idx] = angle(rng);
  for (const auto& b : model.state_bounds) {
    std::uniform_real_distribution<double> box(b.lo, b.hi);
    x[b.index] = box(rng);
  }
  return x;
}

Control sample_control(const RobotModel& model, std::mt19937_64& rng) {
  Control u(model.control_dim());
  for (int i = 0; i < model.control_dim(); ++i) {
    std::uniform_real_distribution<double> box(model.control_lo[i], model.control_hi[i]);
    u[i] = box(rng);
  }
  return u;
}

// The quadrotor's torque bounds dwarf its inertia at the planner timestep
// (a full-box torque changes angular rate by 5 rad/s in one step, beyond the
// rate bound), so uniform draws almost never yield valid successors. Sample
// candidates as thrust plus small torques instead, alternating two torque
// scales for a mix of correction and exploration.
Control sample_candidate(const RobotModel& model, std::mt19937_64& rng, int c) {
  if (model.kind != ModelKind::Quadrotor2) return sample_control(model, rng);
  Control u = model.reference_control();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  if (c & 1) {
    u[0] = std::clamp(u[0] + 2.5 * unit(rng), model.control_lo[0], model.control_hi[0]);
  } else {
    std::uniform_real_distribution<double> thrust(model.control_lo[0], model.control_hi[0]);
    u[0] = thrust(rng);
  }
  const double torque_scale = (c & 1) ? 0.025 : 0.1;
  for (int i = 1; i < model.control_dim(); ++i) u[i] = torque_scale * unit(rng);
  return u;
}

// Pick the sampled control whose one-step successor lands closest to target.
Control best_control_toward(const RobotModel& model, const State& from, const State& target,
                            double dt, int candidates, std::mt19937_64& rng) {
  Control best = sample_candidate(model, rng, 0);
  double best_d = state_distance(model, euler_step(model, from, best, dt), target);
  for (int c = 1; c < candidates; ++c) {
    const Control u = sample_candidate(model, rng, c);
    const double d = state_distance(model, euler_step(model, from, u, dt), target);
    if (d < best_d) {
      best_d = d;
      best = u;
    }
  }
  return best;
}

// Deterministic feedback law driving x toward goal, clamped into the control
// box. Random extension explores globally but almost never produces the
// decelerate-and-settle sequences needed to finish inside a full-state goal
// region; this policy supplies exactly those.
Control steer_control(const RobotModel& model, const State& x, const State& goal) {
  Control u = Control::Zero(model.control_dim());
  switch (model.kind) {
    case ModelKind::Unicycle1: {
      const double dx = goal[0] - x[0];
      const double dy = goal[1] - x[1];
      const double dist = std::hypot(dx, dy);
      const double bearing = dist > 1e-9 ? std::atan2(dy, dx) : goal[2];
      // near the goal position, blend the steering target into the goal heading
      const double blend = std::min(1.0, dist / 0.3);
      const double heading_err =
          blend * angle_diff(bearing, x[2]) + (1.0 - blend) * angle_diff(goal[2], x[2]);
      u[0] = 2.0 * dist * std::cos(heading_err);
      u[1] = 4.0 * heading_err;
      break;
    }
    case ModelKind::Unicycle2: {
      const double dx = goal[0] - x[0];
      const double dy = goal[1] - x[1];
      const double dist = std::hypot(dx, dy);
      const double bearing = dist > 1e-9 ? std::atan2(dy, dx) : goal[2];
      const double blend = std::min(1.0, dist / 0.3);
      const double heading_err =
          blend * angle_diff(bearing, x[2]) + (1.0 - blend) * angle_diff(goal[2], x[2]);
      const double v_des = std::clamp(2.0 * dist * std::cos(heading_err), -2.0, 2.0);
      const double w_des = std::clamp(4.0 * heading_err, -2.0, 2.0);
      u[0] = 4.0 * (v_des - x[3]);
      u[1] = 4.0 * (w_des - x[4]);
      break;
    }
    case ModelKind::Quadrotor2: {
      // PD position loop commands an acceleration, realized by thrust plus a
      // small-angle attitude reference tracked by a PD attitude loop.
      const Eigen::Vector3d a_des =
          (2.0 * (goal.segment<3>(0) - x.segment<3>(0)) - 3.0 * x.segment<3>(6))
              .cwiseMax(-3.0)
              .cwiseMin(3.0);
      const double yaw = x[5];
      const double ax_b = std::cos(yaw) * a_des.x() + std::sin(yaw) * a_des.y();
      const double ay_b = -std::sin(yaw) * a_des.x() + std::cos(yaw) * a_des.y();
      const double pitch_des = std::clamp(ax_b / model.gravity, -0.3, 0.3);
      const double roll_des = std::clamp(-ay_b / model.gravity, -0.3, 0.3);
      u[0] = model.mass * (model.gravity + a_des.z());
      const Eigen::Vector3d att_err(angle_diff(roll_des, x[3]), angle_diff(pitch_des, x[4]),
                                    angle_diff(goal[5], x[5]));
      for (int i = 0; i < 3; ++i)
        u[1 + i] = model.inertia[i] * (25.0 * att_err[i] - 10.0 * x[9 + i]);
      break;
    }
  }
  return model.clamp_control(u);
}

// Validation poses along a straight position segment inherit the destination
// orientation; spacing is at most `resolution`.
bool edge_free(const ConvexPolytope& body, const Pose& from, const Pose& to, const Workspace& ws,
               double resolution) {
  const double len = (to.position - from.position).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / resolution)));
  for (int k = 1; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    const Pose p(from.position + s * (to.position - from.position), to.rpy);
    if (!in_free_space(body, p, ws)) return false;
  }
  return true;
}

// Expand a chain of configurations so consecutive waypoints are at most
// `delta` apart. Intermediate orientations follow the direction of travel for
// planar robots and stay level for the quadrotor; original waypoints keep
// their own orientation.
KinematicPath densify(const RobotModel& model, const std::vector<Pose>& chain, double delta) {
  KinematicPath path;
  path.waypoints.push_back(chain.front());
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const Pose& a = chain[i];
    const Pose& b = chain[i + 1];
    const Eigen::Vector3d step_vec = b.position - a.position;
    const double len = step_vec.norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / delta)));
    Eigen::Vector3d mid_rpy = Eigen::Vector3d::Zero();
    if (model.kind != ModelKind::Quadrotor2 && len > 0.0)
      mid_rpy[2] = std::atan2(step_vec.y(), step_vec.x());
    for (int k = 1; k < n; ++k) {
      const double s = static_cast<double>(k) / n;
      path.waypoints.emplace_back(a.position + s * step_vec, mid_rpy);
    }
    path.waypoints.push_back(b);
  }
  return path;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ splitmix64(stream)) ^ index);
}

bool MovingObstacleSet::clear(const Eigen::Vector3d& position, double t) const {
  for (const auto& tr : tracks) {
    const auto it = std::upper_bound(tr.times.begin(), tr.times.end(), t);
    const std::size_t k =
        it == tr.times.begin() ? 0 : static_cast<std::size_t>(it - tr.times.begin()) - 1;
    if ((tr.positions[k] - position).norm() < d_min) return false;
  }
  return true;
}

SampledTrack track_of(const RobotModel& model, const Trajectory& traj) {
  SampledTrack track;
  track.times.reserve(traj.states.size());
  track.positions.reserve(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    track.times.push_back(static_cast<double>(k) * traj.dt);
    track.positions.push_back(position_of(model, traj.states[k]));
  }
  return track;
}

std::optional<KinematicPath> plan_kinematic(const RobotModel& model, const Workspace& ws,
                                            const Query& query, const PlannerParams& params,
                                            const Deadline& deadline) {
  const ConvexPolytope& body = model.body;
  const Pose start_c = extract_configuration(model, query.start);
  const Pose goal_c = extract_configuration(model, query.goal);
  if (!in_free_space(body, start_c, ws) || !in_free_space(body, goal_c, ws)) return std::nullopt;

  if (edge_free(body, start_c, goal_c, ws, params.collision_resolution))
    return densify(model, {start_c, goal_c}, params.steer_delta);

  struct Node {
    Pose pose;
    int parent;
  };
  std::vector<Node> nodes{{start_c, -1}};
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto finish = [&](int leaf) {
    std::vector<Pose> chain;
    for (int k = leaf; k >= 0; k = nodes[static_cast<std::size_t>(k)].parent)
      chain.push_back(nodes[static_cast<std::size_t>(k)].pose);
    std::reverse(chain.begin(), chain.end());
    chain.push_back(goal_c);
    return densify(model, chain, params.steer_delta);
  };

  for (int it = 0; it < params.max_iterations; ++it) {
    if ((it & 511) == 0 && deadline.expired()) return std::nullopt;
    Eigen::Vector3d target;
    if (unit(rng) < params.goal_bias) {
      target = goal_c.position;
    } else {
      const double u0 = unit(rng);
      const double u1 = unit(rng);
      const double u2 = unit(rng);
      target = ws.sample(Eigen::Vector3d(u0, u1, u2));
    }
    int nearest = 0;
    double nearest_d = (nodes[0].pose.position - target).norm();
    for (std::size_t k = 1; k < nodes.size(); ++k) {
      const double d = (nodes[k].pose.position - target).norm();
      if (d < nearest_d) {
        nearest_d = d;
        nearest = static_cast<int>(k);
      }
    }
    if (nearest_d == 0.0) continue;
    const Pose& from = nodes[static_cast<std::size_t>(nearest)].pose;
    const Eigen::Vector3d dir = (target - from.position) / nearest_d;
    const double step_len = std::min(params.steer_delta, nearest_d);
    Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
    if (model.kind != ModelKind::Quadrotor2) rpy[2] = std::atan2(dir.y(), dir.x());
    const Pose next(from.position + step_len * dir, rpy);
    if (!edge_free(body, from, next, ws, params.collision_resolution)) continue;
    nodes.push_back({next, nearest});
    if ((next.position - goal_c.position).norm() <= query.alpha &&
        edge_free(body, next, goal_c, ws, params.collision_resolution))
      return finish(static_cast<int>(nodes.size()) - 1);
  }
  return std::nullopt;
}

std::optional<Trajectory> plan_kinodynamic_rrt(const RobotModel& model, const Workspace& ws,
                                               const Query& query,
                                               const MovingObstacleSet& moving,
                                               const PlannerParams& params,
                                               const Deadline& deadline) {
  const ConvexPolytope& body = model.body;
  auto valid = [&](const State& x, double t) {
    return within_state_bounds(model, x) &&
           in_free_space(body, extract_configuration(model, x), ws) &&
           moving.clear(position_of(model, x), t);
  };
  if (!valid(query.start, 0.0)) return std::nullopt;
  if (goal_distance(model, query.start, query.goal) <= query.alpha) {
    Trajectory trivial;
    trivial.states.push_back(query.start);
    trivial.dt = params.rrt_dt;
    return trivial;
  }

  struct Node {
    State state;
    int parent;
    Control control;
    int depth;
  };
  std::vector<Node> nodes{{query.start, -1, Control(), 0}};
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> steps_dist(1, params.max_extension_steps);

  auto finish = [&](int leaf) {
    Trajectory traj;
    traj.dt = params.rrt_dt;
    std::vector<Control> controls;
    int k = leaf;
    while (k >= 0) {
      const Node& n = nodes[static_cast<std::size_t>(k)];
      traj.states.push_back(n.state);
      if (n.parent >= 0) controls.push_back(n.control);
      k = n.parent;
    }
    std::reverse(traj.states.begin(), traj.states.end());
    std::reverse(controls.begin(), controls.end());
    traj.controls = std::move(controls);
    return traj;
  };

  // Roll out the steering policy toward the goal state, giving up after a
  // stretch of steps with no new best distance.
  auto goal_connect = [&](int from) -> int {
    int at = from;
    double best = goal_distance(model, nodes[static_cast<std::size_t>(at)].state, query.goal);
    int stalled = 0;
    for (int s = 0; s < params.goal_connect_steps && stalled < 12; ++s) {
      const Node& cur = nodes[static_cast<std::size_t>(at)];
      const Control u = steer_control(model, cur.state, query.goal);
      const State next = euler_step(model, cur.state, u, params.rrt_dt);
      if (!valid(next, (cur.depth + 1) * params.rrt_dt)) break;
      nodes.push_back({next, at, u, cur.depth + 1});
      at = static_cast<int>(nodes.size()) - 1;
      const double d = goal_distance(model, next, query.goal);
      if (d <= query.alpha) return at;
      if (d < best) {
        best = d;
        stalled = 0;
      } else {
        ++stalled;
      }
    }
    return -1;
  };

  for (int attempt = 0; attempt < params.max_extensions; ++attempt) {
    if ((attempt & 255) == 0 && deadline.expired()) return std::nullopt;
    const State target =
        unit(rng) < params.goal_bias ? query.goal : sample_state(model, ws, rng);
    int nearest = 0;
    double nearest_d = state_distance(model, nodes[0].state, target);
    for (std::size_t k = 1; k < nodes.size(); ++k) {
      const double d = state_distance(model, nodes[k].state, target);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = static_cast<int>(k);
      }
    }
    const Control u = best_control_toward(model, nodes[static_cast<std::size_t>(nearest)].state,
                                          target, params.rrt_dt, params.control_candidates, rng);
    const int steps = steps_dist(rng);
    int at = nearest;
    bool grew = false;
    for (int s = 0; s < steps; ++s) {
      const Node& cur = nodes[static_cast<std::size_t>(at)];
      const State next = euler_step(model, cur.state, u, params.rrt_dt);
      const int depth = cur.depth + 1;
      if (!valid(next, depth * params.rrt_dt)) break;
      nodes.push_back({next, at, u, depth});
      at = static_cast<int>(nodes.size()) - 1;
      grew = true;
      if (goal_distance(model, next, query.goal) <= query.alpha) return finish(at);
    }
    if (grew && (position_of(model, nodes[static_cast<std::size_t>(at)].state) -
                 position_of(model, query.goal))
                        .norm() <= params.goal_connect_radius) {
      const int hit = goal_connect(at);
      if (hit >= 0) return finish(hit);
    }
  }
  return std::nullopt;
}

std::optional<std::vector<Trajectory>> plan_decoupled_rrt(const std::vector<RobotModel>& models,
                                                          const Workspace& ws,
                                                          const std::vector<Query>& queries,
                                                          double d_min,
                                                          const PlannerParams& params,
                                                          const Deadline& deadline) {
  std::vector<Trajectory> result;
  MovingObstacleSet moving;
  moving.d_min = d_min;
  for (std::size_t r = 0; r < models.size(); ++r) {
    PlannerParams local = params;
    local.seed = derive_seed(params.seed, 101, r);
    auto traj = plan_kinodynamic_rrt(models[r], ws, queries[r], moving, local, deadline);
    if (!traj) return std::nullopt;
    moving.tracks.push_back(track_of(models[r], *traj));
    result.push_back(std::move(*traj));
  }
  return result;
}

std::optional<std::vector<Trajectory>> plan_composite_rrt(const std::vector<RobotModel>& models,
                                                          const Workspace& ws,
                                                          const std::vector<Query>& queries,
                                                          double d_min,
                                                          const PlannerParams& params,
                                                          const Deadline& deadline) {
  const int n = static_cast<int>(models.size());
  auto robot_valid = [&](int r, const State& x) {
    return within_state_bounds(models[static_cast<std::size_t>(r)], x) &&
           in_free_space(models[static_cast<std::size_t>(r)].body,
                         extract_configuration(models[static_cast<std::size_t>(r)], x), ws);
  };
  auto separated = [&](const std::vector<State>& xs) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if ((position_of(models[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i)]) -
             position_of(models[static_cast<std::size_t>(j)], xs[static_cast<std::size_t>(j)]))
                .norm() < d_min)
          return false;
    return true;
  };
  auto all_at_goal = [&](const std::vector<State>& xs) {
    for (int r = 0; r < n; ++r)
      if (goal_distance(models[static_cast<std::size_t>(r)], xs[static_cast<std::size_t>(r)],
                        queries[static_cast<std::size_t>(r)].goal) >
          queries[static_cast<std::size_t>(r)].alpha)
        return false;
    return true;
  };

  std::vector<State> start;
  for (int r = 0; r < n; ++r) {
    start.push_back(queries[static_cast<std::size_t>(r)].start);
    if (!robot_valid(r, start.back())) return std::nullopt;
  }
  if (!separated(start)) return std::nullopt;

  auto make_result = [&](const std::vector<std::vector<State>>& joint_states,
                         const std::vector<std::vector<Control>>& joint_controls) {
    std::vector<Trajectory> result(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
      result[static_cast<std::size_t>(r)].states = joint_states[static_cast<std::size_t>(r)];
      result[static_cast<std::size_t>(r)].controls = joint_controls[static_cast<std::size_t>(r)];
      result[static_cast<std::size_t>(r)].dt = params.rrt_dt;
    }
    return result;
  };

  if (all_at_goal(start)) {
    std::vector<std::vector<State>> sts(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) sts[static_cast<std::size_t>(r)] = {start[static_cast<std::size_t>(r)]};
    return make_result(sts, std::vector<std::vector<Control>>(static_cast<std::size_t>(n)));
  }

  struct Node {
    std::vector<State> states;
    std::vector<Control> controls;  // from parent; empty at root
    int parent;
  };
  std::vector<Node> nodes{{start, {}, -1}};
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> steps_dist(1, params.max_extension_steps);

  auto finish = [&](int leaf) {
    std::vector<std::vector<State>> sts(static_cast<std::size_t>(n));
    std::vector<std::vector<Control>> ctl(static_cast<std::size_t>(n));
    int k = leaf;
    while (k >= 0) {
      const Node& node = nodes[static_cast<std::size_t>(k)];
      for (int r = 0; r < n; ++r) {
        sts[static_cast<std::size_t>(r)].push_back(node.states[static_cast<std::size_t>(r)]);
        if (node.parent >= 0)
          ctl[static_cast<std::size_t>(r)].push_back(node.controls[static_cast<std::size_t>(r)]);
      }
      k = node.parent;
    }
    for (int r = 0; r < n; ++r) {
      std::reverse(sts[static_cast<std::size_t>(r)].begin(), sts[static_cast<std::size_t>(r)].end());
      std::reverse(ctl[static_cast<std::size_t>(r)].begin(), ctl[static_cast<std::size_t>(r)].end());
    }
    return make_result(sts, ctl);
  };

  auto goal_deficit = [&](const std::vector<State>& xs) {
    double total = 0.0;
    for (int r = 0; r < n; ++r)
      total += std::max(0.0, goal_distance(models[static_cast<std::size_t>(r)],
                                           xs[static_cast<std::size_t>(r)],
                                           queries[static_cast<std::size_t>(r)].goal) -
                                 queries[static_cast<std::size_t>(r)].alpha);
    return total;
  };

  // Joint policy rollout: hold controls for robots already inside tolerance,
  // the steering policy for the rest, giving up after a stretch of steps
  // without shrinking the summed goal overshoot.
  auto goal_connect = [&](int from) -> int {
    int at = from;
    double best = goal_deficit(nodes[static_cast<std::size_t>(at)].states);
    int stalled = 0;
    for (int s = 0; s < params.goal_connect_steps && stalled < 12; ++s) {
      const Node& cur = nodes[static_cast<std::size_t>(at)];
      std::vector<Control> u(static_cast<std::size_t>(n));
      std::vector<State> next(static_cast<std::size_t>(n));
      for (int r = 0; r < n; ++r) {
        const auto& model = models[static_cast<std::size_t>(r)];
        const State& x = cur.states[static_cast<std::size_t>(r)];
        const Query& q = queries[static_cast<std::size_t>(r)];
        u[static_cast<std::size_t>(r)] = goal_distance(model, x, q.goal) <= q.alpha
                                             ? model.hold_control(x)
                                             : steer_control(model, x, q.goal);
        next[static_cast<std::size_t>(r)] =
            euler_step(model, x, u[static_cast<std::size_t>(r)], params.rrt_dt);
      }
      bool ok = true;
      for (int r = 0; r < n && ok; ++r) ok = robot_valid(r, next[static_cast<std::size_t>(r)]);
      if (!ok || !separated(next)) break;
      nodes.push_back({next, u, at});
      at = static_cast<int>(nodes.size()) - 1;
      const double d = goal_deficit(next);
      if (d == 0.0) return at;
      if (d < best) {
        best = d;
        stalled = 0;
      } else {
        ++stalled;
      }
    }
    return -1;
  };

  for (int attempt = 0; attempt < params.max_extensions; ++attempt) {
    if ((attempt & 255) == 0 && deadline.expired()) return std::nullopt;
    std::vector<State> target(static_cast<std::size_t>(n));
    const bool to_goal = unit(rng) < params.goal_bias;
    for (int r = 0; r < n; ++r)
      target[static_cast<std::size_t>(r)] =
          to_goal ? queries[static_cast<std::size_t>(r)].goal
                  : sample_state(models[static_cast<std::size_t>(r)], ws, rng);
    int nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      double d = 0.0;
      for (int r = 0; r < n; ++r)
        d += state_distance(models[static_cast<std::size_t>(r)],
                            nodes[k].states[static_cast<std::size_t>(r)],
                            target[static_cast<std::size_t>(r)]);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = static_cast<int>(k);
      }
    }
    std::vector<Control> u(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
      const auto& model = models[static_cast<std::size_t>(r)];
      const State& from = nodes[static_cast<std::size_t>(nearest)].states[static_cast<std::size_t>(r)];
      if (goal_distance(model, from, queries[static_cast<std::size_t>(r)].goal) <=
          queries[static_cast<std::size_t>(r)].alpha) {
        u[static_cast<std::size_t>(r)] = model.hold_control(from);
      } else {
        u[static_cast<std::size_t>(r)] =
            best_control_toward(model, from, target[static_cast<std::size_t>(r)], params.rrt_dt,
                                params.control_candidates, rng);
      }
    }
    const int steps = steps_dist(rng);
    int at = nearest;
    bool grew = false;
    for (int s = 0; s < steps; ++s) {
      const Node& cur = nodes[static_cast<std::size_t>(at)];
      std::vector<State> next(static_cast<std::size_t>(n));
      bool ok = true;
      for (int r = 0; r < n && ok; ++r) {
        next[static_cast<std::size_t>(r)] =
            euler_step(models[static_cast<std::size_t>(r)], cur.states[static_cast<std::size_t>(r)],
                       u[static_cast<std::size_t>(r)], params.rrt_dt);
        ok = robot_valid(r, next[static_cast<std::size_t>(r)]);
      }
      if (!ok || !separated(next)) break;
      nodes.push_back({next, u, at});
      at = static_cast<int>(nodes.size()) - 1;
      grew = true;
      if (all_at_goal(next)) return finish(at);
    }
    if (grew) {
      bool near = true;
      const Node& leaf = nodes[static_cast<std::size_t>(at)];
      for (int r = 0; r < n && near; ++r)
        near = (position_of(models[static_cast<std::size_t>(r)],
                            leaf.states[static_cast<std::size_t>(r)]) -
                position_of(models[static_cast<std::size_t>(r)],
                            queries[static_cast<std::size_t>(r)].goal))
                   .norm() <= params.goal_connect_radius;
      if (near) {
        const int hit = goal_connect(at);
        if (hit >= 0) return finish(hit);
      }
    }
  }
  return std::nullopt;
}

}  // namespace karc
