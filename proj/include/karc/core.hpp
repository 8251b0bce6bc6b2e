#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "karc/dynamics.hpp"
#include "karc/geometry.hpp"
#include "karc/optimizer.hpp"
#include "karc/sampling.hpp"
#include "karc/scenario.hpp"

namespace karc {

/// A dynamically feasible trajectory stitched from chunks, each with its own
/// timestep. Consecutive chunks share the junction state exactly:
/// pieces[p + 1].states.front() equals pieces[p].states.back() coefficient for
/// coefficient, so concatenating the rollouts yields one continuous motion.
struct PiecewiseTrajectory {
  std::vector<Trajectory> pieces;

  int piece_count() const { return static_cast<int>(pieces.size()); }
  /// Total duration: sum of piece durations.
  double duration() const;
  /// Wall-clock time at which piece p starts (0 for the first piece).
  double piece_start_time(int p) const;
  const State& front() const { return pieces.front().states.front(); }
  const State& back() const { return pieces.back().states.back(); }
  /// Total number of distinct samples; junction states are counted once.
  int sample_count() const;
  /// Piece and in-piece state index of flat sample k (junctions belong to the
  /// earlier piece, matching the zero-order-hold track below).
  void locate_sample(int k, int& piece, int& index) const;
  /// Zero-order-hold position track on wall time. Junction states appear
  /// once: the repeated first state of each later piece is skipped.
  SampledTrack track(const RobotModel& model) const;
  /// State of flat sample k.
  const State& sample_state(int k) const;
};

/// A geometric path cut into consecutive runs of waypoints. The runs are
/// disjoint and concatenate back to the input path; milestones[s] is the last
/// waypoint of run s and serves as that segment's subgoal.
struct SegmentedPath {
  std::vector<KinematicPath> segments;
  std::vector<Pose> milestones;
};

/// Cut a T-waypoint path into m runs of ceil(T / m) waypoints (the last run
/// keeps the remainder). When m > T the trailing runs repeat the final
/// waypoint so every segment still has a milestone. Throws
/// std::invalid_argument for m < 1 or an empty path.
SegmentedPath segment_path(const KinematicPath& path, int m);

/// Earliest inter-robot separation violation of a set of motions, evaluated
/// on the merged union of the robots' sample instants with final states held
/// forever. Ties at one instant resolve to the smallest (robot_i, robot_j).
struct Conflict {
  int robot_i = -1;
  int robot_j = -1;
  double time = 0.0;
  int sample_i = -1;  ///< active flat sample index of robot_i at `time`
  int sample_j = -1;
  State state_i;
  State state_j;
  double distance = 0.0;
};

std::optional<Conflict> find_conflict(const std::vector<RobotModel>& models,
                                      const std::vector<Trajectory>& trajectories, double d_min);
std::optional<Conflict> find_conflict(const std::vector<RobotModel>& models,
                                      const std::vector<PiecewiseTrajectory>& trajectories,
                                      double d_min);

/// Per-robot planning state threaded through the segment loop: the chunks
/// committed so far and the subgoal ladder.
struct RobotProgress {
  std::vector<Trajectory> pieces;      ///< committed chunks in time order
  std::vector<int> piece_end_segment;  ///< parallel: subgoal index each chunk reaches
  std::vector<State> segment_goals;    ///< subgoal state per segment; back() is the goal
  double alpha = 0.2;
};

/// A local multi-robot repair problem: the robots drawn into a conflict, the
/// window of their plans to replace, and how often the window was widened.
struct Subproblem {
  std::vector<int> robots;         ///< ascending robot indices
  std::vector<Query> queries;      ///< parallel: replacement start/goal/alpha
  std::vector<int> start_piece;    ///< parallel: first chunk the replacement discards
  std::vector<int> goal_segment;   ///< parallel: subgoal the replacement must reach
  int level = 0;
  std::uint64_t salt = 0;  ///< decorrelates solver seeds across repeated conflicts
};

/// Level-0 subproblem for a conflict: the two robots involved, each replanned
/// from the start of the chunk active at the conflict instant to its current
/// end-of-plan subgoal. Extra robots (already entangled in earlier conflicts)
/// can be merged in; their window starts at the chunk covering the conflict
/// instant.
Subproblem create_subproblem(const Conflict& conflict, const std::vector<RobotProgress>& progress,
                             const std::vector<int>& extra_robots = {});

/// Widen every robot's window one chunk backward and one segment forward,
/// clamped to the plan boundaries, and bump the level. Returns false (and
/// leaves the subproblem unchanged) when no window can widen further.
bool adapt_subproblem(Subproblem& sub, const std::vector<RobotProgress>& progress);

/// Solver rungs tried on a subproblem, cheapest first.
enum class Rung { PrioritizedOpt = 0, DecoupledRrt = 1, CompositeRrt = 2 };

struct SubproblemResult {
  bool solved = false;
  std::vector<Trajectory> chunks;  ///< parallel to the subproblem's robots
  Rung rung = Rung::PrioritizedOpt;
  int level = 0;  ///< adaptation level at which the solve succeeded
};

struct KarcParams {
  int segments = 5;             ///< number of path segments m
  double timeout_s = 600.0;     ///< global wall-clock budget
  int max_conflict_rounds = 50; ///< per-segment conflict resolutions before giving up
  OptimizerParams opt;
  PlannerParams planner;
  std::uint64_t seed = 0;
  std::ostream* log = nullptr;  ///< optional run log, one JSON record per line
};

/// Try the solver hierarchy on the subproblem, widening the window between
/// full sweeps, until a rung succeeds, no widening is left, or the deadline
/// expires. Non-participating robots are neither replanned nor constrained
/// against; cross-conflicts they cause are caught by the next conflict scan.
SubproblemResult solve_subproblem(Subproblem& sub, const std::vector<RobotModel>& models,
                                  const Workspace& ws, double d_min,
                                  const std::vector<RobotProgress>& progress,
                                  const KarcParams& params, const Deadline& deadline);

struct SolveMetrics {
  double runtime_s = 0.0;
  double path_cost = 0.0;  ///< sum over robots of trajectory duration (s)
  int conflicts_resolved = 0;
  int prioritized_successes = 0;
  int decoupled_successes = 0;
  int composite_successes = 0;
  int optimizer_fallbacks = 0;  ///< segment seeds rescued by the kinodynamic RRT
  int max_level = 0;            ///< deepest adaptation level used
};

struct Solution {
  bool success = false;
  std::string failure_reason;
  std::vector<PiecewiseTrajectory> robots;  ///< parallel to scenario.robots
  SolveMetrics metrics;
};

/// Segment-wise construction of a joint motion plan: geometric seeding,
/// per-segment trajectory optimization, and sampling-based conflict
/// resolution. Deterministic for a fixed seed (runtime_s aside).
Solution plan(const Scenario& scenario, const KarcParams& params = {});

}  // namespace karc
