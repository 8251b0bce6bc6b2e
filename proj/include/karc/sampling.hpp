#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "karc/dynamics.hpp"
#include "karc/geometry.hpp"
#include "karc/kernels.hpp"

namespace karc {

/// Wall-clock budget. Default-constructed deadlines never expire. Planners
/// consult the deadline only at coarse checkpoints so that runs finishing
/// within budget are unaffected by timing noise.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(double seconds)
      : limited_(true),
        end_(std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(seconds))) {}

  bool expired() const { return limited_ && std::chrono::steady_clock::now() >= end_; }

  double remaining_s() const {
    if (!limited_) return std::numeric_limits<double>::infinity();
    return std::chrono::duration<double>(end_ - std::chrono::steady_clock::now()).count();
  }

 private:
  bool limited_ = false;
  std::chrono::steady_clock::time_point end_{};
};

/// Deterministic per-purpose seed derivation (splitmix64 mixing), so that
/// independent planner invocations inside one run draw from decorrelated
/// streams while the whole run remains a function of the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

struct PlannerParams {
  double goal_bias = 0.1;
  double steer_delta = 0.25;        ///< waypoint spacing of kinematic paths (m)
  double collision_resolution = 0.05;  ///< edge validation step for kinematic paths (m)
  int max_iterations = 20000;       ///< kinematic RRT sampling budget
  int max_extensions = 50000;       ///< kinodynamic RRT extension budget
  double rrt_dt = 0.1;              ///< fixed integration step of kinodynamic planners (s)
  int max_extension_steps = 5;      ///< steps applied per extension, drawn from 1..this
  int control_candidates = 8;       ///< best-of-k control sampling per extension
  double goal_connect_radius = 1.5; ///< start greedy goal descent within this goal distance
  int goal_connect_steps = 50;      ///< step budget of one greedy goal descent
  std::uint64_t seed = 0;
};

/// Single-robot planning query. alpha is the goal tolerance: kinematic
/// planners accept positions within alpha of the goal position, kinodynamic
/// planners accept states within alpha of the goal state (angles wrapped).
struct Query {
  State start;
  State goal;
  double alpha = 0.2;
};

/// Other robots' committed motions, as zero-order-hold position tracks on the
/// local time axis of the planner (t = 0 at the first state). Final positions
/// are held forever.
struct MovingObstacleSet {
  std::vector<SampledTrack> tracks;
  double d_min = 0.0;

  bool empty() const { return tracks.empty(); }
  /// True when `position` keeps distance >= d_min to every track at time t.
  bool clear(const Eigen::Vector3d& position, double t) const;
};

/// Geometric path: a sequence of collision-free configurations spaced at most
/// steer_delta apart, beginning at the exact start configuration and ending at
/// the exact goal configuration.
struct KinematicPath {
  std::vector<Pose> waypoints;
};

/// Geometric RRT over configurations. Ignores other robots; static obstacles
/// only. Returns std::nullopt when the budget or deadline is exhausted.
std::optional<KinematicPath> plan_kinematic(const RobotModel& model, const Workspace& ws,
                                            const Query& query, const PlannerParams& params,
                                            const Deadline& deadline = {});

/// Kinodynamic RRT: grows a tree of states by sampling controls and
/// integrating the dynamics with the fixed step rrt_dt, so every edge of the
/// returned trajectory satisfies the discrete dynamics exactly. Moving
/// obstacles are respected via position separation at each node's time.
std::optional<Trajectory> plan_kinodynamic_rrt(const RobotModel& model, const Workspace& ws,
                                               const Query& query,
                                               const MovingObstacleSet& moving,
                                               const PlannerParams& params,
                                               const Deadline& deadline = {});

/// Sequential kinodynamic planning: robot r treats robots 0..r-1 (their fresh
/// trajectories) as moving obstacles. Fails if any robot fails.
std::optional<std::vector<Trajectory>> plan_decoupled_rrt(const std::vector<RobotModel>& models,
                                                          const Workspace& ws,
                                                          const std::vector<Query>& queries,
                                                          double d_min,
                                                          const PlannerParams& params,
                                                          const Deadline& deadline = {});

/// Joint kinodynamic RRT in the composite state space. All robots share the
/// integration step; robots already within their goal tolerance at a node are
/// extended with hold controls. Returned trajectories have equal length.
std::optional<std::vector<Trajectory>> plan_composite_rrt(const std::vector<RobotModel>& models,
                                                          const Workspace& ws,
                                                          const std::vector<Query>& queries,
                                                          double d_min,
                                                          const PlannerParams& params,
                                                          const Deadline& deadline = {});

/// ZOH position track of a trajectory on its own time axis (t = k * dt).
SampledTrack track_of(const RobotModel& model, const Trajectory& traj);

}  // namespace karc
