#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "karc/dynamics.hpp"
#include "karc/geometry.hpp"
#include "karc/sampling.hpp"

namespace karc {

struct OptimizerParams {
  double beta1 = 0.1;      ///< weight of the control-effort cost term
  double eps_dyn = 1e-6;   ///< dynamics defect tolerance
  double eps_con = 1e-4;   ///< tolerance of goal / clearance / separation constraints
  int max_outer = 40;      ///< augmented Lagrangian outer iterations
  int max_inner = 200;     ///< projected gradient iterations per outer iteration
  int max_total_inner = 100000;  ///< projected gradient budget across the whole solve
  double margin = 0.01;    ///< required obstacle clearance (m)
  double mu0 = 10.0;       ///< initial penalty weight
  double mu_growth = 8.0;  ///< penalty growth on insufficient progress
  double goal_tightening = 0.9;       ///< constraint uses this fraction of alpha
  double separation_inflation = 1.05; ///< constraint uses this multiple of d_min
  double bound_tightening = 0.95;     ///< knots use this fraction of the state box
  double softmin_rho = 0.05;          ///< clearance smoothing temperature
  double jitter = 1e-3;               ///< initial-guess symmetry-breaking noise
  std::uint64_t jitter_seed = 0x5eedbeef;
};

/// One single-robot segment problem in direct transcription form: decision
/// variables are all states, all controls, and one shared timestep.
struct TranscriptionProblem {
  RobotModel model;
  Workspace workspace;
  State start;             ///< pinned first state
  State goal;              ///< goal state; terminal constraint is a ball around it
  double alpha = 0.2;      ///< goal tolerance
  MovingObstacleSet moving;  ///< separation constraints, on local time t = k * dt

  std::vector<State> init_states;      ///< initial guess, size horizon()
  std::vector<Control> init_controls;  ///< initial guess, size horizon() - 1
  double init_dt = 0.0;

  int horizon() const { return static_cast<int>(init_states.size()); }
  int defect_blocks() const { return horizon() - 1; }
};

/// Initial guess from a geometric reference: configurations from the
/// waypoints, velocities by clipped finite differences, controls at the
/// model's reference control, timestep at the middle of its bounds.
TranscriptionProblem transcribe(const RobotModel& model, const Workspace& ws,
                                const std::vector<Pose>& reference, const State& start,
                                const State& goal, double alpha);

/// Initial guess from an existing trajectory (warm start).
TranscriptionProblem transcribe_trajectory(const RobotModel& model, const Workspace& ws,
                                           const Trajectory& warm, const State& start,
                                           const State& goal, double alpha);

/// One accepted outer iterate. Acceptance is monotone in max_violation: an
/// outer step that would increase it is rolled back and retried with a larger
/// penalty, so consecutive entries are non-increasing in max_violation.
struct IterateLog {
  int outer = 0;
  double cost = 0.0;
  double max_violation = 0.0;
  double mu = 0.0;
};

struct OptResult {
  bool success = false;
  Trajectory trajectory;  ///< rolled out through the dynamics; residual is exactly 0
  double cost = 0.0;      ///< recomputed from `trajectory`
  int inner_iterations = 0;  ///< projected gradient iterations spent in total
  std::vector<IterateLog> iterates;
  std::string failure_reason;
};

/// Cost of a trajectory under the optimizer's objective: per-step control
/// effort about the model's reference control plus elapsed time.
double trajectory_cost(const RobotModel& model, const Trajectory& traj, double beta1);

/// Solve one segment problem. On success the returned trajectory is the exact
/// rollout of the optimized controls and satisfies the goal, free-space,
/// separation, and control-bound constraints of the problem.
OptResult optimize_single(const TranscriptionProblem& problem, const OptimizerParams& params);

/// Solve several segment problems in priority order: each robot additionally
/// treats the already-solved robots' trajectories as moving obstacles, using
/// the d_min of its own problem. Results are returned for every robot even if
/// a later one fails; the caller checks the success flags.
std::vector<OptResult> optimize_prioritized(const std::vector<TranscriptionProblem>& problems,
                                            const OptimizerParams& params);

}  // namespace karc
