#ifndef KARC_DYNAMICS_HPP
#define KARC_DYNAMICS_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "karc/geometry.hpp"

namespace karc {

using State = Eigen::VectorXd;
using Control = Eigen::VectorXd;

struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ControlBoundsError : std::domain_error {
  using std::domain_error::domain_error;
};

enum class ModelKind { Unicycle1, Unicycle2, Quadrotor2 };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Robot dynamics, bounds and body geometry.
///
/// State layouts:
///   unicycle1:  [x, y, theta]
///   unicycle2:  [x, y, theta, v, omega]
///   quadrotor2: [x, y, z, roll, pitch, yaw, vx, vy, vz, droll, dpitch, dyaw]
struct RobotModel {
  ModelKind kind = ModelKind::Unicycle1;
  Eigen::VectorXd control_lo, control_hi;

  // Box limits on selected non-position state components (velocities, and
  // roll/pitch for the quadrotor). Index-aligned triples {state index, lo, hi}.
  struct StateBound {
    int index;
    double lo;
    double hi;
  };
  std::vector<StateBound> state_bounds;

  ConvexPolytope body = ConvexPolytope::box2d(0.2, 0.2);

  double mass = 1.0;                                    // quadrotor only
  Eigen::Vector3d inertia{0.01, 0.01, 0.01};            // quadrotor only
  double gravity = 9.81;                                // quadrotor only

  double dt_min = 0.05;
  double dt_max = 0.5;

  int state_dim() const;
  int control_dim() const;
  int config_dim() const;    // 3 for unicycles, 6 for quadrotor
  int position_dim() const;  // workspace dimension: 2 or 3
  const std::vector<int>& angle_indices() const;  // wrapped state components

  /// Control applied when a robot should stay where it is: zero for
  /// unicycle1, hover thrust for the quadrotor.
  Control hold_control(const State& x) const;
  Control reference_control() const;  // cost is penalized about this control

  bool control_in_bounds(const Control& u, double tol = 1e-9) const;
  Control clamp_control(const Control& u) const;
  bool state_in_bounds(const State& x, double tol = 1e-9) const;
  State clamp_state(const State& x) const;
};

RobotModel make_unicycle1();
RobotModel make_unicycle2();
RobotModel make_quadrotor2();
RobotModel make_model(ModelKind kind);

/// State derivative f(x, u).
State derivative(const RobotModel& model, const State& x, const Control& u);

/// Analytic Jacobians of f: A = df/dx, B = df/du.
void derivative_jacobians(const RobotModel& model, const State& x, const Control& u,
                          Eigen::MatrixXd& A, Eigen::MatrixXd& B);

/// Forward Euler step with angle re-normalization. No control bound check.
State euler_step(const RobotModel& model, const State& x, const Control& u, double dt);

/// Euler step; throws ControlBoundsError when u is outside the control box.
State step(const RobotModel& model, const State& x, const Control& u, double dt);

/// Timestamped state/control sequence with a fixed per-trajectory timestep.
struct Trajectory {
  std::vector<State> states;      // length T >= 1
  std::vector<Control> controls;  // length T - 1
  double dt = 0.1;

  int horizon() const { return static_cast<int>(states.size()); }
  double duration() const { return dt * static_cast<double>(controls.size()); }
};

/// Worst Euler-defect over the trajectory: max_k of the infinity norm of
/// x_{k+1} - euler_step(x_k, u_k, dt), with angle components compared
/// modulo 2*pi. Exactly 0 for any rollout produced by `step`.
double feasibility_residual(const RobotModel& model, const Trajectory& traj);

/// Geometric pose held inside a state (position + orientation prefix).
Pose extract_configuration(const RobotModel& model, const State& x);

/// Inverse of extract_configuration with zero velocities.
State state_from_pose(const RobotModel& model, const Pose& pose);

/// Position components of a state, as a workspace point (z = 0 in 2D).
Eigen::Vector3d position_of(const RobotModel& model, const State& x);

/// Weighted state distance with angle wrap, used by goal tests and
/// nearest-neighbor queries. Weights: 1 position, 0.5 orientation,
/// 0.2 velocities.
double state_distance(const RobotModel& model, const State& a, const State& b);

/// Unweighted Euclidean norm of the wrapped state difference (goal regions).
double goal_distance(const RobotModel& model, const State& a, const State& b);

/// Roll out a control sequence from x0 with `step`.
Trajectory rollout(const RobotModel& model, const State& x0,
                   const std::vector<Control>& controls, double dt);

}  // namespace karc

#endif  // KARC_DYNAMICS_HPP
