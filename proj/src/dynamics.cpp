#include "karc/dynamics.hpp"

#include <cmath>

namespace karc {

namespace {

const std::vector<int> kUnicycleAngles{2};
const std::vector<int> kQuadrotorAngles{3, 4, 5};

void check_dims(const RobotModel& model, const State& x, const Control& u) {
  if (x.size() != model.state_dim())
    throw ModelError("state dimension mismatch for " + to_string(model.kind));
  if (u.size() != model.control_dim())
    throw ModelError("control dimension mismatch for " + to_string(model.kind));
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Unicycle1: return "unicycle1";
    case ModelKind::Unicycle2: return "unicycle2";
    case ModelKind::Quadrotor2: return "quadrotor2";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "unicycle1") return ModelKind::Unicycle1;
  if (name == "unicycle2") return ModelKind::Unicycle2;
  if (name == "quadrotor2") return ModelKind::Quadrotor2;
  throw ModelError("unknown model kind: " + name);
}

int RobotModel::state_dim() const {
  switch (kind) {
    case ModelKind::Unicycle1: return 3;
    case ModelKind::Unicycle2: return 5;
    case ModelKind::Quadrotor2: return 12;
  }
  return 0;
}

int RobotModel::control_dim() const {
  switch (kind) {
    case ModelKind::Unicycle1: return 2;
    case ModelKind::Unicycle2: return 2;
    case ModelKind::Quadrotor2: return 4;
  }
  return 0;
}

int RobotModel::config_dim() const { return kind == ModelKind::Quadrotor2 ? 6 : 3; }

int RobotModel::position_dim() const { return kind == ModelKind::Quadrotor2 ? 3 : 2; }

const std::vector<int>& RobotModel::angle_indices() const {
  return kind == ModelKind::Quadrotor2 ? kQuadrotorAngles : kUnicycleAngles;
}

Control RobotModel::hold_control(const State& x) const {
  Control u = Control::Zero(control_dim());
  switch (kind) {
    case ModelKind::Unicycle1:
      break;
    case ModelKind::Unicycle2:
      // brake toward zero velocity at the hold rate 1/s, clipped to bounds
      u[0] = -x[3];
      u[1] = -x[4];
      u = clamp_control(u);
      break;
    case ModelKind::Quadrotor2:
      u[0] = mass * gravity;
      break;
  }
  return u;
}

Control RobotModel::reference_control() const {
  Control u = Control::Zero(control_dim());
  if (kind == ModelKind::Quadrotor2) u[0] = mass * gravity;
  return u;
}

bool RobotModel::control_in_bounds(const Control& u, double tol) const {
  for (int i = 0; i < u.size(); ++i)
    if (u[i] < control_lo[i] - tol || u[i] > control_hi[i] + tol) return false;
  return true;
}

Control RobotModel::clamp_control(const Control& u) const {
  return u.cwiseMax(control_lo).cwiseMin(control_hi);
}

bool RobotModel::state_in_bounds(const State& x, double tol) const {
  for (const auto& b : state_bounds)
    if (x[b.index] < b.lo - tol || x[b.index] > b.hi + tol) return false;
  return true;
}

State RobotModel::clamp_state(const State& x) const {
  State y = x;
  for (const auto& b : state_bounds) y[b.index] = std::clamp(y[b.index], b.lo, b.hi);
  return y;
}

RobotModel make_unicycle1() {
  RobotModel m;
  m.kind = ModelKind::Unicycle1;
  m.control_lo = Eigen::Vector2d(-2.0, -2.0);
  m.control_hi = Eigen::Vector2d(2.0, 2.0);
  m.body = ConvexPolytope::box2d(0.2, 0.2);
  return m;
}

RobotModel make_unicycle2() {
  RobotModel m;
  m.kind = ModelKind::Unicycle2;
  m.control_lo = Eigen::Vector2d(-1.0, -1.0);
  m.control_hi = Eigen::Vector2d(1.0, 1.0);
  m.state_bounds = {{3, -2.0, 2.0}, {4, -2.0, 2.0}};
  m.body = ConvexPolytope::box2d(0.2, 0.2);
  return m;
}

RobotModel make_quadrotor2() {
  RobotModel m;
  m.kind = ModelKind::Quadrotor2;
  m.control_lo = Eigen::Vector4d(0.0, -0.5, -0.5, -0.5);
  m.control_hi = Eigen::Vector4d(20.0, 0.5, 0.5, 0.5);
  m.state_bounds = {{3, -0.6, 0.6}, {4, -0.6, 0.6},                        // roll, pitch
                    {6, -2.0, 2.0}, {7, -2.0, 2.0},  {8, -2.0, 2.0},       // linear velocity
                    {9, -4.0, 4.0}, {10, -4.0, 4.0}, {11, -4.0, 4.0}};     // angular velocity
  m.body = ConvexPolytope::box3d(Eigen::Vector3d(0.2, 0.2, 0.075));
  return m;
}

RobotModel make_model(ModelKind kind) {
  switch (kind) {
    case ModelKind::Unicycle1: return make_unicycle1();
    case ModelKind::Unicycle2: return make_unicycle2();
    case ModelKind::Quadrotor2: return make_quadrotor2();
  }
  throw ModelError("unknown model kind");
}

State derivative(const RobotModel& model, const State& x, const Control& u) {
  check_dims(model, x, u);
  State dx = State::Zero(x.size());
  switch (model.kind) {
    case ModelKind::Unicycle1: {
      dx[0] = u[0] * std::cos(x[2]);
      dx[1] = u[0] * std::sin(x[2]);
      dx[2] = u[1];
      break;
    }
    case ModelKind::Unicycle2: {
      dx[0] = x[3] * std::cos(x[2]);
      dx[1] = x[3] * std::sin(x[2]);
      dx[2] = x[4];
      dx[3] = u[0];
      dx[4] = u[1];
      break;
    }
    case ModelKind::Quadrotor2: {
      const double cphi = std::cos(x[3]), sphi = std::sin(x[3]);
      const double cth = std::cos(x[4]), sth = std::sin(x[4]);
      const double cpsi = std::cos(x[5]), spsi = std::sin(x[5]);
      const double thrust = u[0] / model.mass;
      dx.segment<3>(0) = x.segment<3>(6);
      dx.segment<3>(3) = x.segment<3>(9);
      dx[6] = thrust * (cphi * sth * cpsi + sphi * spsi);
      dx[7] = thrust * (cphi * sth * spsi - sphi * cpsi);
      dx[8] = thrust * (cphi * cth) - model.gravity;
      dx[9] = u[1] / model.inertia[0];
      dx[10] = u[2] / model.inertia[1];
      dx[11] = u[3] / model.inertia[2];
      break;
    }
  }
  return dx;
}

void derivative_jacobians(const RobotModel& model, const State& x, const Control& u,
                          Eigen::MatrixXd& A, Eigen::MatrixXd& B) {
  check_dims(model, x, u);
  const int n = model.state_dim();
  const int m = model.control_dim();
  A = Eigen::MatrixXd::Zero(n, n);
  B = Eigen::MatrixXd::Zero(n, m);
  switch (model.kind) {
    case ModelKind::Unicycle1: {
      A(0, 2) = -u[0] * std::sin(x[2]);
      A(1, 2) = u[0] * std::cos(x[2]);
      B(0, 0) = std::cos(x[2]);
      B(1, 0) = std::sin(x[2]);
      B(2, 1) = 1.0;
      break;
    }
    case ModelKind::Unicycle2: {
      A(0, 2) = -x[3] * std::sin(x[2]);
      A(0, 3) = std::cos(x[2]);
      A(1, 2) = x[3] * std::cos(x[2]);
      A(1, 3) = std::sin(x[2]);
      A(2, 4) = 1.0;
      B(3, 0) = 1.0;
      B(4, 1) = 1.0;
      break;
    }
    case ModelKind::Quadrotor2: {
      const double cphi = std::cos(x[3]), sphi = std::sin(x[3]);
      const double cth = std::cos(x[4]), sth = std::sin(x[4]);
      const double cpsi = std::cos(x[5]), spsi = std::sin(x[5]);
      const double thrust = u[0] / model.mass;
      A.block<3, 3>(0, 6).setIdentity();
      A.block<3, 3>(3, 9).setIdentity();
      A(6, 3) = thrust * (-sphi * sth * cpsi + cphi * spsi);
      A(6, 4) = thrust * (cphi * cth * cpsi);
      A(6, 5) = thrust * (-cphi * sth * spsi + sphi * cpsi);
      A(7, 3) = thrust * (-sphi * sth * spsi - cphi * cpsi);
      A(7, 4) = thrust * (cphi * cth * spsi);
      A(7, 5) = thrust * (cphi * sth * cpsi + sphi * spsi);
      A(8, 3) = thrust * (-sphi * cth);
      A(8, 4) = thrust * (-cphi * sth);
      B(6, 0) = (cphi * sth * cpsi + sphi * spsi) / model.mass;
      B(7, 0) = (cphi * sth * spsi - sphi * cpsi) / model.mass;
      B(8, 0) = (cphi * cth) / model.mass;
      B(9, 1) = 1.0 / model.inertia[0];
      B(10, 2) = 1.0 / model.inertia[1];
      B(11, 3) = 1.0 / model.inertia[2];
      break;
    }
  }
}

State euler_step(const RobotModel& model, const State& x, const Control& u, double dt) {
  State next = x + derivative(model, x, u) * dt;
  for (int idx : model.angle_indices()) next[idx] = wrap_angle(next[idx]);
  return next;
}

State step(const RobotModel& model, const State& x, const Control& u, double dt) {
  if (dt <= 0.0) throw ModelError("step requires dt > 0");
  if (!model.control_in_bounds(u))
    throw ControlBoundsError("control outside the allowed set for " + to_string(model.kind));
  return euler_step(model, x, u, dt);
}

double feasibility_residual(const RobotModel& model, const Trajectory& traj) {
  const int T = traj.horizon();
  if (static_cast<int>(traj.controls.size()) != std::max(0, T - 1))
    throw ModelError("trajectory has mismatched state/control counts");
  double residual = 0.0;
  for (int k = 0; k + 1 < T; ++k) {
    const State predicted = euler_step(model, traj.states[k], traj.controls[k], traj.dt);
    State defect = traj.states[k + 1] - predicted;
    for (int idx : model.angle_indices())
      defect[idx] = angle_diff(traj.states[k + 1][idx], predicted[idx]);
    residual = std::max(residual, defect.cwiseAbs().maxCoeff());
  }
  return residual;
}

Pose extract_configuration(const RobotModel& model, const State& x) {
  if (x.size() != model.state_dim()) throw ModelError("state dimension mismatch");
  if (model.kind == ModelKind::Quadrotor2)
    return Pose(x.segment<3>(0), x.segment<3>(3));
  return Pose::planar(x[0], x[1], x[2]);
}

Eigen::Vector3d position_of(const RobotModel& model, const State& x) {
  if (model.kind == ModelKind::Quadrotor2) return x.segment<3>(0);
  return Eigen::Vector3d(x[0], x[1], 0.0);
}

State state_from_pose(const RobotModel& model, const Pose& pose) {
  State x = State::Zero(model.state_dim());
  if (model.kind == ModelKind::Quadrotor2) {
    x.segment<3>(0) = pose.position;
    x.segment<3>(3) = pose.rpy;
  } else {
    x[0] = pose.position.x();
    x[1] = pose.position.y();
    x[2] = pose.rpy[2];
  }
  return x;
}

double state_distance(const RobotModel& model, const State& a, const State& b) {
  const int n = model.state_dim();
  const auto& angles = model.angle_indices();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const bool is_angle = std::find(angles.begin(), angles.end(), i) != angles.end();
    const double d = is_angle ? angle_diff(a[i], b[i]) : a[i] - b[i];
    double w = 1.0;
    if (is_angle) {
      w = 0.5;
    } else if (i >= model.config_dim()) {
      w = 0.2;
    }
    sum += w * d * d;
  }
  return std::sqrt(sum);
}

double goal_distance(const RobotModel& model, const State& a, const State& b) {
  const auto& angles = model.angle_indices();
  double sum = 0.0;
  for (int i = 0; i < model.state_dim(); ++i) {
    const bool is_angle = std::find(angles.begin(), angles.end(), i) != angles.end();
    const double d = is_angle ? angle_diff(a[i], b[i]) : a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

Trajectory rollout(const RobotModel& model, const State& x0,
                   const std::vector<Control>& controls, double dt) {
  Trajectory traj;
  traj.dt = dt;
  traj.states.push_back(x0);
  for (const auto& u : controls) {
    traj.states.push_back(step(model, traj.states.back(), u, dt));
    traj.controls.push_back(u);
  }
  return traj;
}

}  // namespace karc
