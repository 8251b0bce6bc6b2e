#include "karc/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace karc {

namespace {

constexpr double kTol = 1e-9;

// One position sample on the robot's wall-time axis. The flattening below
// re-derives the stitched timeline from scratch rather than calling the
// planner-side track helper, so a stitching bug in the planner cannot hide
// from the audit.
struct WallSample {
  double time = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int piece = -1;
  int index = -1;
};

std::vector<WallSample> flatten(const RobotModel& model, const PiecewiseTrajectory& pw) {
  std::vector<WallSample> out;
  double base = 0.0;
  for (std::size_t p = 0; p < pw.pieces.size(); ++p) {
    const Trajectory& piece = pw.pieces[p];
    const int first = (p == 0) ? 0 : 1;  // junction state already emitted
    for (int k = first; k < piece.horizon(); ++k) {
      out.push_back({base + k * piece.dt, position_of(model, piece.states[k]),
                     static_cast<int>(p), k});
    }
    base += piece.duration();
  }
  return out;
}

double wrapped_max_abs(const RobotModel& model, const State& a, const State& b) {
  double worst = 0.0;
  int next_angle = 0;
  const std::vector<int>& angles = model.angle_indices();
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    double d;
    if (next_angle < static_cast<int>(angles.size()) && angles[next_angle] == i) {
      d = std::abs(angle_diff(a[i], b[i]));
      ++next_angle;
    } else {
      d = std::abs(a[i] - b[i]);
    }
    worst = std::max(worst, d);
  }
  return worst;
}

std::string describe(const char* what, int piece, int index) {
  std::ostringstream os;
  os << what << " at piece " << piece << " state " << index;
  return os.str();
}

}  // namespace

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Structure: return "structure";
    case ViolationKind::StartMismatch: return "start_mismatch";
    case ViolationKind::GoalMiss: return "goal_miss";
    case ViolationKind::DynamicsDefect: return "dynamics_defect";
    case ViolationKind::JunctionMismatch: return "junction_mismatch";
    case ViolationKind::ControlBounds: return "control_bounds";
    case ViolationKind::StateBounds: return "state_bounds";
    case ViolationKind::TimestepBounds: return "timestep_bounds";
    case ViolationKind::Collision: return "collision";
    case ViolationKind::Separation: return "separation";
  }
  return "unknown";
}

ValidationReport validate_solution(const Scenario& scenario, const Solution& solution) {
  ValidationReport report;
  auto flag = [&report](Violation v) { report.violations.push_back(std::move(v)); };

  const int n = static_cast<int>(scenario.robots.size());
  if (static_cast<int>(solution.robots.size()) != n) {
    Violation v;
    v.kind = ViolationKind::Structure;
    v.magnitude = std::abs(static_cast<double>(solution.robots.size()) - n);
    v.detail = "solution has " + std::to_string(solution.robots.size()) + " trajectories for " +
               std::to_string(n) + " robots";
    flag(std::move(v));
    return report;
  }

  std::vector<char> usable(n, 1);
  for (int r = 0; r < n; ++r) {
    const RobotModel& model = scenario.robots[r].model;
    const PiecewiseTrajectory& pw = solution.robots[r];
    auto broken = [&](std::string detail) {
      Violation v;
      v.kind = ViolationKind::Structure;
      v.robot = r;
      v.detail = std::move(detail);
      flag(std::move(v));
      usable[r] = 0;
    };
    if (pw.pieces.empty()) {
      broken("no trajectory");
      continue;
    }
    for (std::size_t p = 0; p < pw.pieces.size() && usable[r]; ++p) {
      const Trajectory& piece = pw.pieces[p];
      if (piece.states.empty()) {
        broken("piece " + std::to_string(p) + " has no states");
        break;
      }
      if (static_cast<int>(piece.controls.size()) != piece.horizon() - 1) {
        broken("piece " + std::to_string(p) + " has " + std::to_string(piece.controls.size()) +
               " controls for " + std::to_string(piece.horizon()) + " states");
        break;
      }
      for (const State& x : piece.states) {
        if (x.size() != model.state_dim() || !x.allFinite()) {
          broken("piece " + std::to_string(p) + " has a malformed state");
          break;
        }
      }
      for (const Control& u : piece.controls) {
        if (u.size() != model.control_dim() || !u.allFinite()) {
          broken("piece " + std::to_string(p) + " has a malformed control");
          break;
        }
      }
      if (!std::isfinite(piece.dt) || piece.dt <= 0.0) {
        broken("piece " + std::to_string(p) + " has a non-positive timestep");
        break;
      }
    }
  }

  for (int r = 0; r < n; ++r) {
    if (!usable[r]) continue;
    const ScenarioRobot& robot = scenario.robots[r];
    const RobotModel& model = robot.model;
    const PiecewiseTrajectory& pw = solution.robots[r];

    const double start_err = wrapped_max_abs(model, pw.front(), robot.start);
    if (start_err > kTol) {
      Violation v;
      v.kind = ViolationKind::StartMismatch;
      v.robot = r;
      v.piece = 0;
      v.index = 0;
      v.magnitude = start_err;
      v.detail = "first state differs from the scenario start";
      flag(std::move(v));
    }

    const double goal_err = goal_distance(model, pw.back(), robot.goal);
    report.max_goal_error = std::max(report.max_goal_error, goal_err);
    if (goal_err > robot.alpha + kTol) {
      Violation v;
      v.kind = ViolationKind::GoalMiss;
      v.robot = r;
      v.piece = pw.piece_count() - 1;
      v.index = pw.pieces.back().horizon() - 1;
      v.time = pw.duration();
      v.magnitude = goal_err - robot.alpha;
      v.detail = "final state misses the goal ball";
      flag(std::move(v));
    }

    double base = 0.0;
    for (std::size_t p = 0; p < pw.pieces.size(); ++p) {
      const Trajectory& piece = pw.pieces[p];

      if (piece.dt < model.dt_min - kTol || piece.dt > model.dt_max + kTol) {
        Violation v;
        v.kind = ViolationKind::TimestepBounds;
        v.robot = r;
        v.piece = static_cast<int>(p);
        v.time = base;
        v.magnitude = piece.dt < model.dt_min ? model.dt_min - piece.dt : piece.dt - model.dt_max;
        v.detail = "timestep " + std::to_string(piece.dt) + " outside the model bounds";
        flag(std::move(v));
      }

      if (p > 0) {
        const double jump = wrapped_max_abs(model, piece.states.front(),
                                            pw.pieces[p - 1].states.back());
        if (jump > 0.0) {
          Violation v;
          v.kind = ViolationKind::JunctionMismatch;
          v.robot = r;
          v.piece = static_cast<int>(p);
          v.index = 0;
          v.time = base;
          v.magnitude = jump;
          v.detail = "chunk does not start at the previous chunk's final state";
          flag(std::move(v));
        }
      }

      for (int k = 0; k + 1 < piece.horizon(); ++k) {
        const State predicted = euler_step(model, piece.states[k], piece.controls[k], piece.dt);
        const double defect = wrapped_max_abs(model, piece.states[k + 1], predicted);
        report.max_defect = std::max(report.max_defect, defect);
        if (defect > kTol) {
          Violation v;
          v.kind = ViolationKind::DynamicsDefect;
          v.robot = r;
          v.piece = static_cast<int>(p);
          v.index = k;
          v.time = base + (k + 1) * piece.dt;
          v.magnitude = defect;
          v.detail = describe("states break the Euler dynamics", static_cast<int>(p), k + 1);
          flag(std::move(v));
        }
      }

      for (int k = 0; k < static_cast<int>(piece.controls.size()); ++k) {
        const Control& u = piece.controls[k];
        double excess = 0.0;
        for (int i = 0; i < model.control_dim(); ++i) {
          excess = std::max(excess, model.control_lo[i] - u[i]);
          excess = std::max(excess, u[i] - model.control_hi[i]);
        }
        if (excess > kTol) {
          Violation v;
          v.kind = ViolationKind::ControlBounds;
          v.robot = r;
          v.piece = static_cast<int>(p);
          v.index = k;
          v.time = base + k * piece.dt;
          v.magnitude = excess;
          v.detail = describe("control leaves the control box", static_cast<int>(p), k);
          flag(std::move(v));
        }
      }

      for (int k = 0; k < piece.horizon(); ++k) {
        const State& x = piece.states[k];
        double excess = 0.0;
        for (const RobotModel::StateBound& b : model.state_bounds) {
          excess = std::max(excess, b.lo - x[b.index]);
          excess = std::max(excess, x[b.index] - b.hi);
        }
        if (excess > kTol) {
          Violation v;
          v.kind = ViolationKind::StateBounds;
          v.robot = r;
          v.piece = static_cast<int>(p);
          v.index = k;
          v.time = base + k * piece.dt;
          v.magnitude = excess;
          v.detail = describe("state leaves the velocity/attitude box", static_cast<int>(p), k);
          flag(std::move(v));
        }

        const Pose config = extract_configuration(model, x);
        const double clear = clearance(model.body, config, scenario.workspace);
        report.min_clearance = std::min(report.min_clearance, clear);
        if (!in_free_space(model.body, config, scenario.workspace)) {
          Violation v;
          v.kind = ViolationKind::Collision;
          v.robot = r;
          v.piece = static_cast<int>(p);
          v.index = k;
          v.time = base + k * piece.dt;
          v.magnitude = std::max(0.0, -clear);
          v.detail = describe("body leaves free space", static_cast<int>(p), k);
          flag(std::move(v));
        }
      }

      base += piece.duration();
    }
  }

  // Pairwise separation at every instant either robot changes its held
  // sample, final positions held forever.
  for (int i = 0; i < n; ++i) {
    if (!usable[i]) continue;
    const std::vector<WallSample> a = flatten(scenario.robots[i].model, solution.robots[i]);
    for (int j = i + 1; j < n; ++j) {
      if (!usable[j]) continue;
      const std::vector<WallSample> b = flatten(scenario.robots[j].model, solution.robots[j]);
      std::size_t ia = 0, ib = 0;
      for (;;) {
        const double t = std::max(a[ia].time, b[ib].time);
        const double dist = (a[ia].position - b[ib].position).norm();
        report.min_separation = std::min(report.min_separation, dist);
        if (dist < scenario.d_min - kTol) {
          Violation v;
          v.kind = ViolationKind::Separation;
          v.robot = i;
          v.other = j;
          v.piece = a[ia].piece;
          v.index = a[ia].index;
          v.time = t;
          v.magnitude = scenario.d_min - dist;
          std::ostringstream os;
          os << "robots " << scenario.robots[i].id << " and " << scenario.robots[j].id
             << " at distance " << dist << " (piece " << a[ia].piece << " state " << a[ia].index
             << " vs piece " << b[ib].piece << " state " << b[ib].index << ")";
          v.detail = os.str();
          flag(std::move(v));
        }
        const bool more_a = ia + 1 < a.size();
        const bool more_b = ib + 1 < b.size();
        if (!more_a && !more_b) break;
        const double next_a = more_a ? a[ia + 1].time : std::numeric_limits<double>::infinity();
        const double next_b = more_b ? b[ib + 1].time : std::numeric_limits<double>::infinity();
        if (next_a <= next_b) ++ia;
        if (next_b <= next_a) ++ib;
      }
    }
  }

  return report;
}

}  // namespace karc
