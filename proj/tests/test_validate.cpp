#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "karc/kernels.hpp"
#include "karc/validate.hpp"

using namespace karc;

namespace {

Workspace open_box(double half) {
  return Workspace(Eigen::Vector3d(-half, -half, 0.0), Eigen::Vector3d(half, half, 0.0), 2);
}

State planar_state(double x, double y, double theta) {
  State s(3);
  s << x, y, theta;
  return s;
}

std::vector<Control> constant_controls(int count, double v, double w) {
  std::vector<Control> u(count, Eigen::Vector2d(v, w));
  return u;
}

// Chain states with euler_step directly (no control-bound check), for
// building deliberately infeasible trajectories that are still
// dynamics-consistent.
Trajectory chain(const RobotModel& model, const State& x0, const std::vector<Control>& controls,
                 double dt) {
  Trajectory traj;
  traj.dt = dt;
  traj.states.push_back(x0);
  for (const Control& u : controls) {
    traj.states.push_back(euler_step(model, traj.states.back(), u, dt));
    traj.controls.push_back(u);
  }
  return traj;
}

// Two unicycles driving straight down parallel lanes; each trajectory is
// stitched from two chunks with different timesteps.
Scenario lane_scenario() {
  Scenario s;
  s.name = "lanes";
  s.d_min = 0.5;
  s.workspace = open_box(6.0);
  const RobotModel model = make_unicycle1();
  for (int r = 0; r < 2; ++r) {
    ScenarioRobot robot;
    robot.id = r == 0 ? "a" : "b";
    robot.model = model;
    const double y = r == 0 ? 1.5 : -1.5;
    robot.start = planar_state(-2.0, y, 0.0);
    robot.goal = planar_state(2.0, y, 0.0);
    robot.alpha = 0.3;
    s.robots.push_back(std::move(robot));
  }
  return s;
}

Solution lane_solution(const Scenario& s) {
  Solution sol;
  sol.success = true;
  for (const ScenarioRobot& robot : s.robots) {
    PiecewiseTrajectory pw;
    pw.pieces.push_back(rollout(robot.model, robot.start, constant_controls(20, 1.0, 0.0), 0.1));
    pw.pieces.push_back(rollout(robot.model, pw.pieces.back().states.back(),
                                constant_controls(10, 1.0, 0.0), 0.2));
    sol.robots.push_back(std::move(pw));
  }
  return sol;
}

int count_kind(const ValidationReport& report, ViolationKind kind) {
  return static_cast<int>(std::count_if(report.violations.begin(), report.violations.end(),
                                        [&](const Violation& v) { return v.kind == kind; }));
}

}  // namespace

TEST_CASE("a hand-rolled solution passes with exact dynamics and wide margins") {
  const Scenario s = lane_scenario();
  const Solution sol = lane_solution(s);
  const ValidationReport report = validate_solution(s, sol);
  CHECK(report.ok());
  CHECK(report.max_defect == 0.0);  // rollouts reproduce euler_step bit for bit
  CHECK(report.max_goal_error == doctest::Approx(0.0));
  CHECK(report.min_separation == doctest::Approx(3.0));
  CHECK(report.min_clearance > 1.0);
}

TEST_CASE("perturbed state with re-rolled suffix is pinned to one defect") {
  const Scenario s = lane_scenario();
  Solution sol = lane_solution(s);
  Trajectory& piece = sol.robots[0].pieces[0];
  piece.states[10][0] += 0.02;
  for (int k = 10; k + 1 < piece.horizon(); ++k)
    piece.states[k + 1] = euler_step(s.robots[0].model, piece.states[k], piece.controls[k],
                                     piece.dt);
  // the drift carries through the junction; restitch the second chunk
  sol.robots[0].pieces[1] = rollout(s.robots[0].model, piece.states.back(),
                                    constant_controls(10, 1.0, 0.0), 0.2);

  const ValidationReport report = validate_solution(s, sol);
  REQUIRE(report.violations.size() == 1);
  const Violation& v = report.violations.front();
  CHECK(v.kind == ViolationKind::DynamicsDefect);
  CHECK(v.robot == 0);
  CHECK(v.piece == 0);
  CHECK(v.index == 9);  // transition 9 -> 10 is the only broken one
  CHECK(v.magnitude == doctest::Approx(0.02));
}

TEST_CASE("out-of-box control at the last transition is reported exactly once") {
  Scenario s = lane_scenario();
  Solution sol = lane_solution(s);
  Trajectory& piece = sol.robots[1].pieces[1];
  piece.controls[9] = Eigen::Vector2d(1.0, 2.2);  // omega limit is 2
  piece.states[10] = euler_step(s.robots[1].model, piece.states[9], piece.controls[9], piece.dt);
  s.robots[1].goal = piece.states[10];  // keep the goal condition out of the picture

  const ValidationReport report = validate_solution(s, sol);
  REQUIRE(report.violations.size() == 1);
  const Violation& v = report.violations.front();
  CHECK(v.kind == ViolationKind::ControlBounds);
  CHECK(v.robot == 1);
  CHECK(v.piece == 1);
  CHECK(v.index == 9);
  CHECK(v.magnitude == doctest::Approx(0.2));
}

TEST_CASE("velocity state bound violations name every offending sample") {
  Scenario s;
  s.name = "fast";
  s.d_min = 0.0;
  s.workspace = open_box(8.0);
  ScenarioRobot robot;
  robot.id = "u2";
  robot.model = make_unicycle2();
  State x0 = State::Zero(5);
  x0[3] = 2.0;  // starts exactly at the forward-speed bound
  robot.start = x0;
  robot.alpha = 0.5;
  const Trajectory t = chain(robot.model, x0, {6, Eigen::Vector2d(1.0, 0.0)}, 0.1);
  robot.goal = t.states.back();
  s.robots.push_back(robot);

  Solution sol;
  sol.success = true;
  sol.robots.push_back(PiecewiseTrajectory{{t}});

  const ValidationReport report = validate_solution(s, sol);
  CHECK(static_cast<int>(report.violations.size()) == 6);
  CHECK(count_kind(report, ViolationKind::StateBounds) == 6);
  CHECK(report.violations.front().index == 1);
  CHECK(report.violations.front().magnitude == doctest::Approx(0.1));
}

TEST_CASE("timestep outside the model bounds") {
  Scenario s;
  s.name = "slow-clock";
  s.d_min = 0.0;
  s.workspace = open_box(6.0);
  ScenarioRobot robot;
  robot.id = "u1";
  robot.model = make_unicycle1();
  robot.start = planar_state(0.0, 0.0, 0.0);
  robot.alpha = 0.3;
  const Trajectory t = chain(robot.model, robot.start, constant_controls(10, 1.0, 0.0), 0.04);
  robot.goal = t.states.back();
  s.robots.push_back(robot);

  Solution sol;
  sol.success = true;
  sol.robots.push_back(PiecewiseTrajectory{{t}});

  const ValidationReport report = validate_solution(s, sol);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations.front().kind == ViolationKind::TimestepBounds);
  CHECK(report.violations.front().magnitude == doctest::Approx(0.01));
}

TEST_CASE("planted obstacle turns exactly the overlapping samples into collisions") {
  Scenario s = lane_scenario();
  const Solution sol = lane_solution(s);
  REQUIRE(validate_solution(s, sol).ok());

  // drop a box onto robot a's lane; body half-width 0.2 + box half-width 0.3
  s.workspace.obstacles.push_back(
      {ConvexPolytope::box2d(0.3, 0.3), Pose::planar(0.5, 1.5, 0.0)});
  const ValidationReport report = validate_solution(s, sol);
  CHECK_FALSE(report.ok());
  CHECK(report.min_clearance <= 0.0);
  REQUIRE(count_kind(report, ViolationKind::Collision) == static_cast<int>(report.violations.size()));
  for (const Violation& v : report.violations) {
    CHECK(v.robot == 0);
    // robot a reaches x = 0 at the junction; overlap spans x in (0, 1)
    const double x = sol.robots[0].sample_state(v.piece == 0 ? v.index : 20 + v.index)[0];
    CHECK(x > -0.01);
    CHECK(x < 1.01);
  }
  // the sample dead ahead of the box is definitely flagged
  const bool hit_center = std::any_of(
      report.violations.begin(), report.violations.end(),
      [&](const Violation& v) { return v.piece == 1 && v.index == 2; });  // x = 0.4 .. nearest
  CHECK(hit_center);
}

TEST_CASE("tightening d_min past the observed minimum flags the pair everywhere") {
  Scenario s = lane_scenario();
  const Solution sol = lane_solution(s);
  const ValidationReport clean = validate_solution(s, sol);
  REQUIRE(clean.ok());

  s.d_min = clean.min_separation + 0.01;
  const ValidationReport report = validate_solution(s, sol);
  CHECK_FALSE(report.ok());
  CHECK(count_kind(report, ViolationKind::Separation) ==
        static_cast<int>(report.violations.size()));
  CHECK(report.violations.size() >= 1);
  for (const Violation& v : report.violations) {
    CHECK(v.robot == 0);
    CHECK(v.other == 1);
    CHECK(v.magnitude == doctest::Approx(0.01));
  }
}

TEST_CASE("separation walk agrees with the planner-side scan on the first hit") {
  // crossing tracks: a drives +x at y = 0, b drives -x at y = 0.3
  Scenario s = lane_scenario();
  s.robots[0].start = planar_state(-2.0, 0.0, 0.0);
  s.robots[0].goal = planar_state(2.0, 0.0, 0.0);
  s.robots[1].start = planar_state(2.0, 0.3, M_PI);
  s.robots[1].goal = planar_state(-2.0, 0.3, M_PI);

  Solution sol;
  sol.success = true;
  sol.robots.push_back(PiecewiseTrajectory{
      {rollout(s.robots[0].model, s.robots[0].start, constant_controls(40, 1.0, 0.0), 0.1)}});
  sol.robots.push_back(PiecewiseTrajectory{
      {rollout(s.robots[1].model, s.robots[1].start, constant_controls(25, 1.0, 0.0), 0.16)}});

  const ValidationReport report = validate_solution(s, sol);
  REQUIRE_FALSE(report.ok());

  std::vector<SampledTrack> tracks{sol.robots[0].track(s.robots[0].model),
                                   sol.robots[1].track(s.robots[1].model)};
  const PairViolation expected = earliest_separation_violation(tracks, s.d_min);
  REQUIRE(expected.found);
  const auto first = std::find_if(report.violations.begin(), report.violations.end(),
                                  [](const Violation& v) {
                                    return v.kind == ViolationKind::Separation;
                                  });
  REQUIRE(first != report.violations.end());
  CHECK(first->time == doctest::Approx(expected.time));
  CHECK(s.d_min - first->magnitude == doctest::Approx(expected.distance));
}

TEST_CASE("start, goal, junction, and structural faults") {
  const Scenario s = lane_scenario();

  SUBCASE("perturbed start") {
    Scenario moved = s;
    moved.robots[1].start[1] += 0.02;
    const ValidationReport report = validate_solution(moved, lane_solution(s));
    REQUIRE(count_kind(report, ViolationKind::StartMismatch) == 1);
    const auto& v = report.violations.front();
    CHECK(v.robot == 1);
    CHECK(v.magnitude == doctest::Approx(0.02));
  }

  SUBCASE("goal pulled out of reach") {
    Scenario moved = s;
    moved.robots[0].goal[0] -= 1.0;
    const ValidationReport report = validate_solution(moved, lane_solution(s));
    REQUIRE(count_kind(report, ViolationKind::GoalMiss) == 1);
    CHECK(report.violations.front().magnitude == doctest::Approx(1.0 - 0.3));
  }

  SUBCASE("broken junction") {
    Solution sol = lane_solution(s);
    sol.robots[0].pieces[1].states[0][1] += 0.005;
    const ValidationReport report = validate_solution(s, sol);
    CHECK(count_kind(report, ViolationKind::JunctionMismatch) == 1);
    CHECK(count_kind(report, ViolationKind::DynamicsDefect) == 1);
    const auto junction = std::find_if(report.violations.begin(), report.violations.end(),
                                       [](const Violation& v) {
                                         return v.kind == ViolationKind::JunctionMismatch;
                                       });
    CHECK(junction->piece == 1);
    CHECK(junction->magnitude == doctest::Approx(0.005));
  }

  SUBCASE("wrong robot count") {
    Solution sol = lane_solution(s);
    sol.robots.pop_back();
    const ValidationReport report = validate_solution(s, sol);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations.front().kind == ViolationKind::Structure);
  }

  SUBCASE("empty and malformed trajectories") {
    Solution sol = lane_solution(s);
    sol.robots[0].pieces.clear();
    sol.robots[1].pieces[0].controls.pop_back();
    const ValidationReport report = validate_solution(s, sol);
    CHECK(count_kind(report, ViolationKind::Structure) == 2);
  }
}
