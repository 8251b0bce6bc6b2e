#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "karc/scenario.hpp"

using namespace karc;

namespace {

double start_gap(const Scenario& s, std::size_t i, std::size_t j) {
  return (position_of(s.robots[i].model, s.robots[i].start) -
          position_of(s.robots[j].model, s.robots[j].start))
      .norm();
}

void check_structurally_equal(const Scenario& a, const Scenario& b) {
  CHECK(a.name == b.name);
  CHECK(a.d_min == doctest::Approx(b.d_min).epsilon(1e-15));
  CHECK(a.workspace.dim == b.workspace.dim);
  CHECK((a.workspace.lo - b.workspace.lo).norm() == doctest::Approx(0.0));
  CHECK((a.workspace.hi - b.workspace.hi).norm() == doctest::Approx(0.0));
  REQUIRE(a.workspace.obstacles.size() == b.workspace.obstacles.size());
  for (std::size_t o = 0; o < a.workspace.obstacles.size(); ++o) {
    const auto& oa = a.workspace.obstacles[o];
    const auto& ob = b.workspace.obstacles[o];
    REQUIRE(oa.shape.vertices().size() == ob.shape.vertices().size());
    for (std::size_t v = 0; v < oa.shape.vertices().size(); ++v)
      CHECK((oa.shape.vertices()[v] - ob.shape.vertices()[v]).norm() == doctest::Approx(0.0));
    CHECK((oa.pose.position - ob.pose.position).norm() == doctest::Approx(0.0));
    CHECK((oa.pose.rpy - ob.pose.rpy).norm() == doctest::Approx(0.0));
  }
  REQUIRE(a.robots.size() == b.robots.size());
  for (std::size_t r = 0; r < a.robots.size(); ++r) {
    CHECK(a.robots[r].id == b.robots[r].id);
    CHECK(a.robots[r].model.kind == b.robots[r].model.kind);
    CHECK(a.robots[r].alpha == doctest::Approx(b.robots[r].alpha).epsilon(1e-15));
    CHECK((a.robots[r].start - b.robots[r].start).norm() == doctest::Approx(0.0));
    CHECK((a.robots[r].goal - b.robots[r].goal).norm() == doctest::Approx(0.0));
  }
}

}  // namespace

TEST_CASE("open cross: layout, partner swap, supported sizes") {
  const Scenario s = build_open_cross(4, ModelKind::Unicycle1);
  REQUIRE(s.robots.size() == 4);
  CHECK(s.name == "open-cross-unicycle1-n4");
  CHECK(s.workspace.dim == 2);
  CHECK(s.workspace.obstacles.empty());

  // separation floor is one robot of clearance: twice the circumscribed radius
  const double radius = make_unicycle1().body.circumradius();
  CHECK(s.d_min == doctest::Approx(2.0 * radius).epsilon(1e-12));

  // partners sit on the same row and swap x positions
  for (std::size_t r = 0; r + 1 < s.robots.size(); r += 2) {
    const auto& left = s.robots[r];
    const auto& right = s.robots[r + 1];
    CHECK(left.start[1] == doctest::Approx(right.start[1]));
    CHECK(left.goal[0] == doctest::Approx(right.start[0]));
    CHECK(left.goal[1] == doctest::Approx(right.start[1]));
    CHECK(right.goal[0] == doctest::Approx(left.start[0]));
    CHECK(left.start[0] == doctest::Approx(-left.goal[0]));
  }

  for (int n : {2, 4, 8, 16, 32}) {
    for (ModelKind kind : {ModelKind::Unicycle1, ModelKind::Unicycle2}) {
      const Scenario big = build_open_cross(n, kind);
      CHECK(static_cast<int>(big.robots.size()) == n);
      CHECK_NOTHROW(check_scenario(big));
      for (std::size_t i = 0; i < big.robots.size(); ++i)
        for (std::size_t j = i + 1; j < big.robots.size(); ++j)
          CHECK(start_gap(big, i, j) >= big.d_min - 1e-12);
    }
  }

  CHECK_THROWS_AS(build_open_cross(3, ModelKind::Unicycle1), ScenarioError);
  CHECK_THROWS_AS(build_open_cross(0, ModelKind::Unicycle1), ScenarioError);
  CHECK_THROWS_AS(build_open_cross(34, ModelKind::Unicycle1), ScenarioError);
  CHECK_THROWS_AS(build_open_cross(4, ModelKind::Quadrotor2), ScenarioError);
}

TEST_CASE("cluttered cross: obstacle grid keeps the row corridors open") {
  const Scenario s = build_cluttered_cross(4, ModelKind::Unicycle2);
  CHECK(s.name == "cluttered-cross-unicycle2-n4");
  CHECK_FALSE(s.workspace.obstacles.empty());
  CHECK_NOTHROW(check_scenario(s));

  // corridor height between obstacle rows must exceed diameter + d_min
  const RobotModel model = make_unicycle2();
  const double radius = model.body.circumradius();
  const double pitch = 3.0 * 2.0 * radius;
  const double corridor = pitch - 2.0 * 0.2;
  CHECK(corridor > 2.0 * radius + s.d_min);

  // every robot can at least sit anywhere on its own row
  for (const auto& robot : s.robots) {
    const double y = robot.start[1];
    for (double x = -4.0; x <= 4.0; x += 0.1)
      CHECK(in_free_space(model.body, Pose::planar(x, y, 0.0), s.workspace));
  }

  // deterministic builder
  const Scenario again = build_cluttered_cross(4, ModelKind::Unicycle2);
  check_structurally_equal(s, again);

  // zero density degenerates to the open cross (same robots, no obstacles)
  const Scenario open = build_open_cross(2, ModelKind::Unicycle1);
  const Scenario degenerate = build_cluttered_cross(2, ModelKind::Unicycle1, 0.0);
  CHECK(degenerate.workspace.obstacles.empty());
  REQUIRE(degenerate.robots.size() == open.robots.size());
  for (std::size_t r = 0; r < open.robots.size(); ++r) {
    CHECK((degenerate.robots[r].start - open.robots[r].start).norm() == doctest::Approx(0.0));
    CHECK((degenerate.robots[r].goal - open.robots[r].goal).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("quadrotor cross: shared altitude, hover starts, relaxed tolerance") {
  for (int n : {2, 16}) {
    const Scenario s = build_quadrotor_cross(n);
    REQUIRE(static_cast<int>(s.robots.size()) == n);
    CHECK(s.workspace.dim == 3);
    CHECK_NOTHROW(check_scenario(s));
    for (const auto& robot : s.robots) {
      CHECK(robot.model.kind == ModelKind::Quadrotor2);
      CHECK(robot.start[2] == doctest::Approx(2.0));
      CHECK(robot.start.tail(9).norm() == doctest::Approx(0.0));  // level and at rest
      CHECK(robot.goal.tail(9).norm() == doctest::Approx(0.0));
      CHECK(robot.alpha == doctest::Approx(0.5));
    }
  }
  CHECK_THROWS_AS(build_quadrotor_cross(5), ScenarioError);
  CHECK_THROWS_AS(build_quadrotor_cross(18), ScenarioError);
}

TEST_CASE("quadrotor inlet: blocking corridor with a usable side pocket") {
  const Scenario s = build_quadrotor_inlet();
  REQUIRE(s.robots.size() == 2);
  CHECK_NOTHROW(check_scenario(s));
  const RobotModel& model = s.robots.front().model;
  const double diameter = 2.0 * model.body.circumradius();

  // the corridor is too narrow for two robots to pass
  const double corridor_width = 0.45 - (-0.45);
  CHECK(corridor_width < 2.0 * (diameter + s.d_min));

  // a robot parked in the pocket clears the walls and the corridor traffic
  const Pose parked(Eigen::Vector3d(0.0, 0.9, 1.0), Eigen::Vector3d::Zero());
  CHECK(in_free_space(model.body, parked, s.workspace));
  CHECK(clearance(model.body, parked, s.workspace) > 0.0);
  for (double x = -1.0; x <= 1.0; x += 0.05) {
    const Pose passing(Eigen::Vector3d(x, 0.0, 1.0), Eigen::Vector3d::Zero());
    CHECK(in_free_space(model.body, passing, s.workspace));
    CHECK((parked.position - passing.position).norm() >= s.d_min);
  }

  // swapped-ends queries
  CHECK((s.robots[0].start - s.robots[1].goal).norm() == doctest::Approx(0.0));
  CHECK((s.robots[1].start - s.robots[0].goal).norm() == doctest::Approx(0.0));
}

TEST_CASE("scenario files: round trip, defaults, and strict parsing") {
  const char* path = "scenario_roundtrip.json";
  for (const Scenario& original :
       {build_open_cross(4, ModelKind::Unicycle1), build_cluttered_cross(4, ModelKind::Unicycle2),
        build_quadrotor_inlet()}) {
    save_scenario(original, path);
    const Scenario loaded = load_scenario(path);
    check_structurally_equal(original, loaded);
  }

  SUBCASE("minimal hand-written file loads with defaults") {
    std::ofstream out(path);
    out << R"({
      "workspace": {"bounds": {"lo": [-5, -5, 0], "hi": [5, 5, 0], "dim": 2}},
      "robots": [{"model": {"kind": "unicycle1"}, "start": [0, 0, 0], "goal": [1, 1, 0]}],
      "d_min": 0.5
    })";
    out.close();
    const Scenario s = load_scenario(path);
    CHECK(s.name == "scenario");
    REQUIRE(s.robots.size() == 1);
    CHECK(s.robots[0].id == "r0");
    CHECK(s.robots[0].alpha == doctest::Approx(0.2));
    CHECK(s.workspace.obstacles.empty());
    CHECK(s.d_min == doctest::Approx(0.5));
  }

  SUBCASE("missing d_min names the field") {
    std::ofstream out(path);
    out << R"({
      "workspace": {"bounds": {"lo": [-5, -5, 0], "hi": [5, 5, 0], "dim": 2}},
      "robots": [{"model": {"kind": "unicycle1"}, "start": [0, 0, 0], "goal": [1, 1, 0]}]
    })";
    out.close();
    CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains("d_min"), ScenarioError);
  }

  SUBCASE("unknown keys are rejected") {
    std::ofstream out(path);
    out << R"({
      "workspace": {"bounds": {"lo": [-5, -5, 0], "hi": [5, 5, 0], "dim": 2}},
      "robots": [{"model": {"kind": "unicycle1"}, "start": [0, 0, 0], "goal": [1, 1, 0]}],
      "d_min": 0.5,
      "comment": "not part of the schema"
    })";
    out.close();
    CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains("comment"), ScenarioError);
  }

  SUBCASE("malformed JSON reports a parse diagnostic") {
    std::ofstream out(path);
    out << "{ not json";
    out.close();
    CHECK_THROWS_AS(load_scenario(path), ScenarioError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_scenario("does_not_exist.json"), ScenarioError);
  }

  std::remove(path);
}
