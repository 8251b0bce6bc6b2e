#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "karc/kernels.hpp"
#include "karc/sampling.hpp"

using namespace karc;

namespace {

Workspace open_box(double half, int dim = 2, double height = 3.0) {
  if (dim == 3)
    return Workspace(Eigen::Vector3d(-half, -half, 0.0), Eigen::Vector3d(half, half, height), 3);
  return Workspace(Eigen::Vector3d(-half, -half, 0.0), Eigen::Vector3d(half, half, 0.0), 2);
}

void check_path_shape(const RobotModel& model, const Workspace& ws, const KinematicPath& path,
                      const Query& query, double delta) {
  REQUIRE(path.waypoints.size() >= 2);
  const Pose start_c = extract_configuration(model, query.start);
  const Pose goal_c = extract_configuration(model, query.goal);
  CHECK((path.waypoints.front().position - start_c.position).norm() == 0.0);
  CHECK((path.waypoints.back().position - goal_c.position).norm() == 0.0);
  CHECK(path.waypoints.front().rpy == start_c.rpy);
  CHECK(path.waypoints.back().rpy == goal_c.rpy);
  for (std::size_t k = 0; k + 1 < path.waypoints.size(); ++k)
    CHECK((path.waypoints[k + 1].position - path.waypoints[k].position).norm() <= delta + 1e-9);
  for (const auto& p : path.waypoints) CHECK(in_free_space(model.body, p, ws));
}

}  // namespace

TEST_CASE("seed derivation is deterministic and stream-separated") {
  CHECK(derive_seed(42, 1, 0) == derive_seed(42, 1, 0));
  CHECK(derive_seed(42, 1, 0) != derive_seed(42, 1, 1));
  CHECK(derive_seed(42, 1, 0) != derive_seed(42, 2, 0));
  CHECK(derive_seed(42, 1, 0) != derive_seed(43, 1, 0));
}

TEST_CASE("moving obstacle hold semantics") {
  MovingObstacleSet moving;
  moving.d_min = 1.0;
  SampledTrack tr;
  tr.times = {0.0, 1.0};
  tr.positions = {Eigen::Vector3d::Zero(), Eigen::Vector3d(10, 0, 0)};
  moving.tracks.push_back(tr);
  const Eigen::Vector3d probe(0.5, 0, 0);
  CHECK_FALSE(moving.clear(probe, 0.0));
  CHECK_FALSE(moving.clear(probe, 0.999));
  CHECK(moving.clear(probe, 1.0));   // obstacle has hopped away
  CHECK(moving.clear(probe, 50.0));  // final position held forever
}

TEST_CASE("track_of lays states on the trajectory's time grid") {
  const auto m = make_unicycle1();
  std::vector<Control> controls(5, (Control(2) << 1.0, 0.0).finished());
  const Trajectory traj = rollout(m, State::Zero(3), controls, 0.2);
  const SampledTrack track = track_of(m, traj);
  REQUIRE(track.size() == 6);
  CHECK(track.times[3] == doctest::Approx(0.6));
  CHECK((track.positions[5] - position_of(m, traj.states[5])).norm() == 0.0);
}

TEST_CASE("kinematic planner connects across an empty workspace") {
  const auto m = make_unicycle1();
  const Workspace ws = open_box(5.0);
  Query q;
  q.start = (State(3) << -2, 0, 0).finished();
  q.goal = (State(3) << 2, 0, M_PI).finished();
  q.alpha = 0.2;
  PlannerParams params;
  params.seed = 7;
  const auto path = plan_kinematic(m, ws, q, params);
  REQUIRE(path.has_value());
  check_path_shape(m, ws, *path, q, params.steer_delta);
}

TEST_CASE("kinematic planner works in 3D for the quadrotor") {
  const auto m = make_quadrotor2();
  const Workspace ws = open_box(5.0, 3);
  Query q;
  q.start = State::Zero(12);
  q.start[0] = -2;
  q.start[2] = 1;
  q.goal = State::Zero(12);
  q.goal[0] = 2;
  q.goal[2] = 2;
  q.alpha = 0.5;
  PlannerParams params;
  params.seed = 7;
  const auto path = plan_kinematic(m, ws, q, params);
  REQUIRE(path.has_value());
  check_path_shape(m, ws, *path, q, params.steer_delta);
}

TEST_CASE("kinematic planner routes around a wall with a gap") {
  const auto m = make_unicycle1();
  // wall from y = -5 to y = 3 at x = 0 leaves a gap at the top
  const auto wall = ConvexPolytope::aabb(Eigen::Vector3d(-0.2, -5, 0), Eigen::Vector3d(0.2, 3, 0), 2);
  Workspace ws(Eigen::Vector3d(-5, -5, 0), Eigen::Vector3d(5, 5, 0), 2,
               {{wall, Pose::planar(0, 0, 0)}});
  Query q;
  q.start = (State(3) << -3, 0, 0).finished();
  q.goal = (State(3) << 3, 0, 0).finished();
  q.alpha = 0.2;
  PlannerParams params;
  params.seed = 11;
  const auto path = plan_kinematic(m, ws, q, params);
  REQUIRE(path.has_value());
  check_path_shape(m, ws, *path, q, params.steer_delta);
  // the path must clear the top of the wall
  double max_y = -100.0;
  for (const auto& p : path->waypoints) max_y = std::max(max_y, p.position.y());
  CHECK(max_y > 3.0);

  SUBCASE("same seed reproduces the identical path") {
    const auto again = plan_kinematic(m, ws, q, params);
    REQUIRE(again.has_value());
    REQUIRE(again->waypoints.size() == path->waypoints.size());
    for (std::size_t k = 0; k < path->waypoints.size(); ++k) {
      CHECK((again->waypoints[k].position - path->waypoints[k].position).norm() == 0.0);
      CHECK((again->waypoints[k].rpy - path->waypoints[k].rpy).norm() == 0.0);
    }
  }
}

TEST_CASE("kinematic planner reports failure when fully walled off") {
  const auto m = make_unicycle1();
  const auto wall = ConvexPolytope::aabb(Eigen::Vector3d(-0.2, -5, 0), Eigen::Vector3d(0.2, 5, 0), 2);
  Workspace ws(Eigen::Vector3d(-5, -5, 0), Eigen::Vector3d(5, 5, 0), 2,
               {{wall, Pose::planar(0, 0, 0)}});
  Query q;
  q.start = (State(3) << -3, 0, 0).finished();
  q.goal = (State(3) << 3, 0, 0).finished();
  q.alpha = 0.2;
  PlannerParams params;
  params.seed = 13;
  params.max_iterations = 2000;
  CHECK_FALSE(plan_kinematic(m, ws, q, params).has_value());
}

TEST_CASE("kinodynamic RRT returns an exactly feasible trajectory") {
  const auto m = make_unicycle1();
  const Workspace ws = open_box(5.0);
  Query q;
  q.start = State::Zero(3);
  q.goal = (State(3) << 1.5, 0, 0).finished();
  q.alpha = 0.25;
  PlannerParams params;
  params.seed = 3;
  const auto traj = plan_kinodynamic_rrt(m, ws, q, {}, params);
  REQUIRE(traj.has_value());
  CHECK(traj->dt == params.rrt_dt);
  CHECK(feasibility_residual(m, *traj) == 0.0);
  CHECK(goal_distance(m, traj->states.back(), q.goal) <= q.alpha);
  for (const auto& u : traj->controls) {
    CHECK((u.array() >= m.control_lo.array() - 0.0).all());
    CHECK((u.array() <= m.control_hi.array() + 0.0).all());
  }
  for (const auto& x : traj->states)
    CHECK(in_free_space(m.body, extract_configuration(m, x), ws));
}

TEST_CASE("kinodynamic RRT keeps clear of a moving obstacle") {
  const auto m = make_unicycle1();
  const Workspace ws = open_box(5.0);
  Query q;
  q.start = (State(3) << -2, 0, 0).finished();
  q.goal = (State(3) << 2, 0, 0).finished();
  q.alpha = 0.3;
  MovingObstacleSet moving;
  moving.d_min = 0.8;
  SampledTrack blocker;
  blocker.times = {0.0};
  blocker.positions = {Eigen::Vector3d::Zero()};
  moving.tracks.push_back(blocker);
  PlannerParams params;
  params.seed = 5;
  const auto traj = plan_kinodynamic_rrt(m, ws, q, moving, params);
  REQUIRE(traj.has_value());
  for (const auto& x : traj->states)
    CHECK((position_of(m, x) - Eigen::Vector3d::Zero()).norm() >= moving.d_min);
  CHECK(goal_distance(m, traj->states.back(), q.goal) <= q.alpha);
}

TEST_CASE("kinodynamic RRT with the start at the goal is trivial") {
  const auto m = make_unicycle1();
  const Workspace ws = open_box(5.0);
  Query q;
  q.start = (State(3) << 1, 1, 0.1).finished();
  q.goal = (State(3) << 1, 1, 0.1).finished();
  q.alpha = 0.2;
  const auto traj = plan_kinodynamic_rrt(m, ws, q, {}, PlannerParams{});
  REQUIRE(traj.has_value());
  CHECK(traj->states.size() == 1);
  CHECK(traj->controls.empty());
}

TEST_CASE("kinodynamic RRT fails cleanly on an unreachable goal") {
  const auto m = make_unicycle1();
  const Workspace ws = open_box(5.0);
  Query q;
  q.start = State::Zero(3);
  q.goal = (State(3) << 20, 0, 0).finished();
  q.alpha = 0.2;
  PlannerParams params;
  params.seed = 9;
  params.max_extensions = 1500;
  CHECK_FALSE(plan_kinodynamic_rrt(m, ws, q, {}, params).has_value());
}

TEST_CASE("quadrotor kinodynamic RRT reaches a nearby hover goal") {
  const auto m = make_quadrotor2();
  const Workspace ws = open_box(5.0, 3);
  Query q;
  q.start = State::Zero(12);
  q.start[2] = 1.0;
  q.goal = State::Zero(12);
  q.goal[0] = 0.8;
  q.goal[2] = 1.0;
  q.alpha = 0.5;
  PlannerParams params;
  params.seed = 21;
  const auto traj = plan_kinodynamic_rrt(m, ws, q, {}, params);
  REQUIRE(traj.has_value());
  CHECK(feasibility_residual(m, *traj) == 0.0);
  CHECK(goal_distance(m, traj->states.back(), q.goal) <= q.alpha);
}

TEST_CASE("decoupled planning resolves a head-on swap") {
  const std::vector<RobotModel> models{make_unicycle1(), make_unicycle1()};
  const Workspace ws = open_box(5.0);
  std::vector<Query> queries(2);
  queries[0].start = (State(3) << -2, 0, 0).finished();
  queries[0].goal = (State(3) << 2, 0, 0).finished();
  queries[0].alpha = 0.3;
  queries[1].start = (State(3) << 2, 0, M_PI).finished();
  queries[1].goal = (State(3) << -2, 0, M_PI).finished();
  queries[1].alpha = 0.3;
  const double d_min = 0.6;
  PlannerParams params;
  params.seed = 33;
  const auto trajs = plan_decoupled_rrt(models, ws, queries, d_min, params);
  REQUIRE(trajs.has_value());
  REQUIRE(trajs->size() == 2);
  std::vector<SampledTrack> tracks;
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(feasibility_residual(models[r], (*trajs)[r]) == 0.0);
    CHECK(goal_distance(models[r], (*trajs)[r].states.back(), queries[r].goal) <=
          queries[r].alpha);
    tracks.push_back(track_of(models[r], (*trajs)[r]));
  }
  CHECK_FALSE(earliest_separation_violation_serial(tracks, d_min).found);
}

TEST_CASE("composite planning resolves a head-on swap jointly") {
  const std::vector<RobotModel> models{make_unicycle1(), make_unicycle1()};
  const Workspace ws = open_box(5.0);
  std::vector<Query> queries(2);
  queries[0].start = (State(3) << -1.5, 0, 0).finished();
  queries[0].goal = (State(3) << 1.5, 0, 0).finished();
  queries[0].alpha = 0.3;
  queries[1].start = (State(3) << 1.5, 0, M_PI).finished();
  queries[1].goal = (State(3) << -1.5, 0, M_PI).finished();
  queries[1].alpha = 0.3;
  const double d_min = 0.6;
  PlannerParams params;
  params.seed = 27;
  const auto trajs = plan_composite_rrt(models, ws, queries, d_min, params);
  REQUIRE(trajs.has_value());
  REQUIRE(trajs->size() == 2);
  CHECK((*trajs)[0].states.size() == (*trajs)[1].states.size());
  std::vector<SampledTrack> tracks;
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK((*trajs)[r].dt == params.rrt_dt);
    CHECK(feasibility_residual(models[r], (*trajs)[r]) == 0.0);
    CHECK(goal_distance(models[r], (*trajs)[r].states.back(), queries[r].goal) <=
          queries[r].alpha);
    tracks.push_back(track_of(models[r], (*trajs)[r]));
  }
  CHECK_FALSE(earliest_separation_violation_serial(tracks, d_min).found);
}

TEST_CASE("composite planning with everyone at the goal is trivial") {
  const std::vector<RobotModel> models{make_unicycle1(), make_unicycle1()};
  const Workspace ws = open_box(5.0);
  std::vector<Query> queries(2);
  queries[0].start = (State(3) << -1, 0, 0).finished();
  queries[0].goal = queries[0].start;
  queries[0].alpha = 0.2;
  queries[1].start = (State(3) << 1, 0, 0).finished();
  queries[1].goal = queries[1].start;
  queries[1].alpha = 0.2;
  const auto trajs = plan_composite_rrt(models, ws, queries, 0.6, PlannerParams{});
  REQUIRE(trajs.has_value());
  CHECK((*trajs)[0].states.size() == 1);
  CHECK((*trajs)[1].states.size() == 1);
}

TEST_CASE("composite planning rejects starts that already violate separation") {
  const std::vector<RobotModel> models{make_unicycle1(), make_unicycle1()};
  const Workspace ws = open_box(5.0);
  std::vector<Query> queries(2);
  queries[0].start = (State(3) << 0, 0, 0).finished();
  queries[0].goal = (State(3) << 2, 0, 0).finished();
  queries[0].alpha = 0.2;
  queries[1].start = (State(3) << 0.1, 0, 0).finished();
  queries[1].goal = (State(3) << -2, 0, 0).finished();
  queries[1].alpha = 0.2;
  CHECK_FALSE(plan_composite_rrt(models, ws, queries, 0.5, PlannerParams{}).has_value());
}
