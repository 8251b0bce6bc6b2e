#include "karc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace karc {

namespace {

using nlohmann::json;

// Layout rule shared by the cross builders: rows are spaced one robot
// diameter plus two separation distances apart, so neighbors start legal and
// stay legal when driving straight, and partners must still cross in the
// middle. Exact coordinates are stand-ins; only the structure matters.
struct CrossLayout {
  double d_min = 0.0;
  double pitch = 0.0;
  double column_x = 4.0;
  int rows = 0;
};

CrossLayout cross_layout(const RobotModel& model, int n) {
  CrossLayout layout;
  const double radius = model.body.circumradius();
  layout.d_min = 2.0 * radius;
  layout.pitch = 2.0 * layout.d_min + 2.0 * radius;
  layout.rows = n / 2;
  return layout;
}

double row_y(const CrossLayout& layout, int row) {
  return (row - 0.5 * (layout.rows - 1)) * layout.pitch;
}

void require_cross_count(int n, int max_n) {
  if (n < 2 || n % 2 != 0)
    throw ScenarioError("cross scenarios need an even robot count of at least 2, got " +
                        std::to_string(n));
  if (n > max_n)
    throw ScenarioError("cross scenarios support at most " + std::to_string(max_n) +
                        " robots, got " + std::to_string(n));
}

State planar_state(const RobotModel& model, double x, double y, double theta) {
  State s = State::Zero(model.state_dim());
  s[0] = x;
  s[1] = y;
  s[2] = theta;
  return s;
}

State hover_state(const RobotModel& model, double x, double y, double z) {
  State s = State::Zero(model.state_dim());
  s[0] = x;
  s[1] = y;
  s[2] = z;
  return s;
}

json vec_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ScenarioError("field '" + where + "' must be an array of 3 numbers");
  for (const auto& c : j)
    if (!c.is_number()) throw ScenarioError("field '" + where + "' must be numeric");
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

State state_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ScenarioError("field '" + where + "' must be a non-empty array");
  State s(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ScenarioError("field '" + where + "' must be numeric");
    s[static_cast<int>(i)] = j[i].get<double>();
  }
  return s;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw ScenarioError("unknown key '" + item.key() + "' in " + where);
  }
}

const json& require_key(const json& j, const std::string& key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ScenarioError("missing field '" + key + "' in " + where);
  return *it;
}

}  // namespace

void check_scenario(const Scenario& scenario) {
  if (scenario.robots.empty()) throw ScenarioError("scenario '" + scenario.name + "' has no robots");
  if (scenario.d_min < 0.0) throw ScenarioError("scenario d_min must be non-negative");
  std::set<std::string> ids;
  const ModelKind kind = scenario.robots.front().model.kind;
  for (const ScenarioRobot& robot : scenario.robots) {
    if (!ids.insert(robot.id).second)
      throw ScenarioError("duplicate robot id '" + robot.id + "'");
    if (robot.model.kind != kind)
      throw ScenarioError("robot '" + robot.id + "' breaks the homogeneous-model rule");
    if (robot.start.size() != robot.model.state_dim() ||
        robot.goal.size() != robot.model.state_dim())
      throw ScenarioError("robot '" + robot.id + "' has a state of the wrong dimension");
    if (robot.alpha <= 0.0)
      throw ScenarioError("robot '" + robot.id + "' needs a positive goal tolerance");
    if (!in_free_space(robot.model.body, extract_configuration(robot.model, robot.start),
                       scenario.workspace))
      throw ScenarioError("start of robot '" + robot.id + "' is not in free space");
    if (!in_free_space(robot.model.body, extract_configuration(robot.model, robot.goal),
                       scenario.workspace))
      throw ScenarioError("goal of robot '" + robot.id + "' is not in free space");
  }
  for (std::size_t i = 0; i < scenario.robots.size(); ++i) {
    for (std::size_t j = i + 1; j < scenario.robots.size(); ++j) {
      const double gap = (position_of(scenario.robots[i].model, scenario.robots[i].start) -
                          position_of(scenario.robots[j].model, scenario.robots[j].start))
                             .norm();
      if (gap < scenario.d_min - 1e-12)
        throw ScenarioError("starts of robots '" + scenario.robots[i].id + "' and '" +
                            scenario.robots[j].id + "' are closer than d_min");
    }
  }
}

Scenario build_open_cross(int n, ModelKind kind) {
  require_cross_count(n, 32);
  if (kind == ModelKind::Quadrotor2)
    throw ScenarioError("the planar cross takes a unicycle model; use build_quadrotor_cross");
  const RobotModel model = make_model(kind);
  const CrossLayout layout = cross_layout(model, n);

  Scenario scenario;
  scenario.name = "open-cross-" + to_string(kind) + "-n" + std::to_string(n);
  scenario.d_min = layout.d_min;
  const double y_extent = 0.5 * (layout.rows - 1) * layout.pitch + 2.0;
  scenario.workspace = Workspace(Eigen::Vector3d(-6.0, -y_extent, 0.0),
                                 Eigen::Vector3d(6.0, y_extent, 0.0), 2);

  for (int row = 0; row < layout.rows; ++row) {
    const double y = row_y(layout, row);
    ScenarioRobot left;
    left.id = "L" + std::to_string(row);
    left.model = model;
    left.start = planar_state(model, -layout.column_x, y, 0.0);
    left.goal = planar_state(model, layout.column_x, y, 0.0);
    ScenarioRobot right;
    right.id = "R" + std::to_string(row);
    right.model = model;
    right.start = planar_state(model, layout.column_x, y, M_PI);
    right.goal = planar_state(model, -layout.column_x, y, M_PI);
    scenario.robots.push_back(std::move(left));
    scenario.robots.push_back(std::move(right));
  }
  check_scenario(scenario);
  return scenario;
}

Scenario build_cluttered_cross(int n, ModelKind kind, double density) {
  Scenario scenario = build_open_cross(n, kind);
  std::ostringstream name;
  name << "cluttered-cross-" << to_string(kind) << "-n" << n;
  scenario.name = name.str();
  if (density <= 0.0) return scenario;

  const RobotModel model = make_model(kind);
  const CrossLayout layout = cross_layout(model, n);
  const double half = 0.2 * density;
  // Obstacle rows sit midway between robot rows (plus one above and one
  // below), keeping every travel corridor wider than diameter + d_min.
  for (double cx : {-2.0, 0.0, 2.0}) {
    for (int gap = 0; gap <= layout.rows; ++gap) {
      const double cy = row_y(layout, 0) + (gap - 0.5) * layout.pitch;
      scenario.workspace.obstacles.push_back(
          {ConvexPolytope::box2d(half, half), Pose::planar(cx, cy, 0.0)});
    }
  }
  check_scenario(scenario);
  return scenario;
}

Scenario build_quadrotor_cross(int n) {
  require_cross_count(n, 16);
  const RobotModel model = make_quadrotor2();
  const CrossLayout layout = cross_layout(model, n);
  const double altitude = 2.0;

  Scenario scenario;
  scenario.name = "quadrotor-cross-n" + std::to_string(n);
  scenario.d_min = layout.d_min;
  const double y_extent = 0.5 * (layout.rows - 1) * layout.pitch + 2.0;
  scenario.workspace = Workspace(Eigen::Vector3d(-6.0, -y_extent, 0.0),
                                 Eigen::Vector3d(6.0, y_extent, 4.0), 3);

  for (int row = 0; row < layout.rows; ++row) {
    const double y = row_y(layout, row);
    ScenarioRobot left;
    left.id = "L" + std::to_string(row);
    left.model = model;
    left.start = hover_state(model, -layout.column_x, y, altitude);
    left.goal = hover_state(model, layout.column_x, y, altitude);
    left.alpha = 0.5;  // relaxed: a full-state ball over 12 coordinates
    ScenarioRobot right;
    right.id = "R" + std::to_string(row);
    right.model = model;
    right.start = hover_state(model, layout.column_x, y, altitude);
    right.goal = hover_state(model, -layout.column_x, y, altitude);
    right.alpha = 0.5;
    scenario.robots.push_back(std::move(left));
    scenario.robots.push_back(std::move(right));
  }
  check_scenario(scenario);
  return scenario;
}

Scenario build_quadrotor_inlet() {
  const RobotModel model = make_quadrotor2();
  const double d_min = 2.0 * model.body.circumradius();

  Scenario scenario;
  scenario.name = "quadrotor-inlet";
  scenario.d_min = d_min;
  // A corridor 0.9 m wide (robots cannot pass: max lateral center distance
  // inside is 0.5 m < d_min) with a side pocket at mid-length; the free space
  // is carved by two blocks flanking the pocket.
  scenario.workspace = Workspace(Eigen::Vector3d(-4.0, -0.45, 0.0),
                                 Eigen::Vector3d(4.0, 1.35, 2.0), 3);
  scenario.workspace.obstacles.push_back(
      {ConvexPolytope::aabb(Eigen::Vector3d(-4.0, 0.45, 0.0), Eigen::Vector3d(-0.6, 1.35, 2.0), 3),
       Pose{}});
  scenario.workspace.obstacles.push_back(
      {ConvexPolytope::aabb(Eigen::Vector3d(0.6, 0.45, 0.0), Eigen::Vector3d(4.0, 1.35, 2.0), 3),
       Pose{}});

  ScenarioRobot a;
  a.id = "A";
  a.model = model;
  a.start = hover_state(model, -3.0, 0.0, 1.0);
  a.goal = hover_state(model, 3.0, 0.0, 1.0);
  a.alpha = 0.4;
  ScenarioRobot b;
  b.id = "B";
  b.model = model;
  b.start = hover_state(model, 3.0, 0.0, 1.0);
  b.goal = hover_state(model, -3.0, 0.0, 1.0);
  b.alpha = 0.4;
  scenario.robots.push_back(std::move(a));
  scenario.robots.push_back(std::move(b));
  check_scenario(scenario);
  return scenario;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  json obstacles = json::array();
  for (const PlacedPolytope& obstacle : scenario.workspace.obstacles) {
    json vertices = json::array();
    for (const Eigen::Vector3d& v : obstacle.shape.vertices()) vertices.push_back(vec_to_json(v));
    obstacles.push_back({{"vertices", vertices},
                         {"dim", obstacle.shape.dim()},
                         {"pose",
                          {{"position", vec_to_json(obstacle.pose.position)},
                           {"rpy", vec_to_json(obstacle.pose.rpy)}}}});
  }
  json robots = json::array();
  for (const ScenarioRobot& robot : scenario.robots) {
    json start = json::array();
    for (int i = 0; i < robot.start.size(); ++i) start.push_back(robot.start[i]);
    json goal = json::array();
    for (int i = 0; i < robot.goal.size(); ++i) goal.push_back(robot.goal[i]);
    robots.push_back({{"id", robot.id},
                      {"model", {{"kind", to_string(robot.model.kind)}}},
                      {"start", start},
                      {"goal", goal},
                      {"alpha", robot.alpha}});
  }
  const json doc = {{"name", scenario.name},
                    {"workspace",
                     {{"bounds",
                       {{"lo", vec_to_json(scenario.workspace.lo)},
                        {"hi", vec_to_json(scenario.workspace.hi)},
                        {"dim", scenario.workspace.dim}}},
                      {"obstacles", obstacles}}},
                    {"robots", robots},
                    {"d_min", scenario.d_min}};
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file '" + path + "'");
  out << doc.dump(2) << '\n';
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("scenario file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("scenario file must hold a JSON object");
  reject_unknown_keys(doc, {"name", "workspace", "robots", "d_min"}, "the scenario");

  Scenario scenario;
  scenario.name = doc.value("name", std::string("scenario"));
  const json& dmin = require_key(doc, "d_min", "the scenario");
  if (!dmin.is_number()) throw ScenarioError("field 'd_min' must be a number");
  scenario.d_min = dmin.get<double>();

  const json& jws = require_key(doc, "workspace", "the scenario");
  reject_unknown_keys(jws, {"bounds", "obstacles"}, "workspace");
  const json& jbounds = require_key(jws, "bounds", "workspace");
  reject_unknown_keys(jbounds, {"lo", "hi", "dim"}, "workspace.bounds");
  const Eigen::Vector3d lo = vec_from_json(require_key(jbounds, "lo", "workspace.bounds"),
                                           "workspace.bounds.lo");
  const Eigen::Vector3d hi = vec_from_json(require_key(jbounds, "hi", "workspace.bounds"),
                                           "workspace.bounds.hi");
  const json& jdim = require_key(jbounds, "dim", "workspace.bounds");
  if (!jdim.is_number_integer() || (jdim.get<int>() != 2 && jdim.get<int>() != 3))
    throw ScenarioError("field 'workspace.bounds.dim' must be 2 or 3");
  std::vector<PlacedPolytope> obstacles;
  if (jws.contains("obstacles")) {
    if (!jws["obstacles"].is_array()) throw ScenarioError("field 'obstacles' must be an array");
    for (const json& jo : jws["obstacles"]) {
      reject_unknown_keys(jo, {"vertices", "dim", "pose"}, "an obstacle");
      const json& jverts = require_key(jo, "vertices", "an obstacle");
      if (!jverts.is_array() || jverts.empty())
        throw ScenarioError("obstacle 'vertices' must be a non-empty array");
      std::vector<Eigen::Vector3d> vertices;
      for (const json& jv : jverts) vertices.push_back(vec_from_json(jv, "obstacle vertex"));
      const int obstacle_dim = jo.value("dim", jdim.get<int>());
      Pose pose;
      if (jo.contains("pose")) {
        reject_unknown_keys(jo["pose"], {"position", "rpy"}, "an obstacle pose");
        pose = Pose(vec_from_json(require_key(jo["pose"], "position", "an obstacle pose"),
                                  "obstacle pose position"),
                    vec_from_json(require_key(jo["pose"], "rpy", "an obstacle pose"),
                                  "obstacle pose rpy"));
      }
      try {
        obstacles.push_back({ConvexPolytope(std::move(vertices), obstacle_dim), pose});
      } catch (const InvalidGeometryError& e) {
        throw ScenarioError(std::string("bad obstacle geometry: ") + e.what());
      }
    }
  }
  scenario.workspace = Workspace(lo, hi, jdim.get<int>(), std::move(obstacles));

  const json& jrobots = require_key(doc, "robots", "the scenario");
  if (!jrobots.is_array() || jrobots.empty())
    throw ScenarioError("field 'robots' must be a non-empty array");
  int index = 0;
  for (const json& jr : jrobots) {
    reject_unknown_keys(jr, {"id", "model", "start", "goal", "alpha"}, "a robot");
    ScenarioRobot robot;
    robot.id = jr.value("id", "r" + std::to_string(index));
    const json& jmodel = require_key(jr, "model", "robot '" + robot.id + "'");
    reject_unknown_keys(jmodel, {"kind", "params"}, "robot model");
    const json& jkind = require_key(jmodel, "kind", "robot model");
    if (!jkind.is_string()) throw ScenarioError("field 'model.kind' must be a string");
    try {
      robot.model = make_model(model_kind_from_string(jkind.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("robot '") + robot.id + "': " + e.what());
    }
    if (jmodel.contains("params")) {
      const json& jp = jmodel["params"];
      reject_unknown_keys(jp, {"dt_min", "dt_max"}, "robot model params");
      robot.model.dt_min = jp.value("dt_min", robot.model.dt_min);
      robot.model.dt_max = jp.value("dt_max", robot.model.dt_max);
    }
    robot.start = state_from_json(require_key(jr, "start", "robot '" + robot.id + "'"),
                                  "robot '" + robot.id + "' start");
    robot.goal = state_from_json(require_key(jr, "goal", "robot '" + robot.id + "'"),
                                 "robot '" + robot.id + "' goal");
    if (robot.start.size() != robot.model.state_dim() ||
        robot.goal.size() != robot.model.state_dim())
      throw ScenarioError("robot '" + robot.id + "' start/goal have the wrong state dimension");
    robot.alpha = jr.value("alpha", 0.2);
    scenario.robots.push_back(std::move(robot));
    ++index;
  }
  return scenario;
}

}  // namespace karc
