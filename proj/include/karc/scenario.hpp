#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "karc/dynamics.hpp"
#include "karc/geometry.hpp"

namespace karc {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioRobot {
  std::string id;
  RobotModel model;
  State start;
  State goal;     ///< goal region center; reaching means full-state distance <= alpha
  double alpha = 0.2;
};

/// One multi-robot planning problem: a shared workspace, homogeneous robots
/// with start/goal queries, and the pairwise center separation d_min.
struct Scenario {
  std::string name;
  Workspace workspace;
  std::vector<ScenarioRobot> robots;
  double d_min = 0.0;
};

/// Checks the structural invariants: starts pairwise >= d_min apart, all
/// starts and goal centers in free space, homogeneous model kinds.
/// Throws ScenarioError naming the offending robot otherwise.
void check_scenario(const Scenario& scenario);

/// Two facing columns of robots in an empty workspace; row partners swap
/// positions, so every pair of partner paths crosses in the middle.
Scenario build_open_cross(int n, ModelKind kind);

/// Open cross plus a deterministic grid of small obstacles between the
/// columns. density scales the obstacle size; 0 gives the open cross layout.
Scenario build_cluttered_cross(int n, ModelKind kind, double density = 1.0);

/// Quadrotors at a shared altitude crossing an empty 3D workspace.
Scenario build_quadrotor_cross(int n);

/// Two quadrotors swapping ends of a corridor too narrow to pass in, with a
/// side pocket (the inlet) that admits one waiting robot.
Scenario build_quadrotor_inlet();

void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace karc
