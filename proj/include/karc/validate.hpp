#pragma once

#include <limits>
#include <string>
#include <vector>

#include "karc/core.hpp"
#include "karc/scenario.hpp"

namespace karc {

/// Constraint families the validator checks. Every reported violation names
/// the robot, the exact sample or control index, and how far past the limit
/// the solution is, so failures are reproducible without re-running a solver.
enum class ViolationKind {
  Structure,      ///< wrong robot count, empty trajectory, bad array lengths
  StartMismatch,  ///< first state differs from the scenario start
  GoalMiss,       ///< final state outside the goal ball
  DynamicsDefect, ///< Euler step residual above tolerance
  JunctionMismatch, ///< consecutive chunks disagree on the shared state
  ControlBounds,
  StateBounds,
  TimestepBounds,
  Collision,      ///< body leaves free space (obstacle hit or out of bounds)
  Separation,     ///< robot pair closer than d_min
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::Structure;
  int robot = -1;
  int other = -1;     ///< second robot of a separation pair, else -1
  int piece = -1;     ///< chunk index within the robot's trajectory, else -1
  int index = -1;     ///< state/control index within the chunk, else -1
  double time = 0.0;  ///< wall-clock time of the sample (0 when not timed)
  double magnitude = 0.0;  ///< amount by which the constraint is exceeded
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // Extremes over the whole solution, useful for margin studies even when
  // everything passes.
  double max_defect = 0.0;
  double max_goal_error = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  double min_separation = std::numeric_limits<double>::infinity();

  bool ok() const { return violations.empty(); }
};

/// Independent full audit of a solution against its scenario: start and goal
/// conditions, discrete dynamics, control/state/timestep bounds, chunk
/// stitching, static collision at every sample, and pairwise separation at
/// every merged sample instant (final states held). Runs serially and shares
/// only the dynamics and geometry primitives with the planner, so planner
/// bugs cannot vouch for themselves.
ValidationReport validate_solution(const Scenario& scenario, const Solution& solution);

}  // namespace karc
