#pragma once

#include <vector>

#include <Eigen/Dense>

#include "karc/geometry.hpp"

namespace karc {

// A piecewise-constant (zero-order-hold) position track on wall-clock time.
// times must be strictly increasing and start at 0; positions[k] is held from
// times[k] until times[k+1], and the final position is held forever. Tracks
// from different robots may use different, non-uniform time grids.
struct SampledTrack {
  std::vector<double> times;
  std::vector<Eigen::Vector3d> positions;

  int size() const { return static_cast<int>(times.size()); }
};

// Earliest wall-clock instant at which some robot pair falls below the
// separation distance. Ties across pairs at the same instant resolve to the
// smallest (i, j). sample_i / sample_j are the active sample indices of the
// two tracks at that instant.
struct PairViolation {
  bool found = false;
  double time = 0.0;
  int i = -1;
  int j = -1;
  int sample_i = -1;
  int sample_j = -1;
  double distance = 0.0;
};

// Scan a single pair of tracks over the merged union of their time instants.
PairViolation scan_pair(const SampledTrack& a, const SampledTrack& b, double d_min, int i, int j);

// Scan all pairs. The OpenMP variant parallelizes over pairs; each pair's
// result is computed independently and the final reduction runs serially over
// the totally ordered key (time, i, j), so results are identical to the
// serial variant bit for bit.
PairViolation earliest_separation_violation_serial(const std::vector<SampledTrack>& tracks,
                                                   double d_min);
PairViolation earliest_separation_violation_omp(const std::vector<SampledTrack>& tracks,
                                                double d_min);
PairViolation earliest_separation_violation(const std::vector<SampledTrack>& tracks, double d_min);

// Clearance of one body at many poses against the same workspace. Outputs are
// written elementwise with no cross-element reductions, so the OpenMP variant
// matches the serial one exactly.
std::vector<double> batch_clearance_serial(const ConvexPolytope& body,
                                           const std::vector<Pose>& poses, const Workspace& ws);
std::vector<double> batch_clearance_omp(const ConvexPolytope& body, const std::vector<Pose>& poses,
                                        const Workspace& ws);
std::vector<double> batch_clearance(const ConvexPolytope& body, const std::vector<Pose>& poses,
                                    const Workspace& ws);

/// Same contract for the smoothed clearance used by the optimizer.
std::vector<double> batch_soft_clearance_serial(const ConvexPolytope& body,
                                                const std::vector<Pose>& poses,
                                                const Workspace& ws, double rho);
std::vector<double> batch_soft_clearance_omp(const ConvexPolytope& body,
                                             const std::vector<Pose>& poses, const Workspace& ws,
                                             double rho);
std::vector<double> batch_soft_clearance(const ConvexPolytope& body,
                                         const std::vector<Pose>& poses, const Workspace& ws,
                                         double rho);

}  // namespace karc
