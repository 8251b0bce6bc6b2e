#include "karc/kernels.hpp"

#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace karc {

namespace {

// Total order on violations: earlier time wins, then smaller (i, j).
bool better(const PairViolation& a, const PairViolation& b) {
  if (!a.found) return false;
  if (!b.found) return true;
  if (a.time != b.time) return a.time < b.time;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

}  // namespace

PairViolation scan_pair(const SampledTrack& a, const SampledTrack& b, double d_min, int i, int j) {
  if (a.times.empty() || b.times.empty())
    throw std::invalid_argument("scan_pair: empty track");
  PairViolation out;
  std::size_t ia = 0;
  std::size_t ib = 0;
  double t = std::max(a.times[0], b.times[0]);
  const double inf = std::numeric_limits<double>::infinity();
  for (;;) {
    const double dist = (a.positions[ia] - b.positions[ib]).norm();
    if (dist < d_min) {
      out.found = true;
      out.time = t;
      out.i = i;
      out.j = j;
      out.sample_i = static_cast<int>(ia);
      out.sample_j = static_cast<int>(ib);
      out.distance = dist;
      return out;
    }
    const double next_a = ia + 1 < a.times.size() ? a.times[ia + 1] : inf;
    const double next_b = ib + 1 < b.times.size() ? b.times[ib + 1] : inf;
    if (next_a == inf && next_b == inf) break;
    if (next_a <= next_b) ++ia;
    if (next_b <= next_a) ++ib;
    t = std::min(next_a, next_b);
  }
  return out;
}

PairViolation earliest_separation_violation_serial(const std::vector<SampledTrack>& tracks,
                                                   double d_min) {
  PairViolation best;
  const int n = static_cast<int>(tracks.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const PairViolation v = scan_pair(tracks[i], tracks[j], d_min, i, j);
      if (better(v, best)) best = v;
    }
  return best;
}

PairViolation earliest_separation_violation_omp(const std::vector<SampledTrack>& tracks,
                                                double d_min) {
  const int n = static_cast<int>(tracks.size());
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<PairViolation> results(pairs.size());
#pragma omp parallel for schedule(static)
  for (long p = 0; p < static_cast<long>(pairs.size()); ++p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    results[static_cast<std::size_t>(p)] = scan_pair(tracks[i], tracks[j], d_min, i, j);
  }
  PairViolation best;
  for (const PairViolation& v : results)
    if (better(v, best)) best = v;
  return best;
}

PairViolation earliest_separation_violation(const std::vector<SampledTrack>& tracks,
                                            double d_min) {
#ifdef _OPENMP
  return earliest_separation_violation_omp(tracks, d_min);
#else
  return earliest_separation_violation_serial(tracks, d_min);
#endif
}

std::vector<double> batch_clearance_serial(const ConvexPolytope& body,
                                           const std::vector<Pose>& poses, const Workspace& ws) {
  std::vector<double> out(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) out[k] = clearance(body, poses[k], ws);
  return out;
}

std::vector<double> batch_clearance_omp(const ConvexPolytope& body, const std::vector<Pose>& poses,
                                        const Workspace& ws) {
  std::vector<double> out(poses.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(poses.size()); ++k)
    out[static_cast<std::size_t>(k)] = clearance(body, poses[static_cast<std::size_t>(k)], ws);
  return out;
}

std::vector<double> batch_clearance(const ConvexPolytope& body, const std::vector<Pose>& poses,
                                    const Workspace& ws) {
#ifdef _OPENMP
  return batch_clearance_omp(body, poses, ws);
#else
  return batch_clearance_serial(body, poses, ws);
#endif
}

std::vector<double> batch_soft_clearance_serial(const ConvexPolytope& body,
                                                const std::vector<Pose>& poses,
                                                const Workspace& ws, double rho) {
  std::vector<double> out(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) out[k] = soft_clearance(body, poses[k], ws, rho);
  return out;
}

std::vector<double> batch_soft_clearance_omp(const ConvexPolytope& body,
                                             const std::vector<Pose>& poses, const Workspace& ws,
                                             double rho) {
  std::vector<double> out(poses.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(poses.size()); ++k)
    out[static_cast<std::size_t>(k)] =
        soft_clearance(body, poses[static_cast<std::size_t>(k)], ws, rho);
  return out;
}

std::vector<double> batch_soft_clearance(const ConvexPolytope& body,
                                         const std::vector<Pose>& poses, const Workspace& ws,
                                         double rho) {
#ifdef _OPENMP
  return batch_soft_clearance_omp(body, poses, ws, rho);
#else
  return batch_soft_clearance_serial(body, poses, ws, rho);
#endif
}

}  // namespace karc
