#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "karc/kernels.hpp"

using namespace karc;

namespace {

// Independent oracle: walk the global sorted union of every track's instants
// and test all pairs in (i, j) order at each instant, returning the first
// violation encountered. Active samples are found by linear search.
PairViolation oracle_scan(const std::vector<SampledTrack>& tracks, double d_min) {
  std::vector<double> instants;
  for (const auto& tr : tracks) instants.insert(instants.end(), tr.times.begin(), tr.times.end());
  std::sort(instants.begin(), instants.end());
  instants.erase(std::unique(instants.begin(), instants.end()), instants.end());
  const int n = static_cast<int>(tracks.size());
  for (double t : instants) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        int ki = 0, kj = 0;
        while (ki + 1 < tracks[i].size() && tracks[i].times[ki + 1] <= t) ++ki;
        while (kj + 1 < tracks[j].size() && tracks[j].times[kj + 1] <= t) ++kj;
        const double dist = (tracks[i].positions[ki] - tracks[j].positions[kj]).norm();
        if (dist < d_min) {
          PairViolation v;
          v.found = true;
          v.time = t;
          v.i = i;
          v.j = j;
          v.sample_i = ki;
          v.sample_j = kj;
          v.distance = dist;
          return v;
        }
      }
  }
  return {};
}

void check_equal(const PairViolation& a, const PairViolation& b) {
  CHECK(a.found == b.found);
  if (!a.found || !b.found) return;
  CHECK(a.time == b.time);
  CHECK(a.i == b.i);
  CHECK(a.j == b.j);
  CHECK(a.sample_i == b.sample_i);
  CHECK(a.sample_j == b.sample_j);
  CHECK(a.distance == b.distance);
}

std::vector<SampledTrack> random_tracks(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> length(1, 40);
  std::uniform_real_distribution<double> dt(0.05, 0.5);
  std::uniform_real_distribution<double> start(-4.0, 4.0);
  std::uniform_real_distribution<double> stride(-0.4, 0.4);
  std::vector<SampledTrack> tracks(n);
  for (auto& tr : tracks) {
    const int len = length(rng);
    double t = 0.0;
    Eigen::Vector3d p(start(rng), start(rng), 0.0);
    for (int k = 0; k < len; ++k) {
      tr.times.push_back(t);
      tr.positions.push_back(p);
      t += dt(rng);
      p += Eigen::Vector3d(stride(rng), stride(rng), 0.0);
    }
  }
  return tracks;
}

}  // namespace

TEST_CASE("head-on approach violates at the expected instant") {
  SampledTrack still;
  still.times = {0.0};
  still.positions = {Eigen::Vector3d::Zero()};
  SampledTrack mover;
  for (int k = 0; k <= 5; ++k) {
    mover.times.push_back(static_cast<double>(k));
    mover.positions.emplace_back(5.0 - k, 0.0, 0.0);
  }
  const auto v = earliest_separation_violation_serial({still, mover}, 1.0);
  REQUIRE(v.found);
  CHECK(v.time == 5.0);        // at t=4 the gap is exactly 1.0, which satisfies >= d_min
  CHECK(v.sample_i == 0);
  CHECK(v.sample_j == 5);
  CHECK(v.distance == 0.0);

  SUBCASE("with a larger separation requirement the violation comes earlier") {
    const auto w = earliest_separation_violation_serial({still, mover}, 2.5);
    REQUIRE(w.found);
    CHECK(w.time == 3.0);  // gap 2.0 < 2.5 first at t=3
  }
}

TEST_CASE("simultaneous violations resolve to the smallest pair") {
  SampledTrack at_origin;
  at_origin.times = {0.0};
  at_origin.positions = {Eigen::Vector3d::Zero()};
  const auto v = earliest_separation_violation_serial({at_origin, at_origin, at_origin}, 1.0);
  REQUIRE(v.found);
  CHECK(v.time == 0.0);
  CHECK(v.i == 0);
  CHECK(v.j == 1);
}

TEST_CASE("zero-order hold catches violations between one track's instants") {
  // A holds (0,0) during [0, 0.9); B hops to (0.1, 0) at t = 0.4, strictly
  // between A's instants, then leaves again.
  SampledTrack a;
  a.times = {0.0, 0.9};
  a.positions = {Eigen::Vector3d::Zero(), Eigen::Vector3d(10, 0, 0)};
  SampledTrack b;
  b.times = {0.0, 0.4, 0.8};
  b.positions = {Eigen::Vector3d(5, 0, 0), Eigen::Vector3d(0.1, 0, 0),
                 Eigen::Vector3d(5, 0, 0)};
  const auto v = earliest_separation_violation_serial({a, b}, 1.0);
  REQUIRE(v.found);
  CHECK(v.time == 0.4);
  CHECK(v.sample_i == 0);
  CHECK(v.sample_j == 1);
  CHECK(v.distance == doctest::Approx(0.1));
}

TEST_CASE("well separated tracks report no violation") {
  std::mt19937_64 rng(23);
  auto tracks = random_tracks(rng, 4);
  for (int r = 0; r < 4; ++r)
    for (auto& p : tracks[r].positions) p.x() += 100.0 * r;
  CHECK_FALSE(earliest_separation_violation_serial(tracks, 0.5).found);
  CHECK_FALSE(earliest_separation_violation_omp(tracks, 0.5).found);
}

TEST_CASE("serial, OpenMP, and oracle scans agree exactly on random inputs") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> robots(2, 6);
  int found = 0;
  int clear = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto tracks = random_tracks(rng, robots(rng));
    const double d_min = 0.6;
    const auto serial = earliest_separation_violation_serial(tracks, d_min);
    const auto omp = earliest_separation_violation_omp(tracks, d_min);
    const auto expected = oracle_scan(tracks, d_min);
    check_equal(serial, expected);
    check_equal(omp, expected);
    (serial.found ? found : clear) += 1;
  }
  // the trial mix must exercise both outcomes
  CHECK(found > 5);
  CHECK(clear > 5);
}

#ifdef _OPENMP
TEST_CASE("OpenMP scan is invariant to the thread count") {
  std::mt19937_64 rng(37);
  const auto tracks = random_tracks(rng, 6);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = earliest_separation_violation_omp(tracks, 0.8);
  omp_set_num_threads(4);
  const auto four = earliest_separation_violation_omp(tracks, 0.8);
  omp_set_num_threads(saved);
  check_equal(one, four);
}
#endif

TEST_CASE("batch clearance matches elementwise calls in both variants") {
  const auto body = ConvexPolytope::box2d(0.2, 0.2);
  const auto obstacle = ConvexPolytope::box2d(0.5, 0.5);
  Workspace ws(Eigen::Vector3d(-8, -8, 0), Eigen::Vector3d(8, 8, 0), 2,
               {{obstacle, Pose::planar(2, 0, 0)}, {obstacle, Pose::planar(-3, 1, 0)}});
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> coord(-7.0, 7.0);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::vector<Pose> poses;
  for (int k = 0; k < 200; ++k) poses.push_back(Pose::planar(coord(rng), coord(rng), angle(rng)));
  const auto serial = batch_clearance_serial(body, poses, ws);
  const auto omp = batch_clearance_omp(body, poses, ws);
  REQUIRE(serial.size() == poses.size());
  REQUIRE(omp.size() == poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    CHECK(serial[k] == omp[k]);
    CHECK(serial[k] == clearance(body, poses[k], ws));
  }

  SUBCASE("soft clearance variants agree and bound the hard minimum") {
    const double rho = 0.05;
    const auto soft_serial = batch_soft_clearance_serial(body, poses, ws, rho);
    const auto soft_omp = batch_soft_clearance_omp(body, poses, ws, rho);
    for (std::size_t k = 0; k < poses.size(); ++k) {
      CHECK(soft_serial[k] == soft_omp[k]);
      CHECK(soft_serial[k] == soft_clearance(body, poses[k], ws, rho));
      CHECK(soft_serial[k] <= serial[k] + 1e-12);
      // softmin over 3 values loses at most rho * log(3)
      CHECK(soft_serial[k] >= serial[k] - rho * std::log(3.0) - 1e-12);
      // a colder softmin is closer to the hard minimum
      CHECK(soft_clearance(body, poses[k], ws, 1e-4) == doctest::Approx(serial[k]).epsilon(1e-6));
    }
  }

  SUBCASE("without obstacles the soft clearance equals the bounds slack") {
    Workspace empty_ws(Eigen::Vector3d(-8, -8, 0), Eigen::Vector3d(8, 8, 0), 2);
    const Pose p = Pose::planar(1.0, -2.0, 0.3);
    CHECK(soft_clearance(body, p, empty_ws, 0.05) ==
          doctest::Approx(clearance(body, p, empty_ws)).epsilon(1e-12));
  }
}
