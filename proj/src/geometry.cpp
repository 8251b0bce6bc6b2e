#include "karc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace karc {

namespace {

constexpr double kGjkRelTol = 1e-12;
constexpr double kZeroDistance = 1e-9;

bool lex_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

// Closest point to the origin on the convex hull of up to four points.
// Enumerates faces, solving the affine projection on each and keeping the
// minimum-norm candidate with nonnegative barycentric coordinates. On return
// `points` is reduced to the supporting subset.
Eigen::Vector3d closest_on_simplex(std::vector<Eigen::Vector3d>& points) {
  const int n = static_cast<int>(points.size());
  double best_norm2 = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best = points.front();
  unsigned best_mask = 1u;

  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const int m = static_cast<int>(idx.size());

    Eigen::Vector3d candidate;
    bool valid = true;
    if (m == 1) {
      candidate = points[idx[0]];
    } else {
      const Eigen::Vector3d& p0 = points[idx[0]];
      Eigen::MatrixXd basis(3, m - 1);
      for (int i = 1; i < m; ++i) basis.col(i - 1) = points[idx[i]] - p0;
      Eigen::MatrixXd gram = basis.transpose() * basis;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      lu.setThreshold(1e-12);
      if (lu.rank() < m - 1) continue;  // degenerate face, covered by a sub-face
      Eigen::VectorXd t = lu.solve(-basis.transpose() * p0);
      double lambda0 = 1.0 - t.sum();
      if (lambda0 < -1e-12) valid = false;
      for (int i = 0; i < m - 1 && valid; ++i)
        if (t[i] < -1e-12) valid = false;
      candidate = p0 + basis * t;
    }
    if (!valid) continue;
    const double norm2 = candidate.squaredNorm();
    if (norm2 < best_norm2 - 1e-18) {
      best_norm2 = norm2;
      best = candidate;
      best_mask = mask;
    }
  }

  std::vector<Eigen::Vector3d> reduced;
  for (int i = 0; i < n; ++i)
    if (best_mask & (1u << i)) reduced.push_back(points[i]);
  points.swap(reduced);
  return best;
}

const Eigen::Vector3d& support_of(const std::vector<Eigen::Vector3d>& vertices,
                                  const Eigen::Vector3d& direction) {
  int best = 0;
  double best_dot = vertices[0].dot(direction);
  for (int i = 1; i < static_cast<int>(vertices.size()); ++i) {
    const double d = vertices[i].dot(direction);
    if (d > best_dot + 1e-15 ||
        (d > best_dot - 1e-15 && lex_less(vertices[best], vertices[i]))) {
      best = i;
      best_dot = d;
    }
  }
  return vertices[best];
}

// GJK distance between the convex hulls of two world-frame vertex sets.
double gjk_distance(const std::vector<Eigen::Vector3d>& a,
                    const std::vector<Eigen::Vector3d>& b) {
  auto minkowski_support = [&](const Eigen::Vector3d& d) -> Eigen::Vector3d {
    return support_of(a, d) - support_of(b, -d);
  };

  std::vector<Eigen::Vector3d> simplex;
  Eigen::Vector3d v = minkowski_support(Eigen::Vector3d(1, 0, 0));
  simplex.push_back(v);

  for (int iter = 0; iter < 128; ++iter) {
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 < kZeroDistance * kZeroDistance) return 0.0;

    Eigen::Vector3d w = minkowski_support(-v);
    const double progress = vnorm2 - v.dot(w);
    if (progress <= kGjkRelTol * std::max(1.0, vnorm2)) break;

    bool duplicate = false;
    for (const auto& s : simplex)
      if ((s - w).squaredNorm() < 1e-24) duplicate = true;
    if (duplicate) break;

    simplex.push_back(w);
    v = closest_on_simplex(simplex);
  }

  const double dist = v.norm();
  return dist < kZeroDistance ? 0.0 : dist;
}

std::vector<Eigen::Vector3d> world_vertices(const ConvexPolytope& poly, const Pose& pose) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(poly.vertices().size());
  const Eigen::Matrix3d rot = pose.rotation();
  for (const auto& v : poly.vertices()) out.push_back(rot * v + pose.position);
  return out;
}

}  // namespace

double wrap_angle(double a) {
  if (a > -M_PI && a <= M_PI) return a;  // bit-exact for in-range values
  double w = std::fmod(a + M_PI, 2.0 * M_PI);
  if (w <= 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

double angle_diff(double a, double b) { return wrap_angle(a - b); }

Pose::Pose(const Eigen::Vector3d& p, const Eigen::Vector3d& angles) : position(p) {
  for (int i = 0; i < 3; ++i) rpy[i] = wrap_angle(angles[i]);
}

Pose Pose::planar(double x, double y, double theta) {
  return Pose(Eigen::Vector3d(x, y, 0.0), Eigen::Vector3d(0.0, 0.0, theta));
}

Eigen::Matrix3d Pose::rotation() const {
  return (Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Vector3d Pose::apply(const Eigen::Vector3d& body_point) const {
  return rotation() * body_point + position;
}

ConvexPolytope::ConvexPolytope(std::vector<Eigen::Vector3d> vertices, int dim) : dim_(dim) {
  if (dim != 2 && dim != 3) throw InvalidGeometryError("polytope dimension must be 2 or 3");
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw InvalidGeometryError("polytope vertex is not finite");
    if (dim == 2 && v.z() != 0.0) throw InvalidGeometryError("2D polytope vertex has nonzero z");
  }

  // Drop duplicates, then interior / non-extreme points: a vertex is extreme
  // iff it lies strictly outside the hull of the remaining ones.
  std::vector<Eigen::Vector3d> unique;
  for (const auto& v : vertices) {
    bool seen = false;
    for (const auto& u : unique)
      if ((u - v).squaredNorm() < 1e-24) seen = true;
    if (!seen) unique.push_back(v);
  }

  std::vector<Eigen::Vector3d> extreme;
  for (int i = 0; i < static_cast<int>(unique.size()); ++i) {
    std::vector<Eigen::Vector3d> others;
    for (int j = 0; j < static_cast<int>(unique.size()); ++j)
      if (j != i) others.push_back(unique[j]);
    if (others.empty() || gjk_distance({unique[i]}, others) > 0.0)
      extreme.push_back(unique[i]);
  }

  if (static_cast<int>(extreme.size()) < dim + 1)
    throw InvalidGeometryError("polytope needs at least dim+1 extreme vertices");

  std::sort(extreme.begin(), extreme.end(), lex_less);
  vertices_ = std::move(extreme);
}

ConvexPolytope ConvexPolytope::box2d(double half_x, double half_y) {
  return ConvexPolytope({{-half_x, -half_y, 0.0},
                         {half_x, -half_y, 0.0},
                         {half_x, half_y, 0.0},
                         {-half_x, half_y, 0.0}},
                        2);
}

ConvexPolytope ConvexPolytope::box3d(const Eigen::Vector3d& h) {
  std::vector<Eigen::Vector3d> verts;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) verts.emplace_back(sx * h.x(), sy * h.y(), sz * h.z());
  return ConvexPolytope(std::move(verts), 3);
}

ConvexPolytope ConvexPolytope::aabb(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int dim) {
  if (dim == 2) {
    return ConvexPolytope({{lo.x(), lo.y(), 0.0},
                           {hi.x(), lo.y(), 0.0},
                           {hi.x(), hi.y(), 0.0},
                           {lo.x(), hi.y(), 0.0}},
                          2);
  }
  std::vector<Eigen::Vector3d> verts;
  for (int sx : {0, 1})
    for (int sy : {0, 1})
      for (int sz : {0, 1})
        verts.emplace_back(sx ? hi.x() : lo.x(), sy ? hi.y() : lo.y(), sz ? hi.z() : lo.z());
  return ConvexPolytope(std::move(verts), 3);
}

const Eigen::Vector3d& ConvexPolytope::support(const Eigen::Vector3d& direction) const {
  return support_of(vertices_, direction);
}

double ConvexPolytope::circumradius() const {
  double r = 0.0;
  for (const auto& v : vertices_) r = std::max(r, v.norm());
  return r;
}

Workspace::Workspace(const Eigen::Vector3d& lo_, const Eigen::Vector3d& hi_, int dim_,
                     std::vector<PlacedPolytope> obstacles_)
    : lo(lo_), hi(hi_), dim(dim_), obstacles(std::move(obstacles_)) {
  for (int ax = 0; ax < dim; ++ax)
    if (!(lo[ax] < hi[ax])) throw InvalidGeometryError("workspace bounds are empty");
  const ConvexPolytope bounds_box = ConvexPolytope::aabb(lo, hi, dim);
  for (const auto& obs : obstacles) {
    if (obs.shape.dim() != dim) throw InvalidGeometryError("obstacle dimension mismatch");
    if (min_distance(obs.shape, obs.pose, bounds_box, Pose{}) > 0.0)
      throw InvalidGeometryError("obstacle does not intersect the workspace bounds");
  }
}

bool Workspace::contains(const Eigen::Vector3d& point) const {
  for (int ax = 0; ax < dim; ++ax)
    if (point[ax] < lo[ax] || point[ax] > hi[ax]) return false;
  return true;
}

Eigen::Vector3d Workspace::sample(const Eigen::Vector3d& unit01) const {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int ax = 0; ax < dim; ++ax) p[ax] = lo[ax] + unit01[ax] * (hi[ax] - lo[ax]);
  return p;
}

double min_distance(const ConvexPolytope& a, const Pose& pose_a,
                    const ConvexPolytope& b, const Pose& pose_b) {
  if (a.dim() != b.dim()) throw InvalidGeometryError("polytope dimension mismatch");
  return gjk_distance(world_vertices(a, pose_a), world_vertices(b, pose_b));
}

double bounds_slack(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace) {
  double slack = std::numeric_limits<double>::infinity();
  const Eigen::Matrix3d rot = pose.rotation();
  for (const auto& v : body.vertices()) {
    const Eigen::Vector3d p = rot * v + pose.position;
    for (int ax = 0; ax < workspace.dim; ++ax)
      slack = std::min({slack, p[ax] - workspace.lo[ax], workspace.hi[ax] - p[ax]});
  }
  return slack;
}

std::vector<double> obstacle_distances(const ConvexPolytope& body, const Pose& pose,
                                       const Workspace& workspace) {
  std::vector<double> out;
  out.reserve(workspace.obstacles.size());
  for (const auto& obs : workspace.obstacles)
    out.push_back(min_distance(body, pose, obs.shape, obs.pose));
  return out;
}

double clearance(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace) {
  double c = bounds_slack(body, pose, workspace);
  for (const auto& obs : workspace.obstacles)
    c = std::min(c, min_distance(body, pose, obs.shape, obs.pose));
  return c;
}

double soft_clearance(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace,
                      double rho) {
  const double slack = bounds_slack(body, pose, workspace);
  const std::vector<double> dists = obstacle_distances(body, pose, workspace);
  double lowest = slack;
  for (double d : dists) lowest = std::min(lowest, d);
  // stabilized log-sum-exp about the hard minimum
  double sum = std::exp(-(slack - lowest) / rho);
  for (double d : dists) sum += std::exp(-(d - lowest) / rho);
  return lowest - rho * std::log(sum);
}

bool in_free_space(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace) {
  return clearance(body, pose, workspace) > 0.0;
}

}  // namespace karc
