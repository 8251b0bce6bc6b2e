#ifndef KARC_GEOMETRY_HPP
#define KARC_GEOMETRY_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace karc {

/// Thrown when a polytope is degenerate (fewer than dim+1 extreme vertices,
/// or non-finite coordinates).
struct InvalidGeometryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

double wrap_angle(double a);  // normalize to (-pi, pi]
double angle_diff(double a, double b);  // wrapped a - b, in (-pi, pi]

/// Rigid placement of a body in the workspace. 2D poses use rpy = [0, 0, theta].
struct Pose {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d rpy{Eigen::Vector3d::Zero()};  // roll, pitch, yaw; stored wrapped

  Pose() = default;
  Pose(const Eigen::Vector3d& p, const Eigen::Vector3d& angles);
  static Pose planar(double x, double y, double theta);

  Eigen::Matrix3d rotation() const;  // R = Rz(yaw) * Ry(pitch) * Rx(roll)
  Eigen::Vector3d apply(const Eigen::Vector3d& body_point) const;
};

/// Bounded convex body stored as its extreme vertices in body frame.
/// 2D bodies live in the z = 0 plane. Construction canonicalizes: interior
/// and duplicate points are dropped, the rest sorted lexicographically.
class ConvexPolytope {
 public:
  ConvexPolytope(std::vector<Eigen::Vector3d> vertices, int dim);

  static ConvexPolytope box2d(double half_x, double half_y);
  static ConvexPolytope box3d(const Eigen::Vector3d& half_extents);
  static ConvexPolytope aabb(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int dim);

  int dim() const { return dim_; }
  const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }

  /// Farthest vertex along `direction` (body frame). Ties broken
  /// lexicographically so results are deterministic.
  const Eigen::Vector3d& support(const Eigen::Vector3d& direction) const;

  /// Radius of the smallest origin-centered ball containing the body.
  double circumradius() const;

 private:
  std::vector<Eigen::Vector3d> vertices_;
  int dim_;
};

struct PlacedPolytope {
  ConvexPolytope shape;
  Pose pose;
};

/// Axis-aligned workspace box plus static convex obstacles.
struct Workspace {
  Eigen::Vector3d lo{Eigen::Vector3d::Zero()};
  Eigen::Vector3d hi{Eigen::Vector3d::Zero()};
  int dim = 2;
  std::vector<PlacedPolytope> obstacles;

  Workspace() = default;
  Workspace(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int dim,
            std::vector<PlacedPolytope> obstacles = {});

  bool contains(const Eigen::Vector3d& point) const;
  Eigen::Vector3d sample(const Eigen::Vector3d& unit01) const;
};

/// Euclidean distance between two posed convex polytopes (GJK).
/// Returns exactly 0 when the bodies intersect or touch.
double min_distance(const ConvexPolytope& a, const Pose& pose_a,
                    const ConvexPolytope& b, const Pose& pose_b);

/// Distance from the posed body to the nearest obstacle, and the slack by
/// which every body vertex stays inside the workspace bounds (negative once
/// a vertex exits). Returns the minimum of the two.
double clearance(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace);

/// Slack of the posed body against the bounds box only.
double bounds_slack(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace);

/// Distances from the posed body to each obstacle, in obstacle order.
std::vector<double> obstacle_distances(const ConvexPolytope& body, const Pose& pose,
                                       const Workspace& workspace);

/// Smooth lower bound of `clearance`: softmin (log-sum-exp at temperature
/// rho) over the bounds slack and the per-obstacle distances. Approaches the
/// hard minimum as rho -> 0 and never exceeds it.
double soft_clearance(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace,
                      double rho);

bool in_free_space(const ConvexPolytope& body, const Pose& pose, const Workspace& workspace);

}  // namespace karc

#endif  // KARC_GEOMETRY_HPP
