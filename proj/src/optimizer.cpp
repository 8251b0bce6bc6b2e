#include "karc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "karc/kernels.hpp"

namespace karc {

namespace {

// Track position interpolated linearly in time, with its time derivative.
// The committed trajectories are sample-and-hold, but the optimizer needs a
// constraint that varies continuously with its own timestep variable; the
// verification pass at the end still uses the exact sample-and-hold scan.
struct TrackPoint {
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;
};

TrackPoint lerp_position(const SampledTrack& tr, double t) {
  if (t <= tr.times.front()) return {tr.positions.front(), Eigen::Vector3d::Zero()};
  if (t >= tr.times.back()) return {tr.positions.back(), Eigen::Vector3d::Zero()};
  const auto it = std::upper_bound(tr.times.begin(), tr.times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - tr.times.begin());
  const std::size_t lo = hi - 1;
  const double span = tr.times[hi] - tr.times[lo];
  if (span <= 0.0) return {tr.positions[hi], Eigen::Vector3d::Zero()};
  const double s = (t - tr.times[lo]) / span;
  const Eigen::Vector3d v = (tr.positions[hi] - tr.positions[lo]) / span;
  return {(1.0 - s) * tr.positions[lo] + s * tr.positions[hi], v};
}

struct Layout {
  int T = 0;  // states
  int n = 0;  // state dim
  int m = 0;  // control dim
  int nz() const { return T * n + (T - 1) * m + 1; }
  int x(int k) const { return k * n; }
  int u(int k) const { return T * n + k * m; }
  int dt() const { return T * n + (T - 1) * m; }
};

struct EvalValue {
  double al = 0.0;
  double cost = 0.0;
  double defect = 0.0;      // infinity norm of the dynamics defects
  double goal_over = 0.0;   // overshoot of the goal ball radius
  double clear_over = 0.0;  // overshoot of the clearance margin
  double sep_over = 0.0;    // overshoot of the separation distance

  double max_violation() const {
    return std::max(std::max(defect, goal_over), std::max(clear_over, sep_over));
  }
};

// Augmented Lagrangian for one segment problem. Equalities (dynamics) carry
// plain multipliers; inequalities g <= 0 use the positive-part form
// (max(0, lambda + mu g)^2 - lambda^2) / (2 mu).
class SegmentAL {
 public:
  SegmentAL(const TranscriptionProblem& problem, const OptimizerParams& params)
      : p_(problem), o_(params) {
    L_.T = problem.horizon();
    L_.n = problem.model.state_dim();
    L_.m = problem.model.control_dim();
    is_angle_.assign(static_cast<std::size_t>(L_.n), false);
    for (int idx : problem.model.angle_indices()) is_angle_[static_cast<std::size_t>(idx)] = true;
    alpha_eff_ = std::max(1e-6, o_.goal_tightening * problem.alpha);
    d_sep_ = o_.separation_inflation * problem.moving.d_min;
    // knots use a slightly shrunk state box so the exact rollout, which drifts
    // a little from the knots, still lands inside the model's true bounds
    for (const RobotModel::StateBound& b : problem.model.state_bounds) {
      const double center = 0.5 * (b.lo + b.hi);
      const double half = 0.5 * (b.hi - b.lo) * o_.bound_tightening;
      tight_bounds_.push_back({b.index, center - half, center + half});
    }
    lam_dyn_.assign(static_cast<std::size_t>(L_.T - 1), Eigen::VectorXd::Zero(L_.n));
    lam_clear_.assign(static_cast<std::size_t>(L_.T), 0.0);
    lam_sep_.assign(static_cast<std::size_t>(L_.T),
                    std::vector<double>(p_.moving.tracks.size(), 0.0));
    mu = o_.mu0;
    // The solver works in box-normalized coordinates: each variable is divided
    // by its half-range so one shared step length serves thrust (newtons) and
    // torque (hundredths of newton-meters) alike.
    scale_ = Eigen::VectorXd::Ones(L_.nz());
    for (const auto& b : problem.model.state_bounds) {
      const double h = std::max(1e-3, 0.5 * (b.hi - b.lo));
      for (int k = 0; k < L_.T; ++k) scale_[L_.x(k) + b.index] = h;
    }
    for (int i = 0; i < L_.m; ++i) {
      const double h =
          std::max(1e-3, 0.5 * (problem.model.control_hi[i] - problem.model.control_lo[i]));
      for (int k = 0; k < L_.T - 1; ++k) scale_[L_.u(k) + i] = h;
    }
    scale_[L_.dt()] = std::max(1e-3, 0.5 * (problem.model.dt_max - problem.model.dt_min));
  }

  Eigen::VectorXd to_scaled(const Eigen::VectorXd& z) const { return z.cwiseQuotient(scale_); }
  Eigen::VectorXd to_physical(const Eigen::VectorXd& w) const { return w.cwiseProduct(scale_); }

  // Extra separation constraint between one knot and a fixed point. The bulk
  // separation term anchors each knot to the interpolated track position, but
  // the committed trajectories hold their samples between instants; violations
  // the interpolated constraint cannot see are pinned here exactly.
  void add_pin(int k, const Eigen::Vector3d& q) {
    for (std::size_t i = 0; i < pins_.size(); ++i)
      if (pins_[i].first == k && (pins_[i].second - q).norm() == 0.0) return;
    pins_.emplace_back(k, q);
    lam_pin_.push_back(0.0);
  }

  std::size_t pin_count() const { return pins_.size(); }

  const Layout& layout() const { return L_; }

  void project(Eigen::VectorXd& z) const {
    z.segment(L_.x(0), L_.n) = p_.start;
    for (int k = 1; k < L_.T; ++k)
      for (const auto& b : tight_bounds_)
        z[L_.x(k) + b.index] = std::clamp(z[L_.x(k) + b.index], b.lo, b.hi);
    for (int k = 0; k < L_.T - 1; ++k)
      for (int i = 0; i < L_.m; ++i)
        z[L_.u(k) + i] =
            std::clamp(z[L_.u(k) + i], p_.model.control_lo[i], p_.model.control_hi[i]);
    z[L_.dt()] = std::clamp(z[L_.dt()], p_.model.dt_min, p_.model.dt_max);
  }

  EvalValue value(const Eigen::VectorXd& z) const { return evaluate(z, nullptr); }

  EvalValue value_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
    grad = Eigen::VectorXd::Zero(L_.nz());
    return evaluate(z, &grad);
  }

  void update_multipliers(const Eigen::VectorXd& z) {
    const double dt = z[L_.dt()];
    for (int k = 0; k < L_.T - 1; ++k) {
      const Eigen::VectorXd h = defect(z, k, dt);
      auto& lam = lam_dyn_[static_cast<std::size_t>(k)];
      lam = (lam + mu * h).cwiseMax(-1e8).cwiseMin(1e8);
    }
    const Eigen::VectorXd w = goal_diff(z);
    lam_goal_ = std::min(1e8, std::max(0.0, lam_goal_ + mu * (w.squaredNorm() -
                                                              alpha_eff_ * alpha_eff_)));
    const std::vector<double> soft = soft_values(z);
    for (int k = 0; k < L_.T; ++k) {
      auto& lam = lam_clear_[static_cast<std::size_t>(k)];
      lam = std::min(1e8, std::max(0.0, lam + mu * (o_.margin - soft[static_cast<std::size_t>(k)])));
    }
    for (int k = 0; k < L_.T; ++k)
      for (std::size_t j = 0; j < p_.moving.tracks.size(); ++j) {
        const Eigen::Vector3d c = position_at(z, k);
        const TrackPoint other = lerp_position(p_.moving.tracks[j], k * dt);
        const double g = d_sep_ * d_sep_ - (c - other.position).squaredNorm();
        auto& lam = lam_sep_[static_cast<std::size_t>(k)][j];
        lam = std::min(1e8, std::max(0.0, lam + mu * g));
      }
    for (std::size_t i = 0; i < pins_.size(); ++i) {
      const Eigen::Vector3d c = position_at(z, pins_[i].first);
      const double g = d_sep_ * d_sep_ - (c - pins_[i].second).squaredNorm();
      lam_pin_[i] = std::min(1e8, std::max(0.0, lam_pin_[i] + mu * g));
    }
  }

  double mu = 0.0;

 private:
  Eigen::VectorXd defect(const Eigen::VectorXd& z, int k, double dt) const {
    const State x0 = z.segment(L_.x(k), L_.n);
    const State x1 = z.segment(L_.x(k + 1), L_.n);
    const Control u = z.segment(L_.u(k), L_.m);
    const State f = derivative(p_.model, x0, u);
    Eigen::VectorXd h(L_.n);
    for (int i = 0; i < L_.n; ++i) {
      const double raw = x1[i] - x0[i] - f[i] * dt;
      h[i] = is_angle_[static_cast<std::size_t>(i)] ? wrap_angle(raw) : raw;
    }
    return h;
  }

  Eigen::VectorXd goal_diff(const Eigen::VectorXd& z) const {
    Eigen::VectorXd w(L_.n);
    for (int i = 0; i < L_.n; ++i) {
      const double raw = z[L_.x(L_.T - 1) + i] - p_.goal[i];
      w[i] = is_angle_[static_cast<std::size_t>(i)] ? wrap_angle(raw) : raw;
    }
    return w;
  }

  Eigen::Vector3d position_at(const Eigen::VectorXd& z, int k) const {
    const State x = z.segment(L_.x(k), L_.n);
    return position_of(p_.model, x);
  }

  Pose pose_at(const Eigen::VectorXd& z, int k) const {
    const State x = z.segment(L_.x(k), L_.n);
    return extract_configuration(p_.model, x);
  }

  std::vector<double> soft_values(const Eigen::VectorXd& z) const {
    std::vector<Pose> poses;
    poses.reserve(static_cast<std::size_t>(L_.T));
    for (int k = 0; k < L_.T; ++k) poses.push_back(pose_at(z, k));
    return batch_soft_clearance(p_.model.body, poses, p_.workspace, o_.softmin_rho);
  }

  static double phr(double g, double lam, double mu) {
    const double s = lam + mu * g;
    return s > 0.0 ? (s * s - lam * lam) / (2.0 * mu) : -lam * lam / (2.0 * mu);
  }

  EvalValue evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
    EvalValue e;
    const double dt = z[L_.dt()];
    const Control u_ref = p_.model.reference_control();

    // objective
    for (int k = 0; k < L_.T - 1; ++k) {
      const Control du = z.segment(L_.u(k), L_.m) - u_ref;
      e.cost += o_.beta1 * du.squaredNorm();
      if (grad) grad->segment(L_.u(k), L_.m) += 2.0 * o_.beta1 * du;
    }
    e.cost += static_cast<double>(L_.T - 1) * dt;
    if (grad) (*grad)[L_.dt()] += static_cast<double>(L_.T - 1);
    e.al = e.cost;

    // dynamics defects
    for (int k = 0; k < L_.T - 1; ++k) {
      const State x0 = z.segment(L_.x(k), L_.n);
      const Control u = z.segment(L_.u(k), L_.m);
      const Eigen::VectorXd h = defect(z, k, dt);
      e.defect = std::max(e.defect, h.cwiseAbs().maxCoeff());
      const auto& lam = lam_dyn_[static_cast<std::size_t>(k)];
      e.al += lam.dot(h) + 0.5 * mu * h.squaredNorm();
      if (grad) {
        const Eigen::VectorXd y = lam + mu * h;
        Eigen::MatrixXd A, B;
        derivative_jacobians(p_.model, x0, u, A, B);
        grad->segment(L_.x(k), L_.n) += -y - dt * (A.transpose() * y);
        grad->segment(L_.x(k + 1), L_.n) += y;
        grad->segment(L_.u(k), L_.m) += -dt * (B.transpose() * y);
        (*grad)[L_.dt()] += -derivative(p_.model, x0, u).dot(y);
      }
    }

    // goal ball
    {
      const Eigen::VectorXd w = goal_diff(z);
      const double g = w.squaredNorm() - alpha_eff_ * alpha_eff_;
      e.goal_over = std::max(0.0, w.norm() - alpha_eff_);
      e.al += phr(g, lam_goal_, mu);
      if (grad) {
        const double s = lam_goal_ + mu * g;
        if (s > 0.0) grad->segment(L_.x(L_.T - 1), L_.n) += s * 2.0 * w;
      }
    }

    // clearance with margin, smoothed
    {
      const std::vector<double> soft = soft_values(z);
      const int cfg = p_.model.config_dim();
      std::vector<int> active;
      for (int k = 0; k < L_.T; ++k) {
        const double g = o_.margin - soft[static_cast<std::size_t>(k)];
        e.clear_over = std::max(e.clear_over, std::max(0.0, g));
        const double lam = lam_clear_[static_cast<std::size_t>(k)];
        e.al += phr(g, lam, mu);
        if (grad && lam + mu * g > 0.0) active.push_back(k);
      }
      if (grad && !active.empty()) {
        const double h = 1e-5;
        std::vector<Pose> fd_poses;
        fd_poses.reserve(active.size() * static_cast<std::size_t>(cfg) * 2);
        for (int k : active) {
          State x = z.segment(L_.x(k), L_.n);
          for (int c = 0; c < cfg; ++c) {
            State xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            fd_poses.push_back(extract_configuration(p_.model, xp));
            fd_poses.push_back(extract_configuration(p_.model, xm));
          }
        }
        const std::vector<double> fd =
            batch_soft_clearance(p_.model.body, fd_poses, p_.workspace, o_.softmin_rho);
        std::size_t at = 0;
        for (int k : active) {
          const double g = o_.margin - soft[static_cast<std::size_t>(k)];
          const double s = lam_clear_[static_cast<std::size_t>(k)] + mu * g;
          for (int c = 0; c < cfg; ++c, at += 2) {
            const double dsoft = (fd[at] - fd[at + 1]) / (2.0 * h);
            (*grad)[L_.x(k) + c] += s * (-dsoft);
          }
        }
      }
    }

    // pairwise separation against committed robots
    if (!p_.moving.tracks.empty()) {
      const int dim = p_.workspace.dim;
      for (int k = 0; k < L_.T; ++k) {
        const Eigen::Vector3d c = position_at(z, k);
        for (std::size_t j = 0; j < p_.moving.tracks.size(); ++j) {
          const TrackPoint other = lerp_position(p_.moving.tracks[j], k * dt);
          const Eigen::Vector3d diff = c - other.position;
          const double dist = diff.norm();
          const double g = d_sep_ * d_sep_ - diff.squaredNorm();
          e.sep_over = std::max(e.sep_over, std::max(0.0, d_sep_ - dist));
          const double lam = lam_sep_[static_cast<std::size_t>(k)][j];
          e.al += phr(g, lam, mu);
          if (grad) {
            const double s = lam + mu * g;
            if (s > 0.0) {
              for (int ax = 0; ax < dim; ++ax) (*grad)[L_.x(k) + ax] += s * (-2.0) * diff[ax];
              (*grad)[L_.dt()] += s * 2.0 * diff.dot(other.velocity) * static_cast<double>(k);
            }
          }
        }
      }
    }

    // pinned separation constraints from previous verification rounds
    for (std::size_t i = 0; i < pins_.size(); ++i) {
      const int k = pins_[i].first;
      const Eigen::Vector3d diff = position_at(z, k) - pins_[i].second;
      const double g = d_sep_ * d_sep_ - diff.squaredNorm();
      e.sep_over = std::max(e.sep_over, std::max(0.0, d_sep_ - diff.norm()));
      e.al += phr(g, lam_pin_[i], mu);
      if (grad) {
        const double s = lam_pin_[i] + mu * g;
        if (s > 0.0)
          for (int ax = 0; ax < p_.workspace.dim; ++ax)
            (*grad)[L_.x(k) + ax] += s * (-2.0) * diff[ax];
      }
    }
    return e;
  }

  const TranscriptionProblem& p_;
  const OptimizerParams& o_;
  Layout L_;
  std::vector<bool> is_angle_;
  std::vector<RobotModel::StateBound> tight_bounds_;
  double alpha_eff_ = 0.0;
  double d_sep_ = 0.0;
  std::vector<Eigen::VectorXd> lam_dyn_;
  double lam_goal_ = 0.0;
  std::vector<double> lam_clear_;
  std::vector<std::vector<double>> lam_sep_;
  std::vector<std::pair<int, Eigen::Vector3d>> pins_;
  std::vector<double> lam_pin_;
};

// Every (self sample, other held position) pair closer than d_min at some
// instant both holds are active, by the same merged-instant walk as the
// conflict scan. Self samples sit at the optimizer's knots, so each hit maps
// directly to a knot index.
std::vector<std::pair<int, Eigen::Vector3d>> separation_hits(const SampledTrack& self,
                                                             const SampledTrack& other,
                                                             double d_min) {
  std::vector<std::pair<int, Eigen::Vector3d>> hits;
  std::size_t ia = 0, ib = 0;
  bool more = true;
  while (more) {
    const Eigen::Vector3d diff = self.positions[ia] - other.positions[ib];
    if (diff.norm() < d_min) {
      bool seen = false;
      for (const auto& h : hits)
        if (h.first == static_cast<int>(ia) && (h.second - other.positions[ib]).norm() == 0.0)
          seen = true;
      if (!seen) hits.emplace_back(static_cast<int>(ia), other.positions[ib]);
    }
    const bool a_last = ia + 1 >= self.size();
    const bool b_last = ib + 1 >= other.size();
    if (a_last && b_last) {
      more = false;
    } else if (a_last) {
      ++ib;
    } else if (b_last) {
      ++ia;
    } else {
      const double next_a = self.times[ia + 1];
      const double next_b = other.times[ib + 1];
      if (next_a <= next_b) ++ia;
      if (next_b <= next_a) ++ib;
    }
  }
  return hits;
}

// Spectral projected gradient with Barzilai-Borwein steps and a nonmonotone
// line search. Modifies z in place; returns the evaluation at the final z.
EvalValue spg_minimize(const SegmentAL& al, Eigen::VectorXd& z, double tol, int max_iter,
                       bool& solved, int& used_out) {
  al.project(z);
  Eigen::VectorXd g;
  EvalValue e = al.value_grad(z, g);
  std::deque<double> hist{e.al};
  double step = 1.0 / std::max(1e-8, g.lpNorm<Eigen::Infinity>());
  step = std::clamp(step, 1e-10, 1e10);
  const char* exit = "budget";
  solved = false;
  int used = 0;
  for (int it = 0; it < max_iter; ++it, ++used) {
    // stationarity is measured with a unit step so a small Barzilai-Borwein
    // step (high curvature) is not mistaken for a critical point
    Eigen::VectorXd zs = z - g;
    al.project(zs);
    if ((zs - z).lpNorm<Eigen::Infinity>() <= tol) {
      exit = "stationary";
      solved = true;
      break;
    }
    Eigen::VectorXd zc = z - step * g;
    al.project(zc);
    const Eigen::VectorXd d = zc - z;
    if (d.lpNorm<Eigen::Infinity>() <= 1e-14) {
      exit = "step-collapse";
      solved = true;  // no representable progress left at this penalty level
      break;
    }
    const double delta = g.dot(d);
    if (delta >= 0.0) {
      // numerically uninformative direction; shrink the trial step
      step = std::max(1e-10, step * 0.1);
      continue;
    }
    const double f_ref = *std::max_element(hist.begin(), hist.end());
    double t = 1.0;
    Eigen::VectorXd zn;
    EvalValue en;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      zn = z + t * d;  // convex combination of in-box points stays in box
      en = al.value(zn);
      if (en.al <= f_ref + 1e-4 * t * delta) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      exit = "linesearch";
      solved = true;  // descent exhausted to line-search precision
      break;
    }
    Eigen::VectorXd gn;
    en = al.value_grad(zn, gn);
    const Eigen::VectorXd s = zn - z;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    step = sy > 1e-16 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : 1.0;
    z = zn;
    g = gn;
    e = en;
    hist.push_back(e.al);
    if (hist.size() > 10) hist.pop_front();
  }
  if (std::getenv("KARC_OPT_DEBUG"))
    std::fprintf(stderr, "[spg] exit=%s it=%d al=%.6e ginf=%.3e step=%.3e tol=%.1e\n", exit, used,
                 e.al, g.lpNorm<Eigen::Infinity>(), step, tol);
  used_out = used;
  return e;
}

State fd_velocity_fill(const RobotModel& model, const std::vector<Pose>& ref, std::size_t k,
                       double dt) {
  State x = state_from_pose(model, ref[k]);
  if (k + 1 >= ref.size()) return model.clamp_state(x);
  const Eigen::Vector3d dp = ref[k + 1].position - ref[k].position;
  switch (model.kind) {
    case ModelKind::Unicycle1:
      break;
    case ModelKind::Unicycle2:
      x[3] = dp.norm() / dt;
      x[4] = angle_diff(ref[k + 1].rpy[2], ref[k].rpy[2]) / dt;
      break;
    case ModelKind::Quadrotor2:
      x.segment<3>(6) = dp / dt;
      break;
  }
  return model.clamp_state(x);
}

}  // namespace

TranscriptionProblem transcribe(const RobotModel& model, const Workspace& ws,
                                const std::vector<Pose>& reference, const State& start,
                                const State& goal, double alpha) {
  TranscriptionProblem problem;
  problem.model = model;
  problem.workspace = ws;
  problem.start = start;
  problem.goal = goal;
  problem.alpha = alpha;
  std::vector<Pose> ref = reference;
  if (ref.empty()) ref = {extract_configuration(model, start), extract_configuration(model, goal)};
  if (ref.size() == 1) ref.push_back(ref.front());
  problem.init_dt = 0.5 * (model.dt_min + model.dt_max);
  problem.init_states.reserve(ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k)
    problem.init_states.push_back(fd_velocity_fill(model, ref, k, problem.init_dt));
  problem.init_states.front() = start;
  problem.init_states.back() = goal;
  problem.init_controls.assign(ref.size() - 1, model.reference_control());
  return problem;
}

TranscriptionProblem transcribe_trajectory(const RobotModel& model, const Workspace& ws,
                                           const Trajectory& warm, const State& start,
                                           const State& goal, double alpha) {
  TranscriptionProblem problem;
  problem.model = model;
  problem.workspace = ws;
  problem.start = start;
  problem.goal = goal;
  problem.alpha = alpha;
  problem.init_states = warm.states;
  problem.init_controls = warm.controls;
  if (problem.init_states.empty()) problem.init_states.push_back(start);
  if (problem.init_states.size() == 1) {
    problem.init_states.push_back(problem.init_states.back());
    problem.init_controls.push_back(model.hold_control(problem.init_states.back()));
  }
  problem.init_states.front() = start;
  problem.init_controls.resize(problem.init_states.size() - 1,
                               model.hold_control(problem.init_states.back()));
  problem.init_dt = std::clamp(warm.dt, model.dt_min, model.dt_max);
  return problem;
}

double trajectory_cost(const RobotModel& model, const Trajectory& traj, double beta1) {
  const Control u_ref = model.reference_control();
  double effort = 0.0;
  for (const auto& u : traj.controls) effort += (u - u_ref).squaredNorm();
  return beta1 * effort + static_cast<double>(traj.controls.size()) * traj.dt;
}

static OptResult optimize_single_impl(const TranscriptionProblem& problem,
                                      const OptimizerParams& params) {
  OptResult out;
  if (problem.horizon() < 2) {
    out.failure_reason = "horizon too short";
    return out;
  }
  if (static_cast<int>(problem.init_controls.size()) != problem.horizon() - 1 ||
      problem.start.size() != problem.model.state_dim() ||
      problem.goal.size() != problem.model.state_dim()) {
    out.failure_reason = "inconsistent problem dimensions";
    return out;
  }

  SegmentAL al(problem, params);
  const Layout& L = al.layout();
  Eigen::VectorXd z(L.nz());
  for (int k = 0; k < L.T; ++k)
    z.segment(L.x(k), L.n) = problem.init_states[static_cast<std::size_t>(k)];
  for (int k = 0; k < L.T - 1; ++k)
    z.segment(L.u(k), L.m) = problem.init_controls[static_cast<std::size_t>(k)];
  z[L.dt()] = problem.init_dt;

  // tiny deterministic jitter to break symmetric (e.g. collinear) geometry
  {
    std::mt19937_64 rng(params.jitter_seed);
    std::uniform_real_distribution<double> noise(-params.jitter, params.jitter);
    for (int k = 1; k < L.T; ++k)
      for (int i = 0; i < L.n; ++i) z[L.x(k) + i] += noise(rng);
  }
  al.project(z);

  Eigen::VectorXd z_acc = z;
  const int max_rounds = 6;
  for (int round = 0; round < max_rounds; ++round) {
    double prev_viol = al.value(z_acc).max_violation();
    out.iterates.clear();
    int reverts = 0;
    bool converged = false;
    for (int outer = 0; outer < params.max_outer; ++outer) {
      if (out.inner_iterations >= params.max_total_inner) {
        out.failure_reason = "inner iteration budget exhausted";
        return out;
      }
      // polish the subproblem only as far as the constraints have settled
      const double tol = std::clamp(0.05 * prev_viol, 1e-7, 1e-2);
      Eigen::VectorXd z_try = z_acc;
      bool inner_solved = false;
      int inner_used = 0;
      const EvalValue e = spg_minimize(al, z_try, tol, params.max_inner, inner_solved, inner_used);
      out.inner_iterations += inner_used;
      const double viol = e.max_violation();
      if (std::getenv("KARC_OPT_DEBUG"))
        std::fprintf(stderr,
                     "[opt] outer=%d defect=%.3e goal=%.3e clear=%.3e sep=%.3e cost=%.6f mu=%.1e\n",
                     outer, e.defect, e.goal_over, e.clear_over, e.sep_over, e.cost, al.mu);
      if (viol <= prev_viol + 1e-12) {
        z_acc = z_try;
        out.iterates.push_back({outer, e.cost, viol, al.mu});
        reverts = 0;
        if (e.defect <= params.eps_dyn && e.goal_over <= params.eps_con &&
            e.clear_over <= params.eps_con && e.sep_over <= params.eps_con) {
          converged = true;
          break;
        }
        al.update_multipliers(z_acc);
        // grow the penalty unless the violation is dropping fast on its own,
        // and only once the inner solver has caught up with the current
        // penalty level, so the ramp is self-pacing
        if (inner_solved && viol > 0.25 * prev_viol)
          al.mu = std::min(al.mu * params.mu_growth, 1e8);
        prev_viol = viol;
      } else {
        ++reverts;
        al.mu = std::min(al.mu * params.mu_growth, 1e8);
        if (reverts > 6) {
          out.failure_reason = "augmented Lagrangian stalled";
          return out;
        }
      }
    }
    if (!converged) {
      out.failure_reason = "constraint tolerances not met within the outer budget";
      return out;
    }

    // Reconstruct by rolling the optimized controls through the exact
    // dynamics, then verify the problem's constraints on that rollout.
    std::vector<Control> controls;
    controls.reserve(static_cast<std::size_t>(L.T - 1));
    for (int k = 0; k < L.T - 1; ++k) controls.push_back(z_acc.segment(L.u(k), L.m));
    const double dt = z_acc[L.dt()];
    Trajectory traj = rollout(problem.model, problem.start, controls, dt);

    if (goal_distance(problem.model, traj.states.back(), problem.goal) > problem.alpha) {
      out.failure_reason = "rollout drifted outside the goal tolerance";
      return out;
    }
    bool free = true;
    for (const auto& x : traj.states)
      if (!in_free_space(problem.model.body, extract_configuration(problem.model, x),
                         problem.workspace))
        free = false;
    if (!free) {
      out.failure_reason = "rollout leaves free space";
      return out;
    }
    bool in_box = true;
    for (const auto& x : traj.states)
      for (const auto& b : problem.model.state_bounds)
        if (x[b.index] < b.lo || x[b.index] > b.hi) in_box = false;
    if (!in_box) {
      out.failure_reason = "rollout leaves the state box";
      return out;
    }

    // The transcription constrains separation at the knots; the definitive
    // check is the sample-and-hold scan. Instants it flags that the knot
    // constraints cannot see are added as pinned constraints and the problem
    // is re-solved warm started, until the scan is clean.
    const SampledTrack self = track_of(problem.model, traj);
    const std::size_t before = al.pin_count();
    for (const auto& tr : problem.moving.tracks)
      for (const auto& hit : separation_hits(self, tr, problem.moving.d_min))
        al.add_pin(hit.first, hit.second);
    if (al.pin_count() == before) {
      out.success = true;
      out.trajectory = std::move(traj);
      out.cost = trajectory_cost(problem.model, out.trajectory, params.beta1);
      return out;
    }
  }
  out.failure_reason = "separation could not be settled against the committed trajectories";
  return out;
}

OptResult optimize_single(const TranscriptionProblem& problem, const OptimizerParams& params) {
  OptResult out = optimize_single_impl(problem, params);
  if (std::getenv("KARC_OPT_DEBUG"))
    std::fprintf(stderr, "[opt] call success=%d inner=%d reason='%s'\n", out.success ? 1 : 0,
                 out.inner_iterations, out.failure_reason.c_str());
  return out;
}

std::vector<OptResult> optimize_prioritized(const std::vector<TranscriptionProblem>& problems,
                                            const OptimizerParams& params) {
  std::vector<OptResult> out;
  out.reserve(problems.size());
  std::vector<SampledTrack> committed;
  bool failed = false;
  for (const auto& problem : problems) {
    if (failed) {
      OptResult skipped;
      skipped.failure_reason = "skipped: an earlier robot failed";
      out.push_back(std::move(skipped));
      continue;
    }
    TranscriptionProblem staged = problem;
    staged.moving.tracks.insert(staged.moving.tracks.end(), committed.begin(), committed.end());
    // stalls are sensitive to the symmetry-breaking jitter, so a failed robot
    // gets fresh draws before the whole stage is declared failed
    OptResult res;
    for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
      OptimizerParams local = params;
      local.jitter_seed = params.jitter_seed * 1315423911u + 8u * out.size() + attempt;
      res = optimize_single(staged, local);
      if (res.success) break;
    }
    if (res.success) {
      committed.push_back(track_of(problem.model, res.trajectory));
    } else {
      failed = true;
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace karc
