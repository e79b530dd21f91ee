#ifndef THEMBED_GEOMETRY_HPP
#define THEMBED_GEOMETRY_HPP

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "thembed/types.hpp"

namespace thembed {

// Numerical guards for the Poincare ball (curvature fixed at -1).
inline constexpr double kProjEpsilon = 1e-7;       // boundary pushback on overflow
inline constexpr double kBallMargin = 1e-5;        // enforced interior margin
inline constexpr double kDeltaFloor = 1e-15;       // clamp for 1 - |x|^2 divisions
inline constexpr double kSingularGammaGap = 1e-12; // gamma - 1 below this => skip pair

using RowVec = Eigen::RowVectorXd;

// Gradients of a pairwise distance w.r.t. both arguments, plus the scalars
// the chain rule reuses. `singular` marks coincident pairs whose gradient
// direction is undefined; callers skip those.
struct DistanceGradients {
  double distance = 0.0;
  RowVec grad_u;
  RowVec grad_v;
  double delta_u = 1.0;  // 1 - |u|^2
  double delta_v = 1.0;  // 1 - |v|^2
  double gamma = 1.0;
  bool singular = false;
};

// ln(x + sqrt((x-1)(x+1))); the factored radicand avoids cancellation near 1.
inline double arcosh(double x) {
  if (x < 1.0) x = 1.0;  // clamp tiny negative rounding of gamma
  return std::log(x + std::sqrt((x - 1.0) * (x + 1.0)));
}

namespace detail {

inline double clamped_delta(double squared_norm) {
  double d = 1.0 - squared_norm;
  return d < kDeltaFloor ? kDeltaFloor : d;
}

}  // namespace detail

///////////////////////////////////////////////////////////////////////////
// Poincare ball
///////////////////////////////////////////////////////////////////////////

// d(u,v) = arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))
template <typename DU, typename DV>
double poincare_distance(const Eigen::MatrixBase<DU>& u,
                         const Eigen::MatrixBase<DV>& v) {
  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  if (uu >= 1.0 || vv >= 1.0)
    throw std::domain_error("poincare_distance: point on or outside the unit ball");
  const double q = (u - v).squaredNorm();
  const double gamma = 1.0 + 2.0 * q / (detail::clamped_delta(uu) * detail::clamped_delta(vv));
  return arcosh(gamma);
}

// Exact partial gradients of the ball distance:
//   dd/du = 4 / (delta_v sqrt(gamma^2-1)) * ((|v|^2 - 2<u,v> + 1)/delta_u^2 * u - v/delta_u)
// and symmetrically for v. Returns false (and leaves outputs zeroed) for
// near-coincident pairs where sqrt(gamma^2-1) vanishes.
template <typename DU, typename DV, typename GU, typename GV>
bool poincare_distance_gradients_into(const Eigen::MatrixBase<DU>& u,
                                      const Eigen::MatrixBase<DV>& v,
                                      double& distance,
                                      const Eigen::MatrixBase<GU>& grad_u_out,
                                      const Eigen::MatrixBase<GV>& grad_v_out) {
  auto& grad_u = const_cast<Eigen::MatrixBase<GU>&>(grad_u_out);
  auto& grad_v = const_cast<Eigen::MatrixBase<GV>&>(grad_v_out);

  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  const double uvdot = u.dot(v);
  const double delta_u = detail::clamped_delta(uu);
  const double delta_v = detail::clamped_delta(vv);
  const double q = uu - 2.0 * uvdot + vv;
  const double gamma = 1.0 + 2.0 * q / (delta_u * delta_v);
  distance = arcosh(gamma);

  if (gamma - 1.0 < kSingularGammaGap) {
    grad_u.setZero();
    grad_v.setZero();
    return false;
  }

  const double root = std::sqrt((gamma - 1.0) * (gamma + 1.0));
  const double cu = 4.0 / (delta_v * root);
  const double cv = 4.0 / (delta_u * root);
  grad_u = cu * ((vv - 2.0 * uvdot + 1.0) / (delta_u * delta_u) * u - v / delta_u);
  grad_v = cv * ((uu - 2.0 * uvdot + 1.0) / (delta_v * delta_v) * v - u / delta_v);
  return true;
}

template <typename DU, typename DV>
DistanceGradients poincare_distance_gradients(const Eigen::MatrixBase<DU>& u,
                                              const Eigen::MatrixBase<DV>& v) {
  DistanceGradients g;
  g.grad_u.resize(u.size());
  g.grad_v.resize(v.size());
  g.delta_u = detail::clamped_delta(u.squaredNorm());
  g.delta_v = detail::clamped_delta(v.squaredNorm());
  g.singular = !poincare_distance_gradients_into(u, v, g.distance, g.grad_u, g.grad_v);
  g.gamma = 1.0 + 2.0 * (u - v).squaredNorm() / (g.delta_u * g.delta_v);
  return g;
}

// Pull a point back inside the ball: the epsilon pushback when |x| >= 1,
// then the interior margin so later delta divisions stay well conditioned.
template <typename D>
void project_into_ball(const Eigen::MatrixBase<D>& x_out) {
  auto& x = const_cast<Eigen::MatrixBase<D>&>(x_out);
  const double norm = x.norm();
  if (norm >= 1.0) x *= 1.0 / (norm + kProjEpsilon);
  const double limit = 1.0 - kBallMargin;
  const double n2 = x.norm();
  if (n2 > limit) x *= limit / n2;
}

// x' = proj(x + lr * ((1-|x|^2)^2 / 4) * g). The scale is the inverse metric
// factor of the ball; g is an ascent direction. Non-finite gradients leave x
// unchanged (caller counts the rejection).
template <typename DX, typename DG>
RowVec riemannian_step(const Eigen::MatrixBase<DX>& x,
                       const Eigen::MatrixBase<DG>& grad, double lr) {
  if (!grad.allFinite()) return x;
  const double delta = 1.0 - x.squaredNorm();
  RowVec out = x + (lr * delta * delta / 4.0) * grad;
  project_into_ball(out);
  return out;
}

///////////////////////////////////////////////////////////////////////////
// Euclidean ablation backend
///////////////////////////////////////////////////////////////////////////

template <typename DU, typename DV>
double euclidean_distance(const Eigen::MatrixBase<DU>& u,
                          const Eigen::MatrixBase<DV>& v) {
  return (u - v).norm();
}

template <typename DU, typename DV, typename GU, typename GV>
bool euclidean_distance_gradients_into(const Eigen::MatrixBase<DU>& u,
                                       const Eigen::MatrixBase<DV>& v,
                                       double& distance,
                                       const Eigen::MatrixBase<GU>& grad_u_out,
                                       const Eigen::MatrixBase<GV>& grad_v_out) {
  auto& grad_u = const_cast<Eigen::MatrixBase<GU>&>(grad_u_out);
  auto& grad_v = const_cast<Eigen::MatrixBase<GV>&>(grad_v_out);
  distance = (u - v).norm();
  if (distance < 1e-12) {
    grad_u.setZero();
    grad_v.setZero();
    return false;
  }
  grad_u = (u - v) / distance;
  grad_v = -grad_u;
  return true;
}

template <typename DU, typename DV>
DistanceGradients euclidean_distance_gradients(const Eigen::MatrixBase<DU>& u,
                                               const Eigen::MatrixBase<DV>& v) {
  DistanceGradients g;
  g.grad_u.resize(u.size());
  g.grad_v.resize(v.size());
  g.singular = !euclidean_distance_gradients_into(u, v, g.distance, g.grad_u, g.grad_v);
  g.gamma = 1.0 + g.distance;
  return g;
}

// Identity metric, no projection: the plain gradient step.
template <typename DX, typename DG>
RowVec euclidean_step(const Eigen::MatrixBase<DX>& x,
                      const Eigen::MatrixBase<DG>& grad, double lr) {
  if (!grad.allFinite()) return x;
  return x + lr * grad;
}

///////////////////////////////////////////////////////////////////////////
// Backend dispatch
///////////////////////////////////////////////////////////////////////////

template <typename DU, typename DV>
double distance(Backend b, const Eigen::MatrixBase<DU>& u,
                const Eigen::MatrixBase<DV>& v) {
  return b == Backend::Hyperbolic ? poincare_distance(u, v) : euclidean_distance(u, v);
}

template <typename DU, typename DV, typename GU, typename GV>
bool distance_gradients_into(Backend b, const Eigen::MatrixBase<DU>& u,
                             const Eigen::MatrixBase<DV>& v, double& distance,
                             const Eigen::MatrixBase<GU>& grad_u,
                             const Eigen::MatrixBase<GV>& grad_v) {
  return b == Backend::Hyperbolic
             ? poincare_distance_gradients_into(u, v, distance, grad_u, grad_v)
             : euclidean_distance_gradients_into(u, v, distance, grad_u, grad_v);
}

template <typename DX, typename DG>
RowVec geometry_step(Backend b, const Eigen::MatrixBase<DX>& x,
                     const Eigen::MatrixBase<DG>& grad, double lr) {
  return b == Backend::Hyperbolic ? riemannian_step(x, grad, lr)
                                  : euclidean_step(x, grad, lr);
}

}  // namespace thembed

#endif
