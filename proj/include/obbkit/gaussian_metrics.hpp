#pragma once

// Distances and overlap measures between boxes embedded as 2-D Gaussians:
// Gaussian Wasserstein distance, Kullback-Leibler divergence and the
// Kalman-filter IoU.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

#include "obbkit/geometry.hpp"
#include "obbkit/linalg2.hpp"

namespace obbkit {

enum class GaussianDistanceKind { GWD, KLD_FORWARD, KLD_SYMMETRIC, KFIOU };

constexpr std::string_view to_string(GaussianDistanceKind k) {
  switch (k) {
    case GaussianDistanceKind::GWD:
      return "gwd";
    case GaussianDistanceKind::KLD_FORWARD:
      return "kld";
    case GaussianDistanceKind::KLD_SYMMETRIC:
      return "kld-sym";
    case GaussianDistanceKind::KFIOU:
      return "kfiou";
  }
  return "?";
}

inline std::optional<GaussianDistanceKind> parse_distance_kind(std::string_view s) {
  for (auto k : {GaussianDistanceKind::GWD, GaussianDistanceKind::KLD_FORWARD,
                 GaussianDistanceKind::KLD_SYMMETRIC, GaussianDistanceKind::KFIOU}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Covariances with a smaller determinant (px^4) are treated as singular.
inline constexpr double kSingularDet = 1e-24;

namespace detail {

inline void require_pd(const Gaussian2D& g) {
  require_psd(g);
  if (!(g.sigma.det() >= kSingularDet) || sym_eigen(g.sigma).minor <= 1e-12) {
    throw NotPD("covariance is singular");
  }
}

}  // namespace detail

/// 2-Wasserstein distance (px):
///   sqrt(|mu_p - mu_q|^2 + Tr(S_p + S_q - 2 (S_p^1/2 S_q S_p^1/2)^1/2))
inline double gwd(const Gaussian2D& p, const Gaussian2D& q) {
  require_psd(p);
  require_psd(q);
  const Point dmu = p.mu - q.mu;
  const Mat2 root_p = sqrtm_psd(p.sigma);
  const Mat2 cross_term = sqrtm_psd(root_p * q.sigma * root_p);
  const double shape = p.sigma.trace() + q.sigma.trace() - 2.0 * cross_term.trace();
  return std::sqrt(dot(dmu, dmu) + std::max(shape, 0.0));
}

/// KL divergence D(p || q); with `symmetric`, the mean of both directions.
/// Both covariances must be positive definite.
inline double kld(const Gaussian2D& p, const Gaussian2D& q, bool symmetric = false) {
  detail::require_pd(p);
  detail::require_pd(q);
  auto forward = [](const Gaussian2D& a, const Gaussian2D& b) {
    const Mat2 b_inv = b.sigma.inverse();
    const Point dmu = b.mu - a.mu;
    const double d = 0.5 * ((b_inv * a.sigma).trace() + quad_form(b_inv, dmu) - 2.0 +
                            std::log(b.sigma.det() / a.sigma.det()));
    return std::max(d, 0.0);
  };
  if (!symmetric) return forward(p, q);
  return 0.5 * (forward(p, q) + forward(q, p));
}

/// Kalman-filter IoU of two boxes, in [0, 1/3].
///
/// The fused covariance S' = S_a (S_a + S_b)^-1 S_b gives the overlap volume
/// v(S') = 4 sqrt(det S'), attenuated by exp(-dmu^T (S_a + S_b)^-1 dmu / 2)
/// for the center offset. The result is v' / (v(S_a) + v(S_b) - v'), where
/// v(S) equals w*h for a box. Identical boxes give exactly 1/3.
inline double kfiou(const RotatedBox& a, const RotatedBox& b) {
  const Gaussian2D ga = rbox_to_gaussian(a);
  const Gaussian2D gb = rbox_to_gaussian(b);
  detail::require_pd(ga);
  detail::require_pd(gb);
  auto volume = [](const Mat2& s) { return 4.0 * std::sqrt(std::max(s.det(), 0.0)); };

  const Mat2 sum_inv = (ga.sigma + gb.sigma).inverse();
  const Mat2 fused = ga.sigma * sum_inv * gb.sigma;
  const Point dmu = ga.mu - gb.mu;
  const double overlap = volume(fused) * std::exp(-0.5 * quad_form(sum_inv, dmu));
  const double va = volume(ga.sigma);
  const double vb = volume(gb.sigma);
  return overlap / (va + vb - overlap);
}

/// Loss normalization 1 - 1 / (tau + ln(1 + d)); strictly increasing in d.
inline double loss_transform(double d, double tau = 1.0) {
  if (!std::isfinite(d) || !std::isfinite(tau)) throw NonFiniteInput("loss_transform input");
  if (d < 0.0) throw InvalidArgument("loss_transform distance must be >= 0");
  if (tau <= 0.0) throw InvalidArgument("loss_transform tau must be > 0");
  return 1.0 - 1.0 / (tau + std::log1p(d));
}

/// Dispatches on `kind` for a (predicted, target) box pair. KLD_FORWARD is
/// D(predicted || target).
inline double box_distance(GaussianDistanceKind kind, const RotatedBox& predicted,
                           const RotatedBox& target) {
  switch (kind) {
    case GaussianDistanceKind::GWD:
      return gwd(rbox_to_gaussian(predicted), rbox_to_gaussian(target));
    case GaussianDistanceKind::KLD_FORWARD:
      return kld(rbox_to_gaussian(predicted), rbox_to_gaussian(target), false);
    case GaussianDistanceKind::KLD_SYMMETRIC:
      return kld(rbox_to_gaussian(predicted), rbox_to_gaussian(target), true);
    case GaussianDistanceKind::KFIOU:
      return kfiou(predicted, target);
  }
  return 0.0;
}

}  // namespace obbkit
