#pragma once

// Per-step parameter updates: weighted-l1 forward-backward coefficient
// update, LMS center update, and the MEG / NMEG precision updates.

#include <cmath>
#include <stdexcept>
#include <string>

#include "ggkaf/dictionary.hpp"
#include "ggkaf/kernel.hpp"
#include "ggkaf/spd.hpp"

namespace ggkaf {

struct Hyperparams {
  double mu = 0.09;      // coefficient step size
  double rho = 0.03;     // normalization stabilizer
  double lambda = 1e-3;  // l1 regularization
  double beta = 0.1;     // adaptive-weight floor
  double eta_c = 1e-3;   // center step size
  double eta_w = 0.05;   // precision / width step size

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("Hyperparams: ") + what);
    };
    need(mu > 0.0, "mu must be > 0");
    need(rho > 0.0, "rho must be > 0");
    need(lambda >= 0.0, "lambda must be >= 0");
    need(beta > 0.0, "beta must be > 0");
    // Zero steps are allowed: they switch the corresponding adaptation off.
    need(eta_c >= 0.0, "eta_c must be >= 0");
    need(eta_w >= 0.0, "eta_w must be >= 0");
  }
};

/// Quantities of step n shared by every update rule. e = d - y.
struct StepContext {
  Vector u;
  double d = 0.0;
  double y = 0.0;
  double e = 0.0;
  Vector kappa_vec;

  static StepContext make(Vector u, double d, double y, Vector kappa) {
    return StepContext{std::move(u), d, y, d - y, std::move(kappa)};
  }
};

/// w_j = 1 / (|h_j| + beta)
inline Vector adaptive_weights(const Vector& coeffs, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("adaptive_weights: beta must be > 0");
  return (coeffs.cwiseAbs().array() + beta).inverse().matrix();
}

/// Weighted soft thresholding: sgn(a_j) max(|a_j| - t_j, 0). Produces exact zeros.
inline Vector prox_weighted_l1(const Vector& alpha, const Vector& thresholds) {
  if (alpha.size() != thresholds.size()) {
    throw std::invalid_argument("prox_weighted_l1: length mismatch");
  }
  Vector out(alpha.size());
  for (Index j = 0; j < alpha.size(); ++j) {
    if (thresholds(j) < 0.0) throw std::invalid_argument("prox_weighted_l1: negative threshold");
    const double mag = std::abs(alpha(j)) - thresholds(j);
    out(j) = mag > 0.0 ? std::copysign(mag, alpha(j)) : 0.0;
  }
  return out;
}

/// Forward-backward step on the weighted-l1 NLMS cost. h has the current r
/// coefficients; kappa_ext and weights_ext carry one extra trailing entry for
/// the newly admitted atom, whose coefficient starts at zero.
inline Vector coeff_update(const Vector& h, double d, const Vector& kappa_ext,
                           const Hyperparams& hp, const Vector& weights_ext) {
  const Index r = h.size();
  if (kappa_ext.size() != r + 1 || weights_ext.size() != r + 1) {
    throw std::invalid_argument("coeff_update: expected extended vectors of length " +
                                std::to_string(r + 1));
  }
  Vector h_ext(r + 1);
  h_ext.head(r) = h;
  h_ext(r) = 0.0;
  const double err = d - h_ext.dot(kappa_ext);
  const Vector forward = h_ext + (hp.mu * err / (hp.rho + kappa_ext.squaredNorm())) * kappa_ext;
  return prox_weighted_l1(forward, (hp.mu * hp.lambda) * weights_ext);
}

/// dJ/dc_j = -2 e h_j kappa_j (Z_j + Z_j^T)(u - c_j), with Z_j + Z_j^T = 2 Z_j.
inline Vector center_grad(const StepContext& ctx, const DictEntry& entry) {
  const double kappa = gen_gauss_kernel(ctx.u, entry.center, entry.precision);
  const Vector v = ctx.u - entry.center;
  return (-2.0 * ctx.e * entry.coeff * kappa) * (2.0 * entry.precision.matrix() * v);
}

inline Vector center_update(const DictEntry& entry, const StepContext& ctx, double eta_c) {
  return entry.center - eta_c * center_grad(ctx, entry);
}

/// dJ/dZ_j = 2 e h_j kappa_j (u - c_j)(u - c_j)^T
inline SymMatrix precision_grad(const StepContext& ctx, const DictEntry& entry) {
  const double kappa = gen_gauss_kernel(ctx.u, entry.center, entry.precision);
  const Vector v = ctx.u - entry.center;
  return SymMatrix((2.0 * ctx.e * entry.coeff * kappa) * (v * v.transpose()));
}

/// exp(log Z - eta_w sym(grad)). Throws NotPositiveDefinite when log Z is
/// unavailable.
inline SymMatrix meg_update(const DictEntry& entry, const StepContext& ctx, double eta_w) {
  const SymMatrix grad = precision_grad(ctx, entry);
  return mat_exp(mat_log(entry.precision) - eta_w * grad);
}

/// Z^{1/2} exp(-eta_w Z^{1/2} sym(grad) Z^{1/2}) Z^{1/2}. No logarithm.
inline SymMatrix nmeg_update(const DictEntry& entry, const StepContext& ctx, double eta_w) {
  const SymMatrix grad = precision_grad(ctx, entry);
  const SymMatrix root = mat_sqrt(entry.precision);
  return congruence(root, mat_exp(-eta_w * congruence(root, grad)));
}

/// Width-only NMEG for kappa = exp(-zeta ||u - c||^2):
/// zeta exp(-eta_w zeta g), g = dJ/dzeta = 2 e h kappa ||u - c||^2.
inline double scalar_nmeg_update(double zeta, const StepContext& ctx, const Vector& center,
                                 double coeff, double eta_w) {
  if (!(zeta > 0.0)) throw std::invalid_argument("scalar_nmeg_update: width must be > 0");
  const double dist2 = (ctx.u - center).squaredNorm();
  const double kappa = std::exp(-zeta * dist2);
  const double g = 2.0 * ctx.e * coeff * kappa * dist2;
  return zeta * std::exp(-eta_w * zeta * g);
}

}  // namespace ggkaf
