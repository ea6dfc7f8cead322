#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ggkaf/dictionary.hpp"
#include "ggkaf/spd.hpp"

namespace ggkaf {

namespace detail {

inline void require_same_dim(const Vector& u, const Vector& c, const char* who) {
  if (u.size() != c.size() || u.size() == 0) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (" +
                                std::to_string(u.size()) + " vs " + std::to_string(c.size()) +
                                ")");
  }
}

}  // namespace detail

/// exp(-zeta * ||u - c||^2)
inline double gauss_kernel(const Vector& u, const Vector& c, double zeta) {
  detail::require_same_dim(u, c, "gauss_kernel");
  if (!(zeta > 0.0)) throw std::invalid_argument("gauss_kernel: width must be positive");
  return std::exp(-zeta * (u - c).squaredNorm());
}

/// exp(-(u - c)^T Z (u - c)). Z is assumed SPD; a negative quadratic form or
/// non-positive diagonal is reported, full SPD checking is left upstream.
inline double gen_gauss_kernel(const Vector& u, const Vector& c, const SymMatrix& z) {
  detail::require_same_dim(u, c, "gen_gauss_kernel");
  if (z.dim() != u.size()) throw std::invalid_argument("gen_gauss_kernel: precision dimension mismatch");
  if (!(z.matrix().diagonal().minCoeff() > 0.0)) {
    const double d = z.matrix().diagonal().minCoeff();
    throw NotPositiveDefinite(d, z.matrix().diagonal().maxCoeff());
  }
  const Vector v = u - c;
  double q = v.dot(z.matrix() * v);
  if (q < 0.0) {
    // Rounding can push the form of a nearly singular Z slightly below zero.
    const Vector a = v.cwiseAbs();
    const double bound = 64.0 * std::numeric_limits<double>::epsilon() *
                         a.dot(z.matrix().cwiseAbs() * a);
    if (q < -bound) throw NotPositiveDefinite(q, z.matrix().diagonal().maxCoeff());
    q = 0.0;
  }
  return std::exp(-q);
}

/// kappa_j = gen_gauss_kernel(u, c_j, Z_j) in dictionary order.
inline Vector kernel_vector(const Vector& u, const Dictionary& dict) {
  Vector kappa(static_cast<Index>(dict.size()));
  for (std::size_t j = 0; j < dict.size(); ++j) {
    kappa(static_cast<Index>(j)) = gen_gauss_kernel(u, dict[j].center, dict[j].precision);
  }
  return kappa;
}

}  // namespace ggkaf
