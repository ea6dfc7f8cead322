#pragma once

// Online dictionary learning for (generalized) Gaussian kernel adaptive
// filters. One train_step per sample: admit the input as a new atom, move
// centers, adapt precisions, update coefficients, drop zero-coefficient atoms.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ggkaf/dictionary.hpp"
#include "ggkaf/kernel.hpp"
#include "ggkaf/sample.hpp"
#include "ggkaf/spd.hpp"
#include "ggkaf/updates.hpp"

namespace ggkaf {

enum class AlgoVariant {
  KnlmsL1,     // fixed kernel, coefficients only
  NmegScalar,  // centers + one adaptive width per atom
  Meg,         // centers + precision matrices via MEG
  Nmeg,        // centers + precision matrices via normalized MEG
};

inline constexpr AlgoVariant kAllVariants[] = {AlgoVariant::KnlmsL1, AlgoVariant::NmegScalar,
                                               AlgoVariant::Meg, AlgoVariant::Nmeg};

inline std::string_view to_string(AlgoVariant v) {
  switch (v) {
    case AlgoVariant::KnlmsL1: return "KNLMS_L1";
    case AlgoVariant::NmegScalar: return "NMEG_SCALAR";
    case AlgoVariant::Meg: return "MEG";
    case AlgoVariant::Nmeg: return "NMEG";
  }
  return "?";
}

/// Case-insensitive parse of the tags produced by to_string.
inline AlgoVariant parse_variant(std::string_view s) {
  std::string up(s);
  for (char& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (AlgoVariant v : kAllVariants)
    if (to_string(v) == up) return v;
  throw std::invalid_argument("unknown algorithm variant '" + std::string(s) +
                              "' (expected KNLMS_L1, NMEG_SCALAR, MEG or NMEG)");
}

inline bool adapts_kernels(AlgoVariant v) { return v != AlgoVariant::KnlmsL1; }
inline bool uses_scalar_width(AlgoVariant v) {
  return v == AlgoVariant::KnlmsL1 || v == AlgoVariant::NmegScalar;
}

struct Diagnostics {
  std::size_t meg_log_failures = 0;    // MEG precision updates skipped because log Z was refused
  std::size_t precision_failures = 0;  // other skipped precision updates (overflow, non-SPD)
  std::size_t pruned = 0;              // atoms removed by the l1 prune

  Diagnostics& operator+=(const Diagnostics& o) {
    meg_log_failures += o.meg_log_failures;
    precision_failures += o.precision_failures;
    pruned += o.pruned;
    return *this;
  }
};

struct StepRecord {
  std::size_t n = 0;
  double y = 0.0;  // prediction before any update of step n
  double e = 0.0;
  double sq_err = 0.0;
  std::size_t dict_size = 0;  // after pruning
  Diagnostics delta;
};

class FilterState {
 public:
  FilterState(AlgoVariant variant, Hyperparams hp, SymMatrix z_init)
      : variant_(variant), hp_(hp), z_init_(std::move(z_init)), dict_(z_init_.dim()) {
    hp_.validate();
    if (min_eigenvalue(z_init_) <= 0.0) {
      throw std::invalid_argument("FilterState: initial precision must be positive definite");
    }
    if (uses_scalar_width(variant_) && !z_init_.is_scaled_identity()) {
      throw std::invalid_argument("FilterState: " + std::string(to_string(variant_)) +
                                  " needs an initial precision of the form zeta*I");
    }
  }

  /// Filter whose initial precision is zeta * I.
  static FilterState with_width(AlgoVariant variant, Hyperparams hp, Index dim, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("FilterState: initial width must be > 0");
    return FilterState(variant, hp, SymMatrix::scaled_identity(dim, zeta));
  }

  AlgoVariant variant() const noexcept { return variant_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  const SymMatrix& z_init() const noexcept { return z_init_; }
  const Dictionary& dictionary() const noexcept { return dict_; }
  Index dim() const noexcept { return dict_.dim(); }
  std::size_t step_count() const noexcept { return step_count_; }
  const Diagnostics& diagnostics() const noexcept { return diag_; }

  /// y = sum_j h_j kappa(u, c_j; Z_j); zero for an empty dictionary.
  double predict(const Vector& u) const {
    require_dim(u);
    double y = 0.0;
    for (const DictEntry& e : dict_.entries()) y += e.coeff * gen_gauss_kernel(u, e.center, e.precision);
    return y;
  }

  StepRecord train_step(const Vector& u, double d) {
    require_dim(u);
    Diagnostics delta;

    dict_.append(u, z_init_, step_count_);
    const std::size_t r = dict_.size() - 1;  // atoms present before this step
    Vector kappa = kernel_vector(u, dict_);
    const Vector h_ext = dict_.coefficients();
    const double y = h_ext.dot(kappa);
    const StepContext ctx = StepContext::make(u, d, y, kappa);

    if (adapts_kernels(variant_) && ctx.e != 0.0) adapt_kernels(ctx, r, delta);

    const Vector h_new = coeff_update(h_ext.head(static_cast<Index>(r)), d, kappa, hp_,
                                      adaptive_weights(h_ext, hp_.beta));
    for (std::size_t j = 0; j <= r; ++j) dict_[j].coeff = h_new(static_cast<Index>(j));
    delta.pruned = dict_.prune_zeros();

    diag_ += delta;
    StepRecord rec{step_count_, y, ctx.e, ctx.e * ctx.e, dict_.size(), delta};
    ++step_count_;
    return rec;
  }

 private:
  void require_dim(const Vector& u) const {
    if (u.size() != dim()) {
      throw std::invalid_argument("FilterState: input has dimension " + std::to_string(u.size()) +
                                  ", filter expects " + std::to_string(dim()));
    }
  }

  // All gradients read the pre-step state; results are committed afterwards.
  // Atoms with a zero coefficient have zero gradients and are left as is.
  void adapt_kernels(const StepContext& ctx, std::size_t r, Diagnostics& delta) {
    std::vector<std::optional<Vector>> centers(r);
    std::vector<std::optional<SymMatrix>> precisions(r);
    for (std::size_t j = 0; j < r; ++j) {
      const DictEntry& entry = dict_[j];
      if (entry.coeff == 0.0) continue;
      centers[j] = center_update(entry, ctx, hp_.eta_c);
      precisions[j] = updated_precision(entry, ctx, delta);
    }
    for (std::size_t j = 0; j < r; ++j) {
      if (centers[j]) dict_[j].center = std::move(*centers[j]);
      if (precisions[j]) dict_[j].precision = std::move(*precisions[j]);
    }
  }

  std::optional<SymMatrix> updated_precision(const DictEntry& entry, const StepContext& ctx,
                                             Diagnostics& delta) const {
    switch (variant_) {
      case AlgoVariant::KnlmsL1:
        return std::nullopt;
      case AlgoVariant::NmegScalar: {
        const double zeta =
            scalar_nmeg_update(entry.precision(0, 0), ctx, entry.center, entry.coeff, hp_.eta_w);
        if (!(zeta > 0.0) || !std::isfinite(zeta)) {
          ++delta.precision_failures;
          return std::nullopt;
        }
        return SymMatrix::scaled_identity(dim(), zeta);
      }
      case AlgoVariant::Meg:
        try {
          return accept_spd(meg_update(entry, ctx, hp_.eta_w), delta);
        } catch (const NotPositiveDefinite&) {
          ++delta.meg_log_failures;
        } catch (const NumericalError&) {
          ++delta.precision_failures;
        }
        return std::nullopt;
      case AlgoVariant::Nmeg:
        try {
          return accept_spd(nmeg_update(entry, ctx, hp_.eta_w), delta);
        } catch (const NumericalError&) {
          ++delta.precision_failures;
        }
        return std::nullopt;
    }
    return std::nullopt;
  }

  // Keeps an update only if it is numerically positive definite.
  static std::optional<SymMatrix> accept_spd(SymMatrix z, Diagnostics& delta) {
    if (Eigen::LLT<Matrix>(z.matrix()).info() == Eigen::Success) return z;
    ++delta.precision_failures;
    return std::nullopt;
  }

  AlgoVariant variant_;
  Hyperparams hp_;
  SymMatrix z_init_;
  Dictionary dict_;
  std::size_t step_count_ = 0;
  Diagnostics diag_;
};

/// Folds train_step over the samples; records are in time order.
inline std::vector<StepRecord> run_sequence(FilterState& state, std::span<const Sample> samples) {
  std::vector<StepRecord> records;
  records.reserve(samples.size());
  for (const Sample& s : samples) records.push_back(state.train_step(s.u, s.d));
  return records;
}

}  // namespace ggkaf
