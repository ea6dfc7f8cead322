#pragma once

// Benchmark data streams: two Gaussian-bump regression toys and a Lorenz
// one-step-ahead prediction task. All randomness comes from Rng below, whose
// output is fully specified so streams are identical across platforms.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ggkaf/sample.hpp"
#include "ggkaf/spd.hpp"

namespace ggkaf {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of realization r; independent of the algorithm variant.
constexpr std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t r) noexcept {
  return base_seed ^ mix64(r);
}

/// mt19937_64 with explicit uniform and Gaussian conversions (the standard
/// distributions are implementation-defined, this is not).
class Rng {
 public:
  static constexpr std::string_view kIdentity =
      "mt19937_64; uniform = (x >> 11) * 2^-53; normal = Box-Muller (cos, sin) pairs; "
      "realization seed = base ^ splitmix64(r)";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline constexpr double kToyNoiseStd = 0.3;

/// 10 exp(-5 ||u - [3,3]||^2) + 10 exp(-0.2 ||u - [7,7]||^2)
inline double std_gauss_target(const Vector& u) {
  const Vector a = u - Vector::Constant(2, 3.0);
  const Vector b = u - Vector::Constant(2, 7.0);
  return 10.0 * std::exp(-5.0 * a.squaredNorm()) + 10.0 * std::exp(-0.2 * b.squaredNorm());
}

/// 10 exp(-(u-[3,3])^T A (u-[3,3])) + 10 exp(-(u-[7,7])^T A (u-[7,7]))
inline double gen_gauss_target(const SymMatrix& a, const Vector& u) {
  const Vector p = u - Vector::Constant(2, 3.0);
  const Vector q = u - Vector::Constant(2, 7.0);
  return 10.0 * std::exp(-p.dot(a.matrix() * p)) + 10.0 * std::exp(-q.dot(a.matrix() * q));
}

namespace detail {

template <class Target>
std::vector<Sample> uniform_toy(std::uint64_t seed, std::size_t n, double noise_std,
                                Target&& target) {
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector u(2);
    u(0) = rng.uniform(0.0, 10.0);
    u(1) = rng.uniform(0.0, 10.0);
    const double d = target(u) + noise_std * rng.normal();
    out.push_back({std::move(u), d});
  }
  return out;
}

}  // namespace detail

/// u ~ U([0,10]^2), d = std_gauss_target(u) + N(0, noise_std^2).
inline std::vector<Sample> std_gauss_toy(std::uint64_t seed, std::size_t n,
                                         double noise_std = kToyNoiseStd) {
  return detail::uniform_toy(seed, n, noise_std, [](const Vector& u) { return std_gauss_target(u); });
}

/// As std_gauss_toy with the anisotropic target; A must be exactly symmetric 2x2.
inline std::vector<Sample> gen_gauss_toy(const Matrix& a, std::uint64_t seed, std::size_t n,
                                         double noise_std = kToyNoiseStd) {
  if (a.rows() != 2 || a.cols() != 2) throw std::invalid_argument("gen_gauss_toy: A must be 2x2");
  if (a(0, 1) != a(1, 0)) throw std::invalid_argument("gen_gauss_toy: A must be symmetric");
  const SymMatrix as(a);
  return detail::uniform_toy(seed, n, noise_std,
                             [&as](const Vector& u) { return gen_gauss_target(as, u); });
}

struct LorenzParams {
  double alpha = 8.0 / 3.0;
  double delta = 10.0;
  double gamma = 28.0;
  double dt = 0.01;
};

using LorenzState = std::array<double, 3>;

/// One forward-Euler step of
///   x' = -alpha x + y z,  y' = -delta (y - z),  z' = -x y + gamma y - z.
inline LorenzState lorenz_euler_step(const LorenzState& s, const LorenzParams& p = {}) {
  const auto [x, y, z] = s;
  return {x + p.dt * (-p.alpha * x + y * z), y + p.dt * (-p.delta * (y - z)),
          z + p.dt * (-x * y + p.gamma * y - z)};
}

inline constexpr std::size_t kLorenzTransient = 10000;
inline constexpr std::size_t kLorenzEmbedding = 5;

/// Integrates from a seeded U(-1,1)^3 start, drops the transient, normalizes
/// the x series over the emitted segment to zero mean / unit (population)
/// variance, and emits u = [x(n-5) .. x(n-1)], d = x(n).
inline std::vector<Sample> lorenz_stream(std::uint64_t seed, std::size_t n,
                                         const LorenzParams& p = {}) {
  Rng rng(seed);
  LorenzState s{};
  do {
    s = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  } while (s[0] == 0.0 && s[1] == 0.0 && s[2] == 0.0);
  for (std::size_t i = 0; i < kLorenzTransient; ++i) s = lorenz_euler_step(s, p);

  const std::size_t total = n + kLorenzEmbedding;
  std::vector<double> x(total);
  for (std::size_t i = 0; i < total; ++i) {
    x[i] = s[0];
    s = lorenz_euler_step(s, p);
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(total);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(total);
  const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (double& v : x) v = (v - mean) * scale;

  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vector u(static_cast<Index>(kLorenzEmbedding));
    for (std::size_t i = 0; i < kLorenzEmbedding; ++i) u(static_cast<Index>(i)) = x[k + i];
    out.push_back({std::move(u), x[k + kLorenzEmbedding]});
  }
  return out;
}

enum class SystemKind { StdGaussToy, GenGaussToy, Lorenz };

inline std::string_view to_string(SystemKind k) {
  switch (k) {
    case SystemKind::StdGaussToy: return "std_gauss_toy";
    case SystemKind::GenGaussToy: return "gen_gauss_toy";
    case SystemKind::Lorenz: return "lorenz";
  }
  return "?";
}

inline SystemKind parse_system(std::string_view s) {
  for (SystemKind k : {SystemKind::StdGaussToy, SystemKind::GenGaussToy, SystemKind::Lorenz})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown system '" + std::string(s) +
                              "' (expected std_gauss_toy, gen_gauss_toy or lorenz)");
}

/// Stream description; generate() is a pure function of the fields.
struct SampleStream {
  SystemKind kind = SystemKind::StdGaussToy;
  Matrix a = Matrix::Identity(2, 2);  // gen_gauss_toy only
  std::uint64_t seed = 0;
  double noise_std = kToyNoiseStd;  // toys only
  std::size_t length = 0;

  Index input_dim() const {
    return kind == SystemKind::Lorenz ? static_cast<Index>(kLorenzEmbedding) : 2;
  }

  std::vector<Sample> generate() const {
    switch (kind) {
      case SystemKind::StdGaussToy: return std_gauss_toy(seed, length, noise_std);
      case SystemKind::GenGaussToy: return gen_gauss_toy(a, seed, length, noise_std);
      case SystemKind::Lorenz: return lorenz_stream(seed, length);
    }
    return {};
  }
};

}  // namespace ggkaf
