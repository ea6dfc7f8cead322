#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ggkaf/spd.hpp"

namespace ggkaf {

/// One kernel atom: center c_j, precision Z_j and expansion coefficient h_j.
struct DictEntry {
  Vector center;
  SymMatrix precision;
  double coeff = 0.0;
  std::size_t birth_index = 0;  // step at which the atom was added; bookkeeping only
};

/// Ordered atom set. Order is insertion order; pruning keeps relative order.
class Dictionary {
 public:
  explicit Dictionary(Index dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("Dictionary: input dimension must be >= 1");
  }

  Index dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::vector<DictEntry>& entries() const noexcept { return entries_; }
  std::vector<DictEntry>& entries() noexcept { return entries_; }
  const DictEntry& operator[](std::size_t j) const { return entries_[j]; }
  DictEntry& operator[](std::size_t j) { return entries_[j]; }

  /// Appends (u, z_init) with a zero coefficient.
  void append(const Vector& u, const SymMatrix& z_init, std::size_t birth_index) {
    if (u.size() != dim_ || z_init.dim() != dim_) {
      throw std::invalid_argument("Dictionary::append: expected dimension " +
                                  std::to_string(dim_) + ", got center " +
                                  std::to_string(u.size()) + " and precision " +
                                  std::to_string(z_init.dim()));
    }
    entries_.push_back(DictEntry{u, z_init, 0.0, birth_index});
  }

  /// Removes every atom whose coefficient is exactly zero. Returns the count.
  std::size_t prune_zeros() {
    const auto first = std::remove_if(entries_.begin(), entries_.end(),
                                      [](const DictEntry& e) { return e.coeff == 0.0; });
    const auto removed = static_cast<std::size_t>(entries_.end() - first);
    entries_.erase(first, entries_.end());
    return removed;
  }

  Vector coefficients() const {
    Vector h(static_cast<Index>(entries_.size()));
    for (std::size_t j = 0; j < entries_.size(); ++j) h(static_cast<Index>(j)) = entries_[j].coeff;
    return h;
  }

 private:
  Index dim_;
  std::vector<DictEntry> entries_;
};

/// Snapshot: {"dim", "size", "entries": [{"center", "precision" (row-major),
/// "coeff", "birth_index"}]}.
inline nlohmann::json to_json(const Dictionary& dict) {
  nlohmann::json entries = nlohmann::json::array();
  for (const DictEntry& e : dict.entries()) {
    std::vector<double> center(e.center.data(), e.center.data() + e.center.size());
    std::vector<double> precision;
    precision.reserve(static_cast<std::size_t>(e.precision.dim() * e.precision.dim()));
    for (Index k = 0; k < e.precision.dim(); ++k)
      for (Index l = 0; l < e.precision.dim(); ++l) precision.push_back(e.precision(k, l));
    entries.push_back({{"center", center},
                       {"precision", precision},
                       {"coeff", e.coeff},
                       {"birth_index", e.birth_index}});
  }
  return {{"dim", dict.dim()}, {"size", dict.size()}, {"entries", entries}};
}

inline Dictionary dictionary_from_json(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<Index>();
  Dictionary dict(dim);
  for (const auto& je : j.at("entries")) {
    const auto c = je.at("center").get<std::vector<double>>();
    const auto p = je.at("precision").get<std::vector<double>>();
    if (static_cast<Index>(c.size()) != dim || static_cast<Index>(p.size()) != dim * dim) {
      throw std::invalid_argument("dictionary_from_json: entry has wrong dimension");
    }
    Matrix z(dim, dim);
    for (Index k = 0; k < dim; ++k)
      for (Index l = 0; l < dim; ++l) z(k, l) = p[static_cast<std::size_t>(k * dim + l)];
    dict.append(Eigen::Map<const Vector>(c.data(), dim), SymMatrix(z),
                je.at("birth_index").get<std::size_t>());
    dict.entries().back().coeff = je.at("coeff").get<double>();
  }
  return dict;
}

}  // namespace ggkaf
