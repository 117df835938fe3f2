// SPDX-License-Identifier: Apache-2.0

#pragma once

// Finite probability spaces, partitions standing in for sub-sigma-algebras,
// random elements and conditional expectation.
//
// A sub-sigma-algebra of a finite space is generated by a unique partition of
// the atoms, so every "knowledge level" in this library is a Partition.
// Finer partitions carry more information.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lossinfo/errors.hpp"

namespace lossinfo {

inline constexpr double kProbabilityTolerance = 1e-12;

namespace detail {

inline void check_probability_vector(std::span<const double> p, double tol, const char* what) {
  if (p.empty()) throw InvalidArgument(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(what) + ": probabilities must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw InvalidArgument(std::string(what) + ": probabilities sum to " + std::to_string(sum) +
                          ", expected 1");
  }
}

}  // namespace detail

/// The atoms of a finite sample space together with their probabilities.
class SampleSpace {
 public:
  explicit SampleSpace(std::vector<double> probabilities) : p_(std::move(probabilities)) {
    detail::check_probability_vector(p_, kProbabilityTolerance, "SampleSpace");
  }

  static SampleSpace uniform(std::size_t atom_count) {
    if (atom_count == 0) throw InvalidArgument("SampleSpace: atom_count must be positive");
    return SampleSpace(std::vector<double>(atom_count, 1.0 / static_cast<double>(atom_count)));
  }

  std::size_t atom_count() const { return p_.size(); }
  double probability(std::size_t atom) const { return p_.at(atom); }
  std::span<const double> probabilities() const { return p_; }

  friend bool operator==(const SampleSpace&, const SampleSpace&) = default;

 private:
  std::vector<double> p_;
};

/// Disjoint, covering blocks of atom indices in canonical form: members
/// ascending, blocks ordered by their smallest member. Equality is structural.
class Partition {
 public:
  using Block = std::vector<std::size_t>;

  Partition(std::size_t atom_count, std::vector<Block> blocks) : labels_(atom_count, kUnassigned) {
    if (atom_count == 0) throw InvalidArgument("Partition: atom_count must be positive");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].empty()) throw InvalidArgument("Partition: empty block");
      for (std::size_t atom : blocks[b]) {
        if (atom >= atom_count) throw InvalidArgument("Partition: atom index out of range");
        if (labels_[atom] != kUnassigned) throw InvalidArgument("Partition: blocks overlap");
        labels_[atom] = b;
      }
    }
    for (std::size_t l : labels_) {
      if (l == kUnassigned) throw InvalidArgument("Partition: blocks do not cover all atoms");
    }
    canonicalize();
  }

  /// Builds a partition from an arbitrary per-atom labelling; atoms with equal
  /// labels share a block.
  template <typename Label>
  static Partition from_labels(std::span<const Label> labels) {
    if (labels.empty()) throw InvalidArgument("Partition: atom_count must be positive");
    std::map<Label, std::size_t> ids;
    Partition p;
    p.labels_.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = ids.try_emplace(labels[i], ids.size());
      p.labels_[i] = it->second;
    }
    p.canonicalize();
    return p;
  }

  std::size_t atom_count() const { return labels_.size(); }
  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(std::size_t b) const { return blocks_.at(b); }
  std::size_t block_of(std::size_t atom) const { return labels_.at(atom); }
  /// Canonical block index of every atom.
  std::span<const std::size_t> labels() const { return labels_; }

  friend bool operator==(const Partition& a, const Partition& b) { return a.blocks_ == b.blocks_; }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (b) s += ",";
      s += "{";
      for (std::size_t i = 0; i < blocks_[b].size(); ++i) {
        if (i) s += ",";
        s += std::to_string(blocks_[b][i]);
      }
      s += "}";
    }
    return s + "]";
  }

 private:
  static constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

  Partition() = default;

  // Relabels blocks in order of first appearance, which is the order of their
  // smallest members.
  void canonicalize() {
    std::vector<std::size_t> remap(labels_.size(), kUnassigned);
    std::size_t next = 0;
    for (auto& l : labels_) {
      if (remap[l] == kUnassigned) remap[l] = next++;
      l = remap[l];
    }
    blocks_.assign(next, {});
    for (std::size_t atom = 0; atom < labels_.size(); ++atom) blocks_[labels_[atom]].push_back(atom);
  }

  std::vector<std::size_t> labels_;
  std::vector<Block> blocks_;
};

enum class ValueKind { RealVector, Distribution };

/// A per-atom value: a real d-vector or a probability vector over a finite
/// alphabet of size k. Symbols of a discrete variable are stored as one-hot
/// distributions (Dirac measures).
class RandomElement {
 public:
  static RandomElement reals(std::vector<double> values) {
    return RandomElement(ValueKind::RealVector, 1, std::move(values));
  }

  /// `flat` holds atom_count rows of `dimension` coordinates.
  static RandomElement real_vectors(std::size_t dimension, std::vector<double> flat) {
    return RandomElement(ValueKind::RealVector, dimension, std::move(flat));
  }

  /// `flat` holds atom_count probability vectors of length `alphabet`.
  static RandomElement distributions(std::size_t alphabet, std::vector<double> flat) {
    RandomElement x(ValueKind::Distribution, alphabet, std::move(flat));
    for (std::size_t i = 0; i < x.atom_count(); ++i) {
      detail::check_probability_vector(x.value(i), kProbabilityTolerance, "RandomElement");
    }
    return x;
  }

  /// A discrete variable taking symbol `symbols[i]` at atom i.
  static RandomElement symbols(std::size_t alphabet, std::span<const std::size_t> symbols) {
    if (alphabet == 0) throw InvalidArgument("RandomElement: alphabet must be non-empty");
    std::vector<double> flat(symbols.size() * alphabet, 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (symbols[i] >= alphabet) throw InvalidArgument("RandomElement: symbol outside alphabet");
      flat[i * alphabet + symbols[i]] = 1.0;
    }
    return RandomElement(ValueKind::Distribution, alphabet, std::move(flat));
  }

  ValueKind kind() const { return kind_; }
  /// d for real vectors, k for distributions.
  std::size_t dimension() const { return dim_; }
  std::size_t atom_count() const { return data_.size() / dim_; }
  std::span<const double> value(std::size_t atom) const {
    return std::span<const double>(data_).subspan(atom * dim_, dim_);
  }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const RandomElement&, const RandomElement&) = default;

 private:
  RandomElement(ValueKind kind, std::size_t dim, std::vector<double> data)
      : kind_(kind), dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) throw InvalidArgument("RandomElement: dimension must be positive");
    if (data_.empty() || data_.size() % dim_ != 0) {
      throw InvalidArgument("RandomElement: value count is not a multiple of the dimension");
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw InvalidArgument("RandomElement: values must be finite");
    }
  }

  ValueKind kind_;
  std::size_t dim_;
  std::vector<double> data_;
};

namespace detail {

inline void require_same_atoms(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": mismatched atom sets (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail

namespace detail {

// sum_i w_i v_i / sum_i w_i per coordinate. A coordinate that is the same at
// every point with positive weight is returned unchanged, so the mean of a
// constant is exact.
template <typename WeightAt, typename ValueAt>
void weighted_mean(std::size_t count, std::size_t dim, WeightAt weight_at, ValueAt value_at,
                   std::span<double> out) {
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) total += weight_at(i);
  for (std::size_t j = 0; j < dim; ++j) {
    double sum = 0.0;
    std::optional<double> common;
    bool constant = true;
    for (std::size_t i = 0; i < count; ++i) {
      const double w = weight_at(i);
      const double v = value_at(i)[j];
      sum += w * v;
      if (!(w > 0.0)) continue;
      if (!common) common = v;
      constant = constant && v == *common;
    }
    out[j] = (constant && common) ? *common : sum / total;
  }
}

}  // namespace detail

/// The partition {Omega}: no knowledge.
inline Partition trivial_partition(const SampleSpace& space) {
  std::vector<std::size_t> all(space.atom_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return Partition(space.atom_count(), {std::move(all)});
}

/// The partition into singletons: complete knowledge of the outcome.
inline Partition discrete_partition(std::size_t atom_count) {
  std::vector<std::size_t> labels(atom_count);
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  return Partition::from_labels<std::size_t>(labels);
}

/// sigma(X): atoms grouped by bitwise-equal values. No tolerance is applied;
/// quantize first if nearly-equal values should be merged.
inline Partition partition_of_element(const SampleSpace& space, const RandomElement& x) {
  detail::require_same_atoms(space.atom_count(), x.atom_count(), "partition_of_element");
  std::vector<std::vector<std::uint64_t>> keys(x.atom_count());
  for (std::size_t i = 0; i < x.atom_count(); ++i) {
    for (double v : x.value(i)) keys[i].push_back(std::bit_cast<std::uint64_t>(v));
  }
  return Partition::from_labels<std::vector<std::uint64_t>>(keys);
}

/// Coarsest common refinement; realizes sigma(Y, Z) from sigma(Y) and sigma(Z).
inline Partition partition_join(const Partition& a, const Partition& b) {
  detail::require_same_atoms(a.atom_count(), b.atom_count(), "partition_join");
  std::vector<std::pair<std::size_t, std::size_t>> keys(a.atom_count());
  for (std::size_t i = 0; i < a.atom_count(); ++i) keys[i] = {a.block_of(i), b.block_of(i)};
  return Partition::from_labels<std::pair<std::size_t, std::size_t>>(keys);
}

/// True iff every block of `fine` lies inside a block of `coarse`.
inline bool is_refinement(const Partition& fine, const Partition& coarse) {
  detail::require_same_atoms(fine.atom_count(), coarse.atom_count(), "is_refinement");
  for (const auto& block : fine.blocks()) {
    const std::size_t target = coarse.block_of(block.front());
    for (std::size_t atom : block) {
      if (coarse.block_of(atom) != target) return false;
    }
  }
  return true;
}

inline double block_probability(const SampleSpace& space, const Partition::Block& block) {
  double mass = 0.0;
  for (std::size_t atom : block) mass += space.probability(atom);
  return mass;
}

/// E[X | p]: on each block, the probability-weighted mean of X. Distribution
/// valued elements yield the conditional mixture. Every block must carry
/// positive mass; use restrict_to_support first when the space has null atoms.
inline RandomElement conditional_expectation(const SampleSpace& space, const RandomElement& x,
                                             const Partition& p) {
  detail::require_same_atoms(space.atom_count(), x.atom_count(), "conditional_expectation");
  detail::require_same_atoms(space.atom_count(), p.atom_count(), "conditional_expectation");
  const std::size_t d = x.dimension();
  std::vector<double> out(x.data().size());
  std::vector<double> mean(d);
  for (const auto& block : p.blocks()) {
    const double mass = block_probability(space, block);
    if (!(mass > 0.0)) {
      throw InvalidArgument("conditional_expectation: block " + std::to_string(block.front()) +
                            " has zero probability");
    }
    detail::weighted_mean(
        block.size(), d, [&](std::size_t i) { return space.probability(block[i]); },
        [&](std::size_t i) { return x.value(block[i]); }, mean);
    for (std::size_t atom : block) std::copy(mean.begin(), mean.end(), out.begin() + atom * d);
  }
  return x.kind() == ValueKind::RealVector ? RandomElement::real_vectors(d, std::move(out))
                                           : RandomElement::distributions(d, std::move(out));
}

/// E[X] as a d-vector.
inline std::vector<double> expectation(const SampleSpace& space, const RandomElement& x) {
  detail::require_same_atoms(space.atom_count(), x.atom_count(), "expectation");
  std::vector<double> mean(x.dimension());
  detail::weighted_mean(
      space.atom_count(), mean.size(), [&](std::size_t i) { return space.probability(i); },
      [&](std::size_t i) { return x.value(i); }, mean);
  return mean;
}

inline constexpr std::size_t kMaxEnumerableAtoms = 10;

/// Every set partition of {0, ..., n-1} exactly once, in lexicographic order
/// of restricted growth strings. Bell(10) = 115975 is the upper limit.
inline std::vector<Partition> enumerate_partitions(std::size_t atom_count) {
  if (atom_count == 0 || atom_count > kMaxEnumerableAtoms) {
    throw InvalidArgument("enumerate_partitions: atom_count must be in [1, " +
                          std::to_string(kMaxEnumerableAtoms) + "]");
  }
  std::vector<Partition> out;
  std::vector<std::size_t> rgs(atom_count, 0);
  std::vector<std::size_t> prefix_max(atom_count, 0);  // max of rgs[0..i]
  while (true) {
    out.push_back(Partition::from_labels<std::size_t>(rgs));
    // Increment the rightmost position that can still grow.
    std::size_t i = atom_count;
    while (i-- > 1) {
      if (rgs[i] <= prefix_max[i - 1]) break;
    }
    if (i == 0 || i >= atom_count) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < atom_count; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  return out;
}

/// The positive-probability atoms of a space, re-indexed from zero.
struct Support {
  SampleSpace space;
  std::vector<std::size_t> atoms;  // original index of each kept atom
};

/// Drops null atoms (the 0 * loss = 0 convention) so that no partition of the
/// reduced space has a zero-mass block.
inline Support restrict_to_support(const SampleSpace& space) {
  std::vector<double> p;
  std::vector<std::size_t> atoms;
  for (std::size_t i = 0; i < space.atom_count(); ++i) {
    if (space.probability(i) > 0.0) {
      p.push_back(space.probability(i));
      atoms.push_back(i);
    }
  }
  return Support{SampleSpace(std::move(p)), std::move(atoms)};
}

inline RandomElement restrict_to(const RandomElement& x, const Support& support) {
  std::vector<double> flat;
  flat.reserve(support.atoms.size() * x.dimension());
  for (std::size_t atom : support.atoms) {
    const auto v = x.value(atom);
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return x.kind() == ValueKind::RealVector
             ? RandomElement::real_vectors(x.dimension(), std::move(flat))
             : RandomElement::distributions(x.dimension(), std::move(flat));
}

inline Partition restrict_to(const Partition& p, const Support& support) {
  std::vector<std::size_t> labels;
  labels.reserve(support.atoms.size());
  for (std::size_t atom : support.atoms) labels.push_back(p.block_of(atom));
  return Partition::from_labels<std::size_t>(labels);
}

}  // namespace lossinfo
