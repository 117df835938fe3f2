// SPDX-License-Identifier: Apache-2.0

#pragma once

// Uncertainty reduction between knowledge levels and the quantities derived
// from it.
//
// The optimal risk under a partition is the infimum of E[l(X, A)] over actions
// A that are constant on each block, which splits into one Bayes-act problem
// per block:
//
//   R(p) = sum_B P(B) min_a E[l(X, a) | B].
//
// Uncertainty reduction from p1 to p2 is R(p1) - R(p2). Entropy goes from the
// trivial partition to sigma(X), information from the trivial partition to the
// knowledge partition, conditional entropy from the knowledge partition to
// sigma(X), and conditional information from sigma(Z) to sigma(Y, Z).

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lossinfo/errors.hpp"
#include "lossinfo/extended_real.hpp"
#include "lossinfo/losses.hpp"
#include "lossinfo/space.hpp"

namespace lossinfo {

enum class Quantity { Entropy, ConditionalEntropy, Information, ConditionalInformation, Uncertainty };

inline std::string_view quantity_symbol(Quantity q) {
  switch (q) {
    case Quantity::Entropy: return "H";
    case Quantity::ConditionalEntropy: return "H_cond";
    case Quantity::Information: return "I";
    case Quantity::ConditionalInformation: return "I_cond";
    case Quantity::Uncertainty: return "U";
  }
  return "?";
}

struct UncertaintyReport {
  Quantity quantity;
  ExtendedReal value;
  ExtendedReal risk_from;
  ExtendedReal risk_to;
  std::string loss_name;
  Partition from;
  Partition to;
};

namespace detail {

inline void require_matching_kind(const RandomElement& x, const LossModel& loss) {
  if (x.kind() != loss.state_kind().kind || x.dimension() != loss.state_kind().dimension) {
    throw InvalidArgument("loss '" + loss.name() + "' does not accept the values of this random element");
  }
}

// Law of X on the positive-mass atoms of a block; null atoms are dropped.
inline std::optional<std::pair<double, WeightedStates>> block_law(const SampleSpace& space,
                                                                  const RandomElement& x,
                                                                  const Partition::Block& block) {
  Partition::Block support;
  for (std::size_t atom : block) {
    if (space.probability(atom) > 0.0) support.push_back(atom);
  }
  if (support.empty()) return std::nullopt;
  return std::pair{block_probability(space, support), WeightedStates::on_block(space, x, support)};
}

}  // namespace detail

/// inf over p-measurable A of E[l(X, A)].
inline ExtendedReal optimal_risk(const SampleSpace& space, const RandomElement& x, const LossModel& loss,
                                 const Partition& p) {
  detail::require_same_atoms(space.atom_count(), x.atom_count(), "optimal_risk");
  detail::require_same_atoms(space.atom_count(), p.atom_count(), "optimal_risk");
  detail::require_matching_kind(x, loss);
  ExtendedReal total(0.0);
  for (const auto& block : p.blocks()) {
    auto law = detail::block_law(space, x, block);
    if (!law) continue;
    total = total + law->first * bayes_act(loss, law->second).risk;
  }
  return total;
}

/// U_{from -> to}(X). Negative when `to` carries less information than `from`.
inline UncertaintyReport uncertainty_reduction(const SampleSpace& space, const RandomElement& x,
                                               const LossModel& loss, const Partition& from,
                                               const Partition& to,
                                               Quantity quantity = Quantity::Uncertainty) {
  const ExtendedReal r_from = optimal_risk(space, x, loss, from);
  const ExtendedReal r_to = optimal_risk(space, x, loss, to);
  return {quantity, r_from - r_to, r_from, r_to, loss.name(), from, to};
}

/// H(X): from no knowledge to full knowledge of X.
inline UncertaintyReport entropy(const SampleSpace& space, const RandomElement& x, const LossModel& loss) {
  return uncertainty_reduction(space, x, loss, trivial_partition(space), partition_of_element(space, x),
                               Quantity::Entropy);
}

/// H(X | knowledge). For H(X | Y) pass partition_of_element(space, y).
inline UncertaintyReport conditional_entropy(const SampleSpace& space, const RandomElement& x,
                                             const LossModel& loss, const Partition& knowledge) {
  return uncertainty_reduction(space, x, loss, knowledge, partition_of_element(space, x),
                               Quantity::ConditionalEntropy);
}

/// I(X; knowledge).
inline UncertaintyReport information(const SampleSpace& space, const RandomElement& x, const LossModel& loss,
                                     const Partition& knowledge) {
  return uncertainty_reduction(space, x, loss, trivial_partition(space), knowledge, Quantity::Information);
}

/// I(X; outer | inner), computed as U_{inner -> inner v outer}. With
/// inner = sigma(Z) and outer = sigma(Y) this is I(X; Y | Z).
inline UncertaintyReport conditional_information(const SampleSpace& space, const RandomElement& x,
                                                 const LossModel& loss, const Partition& inner,
                                                 const Partition& outer) {
  return uncertainty_reduction(space, x, loss, inner, partition_join(inner, outer),
                               Quantity::ConditionalInformation);
}

/// E[phi(E[X | knowledge])] - phi(E[X]), the Jensen gap of the conditional
/// mean. Equals the information under the Bregman loss of phi.
inline ExtendedReal bregman_information(const SampleSpace& space, const RandomElement& x,
                                        const ConvexGenerator& phi, const Partition& knowledge) {
  detail::require_same_atoms(space.atom_count(), x.atom_count(), "bregman_information");
  const Support support = restrict_to_support(space);
  const RandomElement xs = restrict_to(x, support);
  const RandomElement cond = conditional_expectation(support.space, xs, restrict_to(knowledge, support));
  const double at_mean = phi.value(expectation(support.space, xs));
  double result = 0.0;
  for (std::size_t i = 0; i < support.space.atom_count(); ++i) {
    result += support.space.probability(i) * (phi.value(cond.value(i)) - at_mean);
  }
  if (std::isnan(result)) {
    throw InvalidArgument("bregman_information: phi is undefined at a conditional mean");
  }
  return ExtendedReal::from_double(result);
}

// ---------------------------------------------------------------------------
// Identity checkers. Each returns a residual; callers choose the threshold.

/// |H(X) - I(X; mid) - H(X | mid)|.
inline double check_telescope(const SampleSpace& space, const RandomElement& x, const LossModel& loss,
                              const Partition& mid) {
  const ExtendedReal h = entropy(space, x, loss).value;
  const ExtendedReal i = information(space, x, loss, mid).value;
  const ExtendedReal hc = conditional_entropy(space, x, loss, mid).value;
  if (!h.is_finite() || !i.is_finite() || !hc.is_finite()) {
    throw InvalidArgument("check_telescope: all three terms must be finite");
  }
  return std::abs(h.value() - i.value() - hc.value());
}

/// |E d(X, Y) - E d(X, E[X|s]) - E d(E[X|s], Y)| for Y measurable w.r.t. s.
inline double check_pythagoras(const SampleSpace& space, const RandomElement& x, const ConvexGenerator& phi,
                               const Partition& knowledge, const RandomElement& y) {
  detail::require_same_atoms(space.atom_count(), y.atom_count(), "check_pythagoras");
  if (y.dimension() != x.dimension()) throw InvalidArgument("check_pythagoras: X and Y differ in dimension");
  if (!is_refinement(knowledge, partition_of_element(space, y))) {
    throw InvalidArgument("check_pythagoras: Y is not measurable with respect to the knowledge partition");
  }
  const Support support = restrict_to_support(space);
  const RandomElement xs = restrict_to(x, support);
  const RandomElement ys = restrict_to(y, support);
  const RandomElement m = conditional_expectation(support.space, xs, restrict_to(knowledge, support));
  double total = 0.0, to_projection = 0.0, from_projection = 0.0;
  for (std::size_t i = 0; i < support.space.atom_count(); ++i) {
    const double w = support.space.probability(i);
    total += w * bregman_divergence(phi, xs.value(i), ys.value(i));
    to_projection += w * bregman_divergence(phi, xs.value(i), m.value(i));
    from_projection += w * bregman_divergence(phi, m.value(i), ys.value(i));
  }
  const double residual = std::abs(total - to_projection - from_projection);
  if (!std::isfinite(residual)) throw InvalidArgument("check_pythagoras: divergence is not finite");
  return residual;
}

// ---------------------------------------------------------------------------
// Scoring-rule divergence forms

/// The law of X over all atoms, p_X.
inline WeightedStates law_of(const SampleSpace& space, const RandomElement& x) {
  Partition::Block all(space.atom_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return detail::block_law(space, x, all).value().second;
}

/// sum over blocks B of `fine` of P(B) D(P_{X|B} || P_{X|C}), C the block of
/// `coarse` containing B. Equals U_{coarse -> fine} when Bayes acts exist.
inline ExtendedReal expected_divergence(const SampleSpace& space, const RandomElement& x, const LossModel& loss,
                                        const Partition& coarse, const Partition& fine) {
  detail::require_matching_kind(x, loss);
  if (!is_refinement(fine, coarse)) throw InvalidArgument("expected_divergence: fine does not refine coarse");
  std::vector<std::optional<WeightedStates>> coarse_laws;
  coarse_laws.reserve(coarse.block_count());
  for (const auto& block : coarse.blocks()) {
    auto law = detail::block_law(space, x, block);
    coarse_laws.push_back(law ? std::optional(std::move(law->second)) : std::nullopt);
  }
  ExtendedReal total(0.0);
  for (const auto& block : fine.blocks()) {
    auto law = detail::block_law(space, x, block);
    if (!law) continue;
    const auto& parent = coarse_laws[coarse.block_of(block.front())];
    total = total + law->first * scoring_divergence(loss, law->second, *parent);
  }
  return total;
}

/// H(X) = E[D(delta_X || p_X)].
inline ExtendedReal entropy_as_divergence(const SampleSpace& space, const RandomElement& x,
                                          const LossModel& loss) {
  return expected_divergence(space, x, loss, trivial_partition(space), discrete_partition(space.atom_count()));
}

/// H(X | knowledge) = E[D(delta_X || P_{X|knowledge})].
inline ExtendedReal conditional_entropy_as_divergence(const SampleSpace& space, const RandomElement& x,
                                                      const LossModel& loss, const Partition& knowledge) {
  return expected_divergence(space, x, loss, knowledge, discrete_partition(space.atom_count()));
}

/// I(X; knowledge) = E[D(P_{X|knowledge} || p_X)].
inline ExtendedReal information_as_divergence(const SampleSpace& space, const RandomElement& x,
                                              const LossModel& loss, const Partition& knowledge) {
  return expected_divergence(space, x, loss, trivial_partition(space), knowledge);
}

/// I(X; outer | inner) = E[D(P_{X|inner v outer} || P_{X|inner})].
inline ExtendedReal conditional_information_as_divergence(const SampleSpace& space, const RandomElement& x,
                                                          const LossModel& loss, const Partition& inner,
                                                          const Partition& outer) {
  return expected_divergence(space, x, loss, inner, partition_join(inner, outer));
}

// ---------------------------------------------------------------------------
// Belief decomposition

struct BeliefDecomposition {
  ExtendedReal total;         // E[D(delta_X || q)]
  ExtendedReal relative;      // D(p_X || q)
  ExtendedReal entropy_term;  // E[D(delta_X || p_X)] = H(X)
};

/// Splits the uncertainty of a fixed belief q about X into the divergence of
/// q from p_X and the entropy of X. total == relative + entropy_term.
inline BeliefDecomposition belief_decomposition(const SampleSpace& space, const RandomElement& x,
                                                const LossModel& loss, const WeightedStates& belief) {
  detail::require_same_atoms(space.atom_count(), x.atom_count(), "belief_decomposition");
  detail::require_matching_kind(x, loss);
  const WeightedStates p_x = law_of(space, x);
  const Vector a_q = bayes_act(loss, belief).action;
  const Vector a_p = bayes_act(loss, p_x).action;
  ExtendedReal total(0.0), entropy_term(0.0);
  for (std::size_t i = 0; i < space.atom_count(); ++i) {
    const double w = space.probability(i);
    if (!(w > 0.0)) continue;
    const auto s = x.value(i);
    const auto own = ExtendedReal::from_double(loss(s, bayes_act(loss, WeightedStates::dirac(s)).action));
    total = total + w * (ExtendedReal::from_double(loss(s, a_q)) - own);
    entropy_term = entropy_term + w * (ExtendedReal::from_double(loss(s, a_p)) - own);
  }
  return {total, scoring_divergence(loss, p_x, belief), entropy_term};
}

}  // namespace lossinfo
