// SPDX-License-Identifier: Apache-2.0

#pragma once

// Loss functions l(state, action), Bayes acts, and the divergences of the
// scoring rules they induce.
//
// States and actions are plain coordinate vectors. Discrete outcomes are
// one-hot distributions, so a loss over symbols is evaluated on a
// distribution-valued state by linear extension: l(p, a) = sum_j p_j l(j, a).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lossinfo/errors.hpp"
#include "lossinfo/extended_real.hpp"
#include "lossinfo/space.hpp"

namespace lossinfo {

using Vector = std::vector<double>;

/// Axis-aligned box [lower, upper]^d.
struct RealBox {
  std::size_t dimension;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Probability vectors of length `size`.
struct Simplex {
  std::size_t size;
};

using ActionSpace = std::variant<RealBox, Simplex>;

struct StateKind {
  ValueKind kind;
  std::size_t dimension;
};

/// A finite distribution over states: the law of X restricted to one block.
class WeightedStates {
 public:
  WeightedStates(std::vector<Vector> states, std::vector<double> weights)
      : states_(std::move(states)), weights_(std::move(weights)) {
    if (states_.size() != weights_.size()) {
      throw InvalidArgument("WeightedStates: states and weights differ in length");
    }
    detail::check_probability_vector(weights_, kProbabilityTolerance, "WeightedStates");
    for (const auto& s : states_) {
      if (s.size() != states_.front().size()) {
        throw InvalidArgument("WeightedStates: states differ in dimension");
      }
    }
  }

  /// The categorical distribution `p` as weights on one-hot symbol states.
  static WeightedStates categorical(std::span<const double> p) {
    std::vector<Vector> states(p.size(), Vector(p.size(), 0.0));
    for (std::size_t j = 0; j < p.size(); ++j) states[j][j] = 1.0;
    return WeightedStates(std::move(states), Vector(p.begin(), p.end()));
  }

  /// The law of X on one block of a partition, renormalized.
  static WeightedStates on_block(const SampleSpace& space, const RandomElement& x,
                                 const Partition::Block& block) {
    const double mass = block_probability(space, block);
    if (!(mass > 0.0)) throw InvalidArgument("WeightedStates: block has zero probability");
    std::vector<Vector> states;
    Vector weights;
    states.reserve(block.size());
    weights.reserve(block.size());
    for (std::size_t atom : block) {
      const auto v = x.value(atom);
      states.emplace_back(v.begin(), v.end());
      weights.push_back(space.probability(atom) / mass);
    }
    return WeightedStates(std::move(states), std::move(weights));
  }

  /// A single state with weight one.
  static WeightedStates dirac(std::span<const double> state) {
    return WeightedStates({Vector(state.begin(), state.end())}, {1.0});
  }

  std::size_t size() const { return states_.size(); }
  const std::vector<Vector>& states() const { return states_; }
  const std::vector<double>& weights() const { return weights_; }

  /// sum_i w_i s_i
  Vector mean() const {
    Vector m(states_.front().size());
    detail::weighted_mean(
        states_.size(), m.size(), [&](std::size_t i) { return weights_[i]; },
        [&](std::size_t i) { return std::span<const double>(states_[i]); }, m);
    return m;
  }

 private:
  std::vector<Vector> states_;
  std::vector<double> weights_;
};

class LossModel {
 public:
  using Eval = std::function<double(std::span<const double> state, std::span<const double> action)>;
  using BayesRule = std::function<Vector(const WeightedStates&)>;
  using PointwiseMin = std::function<ExtendedReal(std::span<const double> state)>;

  LossModel(std::string name, StateKind state_kind, ActionSpace action_space, Eval eval,
            BayesRule bayes_rule = {}, PointwiseMin pointwise_min = {})
      : name_(std::move(name)),
        state_kind_(state_kind),
        action_space_(action_space),
        eval_(std::move(eval)),
        bayes_rule_(std::move(bayes_rule)),
        pointwise_min_(std::move(pointwise_min)) {}

  const std::string& name() const { return name_; }
  const StateKind& state_kind() const { return state_kind_; }
  const ActionSpace& action_space() const { return action_space_; }

  double operator()(std::span<const double> state, std::span<const double> action) const {
    return eval_(state, action);
  }

  bool has_bayes_rule() const { return static_cast<bool>(bayes_rule_); }
  const BayesRule& bayes_rule() const { return bayes_rule_; }
  bool has_pointwise_min() const { return static_cast<bool>(pointwise_min_); }
  const PointwiseMin& pointwise_min() const { return pointwise_min_; }

  /// Same loss with the closed-form Bayes rule and pointwise minimum removed,
  /// forcing the numeric solver.
  LossModel without_closed_forms() const {
    return LossModel(name_, state_kind_, action_space_, eval_);
  }

  std::size_t action_dimension() const {
    return std::visit(
        [](const auto& s) -> std::size_t {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, RealBox>) return s.dimension;
          else return s.size;
        },
        action_space_);
  }

 private:
  std::string name_;
  StateKind state_kind_;
  ActionSpace action_space_;
  Eval eval_;
  BayesRule bayes_rule_;
  PointwiseMin pointwise_min_;
};

/// sum_i w_i l(s_i, a), skipping null weights (0 * l = 0).
inline double expected_loss(const LossModel& loss, const WeightedStates& ws,
                            std::span<const double> action) {
  double risk = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws.weights()[i] > 0.0) risk += ws.weights()[i] * loss(ws.states()[i], action);
  }
  return risk;
}

// ---------------------------------------------------------------------------
// Convex generators and Bregman divergences

/// A differentiable convex function phi with its gradient. `domain_lower`
/// bounds every coordinate from below (0 for the negative entropy).
struct ConvexGenerator {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<Vector(std::span<const double>)> gradient;
  double domain_lower = -std::numeric_limits<double>::infinity();
};

/// phi(x) = ||x||^2, which generates the square error.
inline ConvexGenerator squared_norm() {
  return {"sqnorm",
          [](std::span<const double> x) {
            return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
          },
          [](std::span<const double> x) {
            Vector g(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) g[j] = 2.0 * x[j];
            return g;
          }};
}

/// phi(x) = sum x_j log x_j on the non-negative orthant, 0 log 0 = 0. The
/// gradient log x_j + 1 is -inf at zero coordinates.
inline ConvexGenerator negative_entropy() {
  return {"negentropy",
          [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) {
              if (v < 0.0) return std::numeric_limits<double>::quiet_NaN();
              if (v > 0.0) s += v * std::log(v);
            }
            return s;
          },
          [](std::span<const double> x) {
            Vector g(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) {
              g[j] = x[j] > 0.0 ? std::log(x[j]) + 1.0 : -std::numeric_limits<double>::infinity();
            }
            return g;
          },
          0.0};
}

/// phi(x) = sum exp(x_j).
inline ConvexGenerator exponential_sum() {
  return {"expsum",
          [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += std::exp(v);
            return s;
          },
          [](std::span<const double> x) {
            Vector g(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) g[j] = std::exp(x[j]);
            return g;
          }};
}

/// d_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>. Pairing terms with
/// x_j == y_j contribute nothing even where the gradient is infinite.
inline double bregman_divergence(const ConvexGenerator& phi, std::span<const double> x,
                                 std::span<const double> y) {
  const Vector g = phi.gradient(y);
  double pairing = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = x[j] - y[j];
    if (diff != 0.0) pairing += g[j] * diff;
  }
  return phi.value(x) - phi.value(y) - pairing;
}

// ---------------------------------------------------------------------------
// Built-in losses

namespace detail {

inline LossModel::BayesRule mean_rule() {
  return [](const WeightedStates& ws) { return ws.mean(); };
}

inline LossModel::PointwiseMin zero_min() {
  return [](std::span<const double>) { return ExtendedReal(0.0); };
}

}  // namespace detail

/// l(x, a) = ||x - a||^2 on R^d. The default box is unbounded, which is fine
/// for the closed form; the numeric solver needs finite bounds.
inline LossModel square_error(std::size_t dimension = 1,
                              double lower = -std::numeric_limits<double>::infinity(),
                              double upper = std::numeric_limits<double>::infinity()) {
  return LossModel(
      "square", {ValueKind::RealVector, dimension}, RealBox{dimension, lower, upper},
      [](std::span<const double> x, std::span<const double> a) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - a[j]) * (x[j] - a[j]);
        return s;
      },
      detail::mean_rule(), detail::zero_min());
}

/// l(x, a) = d_phi(x, a). The Bayes act is the weighted mean of the states.
inline LossModel bregman_loss(ConvexGenerator phi, std::size_t dimension, double lower, double upper) {
  lower = std::max(lower, phi.domain_lower);
  auto name = "bregman:" + phi.name;
  return LossModel(
      std::move(name), {ValueKind::RealVector, dimension}, RealBox{dimension, lower, upper},
      [phi = std::move(phi)](std::span<const double> x, std::span<const double> a) {
        return bregman_divergence(phi, x, a);
      },
      detail::mean_rule(), detail::zero_min());
}

inline LossModel bregman_loss(ConvexGenerator phi, std::size_t dimension = 1) {
  const double lower = phi.domain_lower;
  return bregman_loss(std::move(phi), dimension, lower, std::numeric_limits<double>::infinity());
}

/// Discrete log loss l(x, q) = -log q(x), natural log. States are one-hot
/// symbols; a general distribution state p gives the cross-entropy.
inline LossModel log_loss(std::size_t alphabet) {
  return LossModel(
      "log", {ValueKind::Distribution, alphabet}, Simplex{alphabet},
      [](std::span<const double> p, std::span<const double> q) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (p[j] > 0.0) s -= p[j] * std::log(q[j]);
        }
        return s;
      },
      detail::mean_rule(),
      [](std::span<const double> p) {
        double h = 0.0;
        for (double v : p) {
          if (v > 0.0) h -= v * std::log(v);
        }
        return ExtendedReal(h);
      });
}

/// KL divergence D(p || q) between distribution-valued states and actions,
/// the Bregman loss of the negative entropy on the simplex.
inline LossModel kl_loss(std::size_t alphabet) {
  auto phi = negative_entropy();
  return LossModel(
      "kl", {ValueKind::Distribution, alphabet}, Simplex{alphabet},
      [phi = std::move(phi)](std::span<const double> p, std::span<const double> q) {
        return bregman_divergence(phi, p, q);
      },
      detail::mean_rule(), detail::zero_min());
}

/// Tsallis score with exponent gamma > 1:
///   S(j, q) = (gamma - 1) sum_i q_i^gamma - gamma q_j^(gamma - 1).
/// Proper, so the Bayes act under p is p itself. gamma = 2 is the Brier score
/// shifted by a constant.
inline LossModel tsallis_score(std::size_t alphabet, double gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("tsallis_score: exponent must be finite and > 1");
  }
  return LossModel(
      "tsallis:" + ExtendedReal(gamma).to_string(), {ValueKind::Distribution, alphabet},
      Simplex{alphabet},
      [gamma](std::span<const double> p, std::span<const double> q) {
        double power_sum = 0.0;
        for (double v : q) power_sum += std::pow(v, gamma);
        double s = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (p[j] > 0.0) s += p[j] * ((gamma - 1.0) * power_sum - gamma * std::pow(q[j], gamma - 1.0));
        }
        return s;
      },
      detail::mean_rule(),
      [gamma](std::span<const double> p) {
        double s = 0.0;
        for (double v : p) s += std::pow(v, gamma);
        return ExtendedReal(-s);
      });
}

// ---------------------------------------------------------------------------
// Bayes acts

enum class SolveMethod { ClosedForm, Numeric };

struct BayesActResult {
  Vector action;
  ExtendedReal risk;
  SolveMethod method;
  std::size_t solver_iterations = 0;
};

struct SolverOptions {
  double improvement_tolerance = 1e-12;
  std::size_t max_sweeps = 100000;
};

namespace detail {

inline double checked_risk(const LossModel& loss, const WeightedStates& ws, std::span<const double> a) {
  const double r = expected_loss(loss, ws, a);
  if (std::isnan(r)) throw SolverError("bayes_act: loss '" + loss.name() + "' evaluated to NaN");
  return r;
}

// Golden-section search for the minimizer of a unimodal f on [lo, hi].
// Only interior points are evaluated. Returns (argmin, min).
template <typename F>
std::pair<double, double> golden_section(F&& f, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

// Cyclic coordinate-wise golden-section over a finite box.
inline BayesActResult solve_box(const LossModel& loss, const WeightedStates& ws, const RealBox& box,
                                const SolverOptions& opt) {
  if (!std::isfinite(box.lower) || !std::isfinite(box.upper) || box.lower > box.upper) {
    throw SolverError("bayes_act: numeric search for '" + loss.name() + "' needs a bounded action box");
  }
  Vector a(box.dimension, 0.5 * (box.lower + box.upper));
  double risk = checked_risk(loss, ws, a);
  for (std::size_t sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    const double before = risk;
    for (std::size_t j = 0; j < box.dimension; ++j) {
      Vector trial = a;
      auto [arg, val] = golden_section(
          [&](double t) {
            trial[j] = t;
            return checked_risk(loss, ws, trial);
          },
          box.lower, box.upper);
      if (val < risk) {
        a[j] = arg;
        risk = val;
      }
    }
    if (!(before - risk >= opt.improvement_tolerance)) {
      if (!std::isfinite(risk)) throw SolverError("bayes_act: no action with finite risk found");
      return {std::move(a), ExtendedReal(risk), SolveMethod::Numeric, sweep};
    }
  }
  throw SolverError("bayes_act: coordinate search did not converge");
}

// Derivative-free descent on the simplex: repeatedly re-splits the mass of a
// pair of coordinates by golden-section.
inline BayesActResult solve_simplex(const LossModel& loss, const WeightedStates& ws, const Simplex& simplex,
                                    const SolverOptions& opt) {
  const std::size_t k = simplex.size;
  Vector q(k, 1.0 / static_cast<double>(k));
  double risk = checked_risk(loss, ws, q);
  for (std::size_t sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    const double before = risk;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double total = q[i] + q[j];
        if (!(total > 0.0)) continue;
        Vector trial = q;
        auto split = [&](double t) {
          trial[i] = t;
          trial[j] = total - t;
          return checked_risk(loss, ws, trial);
        };
        auto [arg, val] = golden_section(split, 0.0, total);
        if (val < risk) {
          q[i] = arg;
          q[j] = total - arg;
          risk = val;
        }
      }
    }
    if (!(before - risk >= opt.improvement_tolerance)) {
      if (!std::isfinite(risk)) throw SolverError("bayes_act: no action with finite risk found");
      return {std::move(q), ExtendedReal(risk), SolveMethod::Numeric, sweep};
    }
  }
  throw SolverError("bayes_act: simplex search did not converge");
}

}  // namespace detail

/// argmin_a sum_i w_i l(s_i, a). Uses the loss's closed-form rule when it has
/// one, otherwise a numeric search that assumes a -> E[l(X, a)] is convex (or
/// at least unimodal along coordinates).
inline BayesActResult bayes_act(const LossModel& loss, const WeightedStates& ws,
                                const SolverOptions& opt = {}) {
  if (ws.states().front().size() != loss.state_kind().dimension) {
    throw InvalidArgument("bayes_act: state dimension does not match loss '" + loss.name() + "'");
  }
  if (loss.has_bayes_rule()) {
    Vector a = loss.bayes_rule()(ws);
    const double risk = detail::checked_risk(loss, ws, a);
    return {std::move(a), ExtendedReal::from_double(risk), SolveMethod::ClosedForm, 0};
  }
  return std::visit(
      [&](const auto& space) {
        if constexpr (std::is_same_v<std::decay_t<decltype(space)>, RealBox>) {
          return detail::solve_box(loss, ws, space, opt);
        } else {
          return detail::solve_simplex(loss, ws, space, opt);
        }
      },
      loss.action_space());
}

struct PointwiseMinimum {
  ExtendedReal value;
  /// Set when no closed form exists and `value` is the risk of a numerically
  /// found action, i.e. an upper bound on the infimum.
  bool upper_bound = false;
};

/// inf_a l(x, a).
inline PointwiseMinimum pointwise_min_loss(const LossModel& loss, std::span<const double> state) {
  if (loss.has_pointwise_min()) return {loss.pointwise_min()(state), false};
  return {bayes_act(loss, WeightedStates::dirac(state)).risk, true};
}

/// D(p || q) = E_p[l(X, a_q) - l(X, a_p)], the divergence of the scoring rule
/// S(x, q) = l(x, a_q). Non-negative for any loss whose Bayes acts exist.
inline ExtendedReal scoring_divergence(const LossModel& loss, const WeightedStates& p,
                                       const WeightedStates& q) {
  const Vector a_p = bayes_act(loss, p).action;
  const Vector a_q = bayes_act(loss, q).action;
  ExtendedReal d(0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = p.weights()[i];
    if (!(w > 0.0)) continue;
    const auto at_q = ExtendedReal::from_double(loss(p.states()[i], a_q));
    const auto at_p = ExtendedReal::from_double(loss(p.states()[i], a_p));
    d = d + w * (at_q - at_p);
  }
  return d;
}

/// Divergence between two categorical distributions over the loss's alphabet.
inline ExtendedReal scoring_divergence(const LossModel& loss, std::span<const double> p,
                                       std::span<const double> q) {
  return scoring_divergence(loss, WeightedStates::categorical(p), WeightedStates::categorical(q));
}

}  // namespace lossinfo
