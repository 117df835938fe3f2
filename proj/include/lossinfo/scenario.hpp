// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scenario files: a joint probability table over named discrete variables
// plus a list of queries. See docs/scenario-format.md for the format.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lossinfo/errors.hpp"
#include "lossinfo/losses.hpp"
#include "lossinfo/space.hpp"
#include "lossinfo/uncertainty.hpp"

namespace lossinfo::scenario {

/// Raised for any malformed scenario. `field` is a JSON pointer to the
/// offending element ("" for syntax errors); `line` is set for syntax errors.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, std::string message, std::optional<std::size_t> line = std::nullopt)
      : Error(format(field, message, line)), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  std::optional<std::size_t> line() const { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, std::optional<std::size_t> line) {
    std::string s = "scenario error";
    if (line) s += " at line " + std::to_string(*line);
    if (!field.empty()) s += " in field '" + field + "'";
    return s + ": " + message;
  }

  std::string field_;
  std::optional<std::size_t> line_;
};

inline constexpr double kTableTolerance = 1e-9;

struct Variable {
  std::string name;
  std::vector<std::string> alphabet;
};

/// "name" or "name:param", e.g. "log", "square", "tsallis:2", "bregman:expsum".
struct LossSpec {
  std::string name;
  std::string parameter;

  std::string text() const { return parameter.empty() ? name : name + ":" + parameter; }
  /// Losses whose values are naturally reported in nats and bits.
  bool is_log_based() const { return name == "log" || name == "kl"; }
  /// Losses acting on the numeric embedding of the target instead of symbols.
  bool needs_real_values() const { return name == "square" || name == "bregman"; }
};

inline LossSpec parse_loss_spec(std::string_view text) {
  static const std::set<std::string, std::less<>> known = {"log", "kl", "square", "tsallis", "bregman"};
  const auto colon = text.find(':');
  LossSpec spec{std::string(text.substr(0, colon)), colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1))};
  if (!known.contains(spec.name)) throw InvalidArgument("unknown loss '" + spec.name + "'");
  if (spec.name == "tsallis") {
    if (spec.parameter.empty()) spec.parameter = "2";
    std::size_t used = 0;
    double gamma = 0.0;
    try {
      gamma = std::stod(spec.parameter, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != spec.parameter.size() || !(gamma > 1.0)) {
      throw InvalidArgument("tsallis exponent must be a number > 1, got '" + spec.parameter + "'");
    }
  } else if (spec.name == "bregman") {
    if (spec.parameter.empty()) spec.parameter = "sqnorm";
    if (spec.parameter != "sqnorm" && spec.parameter != "negentropy" && spec.parameter != "expsum") {
      throw InvalidArgument("bregman generator must be sqnorm, negentropy or expsum, got '" + spec.parameter + "'");
    }
  } else if (!spec.parameter.empty()) {
    throw InvalidArgument("loss '" + spec.name + "' takes no parameter");
  }
  return spec;
}

inline ConvexGenerator generator_by_name(std::string_view name) {
  if (name == "sqnorm") return squared_norm();
  if (name == "negentropy") return negative_entropy();
  if (name == "expsum") return exponential_sum();
  throw InvalidArgument("unknown convex generator '" + std::string(name) + "'");
}

inline std::optional<Quantity> parse_quantity(std::string_view s) {
  for (auto q : {Quantity::Entropy, Quantity::ConditionalEntropy, Quantity::Information,
                 Quantity::ConditionalInformation, Quantity::Uncertainty}) {
    if (quantity_symbol(q) == s) return q;
  }
  return std::nullopt;
}

struct Query {
  Quantity quantity;
  std::string target;
  std::vector<std::string> given;      // Y for H_cond / I / I_cond, "to" for U
  std::vector<std::string> condition;  // Z for I_cond
  std::vector<std::string> from;       // starting knowledge for U
  LossSpec loss;
  std::vector<std::string> checks;     // identity checks to attach ("telescope")
};

struct Scenario {
  std::vector<Variable> variables;
  std::vector<double> joint;
  std::map<std::string, std::vector<double>> real_values;
  std::vector<Query> queries;

  std::size_t variable_index(std::string_view name) const {
    for (std::size_t v = 0; v < variables.size(); ++v) {
      if (variables[v].name == name) return v;
    }
    throw InvalidArgument("unknown variable '" + std::string(name) + "'");
  }
};

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ScenarioError(path + "/" + key, "missing mandatory field");
  return obj.at(key);
}

inline std::string require_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ScenarioError(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<std::string> require_names(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array of variable names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(require_string(j[i], path + "/" + std::to_string(i)));
  return out;
}

inline std::vector<double> require_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ScenarioError(path + "/" + std::to_string(i), "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace detail

/// Parses and validates a scenario document.
inline Scenario parse_scenario(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", e.what(), detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ScenarioError("", "top level must be an object");

  Scenario sc;
  const json& vars = detail::require(doc, "variables", "");
  if (!vars.is_array() || vars.empty()) throw ScenarioError("/variables", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t v = 0; v < vars.size(); ++v) {
    const std::string path = "/variables/" + std::to_string(v);
    Variable var;
    var.name = detail::require_string(detail::require(vars[v], "name", path), path + "/name");
    var.alphabet = detail::require_names(detail::require(vars[v], "alphabet", path), path + "/alphabet");
    if (var.alphabet.empty()) throw ScenarioError(path + "/alphabet", "alphabet must be non-empty");
    if (std::set<std::string>(var.alphabet.begin(), var.alphabet.end()).size() != var.alphabet.size()) {
      throw ScenarioError(path + "/alphabet", "alphabet symbols must be distinct");
    }
    if (!names.insert(var.name).second) throw ScenarioError(path + "/name", "duplicate variable '" + var.name + "'");
    sc.variables.push_back(std::move(var));
  }

  sc.joint = detail::require_numbers(detail::require(doc, "joint", ""), "/joint");
  std::size_t cells = 1;
  for (const auto& v : sc.variables) cells *= v.alphabet.size();
  if (sc.joint.size() != cells) {
    throw ScenarioError("/joint", "table has " + std::to_string(sc.joint.size()) + " entries, expected " +
                                      std::to_string(cells) + " (product of alphabet sizes)");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < sc.joint.size(); ++i) {
    if (!(sc.joint[i] >= 0.0) || !std::isfinite(sc.joint[i])) {
      throw ScenarioError("/joint/" + std::to_string(i), "entries must be finite and non-negative");
    }
    sum += sc.joint[i];
  }
  if (std::abs(sum - 1.0) > kTableTolerance) {
    throw ScenarioError("/joint", "entries sum to " + std::to_string(sum) + ", expected 1 within 1e-9");
  }

  if (doc.contains("real_values")) {
    const json& rv = doc.at("real_values");
    if (!rv.is_object()) throw ScenarioError("/real_values", "expected an object keyed by variable name");
    for (const auto& [name, values] : rv.items()) {
      const std::string path = "/real_values/" + name;
      if (!names.contains(name)) throw ScenarioError(path, "unknown variable '" + name + "'");
      auto nums = detail::require_numbers(values, path);
      if (nums.size() != sc.variables[sc.variable_index(name)].alphabet.size()) {
        throw ScenarioError(path, "needs one value per alphabet symbol");
      }
      sc.real_values[name] = std::move(nums);
    }
  }

  const json& queries = detail::require(doc, "queries", "");
  if (!queries.is_array()) throw ScenarioError("/queries", "expected an array");
  auto check_names = [&](const std::vector<std::string>& list, const std::string& path) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!names.contains(list[i])) throw ScenarioError(path + "/" + std::to_string(i), "unknown variable '" + list[i] + "'");
    }
  };
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const std::string path = "/queries/" + std::to_string(q);
    const json& jq = queries[q];
    Query query;
    const auto qname = detail::require_string(detail::require(jq, "quantity", path), path + "/quantity");
    const auto quantity = parse_quantity(qname);
    if (!quantity) throw ScenarioError(path + "/quantity", "unknown quantity '" + qname + "' (H, H_cond, I, I_cond, U)");
    query.quantity = *quantity;
    query.target = detail::require_string(detail::require(jq, "target", path), path + "/target");
    if (!names.contains(query.target)) throw ScenarioError(path + "/target", "unknown variable '" + query.target + "'");
    query.given = detail::require_names(detail::require(jq, "given", path), path + "/given");
    check_names(query.given, path + "/given");
    const auto loss_text = detail::require_string(detail::require(jq, "loss", path), path + "/loss");
    try {
      query.loss = parse_loss_spec(loss_text);
    } catch (const InvalidArgument& e) {
      throw ScenarioError(path + "/loss", e.what());
    }
    if (query.loss.needs_real_values() && !sc.real_values.contains(query.target)) {
      throw ScenarioError(path + "/loss", "loss '" + loss_text + "' needs real_values for '" + query.target + "'");
    }
    if (query.quantity == Quantity::Entropy && !query.given.empty()) {
      throw ScenarioError(path + "/given", "H takes no conditioning variables");
    }
    if (query.quantity == Quantity::ConditionalInformation) {
      query.condition = detail::require_names(detail::require(jq, "condition", path), path + "/condition");
      check_names(query.condition, path + "/condition");
    }
    if (query.quantity == Quantity::Uncertainty) {
      query.from = detail::require_names(detail::require(jq, "from", path), path + "/from");
      check_names(query.from, path + "/from");
    }
    if (jq.contains("checks")) {
      query.checks = detail::require_names(jq.at("checks"), path + "/checks");
      for (std::size_t i = 0; i < query.checks.size(); ++i) {
        if (query.checks[i] != "telescope") {
          throw ScenarioError(path + "/checks/" + std::to_string(i), "unknown check '" + query.checks[i] + "'");
        }
      }
    }
    sc.queries.push_back(std::move(query));
  }
  return sc;
}

/// The scenario bound to engine objects: one atom per positive table cell.
class Model {
 public:
  explicit Model(Scenario scenario) : sc_(std::move(scenario)) {
    const Scenario& sc = sc_;
    double sum = 0.0;
    for (double p : sc.joint) sum += p;
    std::vector<double> probs;
    for (std::size_t cell = 0; cell < sc.joint.size(); ++cell) {
      if (sc.joint[cell] > 0.0) {
        cells_.push_back(cell);
        probs.push_back(sc.joint[cell] / sum);
      }
    }
    if (cells_.empty()) throw ScenarioError("/joint", "table has no positive entry");
    space_.emplace(std::move(probs));

    // Row-major: the last declared variable varies fastest.
    const std::size_t nv = sc.variables.size();
    symbols_.assign(nv, std::vector<std::size_t>(cells_.size()));
    for (std::size_t a = 0; a < cells_.size(); ++a) {
      std::size_t rest = cells_[a];
      for (std::size_t v = nv; v-- > 0;) {
        const std::size_t k = sc.variables[v].alphabet.size();
        symbols_[v][a] = rest % k;
        rest /= k;
      }
    }
  }

  const Scenario& scenario() const { return sc_; }
  const SampleSpace& space() const { return *space_; }
  /// Table cell of each atom.
  const std::vector<std::size_t>& cells() const { return cells_; }
  const std::vector<std::size_t>& symbols(std::size_t variable) const { return symbols_.at(variable); }

  /// sigma(names...): the join of the variables' partitions; trivial for none.
  Partition sigma(const std::vector<std::string>& names) const {
    std::vector<std::vector<std::size_t>> keys(cells_.size());
    for (const auto& name : names) {
      const std::size_t v = sc_.variable_index(name);
      for (std::size_t a = 0; a < cells_.size(); ++a) keys[a].push_back(symbols_[v][a]);
    }
    return Partition::from_labels<std::vector<std::size_t>>(keys);
  }

  /// The target variable as a random element suitable for `loss`.
  RandomElement element(const std::string& name, const LossSpec& loss) const {
    const std::size_t v = sc_.variable_index(name);
    if (loss.needs_real_values()) {
      const auto& embed = sc_.real_values.at(name);
      std::vector<double> vals(cells_.size());
      for (std::size_t a = 0; a < cells_.size(); ++a) vals[a] = embed[symbols_[v][a]];
      return RandomElement::reals(std::move(vals));
    }
    return RandomElement::symbols(sc_.variables[v].alphabet.size(), symbols_[v]);
  }

  LossModel loss(const std::string& target, const LossSpec& spec) const {
    const std::size_t k = sc_.variables[sc_.variable_index(target)].alphabet.size();
    if (spec.name == "log") return log_loss(k);
    if (spec.name == "kl") return kl_loss(k);
    if (spec.name == "tsallis") return tsallis_score(k, std::stod(spec.parameter));
    if (spec.name == "square") return square_error(1);
    return bregman_loss(generator_by_name(spec.parameter), 1);
  }

  /// One state per alphabet symbol of `name`, in alphabet order.
  std::vector<Vector> symbol_states(const std::string& name, const LossSpec& loss) const {
    const std::size_t v = sc_.variable_index(name);
    const std::size_t k = sc_.variables[v].alphabet.size();
    std::vector<Vector> out;
    for (std::size_t s = 0; s < k; ++s) {
      if (loss.needs_real_values()) {
        out.push_back({sc_.real_values.at(name)[s]});
      } else {
        Vector e(k, 0.0);
        e[s] = 1.0;
        out.push_back(std::move(e));
      }
    }
    return out;
  }

  /// The partition translated back to table-cell indices.
  std::vector<std::vector<std::size_t>> cell_blocks(const Partition& p) const {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& block : p.blocks()) {
      std::vector<std::size_t> b;
      for (std::size_t atom : block) b.push_back(cells_[atom]);
      out.push_back(std::move(b));
    }
    return out;
  }

 private:
  Scenario sc_;
  std::optional<SampleSpace> space_;
  std::vector<std::size_t> cells_;
  std::vector<std::vector<std::size_t>> symbols_;
};

/// Evaluates one query against the bound model.
inline UncertaintyReport evaluate(const Model& model, const Query& q) {
  const auto& space = model.space();
  const RandomElement x = model.element(q.target, q.loss);
  const LossModel loss = model.loss(q.target, q.loss);
  switch (q.quantity) {
    case Quantity::Entropy: return entropy(space, x, loss);
    case Quantity::ConditionalEntropy: return conditional_entropy(space, x, loss, model.sigma(q.given));
    case Quantity::Information: return information(space, x, loss, model.sigma(q.given));
    case Quantity::ConditionalInformation:
      return conditional_information(space, x, loss, model.sigma(q.condition), model.sigma(q.given));
    case Quantity::Uncertainty:
      return uncertainty_reduction(space, x, loss, model.sigma(q.from), model.sigma(q.given));
  }
  throw InvalidArgument("unreachable quantity");
}

}  // namespace lossinfo::scenario
