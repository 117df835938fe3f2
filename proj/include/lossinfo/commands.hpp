// SPDX-License-Identifier: Apache-2.0

#pragma once

// The four command-line operations as library functions returning a report
// and an exit code. The CLI in tools/ only parses flags and prints.
//
// Exit codes: 0 success, 1 a verified identity exceeded its tolerance,
// 2 invalid input, 3 solver failure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lossinfo/continuous.hpp"
#include "lossinfo/errors.hpp"
#include "lossinfo/losses.hpp"
#include "lossinfo/scenario.hpp"
#include "lossinfo/space.hpp"
#include "lossinfo/uncertainty.hpp"

namespace lossinfo::commands {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kEngineVersion = "0.1.0";
inline constexpr double kIdentityTolerance = 1e-9;
inline constexpr double kExactTolerance = 1e-12;
inline constexpr std::size_t kMaxLatticeAtoms = 8;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidInput = 2, kSolverFailure = 3 };

struct CommandResult {
  ordered_json report;
  int exit_code = kOk;
  std::string csv;  // lattice only
};

enum class OutputFormat { Json, Table };

/// FNV-1a, 64 bit, as a hex string.
inline std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

/// Finite values as numbers, infinities as the strings "inf" / "-inf".
inline ordered_json to_json(const ExtendedReal& v) {
  if (v.is_finite()) return v.value();
  return v.to_string();
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline ordered_json header(std::string_view command, std::string_view input) {
  ordered_json j;
  j["engine"] = "lossinfo";
  j["engine_version"] = kEngineVersion;
  j["command"] = command;
  j["input_digest"] = digest(input);
  return j;
}

inline ordered_json names(const std::vector<std::string>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

inline CommandResult error_result(std::string_view command, std::string_view input, int code,
                                  const std::string& message) {
  CommandResult r{header(command, input), code, {}};
  r.report["error"] = message;
  return r;
}

template <typename Body>
CommandResult guarded(std::string_view command, std::string_view input, Body&& body) {
  try {
    return body();
  } catch (const scenario::ScenarioError& e) {
    auto r = error_result(command, input, kInvalidInput, e.what());
    r.report["field"] = e.field();
    if (e.line()) r.report["line"] = *e.line();
    return r;
  } catch (const SolverError& e) {
    return error_result(command, input, kSolverFailure, e.what());
  } catch (const Error& e) {
    return error_result(command, input, kInvalidInput, e.what());
  }
}

inline ordered_json blocks_json(const scenario::Model& model, const Partition& p) {
  ordered_json a = ordered_json::array();
  for (const auto& b : model.cell_blocks(p)) a.push_back(b);
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// compute

inline CommandResult run_compute(std::string_view scenario_text) {
  return detail::guarded("compute", scenario_text, [&] {
    const auto sc = scenario::parse_scenario(scenario_text);
    const scenario::Model model(sc);
    CommandResult result{detail::header("compute", scenario_text), kOk, {}};
    ordered_json rows = ordered_json::array();
    for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
      const auto& q = sc.queries[qi];
      const auto rep = scenario::evaluate(model, q);
      ordered_json row;
      row["index"] = qi;
      row["quantity"] = quantity_symbol(q.quantity);
      row["target"] = q.target;
      row["given"] = detail::names(q.given);
      if (q.quantity == Quantity::ConditionalInformation) row["condition"] = detail::names(q.condition);
      if (q.quantity == Quantity::Uncertainty) row["from"] = detail::names(q.from);
      row["loss"] = q.loss.text();
      row["value"] = to_json(rep.value);
      if (q.loss.is_log_based()) {
        row["value_nats"] = to_json(rep.value);
        row["value_bits"] = rep.value.is_finite() ? ordered_json(rep.value.value() / std::numbers::ln2)
                                                  : to_json(rep.value);
      }
      row["risk_from"] = to_json(rep.risk_from);
      row["risk_to"] = to_json(rep.risk_to);
      row["partitions"] = {{"from", detail::blocks_json(model, rep.from)}, {"to", detail::blocks_json(model, rep.to)}};
      ordered_json residuals = ordered_json::object();
      for (const auto& check : q.checks) {
        if (check == "telescope") {
          const Partition mid = q.quantity == Quantity::ConditionalInformation
                                    ? partition_join(model.sigma(q.condition), model.sigma(q.given))
                                    : model.sigma(q.given);
          residuals["telescope"] = check_telescope(model.space(), model.element(q.target, q.loss),
                                                   model.loss(q.target, q.loss), mid);
        }
      }
      row["residuals"] = residuals;
      rows.push_back(std::move(row));
    }
    result.report["results"] = std::move(rows);
    return result;
  });
}

// ---------------------------------------------------------------------------
// verify

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"prop1", "telescope", "pythagoras", "bridge", "belief"};
  return names;
}

namespace detail {

struct CheckLog {
  ordered_json rows = ordered_json::array();
  bool all_pass = true;

  void add(std::ptrdiff_t query, const std::string& check, double residual, double tolerance) {
    const bool pass = std::isfinite(residual) && residual <= tolerance;
    all_pass = all_pass && pass;
    ordered_json row;
    row["query"] = query < 0 ? ordered_json(nullptr) : ordered_json(query);
    row["check"] = check;
    row["residual"] = format_number(residual) == "inf" ? ordered_json("inf") : ordered_json(residual);
    row["tolerance"] = tolerance;
    row["pass"] = pass;
    rows.push_back(std::move(row));
  }
};

inline double negative_part(const ExtendedReal& v) {
  if (v.is_neg_inf()) return std::numeric_limits<double>::infinity();
  if (v.is_pos_inf()) return 0.0;
  return std::max(0.0, -v.value());
}

inline void verify_prop1(const scenario::Model& model, CheckLog& log) {
  const auto& sc = model.scenario();
  const auto& space = model.space();
  if (space.atom_count() > kMaxLatticeAtoms) {
    throw scenario::ScenarioError("/joint", "prop1 sweeps the full partition lattice and needs at most " +
                                                std::to_string(kMaxLatticeAtoms) + " positive cells");
  }
  const auto lattice = enumerate_partitions(space.atom_count());
  for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
    const auto& q = sc.queries[qi];
    const auto idx = static_cast<std::ptrdiff_t>(qi);
    const RandomElement x = model.element(q.target, q.loss);
    const LossModel loss = model.loss(q.target, q.loss);
    std::vector<ExtendedReal> risk;
    risk.reserve(lattice.size());
    for (const auto& p : lattice) risk.push_back(optimal_risk(space, x, loss, p));

    double monotone = 0.0;
    for (std::size_t a = 0; a < lattice.size(); ++a) {
      for (std::size_t b = 0; b < lattice.size(); ++b) {
        if (is_refinement(lattice[b], lattice[a])) monotone = std::max(monotone, negative_part(risk[a] - risk[b]));
      }
    }
    log.add(idx, "prop1.i refinement monotonicity", monotone, kIdentityTolerance);

    const ExtendedReal full = optimal_risk(space, x, loss, partition_of_element(space, x));
    double maximal = 0.0;
    for (const auto& r : risk) maximal = std::max(maximal, negative_part(r - full));
    log.add(idx, "prop1.ii sigma(X) maximality", maximal, kIdentityTolerance);

    const Partition given = model.sigma(q.given);
    double nonneg = negative_part(entropy(space, x, loss).value);
    nonneg = std::max(nonneg, negative_part(conditional_entropy(space, x, loss, given).value));
    nonneg = std::max(nonneg, negative_part(information(space, x, loss, given).value));
    nonneg = std::max(nonneg, negative_part(
                                  conditional_information(space, x, loss, model.sigma(q.condition), given).value));
    log.add(idx, "prop1.iii non-negativity", nonneg, kIdentityTolerance);

    const std::size_t tv = sc.variable_index(q.target);
    const std::size_t k = sc.variables[tv].alphabet.size();
    std::vector<double> marginal(k, 0.0);
    for (std::size_t a = 0; a < space.atom_count(); ++a) marginal[model.symbols(tv)[a]] += space.probability(a);
    if (std::count_if(marginal.begin(), marginal.end(), [](double p) { return p > 0.0; }) == 1) {
      log.add(idx, "prop1.iv Dirac entropy", std::abs(entropy(space, x, loss).value.value()), kExactTolerance);
    }

    for (std::size_t w = 0; w < sc.variables.size(); ++w) {
      if (w == tv) continue;
      const std::size_t kw = sc.variables[w].alphabet.size();
      std::vector<double> joint(k * kw, 0.0), mw(kw, 0.0);
      for (std::size_t a = 0; a < space.atom_count(); ++a) {
        joint[model.symbols(tv)[a] * kw + model.symbols(w)[a]] += space.probability(a);
        mw[model.symbols(w)[a]] += space.probability(a);
      }
      bool independent = true;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          independent = independent && std::abs(joint[i * kw + j] - marginal[i] * mw[j]) <= kExactTolerance;
        }
      }
      if (independent) {
        const auto i = information(space, x, loss, model.sigma({sc.variables[w].name})).value;
        log.add(idx, "prop1.v independence I(" + q.target + ";" + sc.variables[w].name + ")",
                std::abs(i.value()), kExactTolerance);
      }
    }
  }
}

inline void verify_telescope(const scenario::Model& model, CheckLog& log) {
  const auto& sc = model.scenario();
  for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
    const auto& q = sc.queries[qi];
    const RandomElement x = model.element(q.target, q.loss);
    const LossModel loss = model.loss(q.target, q.loss);
    const auto idx = static_cast<std::ptrdiff_t>(qi);
    log.add(idx, "telescope trivial", check_telescope(model.space(), x, loss, trivial_partition(model.space())),
            kIdentityTolerance);
    log.add(idx, "telescope sigma(given)", check_telescope(model.space(), x, loss, model.sigma(q.given)),
            kIdentityTolerance);
    if (!q.condition.empty()) {
      auto both = q.given;
      both.insert(both.end(), q.condition.begin(), q.condition.end());
      log.add(idx, "telescope sigma(given, condition)", check_telescope(model.space(), x, loss, model.sigma(both)),
              kIdentityTolerance);
    }
    log.add(idx, "telescope sigma(target)",
            check_telescope(model.space(), x, loss, partition_of_element(model.space(), x)), kIdentityTolerance);
  }
}

inline void verify_pythagoras(const scenario::Model& model, CheckLog& log) {
  const auto& sc = model.scenario();
  const auto& space = model.space();
  bool any = false;
  for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
    const auto& q = sc.queries[qi];
    if (!sc.real_values.contains(q.target)) continue;
    any = true;
    const RandomElement x = model.element(q.target, scenario::LossSpec{"square", ""});
    const Partition knowledge = model.sigma(q.given);
    // A knowledge-measurable competitor: an affine map of the conditional mean.
    const RandomElement m = conditional_expectation(space, x, knowledge);
    std::vector<double> yv(space.atom_count());
    for (std::size_t a = 0; a < yv.size(); ++a) yv[a] = 0.5 * m.value(a)[0] + 1.0;
    const RandomElement y = RandomElement::reals(std::move(yv));
    std::vector<ConvexGenerator> generators = {squared_norm(), exponential_sum()};
    bool positive = true;
    for (double v : sc.real_values.at(q.target)) positive = positive && v > 0.0;
    if (positive) generators.push_back(negative_entropy());
    for (const auto& phi : generators) {
      log.add(static_cast<std::ptrdiff_t>(qi), "pythagoras " + phi.name, check_pythagoras(space, x, phi, knowledge, y),
              kIdentityTolerance);
    }
  }
  if (!any) throw scenario::ScenarioError("/real_values", "pythagoras needs a query whose target has real_values");
}

// |H_KL(P_{Y|Z}) - I_S(Y; Z)| for target Y and knowledge Z.
inline double bridge_residual(const scenario::Model& model, const std::string& y_name,
                              const std::vector<std::string>& z_names) {
  const auto& sc = model.scenario();
  const auto& space = model.space();
  const std::size_t yv = sc.variable_index(y_name);
  const std::size_t k = sc.variables[yv].alphabet.size();
  const Partition z = model.sigma(z_names);
  const RandomElement y = RandomElement::symbols(k, model.symbols(yv));
  const RandomElement conditional = conditional_expectation(space, y, z);  // P_{Y|Z} at each atom
  const auto h_kl = entropy(space, conditional, kl_loss(k)).value;
  const auto i_s = information(space, y, log_loss(k), z).value;
  return std::abs((h_kl - i_s).value());
}

inline void verify_bridge(const scenario::Model& model, CheckLog& log) {
  const auto& sc = model.scenario();
  bool any = false;
  for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
    const auto& q = sc.queries[qi];
    if (q.given.empty()) continue;
    any = true;
    log.add(static_cast<std::ptrdiff_t>(qi), "bridge H_KL(P_{" + q.target + "|given}) = I_S",
            bridge_residual(model, q.target, q.given), kIdentityTolerance);
  }
  if (!any) {
    if (sc.variables.size() < 2) throw scenario::ScenarioError("/variables", "bridge needs at least two variables");
    log.add(-1, "bridge H_KL(P_{" + sc.variables[0].name + "|" + sc.variables[1].name + "}) = I_S",
            bridge_residual(model, sc.variables[0].name, {sc.variables[1].name}), kIdentityTolerance);
  }
}

inline void verify_belief(const scenario::Model& model, CheckLog& log) {
  const auto& sc = model.scenario();
  for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
    const auto& q = sc.queries[qi];
    const RandomElement x = model.element(q.target, q.loss);
    const LossModel loss = model.loss(q.target, q.loss);
    auto states = model.symbol_states(q.target, q.loss);
    const std::vector<double> uniform(states.size(), 1.0 / static_cast<double>(states.size()));
    const auto d = belief_decomposition(model.space(), x, loss, WeightedStates(std::move(states), uniform));
    const auto idx = static_cast<std::ptrdiff_t>(qi);
    log.add(idx, "belief total = relative + entropy", std::abs((d.total - d.relative - d.entropy_term).value()),
            kIdentityTolerance);
    log.add(idx, "belief entropy term = H",
            std::abs((d.entropy_term - entropy(model.space(), x, loss).value).value()), kIdentityTolerance);
  }
}

}  // namespace detail

inline CommandResult run_verify(std::string_view scenario_text, std::string_view suite) {
  return detail::guarded("verify", scenario_text, [&]() -> CommandResult {
    const auto& known = suite_names();
    if (std::find(known.begin(), known.end(), suite) == known.end()) {
      throw InvalidArgument("unknown suite '" + std::string(suite) + "' (prop1, telescope, pythagoras, bridge, belief)");
    }
    const auto sc = scenario::parse_scenario(scenario_text);
    const scenario::Model model(sc);
    detail::CheckLog log;
    if (suite == "prop1") detail::verify_prop1(model, log);
    if (suite == "telescope") detail::verify_telescope(model, log);
    if (suite == "pythagoras") detail::verify_pythagoras(model, log);
    if (suite == "bridge") detail::verify_bridge(model, log);
    if (suite == "belief") detail::verify_belief(model, log);
    CommandResult r{detail::header("verify", scenario_text), log.all_pass ? kOk : kCheckFailed, {}};
    r.report["suite"] = suite;
    r.report["checks"] = std::move(log.rows);
    r.report["all_pass"] = log.all_pass;
    return r;
  });
}

// ---------------------------------------------------------------------------
// lattice

inline constexpr std::string_view kLatticeCsvHeader = "partition_id,block_count,optimal_risk,uncertainty_from_trivial";

namespace detail {

// 53 random bits as a double in [0, 1).
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// All partitions of a random `atoms`-atom space with a random X drawn from
/// three values, under one loss. mt19937_64 output is fixed by the standard,
/// so a seed always yields the same CSV.
inline CommandResult run_lattice(std::size_t atoms, std::string_view loss_text, std::uint64_t seed) {
  const std::string args = "lattice atoms=" + std::to_string(atoms) + " loss=" + std::string(loss_text) +
                           " seed=" + std::to_string(seed);
  return detail::guarded("lattice", args, [&] {
    if (atoms == 0 || atoms > kMaxLatticeAtoms) {
      throw InvalidArgument("atoms must be in [1, " + std::to_string(kMaxLatticeAtoms) + "]");
    }
    const auto spec = scenario::parse_loss_spec(loss_text);
    std::mt19937_64 rng(seed);
    std::vector<double> p(atoms);
    double sum = 0.0;
    for (auto& v : p) sum += (v = 0.05 + detail::unit_double(rng));
    for (auto& v : p) v /= sum;
    const SampleSpace space(p);
    std::vector<std::size_t> symbols(atoms);
    for (auto& s : symbols) s = static_cast<std::size_t>(rng() % 3);

    constexpr std::size_t k = 3;
    std::optional<RandomElement> x;
    std::optional<LossModel> loss;
    if (spec.needs_real_values()) {
      std::vector<double> vals(atoms);
      for (std::size_t a = 0; a < atoms; ++a) vals[a] = 1.0 + static_cast<double>(symbols[a]);
      x = RandomElement::reals(vals);
      loss = spec.name == "square" ? square_error(1) : bregman_loss(scenario::generator_by_name(spec.parameter), 1);
    } else {
      x = RandomElement::symbols(k, symbols);
      loss = spec.name == "log"   ? log_loss(k)
             : spec.name == "kl" ? kl_loss(k)
                                  : tsallis_score(k, std::stod(spec.parameter));
    }

    const auto lattice = enumerate_partitions(atoms);
    const ExtendedReal base = optimal_risk(space, *x, *loss, trivial_partition(space));
    std::vector<ExtendedReal> risk;
    std::ostringstream csv;
    csv << kLatticeCsvHeader << '\n';
    for (std::size_t id = 0; id < lattice.size(); ++id) {
      risk.push_back(optimal_risk(space, *x, *loss, lattice[id]));
      csv << id << ',' << lattice[id].block_count() << ',' << risk.back().to_string() << ','
          << (base - risk.back()).to_string() << '\n';
    }
    std::size_t pairs = 0, violations = 0;
    double min_gain = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < lattice.size(); ++a) {
      for (std::size_t b = 0; b < lattice.size(); ++b) {
        if (a == b || !is_refinement(lattice[b], lattice[a])) continue;
        ++pairs;
        const double gain = (risk[a] - risk[b]).to_double();
        min_gain = std::min(min_gain, gain);
        if (gain < -kIdentityTolerance) ++violations;
      }
    }
    CommandResult r{detail::header("lattice", args), kOk, csv.str()};
    r.report["atoms"] = atoms;
    r.report["loss"] = spec.text();
    r.report["seed"] = seed;
    r.report["probabilities"] = p;
    r.report["x"] = symbols;
    r.report["partitions"] = lattice.size();
    r.report["refinement_pairs"] = pairs;
    r.report["monotonicity_violations"] = violations;
    r.report["min_refinement_uncertainty"] = pairs ? ordered_json(min_gain) : ordered_json(nullptr);
    r.report["monotone"] = violations == 0;
    return r;
  });
}

// ---------------------------------------------------------------------------
// witness

inline CommandResult run_witness(std::string_view family_text, const std::vector<double>& n_values) {
  std::string args = "witness family=" + std::string(family_text) + " n=";
  for (double n : n_values) args += format_number(n) + ",";
  return detail::guarded("witness", args, [&] {
    const WitnessFamily family = parse_family(family_text);
    const auto ladder = demonstrate_entropy_divergence(family, n_values);
    CommandResult r{detail::header("witness", args), kOk, {}};
    r.report["family"] = family_name(family);
    r.report["entropy"] = "inf";
    ordered_json rows = ordered_json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      ordered_json row;
      row["n"] = ladder[i].n;
      row["risk_upper_bound"] = ladder[i].risk_upper_bound;
      if (family == WitnessFamily::ShiftedGaussianHyvarinen) {
        row["score_at_x"] = hyvarinen_witness_score(ladder[i].n, 0.0, 0.0);
      }
      if (i > 0) decreasing = decreasing && ladder[i].risk_upper_bound < ladder[i - 1].risk_upper_bound;
      rows.push_back(std::move(row));
    }
    r.report["ladder"] = std::move(rows);
    r.report["strictly_decreasing"] = decreasing;
    return r;
  });
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render_table(const ordered_json& report) {
  std::ostringstream out;
  auto cell = [](const ordered_json& v) -> std::string {
    if (v.is_number_float()) return format_number(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  out << "# " << report.value("command", "") << "  " << report.value("input_digest", "") << '\n';
  if (report.contains("error")) {
    out << "error: " << report["error"].get<std::string>() << '\n';
    return out.str();
  }
  if (report.contains("results")) {
    out << "idx\tquantity\ttarget\tgiven\tloss\tvalue\tbits\trisk_from\trisk_to\n";
    for (const auto& r : report["results"]) {
      std::string given;
      for (const auto& g : r["given"]) given += (given.empty() ? "" : ",") + g.get<std::string>();
      out << r["index"].get<std::size_t>() << '\t' << r["quantity"].get<std::string>() << '\t'
          << r["target"].get<std::string>() << '\t' << (given.empty() ? "-" : given) << '\t'
          << r["loss"].get<std::string>() << '\t' << cell(r["value"]) << '\t'
          << (r.contains("value_bits") ? cell(r["value_bits"]) : "-") << '\t' << cell(r["risk_from"]) << '\t'
          << cell(r["risk_to"]) << '\n';
    }
  } else if (report.contains("checks")) {
    out << "query\tcheck\tresidual\ttolerance\tpass\n";
    for (const auto& c : report["checks"]) {
      out << cell(c["query"]) << '\t' << c["check"].get<std::string>() << '\t' << cell(c["residual"]) << '\t'
          << cell(c["tolerance"]) << '\t' << (c["pass"].get<bool>() ? "pass" : "FAIL") << '\n';
    }
    out << "all_pass: " << (report["all_pass"].get<bool>() ? "true" : "false") << '\n';
  } else if (report.contains("ladder")) {
    out << "n\trisk_upper_bound\n";
    for (const auto& row : report["ladder"]) out << cell(row["n"]) << '\t' << cell(row["risk_upper_bound"]) << '\n';
    out << "strictly_decreasing: " << (report["strictly_decreasing"].get<bool>() ? "true" : "false") << '\n';
  } else {
    for (const auto& [key, value] : report.items()) out << key << ": " << cell(value) << '\n';
  }
  return out.str();
}

}  // namespace lossinfo::commands
