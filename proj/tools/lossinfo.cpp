// SPDX-License-Identifier: Apache-2.0

// Command-line front end: compute, verify, lattice, witness.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lossinfo/commands.hpp"

namespace {

using lossinfo::commands::CommandResult;
using lossinfo::commands::OutputFormat;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

int emit(const CommandResult& r, OutputFormat format) {
  if (format == OutputFormat::Table) {
    std::cout << lossinfo::commands::render_table(r.report);
  } else {
    std::cout << r.report.dump(2) << '\n';
  }
  if (r.report.contains("error")) std::cerr << "lossinfo: " << r.report["error"].get<std::string>() << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized entropy, information and uncertainty for pluggable losses"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lossinfo::commands::kEngineVersion));

  std::string scenario_path;
  std::string format_name = "json";
  const std::vector<std::string> formats = {"json", "table"};

  auto* compute = app.add_subcommand("compute", "Evaluate every query in a scenario");
  compute->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  compute->add_option("--format", format_name, "json or table")->check(CLI::IsMember(formats));

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Check an identity suite against a scenario");
  verify->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  verify->add_option("--suite", suite, "prop1, telescope, pythagoras, bridge or belief")->required();
  verify->add_option("--format", format_name, "json or table")->check(CLI::IsMember(formats));

  std::size_t atoms = 4;
  std::uint64_t seed = 0;
  std::string loss = "square";
  std::string out_path;
  auto* lattice = app.add_subcommand("lattice", "Sweep every partition of a random finite space");
  lattice->add_option("--atoms", atoms, "Number of atoms (1-8)")->required();
  lattice->add_option("--seed", seed, "RNG seed");
  lattice->add_option("--loss", loss, "NAME[:params], e.g. square, log, tsallis:2, bregman:expsum");
  lattice->add_option("--out", out_path, "Write the per-partition CSV here");
  lattice->add_option("--format", format_name, "json or table")->check(CLI::IsMember(formats));

  std::string family = "gaussian_logloss";
  std::vector<double> n_values = {1, 10, 100};
  auto* witness = app.add_subcommand("witness", "Risk bounds showing continuous entropy is infinite");
  witness->add_option("--family", family, "gaussian_logloss or shifted_gaussian_hyvarinen");
  witness->add_option("--n", n_values, "Strictly increasing concentration levels")->delimiter(',');
  witness->add_option("--format", format_name, "json or table")->check(CLI::IsMember(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lossinfo::commands::kInvalidInput;
  }
  const OutputFormat format = format_name == "table" ? OutputFormat::Table : OutputFormat::Json;

  std::string text;
  if ((compute->parsed() || verify->parsed()) && !read_file(scenario_path, text)) {
    std::cerr << "lossinfo: cannot read scenario file '" << scenario_path << "'\n";
    return lossinfo::commands::kInvalidInput;
  }

  if (compute->parsed()) return emit(lossinfo::commands::run_compute(text), format);
  if (verify->parsed()) return emit(lossinfo::commands::run_verify(text, suite), format);
  if (witness->parsed()) return emit(lossinfo::commands::run_witness(family, n_values), format);

  const CommandResult r = lossinfo::commands::run_lattice(atoms, loss, seed);
  if (!out_path.empty() && r.exit_code == 0) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "lossinfo: cannot write '" << out_path << "'\n";
      return lossinfo::commands::kInvalidInput;
    }
    out << r.csv;
  }
  return emit(r, format);
}
