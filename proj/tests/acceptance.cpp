// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: ten numbered criteria, each with a residual tolerance and
// a runtime budget. Prints one PASS/FAIL line per criterion; exits non-zero
// if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "generators.hpp"
#include "lossinfo/continuous.hpp"
#include "lossinfo/uncertainty.hpp"
#include "oracles.hpp"

using namespace lossinfo;

namespace {

class Tally {
 public:
  // |got - want| must not exceed tol; a NaN residual fails.
  void near(double got, double want, double tol, const char* what) { residual(std::abs(got - want), tol, what); }

  void residual(double r, double tol, const char* what) {
    ++checks_;
    if (!(r <= tol)) {
      if (failures_ == 0) first_failure_ = what + std::string(" residual=") + fmt(r) + " tol=" + fmt(tol);
      ++failures_;
    }
    if (std::isnan(r) || r > worst_) worst_ = r;
  }

  void require(bool ok, const char* what) { residual(ok ? 0.0 : std::numeric_limits<double>::infinity(), 0.0, what); }

  bool passed() const { return failures_ == 0 && checks_ > 0; }
  std::size_t checks() const { return checks_; }
  std::size_t failures() const { return failures_; }
  double worst() const { return worst_; }
  const std::string& first_failure() const { return first_failure_; }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  double worst_ = 0.0;
  std::string first_failure_;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<void(Tally&)> body;
};

RandomElement symbols(std::size_t k, const std::vector<std::size_t>& s) { return RandomElement::symbols(k, s); }

Partition sigma(const SampleSpace& space, std::size_t k, const std::vector<std::size_t>& s) {
  return partition_of_element(space, symbols(k, s));
}

double value(const UncertaintyReport& r) { return r.value.value(); }

void shannon_equivalence(Tally& t) {
  gen::Rng rng(101);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t nx = 2 + gen::index(rng, 7), ny = 2 + gen::index(rng, 7), nz = 1 + gen::index(rng, 4);
    const auto tab = gen::table(rng, nx, ny, nz, rep % 3 == 0);
    const auto b = gen::bind(tab);
    const auto x = symbols(nx, b.x);
    const auto loss = log_loss(nx);
    const auto y = sigma(b.space, ny, b.y);
    const auto z = sigma(b.space, nz, b.z);
    t.near(value(entropy(b.space, x, loss)), oracle::entropy_x(tab), 1e-9, "H(X)");
    t.near(value(conditional_entropy(b.space, x, loss, y)), oracle::cond_entropy_x_given_y(tab), 1e-9, "H(X|Y)");
    t.near(value(information(b.space, x, loss, y)), oracle::mutual_information_xy(tab), 1e-9, "I(X;Y)");
    t.near(value(conditional_information(b.space, x, loss, z, y)), oracle::conditional_mutual_information(tab),
           1e-9, "I(X;Y|Z)");
  }
}

void variance_equivalence(Tally& t) {
  gen::Rng rng(102);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + gen::index(rng, 11);
    const auto w = gen::simplex(rng, n, rep % 4 == 0);
    std::vector<double> xv(n);
    for (auto& v : xv) v = gen::uniform(rng, -20, 20);
    std::vector<std::size_t> groups(n);
    for (auto& g : groups) g = gen::index(rng, 4);
    const SampleSpace s(w);
    const auto x = RandomElement::reals(xv);
    const auto y = Partition::from_labels<std::size_t>(groups);
    const auto loss = square_error();
    const auto split = oracle::variance_split(w, xv, groups);
    const double h = value(entropy(s, x, loss));
    const double hc = value(conditional_entropy(s, x, loss, y));
    const double i = value(information(s, x, loss, y));
    t.near(h, oracle::variance(w, xv), 1e-9, "H = Var");
    t.near(hc, split.within, 1e-9, "H(X|Y) = E[Var(X|Y)]");
    t.near(i, split.between, 1e-9, "I = Var(E[X|Y])");
    t.near(h, hc + i, 1e-9, "total variance");
    t.residual(check_telescope(s, x, loss, y), 1e-9, "telescope");
  }
}

void lattice_sweep(Tally& t) {
  gen::Rng rng(103);
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto lattice = enumerate_partitions(n);
    std::vector<std::vector<std::size_t>> refines(lattice.size());  // refines[a] = { b : b refines a }
    for (std::size_t a = 0; a < lattice.size(); ++a)
      for (std::size_t b = 0; b < lattice.size(); ++b)
        if (is_refinement(lattice[b], lattice[a])) refines[a].push_back(b);

    for (int rep = 0; rep < 20; ++rep) {
      const SampleSpace s(gen::simplex(rng, n));
      std::vector<std::size_t> xs(n);
      for (auto& v : xs) v = gen::index(rng, 3);
      std::vector<double> xv(n);
      for (std::size_t i = 0; i < n; ++i) xv[i] = 2.0 * static_cast<double>(xs[i]) - 1.5;
      const std::vector<std::pair<RandomElement, LossModel>> cases = {{RandomElement::reals(xv), square_error()},
                                                                      {symbols(3, xs), log_loss(3)}};
      for (const auto& [x, loss] : cases) {
        const auto sx = partition_of_element(s, x);
        const double h = value(entropy(s, x, loss));
        std::vector<double> info(lattice.size());
        for (std::size_t a = 0; a < lattice.size(); ++a) info[a] = value(information(s, x, loss, lattice[a]));
        for (std::size_t a = 0; a < lattice.size(); ++a) {
          t.residual(std::max(0.0, -info[a]), 1e-9, "(iii) I >= 0");
          t.residual(std::max(0.0, info[a] - h), 1e-9, "(ii) I <= H");
          if (is_refinement(lattice[a], sx)) t.near(info[a], h, 1e-9, "(ii) I = H above sigma(X)");
          for (std::size_t b : refines[a]) t.residual(std::max(0.0, info[a] - info[b]), 1e-9, "(i) monotone");
        }
        t.residual(std::max(0.0, -h), 1e-9, "(iii) H >= 0");
      }
    }
  }

  // (iv) Dirac: a constant X has zero entropy, whatever the space.
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      const SampleSpace s(gen::simplex(rng, n));
      const std::size_t sym = gen::index(rng, 3);
      t.residual(std::abs(value(entropy(s, RandomElement::reals(std::vector<double>(n, 0.5 + sym)), square_error()))),
                 1e-12, "(iv) Dirac, square");
      t.residual(std::abs(value(entropy(s, symbols(3, std::vector<std::size_t>(n, sym)), log_loss(3)))), 1e-12,
                 "(iv) Dirac, log");
    }
  }

  // (v) Independence: product spaces with at most 6 atoms, X a function of the
  // first coordinate and knowledge generated by the second.
  for (const auto& [na, nb] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {2, 3}, {3, 2}, {1, 6}}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto pa = gen::simplex(rng, na), pb = gen::simplex(rng, nb);
      std::vector<double> w;
      std::vector<std::size_t> first, second;
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b) {
          w.push_back(pa[a] * pb[b]);
          first.push_back(a);
          second.push_back(b);
        }
      const SampleSpace s(w);
      const auto knowledge = sigma(s, nb, second);
      std::vector<double> xv;
      for (auto a : first) xv.push_back(std::pow(1.7, static_cast<double>(a)));
      t.residual(std::abs(value(information(s, RandomElement::reals(xv), square_error(), knowledge))), 1e-12,
                 "(v) independence, square");
      t.residual(std::abs(value(information(s, symbols(na, first), log_loss(na), knowledge))), 1e-12,
                 "(v) independence, log");
    }
  }
}

void numeric_bregman(Tally& t) {
  gen::Rng rng(104);
  const std::vector<ConvexGenerator> phis = {squared_norm(), negative_entropy(), exponential_sum()};
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + gen::index(rng, 7);
    const std::size_t dim = 1 + rep % 2;
    const SampleSpace s(gen::simplex(rng, n));
    std::vector<double> flat(n * dim);
    for (auto& v : flat) v = gen::uniform(rng, 0.1, 3.0);
    const auto x = RandomElement::real_vectors(dim, flat);
    const auto k = gen::partition(rng, n, 3);
    const auto m = conditional_expectation(s, x, k);
    for (const auto& phi : phis) {
      const auto loss = bregman_loss(phi, dim, 0.01, 4.0).without_closed_forms();
      for (const auto& block : k.blocks()) {
        const auto r = bayes_act(loss, WeightedStates::on_block(s, x, block));
        t.require(r.method == SolveMethod::Numeric, "numeric path taken");
        const auto target = m.value(block.front());
        for (std::size_t d = 0; d < dim; ++d) t.near(r.action[d], target[d], 1e-6, "argmin = block mean");
      }
    }
  }
}

void kl_bridge(Tally& t) {
  gen::Rng rng(105);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t ny = 2 + gen::index(rng, 4), nz = 2 + gen::index(rng, 4);
    const auto tab = gen::table(rng, ny, nz, 1, rep % 2 == 1);  // Y is the first index, Z the second
    const auto b = gen::bind(tab);
    const auto z = sigma(b.space, nz, b.y);
    const auto law = conditional_expectation(b.space, symbols(ny, b.x), z);
    t.near(value(entropy(b.space, law, kl_loss(ny))), oracle::mutual_information_xy(tab), 1e-9, "H_KL = I_S");
  }
}

void pythagoras(Tally& t) {
  gen::Rng rng(106);
  const std::vector<ConvexGenerator> phis = {squared_norm(), negative_entropy(), exponential_sum()};
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + gen::index(rng, 9);
    const std::size_t dim = 1 + gen::index(rng, 3);
    const SampleSpace s(gen::simplex(rng, n, true));
    std::vector<double> xv(n * dim);
    for (auto& v : xv) v = gen::uniform(rng, 0.05, 3.0);
    const auto k = gen::partition(rng, n, 4);
    std::vector<double> per_block(k.block_count() * dim);
    for (auto& v : per_block) v = gen::uniform(rng, 0.05, 3.0);
    std::vector<double> yv(n * dim);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t d = 0; d < dim; ++d) yv[a * dim + d] = per_block[k.block_of(a) * dim + d];
    const auto& phi = phis[static_cast<std::size_t>(rep) % phis.size()];
    t.residual(check_pythagoras(s, RandomElement::real_vectors(dim, xv), phi, k, RandomElement::real_vectors(dim, yv)),
               1e-9, "Pythagoras");
  }
}

void belief(Tally& t) {
  gen::Rng rng(107);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + gen::index(rng, 6);
    const auto p = gen::simplex(rng, k, rep % 3 == 0);
    const auto q = gen::simplex(rng, k);
    std::vector<std::size_t> xs(k);
    for (std::size_t i = 0; i < k; ++i) xs[i] = i;
    const SampleSpace s(p);
    const auto x = symbols(k, xs);
    const auto belief = WeightedStates::categorical(q);

    const auto d = belief_decomposition(s, x, log_loss(k), belief);
    t.near(d.total.value(), (d.relative + d.entropy_term).value(), 1e-9, "log: total = relative + entropy");
    t.near(d.total.value(), oracle::cross_entropy(p, q), 1e-9, "log: cross-entropy");
    t.near(d.relative.value(), oracle::kl(p, q), 1e-9, "log: KL");
    t.near(d.entropy_term.value(), oracle::shannon(p), 1e-9, "log: Shannon");

    const double gamma = gen::uniform(rng, 1.2, 3.5);
    const auto ts = belief_decomposition(s, x, tsallis_score(k, gamma), belief);
    t.near(ts.total.value(), (ts.relative + ts.entropy_term).value(), 1e-9, "tsallis: total = relative + entropy");
    t.residual(std::max(0.0, -ts.relative.value()), 1e-9, "tsallis: relative >= 0");
  }
}

void witnesses(Tally& t) {
  const std::vector<double> ns = {1, 10, 100};
  const auto g = UniformGrid::spanning(-8, 8, 4001);
  const auto f = GridDensity::sample(g, [](double x) {
    return std::exp(-0.5 * (x - 0.4) * (x - 0.4)) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  });
  for (double n : ns) {
    const double analytic = -std::log(n / std::sqrt(std::numbers::pi));
    t.near(logloss_witness_value(n), analytic, 0.0, "log witness exact");
    t.near(logloss_witness_quadrature(f, n), analytic, 1e-6, "log witness quadrature");
  }
  for (double n : {1.0, 10.0, 100.0, 1000.0, 1e4}) {
    for (double x : {-3.0, 0.0, 0.25, 7.0}) t.near(hyvarinen_witness_score(n, x, x), -0.5, 1e-9, "score at x");
  }
  const std::vector<double> ladder_n = {10, 30, 100, 300, 1000};
  for (auto family : {WitnessFamily::GaussianLogLoss, WitnessFamily::ShiftedGaussianHyvarinen}) {
    const auto ladder = demonstrate_entropy_divergence(family, ladder_n);
    for (std::size_t i = 1; i < ladder.size(); ++i) {
      t.require(ladder[i].risk_upper_bound < ladder[i - 1].risk_upper_bound, "ladder strictly decreasing");
    }
  }
}

void continuous(Tally& t) {
  for (double rho : {0.3, 0.5, 0.8}) {
    const auto joint = bivariate_gaussian(rho, 201);
    t.near(continuous_information(joint), oracle::gaussian_mi(rho), 2e-3, "Gaussian MI");
    t.near(hyvarinen_information(joint), oracle::gaussian_hyvarinen_information(rho), 5e-3, "Hyvarinen information");
  }
  const auto g = UniformGrid::spanning(-5, 5, 201);
  const auto product = GridDensity2D::sample(g, g, [](double x, double y) {
    return std::exp(-0.5 * (x - 1) * (x - 1)) * (1.0 + 0.5 * std::tanh(x)) * std::exp(-0.25 * y * y);
  });
  t.near(continuous_information(product), 0.0, 1e-9, "product density MI");
  t.near(continuous_information(bivariate_gaussian(0.0, 201)), 0.0, 1e-9, "rho = 0 MI");
}

void divergence_forms(Tally& t) {
  gen::Rng rng(110);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t nx = 2 + gen::index(rng, 3), ny = 2 + gen::index(rng, 3), nz = 1 + gen::index(rng, 3);
    const auto tab = gen::table(rng, nx, ny, nz, rep % 2 == 0);
    const auto b = gen::bind(tab);
    const auto x = symbols(nx, b.x);
    const auto y = sigma(b.space, ny, b.y);
    const auto z = sigma(b.space, nz, b.z);
    for (const auto& loss : {log_loss(nx), tsallis_score(nx, gen::uniform(rng, 1.2, 3.5))}) {
      t.near(entropy_as_divergence(b.space, x, loss).value(), value(entropy(b.space, x, loss)), 1e-9, "H");
      t.near(conditional_entropy_as_divergence(b.space, x, loss, y).value(),
             value(conditional_entropy(b.space, x, loss, y)), 1e-9, "H(X|Y)");
      t.near(information_as_divergence(b.space, x, loss, y).value(), value(information(b.space, x, loss, y)), 1e-9,
             "I(X;Y)");
      t.near(conditional_information_as_divergence(b.space, x, loss, z, y).value(),
             value(conditional_information(b.space, x, loss, z, y)), 1e-9, "I(X;Y|Z)");
    }
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "shannon-equivalence", 10, shannon_equivalence},
      {2, "variance-equivalence", 5, variance_equivalence},
      {3, "refinement-lattice-sweep", 60, lattice_sweep},
      {4, "numeric-bregman-bayes-act", 30, numeric_bregman},
      {5, "kl-bregman-bridge", 5, kl_bridge},
      {6, "pythagorean-decomposition", 10, pythagoras},
      {7, "belief-decomposition", 5, belief},
      {8, "entropy-divergence-witnesses", 5, witnesses},
      {9, "continuous-information", 30, continuous},
      {10, "divergence-forms", 10, divergence_forms},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Tally tally;
    std::string error;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(tally);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds < c.budget_seconds;
    const bool pass = error.empty() && tally.passed() && in_budget;
    failed += pass ? 0 : 1;
    std::printf("%s  %2d %-30s checks=%-6zu max_residual=%-9s time=%.2fs/%gs", pass ? "PASS" : "FAIL", c.id, c.name,
                tally.checks(), Tally::fmt(tally.worst()).c_str(), seconds, c.budget_seconds);
    if (!error.empty()) std::printf("  error: %s", error.c_str());
    if (tally.failures() > 0) std::printf("  %zu failed, first: %s", tally.failures(), tally.first_failure().c_str());
    if (!in_budget) std::printf("  over time budget");
    std::printf("\n");
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
