// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "lossinfo/continuous.hpp"
#include "oracles.hpp"

using namespace lossinfo;

namespace {

double standard_normal(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

GridDensity2D product_density(std::size_t nodes) {
  const auto g = UniformGrid::spanning(-5, 5, nodes);
  // A skewed X marginal times a normal Y marginal.
  return GridDensity2D::sample(g, g, [](double x, double y) {
    return std::exp(-0.5 * (x - 1) * (x - 1)) * (1.0 + 0.5 * std::tanh(x)) * standard_normal(y);
  });
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(GridDensity, Validation) {
  const auto g = UniformGrid::spanning(0, 1, 11);
  EXPECT_NO_THROW(GridDensity(g, std::vector<double>(11, 1.0)));
  EXPECT_THROW(GridDensity(g, std::vector<double>(11, 1.1)), InvalidArgument);
  EXPECT_THROW(GridDensity(g, std::vector<double>(10, 1.0)), InvalidArgument);
  std::vector<double> neg(11, 1.0);
  neg[3] = -1e-3;
  EXPECT_THROW(GridDensity(g, neg), InvalidArgument);
  EXPECT_THROW(GridDensity::sample(g, [](double) { return 0.0; }), InvalidArgument);
  EXPECT_NEAR(GridDensity::sample(g, [](double x) { return x * x; }).integral(), 1.0, 1e-15);
  EXPECT_THROW(UniformGrid::spanning(1, 0, 5), InvalidArgument);
}

TEST(Trapezoid, ExactForLinearFunctions) {
  const auto g = UniformGrid::spanning(0, 2, 5);
  std::vector<double> v(5);
  for (std::size_t i = 0; i < 5; ++i) v[i] = 3.0 * g.node(i) + 1.0;
  EXPECT_DOUBLE_EQ(trapezoid(v, g.step), 8.0);
}

TEST(Witness, DensitiesIntegrateToOne) {
  for (double n : {0.5, 1.0, 10.0, 100.0, 1000.0}) {
    for (auto family : {WitnessFamily::GaussianLogLoss, WitnessFamily::ShiftedGaussianHyvarinen}) {
      EXPECT_NEAR(witness_density(family, n, 0.3).integral(), 1.0, 1e-6) << n;
    }
  }
}

TEST(Witness, LogLossValueExamples) {
  EXPECT_NEAR(logloss_witness_value(std::sqrt(std::numbers::pi)), 0.0, 1e-15);
  EXPECT_NEAR(logloss_witness_value(std::numbers::e * std::sqrt(std::numbers::pi)), -1.0, 1e-15);
  EXPECT_NEAR(logloss_witness_value(10.0), -1.7302, 5e-5);
  EXPECT_EQ(logloss_witness_value(10.0), -std::log(10.0 / std::sqrt(std::numbers::pi)));
  EXPECT_THROW(logloss_witness_value(0.0), InvalidArgument);
  EXPECT_THROW(logloss_witness_value(-1.0), InvalidArgument);
}

TEST(Witness, LogLossQuadratureMatchesForAnyTestDensity) {
  const auto g = UniformGrid::spanning(-8, 8, 2001);
  const auto normal = GridDensity::sample(g, standard_normal);
  const auto bimodal =
      GridDensity::sample(g, [](double x) { return standard_normal(x - 2) + 0.5 * standard_normal(2 * (x + 3)); });
  for (double n : {1.0, 10.0, 100.0}) {
    EXPECT_NEAR(logloss_witness_quadrature(normal, n), logloss_witness_value(n), 1e-6) << n;
    EXPECT_NEAR(logloss_witness_quadrature(bimodal, n), logloss_witness_value(n), 1e-6) << n;
  }
}

TEST(Witness, LogLossStrictlyDecreasingAndUnbounded) {
  double previous = std::numeric_limits<double>::infinity();
  for (double n = 1.0; n <= 1e6; n *= 2.0) {
    const double v = logloss_witness_value(n);
    EXPECT_LT(v, previous) << n;
    previous = v;
  }
  EXPECT_LT(previous, -12.0);
}

TEST(Witness, HyvarinenScoreAtCentreIsMinusHalf) {
  for (double n : {0.1, 1.0, 3.0, 10.0, 100.0, 1e4}) {
    for (double x : {-2.0, 0.0, 5.5}) EXPECT_NEAR(hyvarinen_witness_score(n, x, x), -0.5, 1e-9) << n;
  }
}

TEST(Witness, HyvarinenAnalyticDerivativesMatchFiniteDifferences) {
  for (double n : {1.0, 3.0, 10.0}) {
    const double h = 1e-4 / n;
    for (double xi : {-0.1, 0.0, 0.05}) {
      const double lp = std::log(shifted_gaussian_witness(n, 0, xi + h));
      const double lm = std::log(shifted_gaussian_witness(n, 0, xi - h));
      EXPECT_NEAR(hyvarinen_witness_score(n, 0, xi), (lp - lm) / (2 * h), 1e-5 * n * n);
      const double fp = shifted_gaussian_witness(n, 0, xi + h);
      const double f0 = shifted_gaussian_witness(n, 0, xi);
      const double fm = shifted_gaussian_witness(n, 0, xi - h);
      EXPECT_NEAR(hyvarinen_witness_laplacian(n, 0, xi), (fp - 2 * f0 + fm) / (h * h), 1e-4 * n * n * n);
    }
  }
}

TEST(DemonstrateEntropyDivergence, LogLossLadder) {
  const std::vector<double> ns = {1, 10, 100};
  const auto ladder = demonstrate_entropy_divergence(WitnessFamily::GaussianLogLoss, ns);
  ASSERT_EQ(ladder.size(), 3u);
  EXPECT_GT(ladder[0].risk_upper_bound, ladder[1].risk_upper_bound);
  EXPECT_GT(ladder[1].risk_upper_bound, ladder[2].risk_upper_bound);
  const std::vector<double> one = {7.5};
  EXPECT_EQ(demonstrate_entropy_divergence(WitnessFamily::GaussianLogLoss, one)[0].risk_upper_bound,
            logloss_witness_value(7.5));
}

TEST(DemonstrateEntropyDivergence, HyvarinenLadderDecreasesPastThreshold) {
  const std::vector<double> ns = {10, 20, 50, 100, 200, 1000};
  const auto ladder = demonstrate_entropy_divergence(WitnessFamily::ShiftedGaussianHyvarinen, ns);
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    EXPECT_LT(ladder[i].risk_upper_bound, ladder[i - 1].risk_upper_bound) << ns[i];
  }
  // The pointwise witness loss is the same at every x, so the expectation is that constant.
  EXPECT_NEAR(ladder.back().risk_upper_bound, hyvarinen_witness_loss(1000), 1e-6 * std::abs(hyvarinen_witness_loss(1000)));
}

TEST(DemonstrateEntropyDivergence, Errors) {
  const std::vector<double> descending = {10, 1};
  EXPECT_THROW(demonstrate_entropy_divergence(WitnessFamily::GaussianLogLoss, descending), InvalidArgument);
  const auto coarse = GridDensity::sample(UniformGrid::spanning(-8, 8, 161), standard_normal);  // step 0.1
  const std::vector<double> ok = {2.0}, too_fine = {2.0, 5.0};
  EXPECT_NO_THROW(demonstrate_entropy_divergence(WitnessFamily::GaussianLogLoss, ok, coarse));
  EXPECT_THROW(demonstrate_entropy_divergence(WitnessFamily::GaussianLogLoss, too_fine, coarse), InvalidArgument);
  EXPECT_THROW(parse_family("gauss"), InvalidArgument);
  EXPECT_EQ(parse_family("shifted_gaussian_hyvarinen"), WitnessFamily::ShiftedGaussianHyvarinen);
}

TEST(ContinuousEntropy, IsInfiniteWithEvidence) {
  const std::vector<double> ns = {1, 10, 100};
  const auto h = continuous_entropy(WitnessFamily::GaussianLogLoss, ns);
  EXPECT_TRUE(h.value.is_pos_inf());
  EXPECT_EQ(h.evidence.size(), 3u);
}

TEST(ContinuousInformation, ProductDensityIsZero) {
  EXPECT_NEAR(continuous_information(product_density(201)), 0.0, 1e-9);
  EXPECT_NEAR(continuous_information(bivariate_gaussian(0.0)), 0.0, 1e-9);
}

TEST(ContinuousInformation, GaussianBenchmark) {
  for (double rho : {0.3, 0.5, 0.8, -0.6}) {
    EXPECT_NEAR(continuous_information(bivariate_gaussian(rho)), oracle::gaussian_mi(rho), 2e-3) << rho;
  }
  EXPECT_NEAR(continuous_information(bivariate_gaussian(0.5)), 0.1438, 1e-4);
}

TEST(ContinuousInformation, DeterministicTwoBinCoarsening) {
  // X uniform on [0, 1]; Y uniform on the same half of [0, 1] as X. Knowing
  // Y pins down which half X is in and nothing else, like a 2-bin partition.
  // An even node count keeps 1/2 off the grid.
  const auto g = UniformGrid::spanning(0, 1, 200);
  const auto joint = GridDensity2D::sample(g, g, [](double x, double y) { return (x < 0.5) == (y < 0.5) ? 2.0 : 0.0; });
  const std::vector<double> bins = {0.5, 0.5};
  EXPECT_NEAR(continuous_information(joint), oracle::shannon(bins), 1e-3);
}

TEST(ContinuousInformation, NonNegativeOnRandomMixtures) {
  const auto g = UniformGrid::spanning(-6, 6, 121);
  for (int t = 0; t < 10; ++t) {
    const double shift = 0.3 * t;
    const auto joint = GridDensity2D::sample(g, g, [&](double x, double y) {
      return standard_normal(x - shift) * standard_normal(y) + standard_normal(x + 1) * standard_normal(y - shift);
    });
    EXPECT_GE(continuous_information(joint), -1e-6);
  }
}

TEST(ContinuousInformation, SecondOrderGridConvergence) {
  // Nodes 201, 401, 801 on a fixed window halve h each time.
  const double i1 = continuous_information(bivariate_gaussian(0.5, 201));
  const double i2 = continuous_information(bivariate_gaussian(0.5, 401));
  const double i3 = continuous_information(bivariate_gaussian(0.5, 801));
  const double d1 = std::abs(i2 - i1);
  const double d2 = std::abs(i3 - i2);
  EXPECT_LT(d2, 4.0 * d1);
  EXPECT_GT(d1 / d2, 3.5);  // trapezoid error ratio approaches 4
}

TEST(ContinuousInformation, RejectsNonNormalizedInput) {
  const auto g = UniformGrid::spanning(0, 1, 11);
  EXPECT_THROW(GridDensity2D(g, g, std::vector<double>(121, 2.0)), InvalidArgument);
}

TEST(HyvarinenInformation, ProductDensityIsZero) {
  EXPECT_NEAR(hyvarinen_information(product_density(201)), 0.0, 1e-9);
}

TEST(HyvarinenInformation, GaussianScoreOracle) {
  for (double rho : {0.3, 0.5, 0.8}) {
    EXPECT_NEAR(hyvarinen_information(bivariate_gaussian(rho)), oracle::gaussian_hyvarinen_information(rho), 5e-3)
        << rho;
  }
}

TEST(HyvarinenInformation, ZeroInteriorDensityIsAnError) {
  const auto g = UniformGrid::spanning(0, 1, 200);
  const auto joint = GridDensity2D::sample(g, g, [](double x, double y) { return (x < 0.5) == (y < 0.5) ? 2.0 : 0.0; });
  EXPECT_THROW(hyvarinen_information(joint), InvalidArgument);
}

TEST(HyvarinenInformation, ConditionalSliceScaleInvariance) {
  const auto joint = bivariate_gaussian(0.6);
  const double step = joint.x_grid().step;
  for (std::size_t j = 0; j < joint.y_grid().size; j += 20) {
    const auto slice = joint.x_slice(j);
    const auto base = log_density_gradient(slice, step);
    // Powers of two scale exactly, so the gradient is bit-identical.
    for (double c : {0.25, 2.0, 1024.0, 0x1p-40}) {
      auto scaled = slice;
      for (auto& v : scaled) v *= c;
      EXPECT_TRUE(bit_equal(log_density_gradient(scaled, step), base)) << c;
    }
    // Other constants round on multiplication; the gradient moves by rounding only.
    for (double c : {0.3, 7.0, 1e5}) {
      auto scaled = slice;
      for (auto& v : scaled) v *= c;
      const auto g = log_density_gradient(scaled, step);
      for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], base[i], 1e-9 * (1.0 + std::abs(base[i])));
    }
  }
  // The library uses the unnormalized slice; normalizing it first gives the same information.
  const auto fy = joint.y_marginal();
  std::vector<double> normalized(joint.values().begin(), joint.values().end());
  for (std::size_t i = 0; i < joint.x_grid().size; ++i)
    for (std::size_t j = 0; j < joint.y_grid().size; ++j) normalized[i * joint.y_grid().size + j] /= fy[j];
  const auto marginal_score = log_density_gradient(joint.x_marginal(), step);
  std::vector<double> integrand(normalized.size());
  for (std::size_t j = 0; j < joint.y_grid().size; ++j) {
    std::vector<double> col(joint.x_grid().size);
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = normalized[i * joint.y_grid().size + j];
    const auto score = log_density_gradient(col, step);
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double d = score[i] - marginal_score[i];
      integrand[i * joint.y_grid().size + j] = joint(i, j) * d * d;
    }
  }
  EXPECT_NEAR(GridDensity2D::integrate(joint.x_grid(), joint.y_grid(), integrand), hyvarinen_information(joint),
              1e-9);
}

TEST(LogDensityGradient, EdgesAndZeros) {
  const std::vector<double> v = {0.0, 1.0, std::exp(1.0), std::exp(2.0), 0.0};
  const auto g = log_density_gradient(v, 1.0);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], 1.0);  // one-sided
  EXPECT_DOUBLE_EQ(g[2], 1.0);  // central
  EXPECT_DOUBLE_EQ(g[3], 1.0);  // one-sided
  EXPECT_EQ(g[4], 0.0);
}
