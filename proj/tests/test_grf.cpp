#include "smpp/grf.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace smpp;

TEST(Grf, CovarianceAtZeroLag) {
  GrfSpec s;
  s.sigma2 = 0.2;
  s.phi = 0.1;
  EXPECT_EQ(exponential_covariance(s, {0.3, 0.3}, {0.3, 0.3}), 0.2);
  EXPECT_NEAR(exponential_covariance(s, {0, 0}, {0.1, 0}), 0.2 * std::exp(-1.0), 1e-15);
}

TEST(Grf, SeedReproducibleAndTruncated) {
  GrfSpec s{350.0, 900.0, 0.1, GridGeometry::covering({0, 2, 0, 2}, 16, 16), true};
  const auto a = simulate_grf(s, 42);
  const auto b = simulate_grf(s, 42);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), simulate_grf(s, 43).values());
  GrfSpec t{-5.0, 1.0, 0.1, GridGeometry::covering({0, 1, 0, 1}, 8, 8), true};
  EXPECT_GE(simulate_grf(t, 1).min_value(), 0.0);
}

TEST(Grf, RejectsLargeGridsAndBadParameters) {
  GrfSpec s{0.0, 1.0, 0.1, GridGeometry::covering({0, 1, 0, 1}, 101, 100), false};
  EXPECT_THROW(GrfSampler{s}, InputError);
  s.grid = GridGeometry::covering({0, 1, 0, 1}, 4, 4);
  s.sigma2 = 0.0;
  EXPECT_THROW(GrfSampler{s}, InputError);
}

TEST(Grf, LagCorrelationAndMean) {
  // Cells 0.1 apart along x: correlation exp(-1).
  GrfSpec s{0.0, 0.2, 0.1, GridGeometry::covering({0, 1, 0, 0.1}, 10, 1), false};
  const GrfSampler sampler(s);
  double sxy = 0.0, sxx = 0.0, syy = 0.0, mean = 0.0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    const auto f = sampler.draw(static_cast<std::uint64_t>(seed));
    const double a = f.at(3, 0), b = f.at(4, 0);
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
    for (const double v : f.values()) mean += v;
  }
  EXPECT_NEAR(sxy / std::sqrt(sxx * syy), std::exp(-1.0), 0.03);
  mean /= n * 10.0;
  EXPECT_NEAR(mean, 0.0, 3.0 * std::sqrt(0.2 / n));
}

TEST(Grf, SampleMeanOn64Grid) {
  GrfSpec s{350.0, 900.0, 0.1, GridGeometry::covering({0, 2, 0, 2}, 64, 64), false};
  const GrfSampler sampler(s);
  // The spatial mean of one field has variance close to sigma2 times the
  // average correlation; compare the across-seed mean against its own SE.
  std::vector<double> means;
  for (int seed = 0; seed < 500; ++seed) {
    const auto f = sampler.draw(static_cast<std::uint64_t>(seed) + 1000);
    double m = 0.0;
    for (const double v : f.values()) m += v;
    means.push_back(m / static_cast<double>(f.values().size()));
  }
  double mu = 0.0;
  for (const double m : means) mu += m;
  mu /= means.size();
  double var = 0.0;
  for (const double m : means) var += (m - mu) * (m - mu);
  var /= (means.size() - 1);
  EXPECT_LT(std::abs(mu - 350.0), 3.0 * std::sqrt(var / means.size()));
}
