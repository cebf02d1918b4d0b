#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace smpp;

namespace {

LocalContribution lc_of(std::initializer_list<double> v, bool feasible = true) {
  LocalContribution lc;
  lc.v = Eigen::VectorXd(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (const double x : v) lc.v[k++] = x;
  lc.feasible = feasible;
  return lc;
}

}  // namespace

TEST(Reparam, ReferenceTypeContrast) {
  const auto m = fixture::model(2, fixture::strauss(2, 0.02, 0.04));
  ReparamConstraints c;
  c.reference_type = 1;
  const auto map = build_reparam(m, c);
  const auto lay = m.layout();
  EXPECT_EQ(map.dimension(), lay.dimension() - 1);
  EXPECT_TRUE(map.T.row(lay.covariate(1, 0)).isZero());
  EXPECT_EQ(map.beta_names.front(), "1:intercept");
}

TEST(Reparam, SymmetricCrossMerges) {
  const auto m = fixture::model(2, fixture::strauss(2, 0.02, 0.04));
  ReparamConstraints c;
  c.symmetric_cross = true;
  const auto map = build_reparam(m, c);
  const auto lay = m.layout();
  EXPECT_EQ(map.dimension(), lay.dimension() - 1);
  const auto col = std::find(map.beta_names.begin(), map.beta_names.end(), "g12") - map.beta_names.begin();
  EXPECT_EQ(map.T(lay.interaction(0, 1), col), 1.0);
  EXPECT_EQ(map.T(lay.interaction(1, 0), col), 1.0);
  EXPECT_EQ(std::count(map.beta_names.begin(), map.beta_names.end(), "g21"), 0);
}

TEST(Reparam, IdentityAndErrors) {
  const auto m = fixture::model(2, fixture::strauss(2, 0.02, 0.04));
  const auto map = build_reparam(m, {});
  EXPECT_TRUE(map.T.isIdentity());
  ReparamConstraints bad;
  bad.fixed = {"g99"};
  EXPECT_THROW(build_reparam(m, bad), InputError);
  ReparamConstraints all;
  all.fixed = m.parameter_names();
  EXPECT_THROW(build_reparam(m, all), RankDeficiencyError);
  ReparamConstraints ref;
  ref.reference_type = 5;
  EXPECT_THROW(build_reparam(m, ref), InputError);
}

TEST(TypeProbability, Examples) {
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, std::log(2.0));
  std::vector<LocalContribution> same{lc_of({1}), lc_of({1}), lc_of({1})};
  EXPECT_NEAR(type_probability(g, same)[1], 1.0 / 3.0, 1e-15);
  std::vector<LocalContribution> two{lc_of({1}), lc_of({0})};
  const auto pr = type_probability(g, two);
  EXPECT_NEAR(pr[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(pr[1], 1.0 / 3.0, 1e-15);
  std::vector<LocalContribution> none{lc_of({1}, false), lc_of({0}, false)};
  EXPECT_TRUE(type_probability(g, none).isZero());
}

TEST(TypeProbability, ShiftInvarianceAndOverflow) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd g(3);
    for (auto& x : g) x = n(rng);
    std::vector<LocalContribution> s{lc_of({n(rng), n(rng), 1.0}), lc_of({n(rng), n(rng), 1.0}),
                                     lc_of({n(rng), n(rng), 1.0})};
    const auto a = type_probability(g, s);
    Eigen::VectorXd shifted = g;
    shifted[2] += 700.0;  // same constant added to every logit
    EXPECT_LE((a - type_probability(shifted, s)).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(TypeProbability, InterceptShiftWithSharedCovariates) {
  const Rect r{0, 1, 0, 1};
  const auto m = fixture::model(3, fixture::strauss(3, 0.05, 0.05), {{"z", fixture::wave_field(r)}});
  std::mt19937_64 rng(2);
  const auto y = fixture::pattern(oracle::random_points(rng, 100, 3), 3);
  const NeighborIndex idx(y, 0.05);
  const auto lay = m.layout();
  Eigen::VectorXd g = Eigen::VectorXd::Random(lay.dimension());
  Eigen::VectorXd h = g;
  for (int i = 0; i < 3; ++i) {
    h[lay.covariate(i, 0)] += 0.7;
    h[lay.covariate(i, 1)] -= 1.3;
  }
  for (int q = 0; q < 20; ++q) {
    std::vector<LocalContribution> s;
    for (int l = 0; l < 3; ++l) s.push_back(local_contribution(m, idx, y[q].location, l));
    EXPECT_LE((type_probability(g, s) - type_probability(h, s)).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(ConditionalMoments, ScalarExample) {
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(1);
  std::vector<LocalContribution> s{lc_of({1}), lc_of({0})};
  const auto m = conditional_moments(g, s);
  EXPECT_DOUBLE_EQ(m.E[0], 0.5);
  EXPECT_DOUBLE_EQ(m.E2(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.V(0, 0), 0.25);
  std::vector<LocalContribution> none{lc_of({1}, false), lc_of({0}, false)};
  EXPECT_THROW(conditional_moments(g, none), InfeasibleDataError);
}

TEST(ConditionalMoments, ResidualIdentityAndPsd) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 1000; ++rep) {
    const int k = 4;
    Eigen::VectorXd g(k);
    for (auto& x : g) x = n(rng);
    std::vector<LocalContribution> s;
    for (int l = 0; l < 3; ++l) {
      LocalContribution lc;
      lc.v.resize(k);
      for (auto& x : lc.v) x = n(rng);
      lc.feasible = rep % 5 != 0 || l != 1;
      s.push_back(lc);
    }
    const auto m = conditional_moments(g, s);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(k);
    for (int l = 0; l < 3; ++l) total += m.probabilities[l] * m.residuals[l];
    EXPECT_LE(total.lpNorm<Eigen::Infinity>(), 1e-14);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.V);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(ConditionalIntensity, Basics) {
  const Rect r{0, 1, 0, 1};
  ModelSpec spec;
  spec.stats = fixture::model(2, fixture::strauss(2, 0.02, 0.04, 0.01, 0.01));
  spec.reparam = build_reparam(spec.stats, {});
  const auto y = fixture::pattern({{{0.5, 0.5}, 1}}, 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(spec.stats.layout().dimension());
  EXPECT_THROW(conditional_intensity(spec, zero, y, {0.2, 0.2}, 0), InputError);
  spec.baseline = *fixture::constant_field(1.0, r);
  EXPECT_EQ(conditional_intensity(spec, zero, y, {0.2, 0.2}, 0), 1.0);
  EXPECT_EQ(conditional_intensity(spec, zero, y, {0.505, 0.5}, 0), 0.0);  // hard core
  Eigen::VectorXd g = Eigen::VectorXd::Random(zero.size());
  const double base = conditional_intensity(spec, g, y, {0.52, 0.5}, 0);
  spec.baseline = *fixture::constant_field(3.5, r);
  EXPECT_NEAR(conditional_intensity(spec, g, y, {0.52, 0.5}, 0), 3.5 * base, 1e-12 * base);
}

TEST(LocalStability, StraussNonpositiveBound) {
  const Rect r{0, 1, 0, 1};
  ModelSpec spec;
  spec.stats = fixture::model(2, fixture::strauss(2, 0.05, 0.05), {{"z", fixture::wave_field(r)}});
  spec.reparam = build_reparam(spec.stats, {});
  spec.baseline = *fixture::wave_field(r);
  std::vector<double> v = spec.baseline->values();
  for (auto& x : v) x = 100.0 + 50.0 * x;
  spec.baseline = RasterField(spec.baseline->geometry(), v);
  const auto lay = spec.stats.layout();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(lay.dimension());
  g[lay.covariate(0, 1)] = 0.5;
  g[lay.interaction(0, 0)] = std::log(0.8);
  g[lay.interaction(0, 1)] = std::log(0.9);
  const auto bound = local_stability_bound(spec, g);
  ASSERT_TRUE(bound.has_value());
  std::mt19937_64 rng(3);
  const auto y = fixture::pattern(oracle::random_points(rng, 300, 2), 2);
  const NeighborIndex idx(y, 0.05);
  for (int q = 0; q < 500; ++q) {
    std::uniform_real_distribution<double> u(0, 1);
    EXPECT_LE(conditional_intensity(spec, g, idx, {u(rng), u(rng)}, q % 2), *bound);
  }
  g[lay.interaction(1, 1)] = 0.1;
  EXPECT_FALSE(local_stability_bound(spec, g).has_value());
}
