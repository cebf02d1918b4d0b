#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace smpp;

TEST(PairCount, Examples) {
  const std::vector<Point> xj{{0.01, 0.0}, {0.05, 0.0}};
  EXPECT_EQ(pair_count({0, 0}, xj, 0.02, false), 1.0);
  EXPECT_EQ(pair_count({0, 0}, xj, 0.02, true), 0.5);
  EXPECT_EQ(pair_count({0, 0}, {}, 0.02, false), 0.0);
  // closed ball
  EXPECT_EQ(pair_count({0, 0}, xj, 0.05, false), 2.0);
}

TEST(InteractionStatistic, StraussWithinTypeHalvesCancel) {
  const auto spec = fixture::strauss(1, 0.02, 0.02);
  const std::vector<Point> xi{{0, 0}, {0.015, 0}};
  EXPECT_EQ(*interaction_statistic(spec, xi, xi, 0, 0), 1.0);
}

TEST(InteractionStatistic, StraussHardCoreViolation) {
  const auto spec = fixture::strauss(2, 0.02, 0.04, 0.0, 0.02);
  const std::vector<Point> xi{{0, 0}}, xj{{0.015, 0}};
  EXPECT_FALSE(interaction_statistic(spec, xi, xj, 0, 1).has_value());
  // distance exactly r is allowed
  const std::vector<Point> xk{{0.02, 0}};
  EXPECT_TRUE(interaction_statistic(spec, xi, xk, 0, 1).has_value());
}

TEST(InteractionStatistic, GeyerAsymmetry) {
  const auto spec = fixture::geyer(2, 0.05, 0.05, 1.0);
  const std::vector<Point> xi{{0, 0}}, xj{{0.01, 0}, {0, 0.01}};
  EXPECT_EQ(*interaction_statistic(spec, xi, xj, 0, 1), 1.0);
  EXPECT_EQ(*interaction_statistic(spec, xj, xi, 1, 0), 2.0);
}

TEST(MarkovRange, Families) {
  EXPECT_EQ(markov_range(fixture::strauss(2, 0.02, 0.04)), 0.04);
  EXPECT_EQ(markov_range(fixture::geyer(2, 0.02, 0.04, 10)), 0.08);
  EXPECT_EQ(markov_range(fixture::strauss(1, 0.03, 0.03)), 0.03);
}

TEST(InteractionSpec, Validation) {
  EXPECT_THROW(InteractionSpec::strauss(Eigen::MatrixXd::Constant(2, 2, 0.02), Eigen::MatrixXd::Constant(2, 2, 0.03)),
               InputError);
  EXPECT_THROW(InteractionSpec::geyer(Eigen::MatrixXd::Constant(2, 2, 0.02), Eigen::MatrixXd::Zero(2, 2)), InputError);
  EXPECT_THROW(InteractionSpec::strauss(Eigen::MatrixXd::Constant(2, 3, 0.02)), InputError);
  EXPECT_THROW(interaction_family_from_string("area"), InputError);
}

TEST(LocalContribution, WithinTypeStraussExample) {
  const auto m = fixture::model(1, fixture::strauss(1, 0.02, 0.02));
  const auto y = fixture::pattern({{{0, 0}, 0}, {{0.015, 0}, 0}}, 1, 1.0);
  const auto lc = local_contribution(m, y, {0.0075, 0}, 0);
  ASSERT_TRUE(lc.feasible);
  EXPECT_EQ(lc.v[m.layout().interaction(0, 0)], 2.0);
  EXPECT_EQ(lc.v[m.layout().covariate(0, 0)], 1.0);
}

TEST(LocalContribution, StackingOrderAndNames) {
  const Rect r{0, 1, 0, 1};
  const auto m = fixture::model(3, fixture::strauss(3, 0.02, 0.04), {{"z", fixture::wave_field(r)}});
  const std::vector<std::string> expect{"1:intercept", "1:z", "g11", "g12", "g13", "2:intercept", "2:z", "g22",
                                        "g21",         "g23", "3:intercept", "3:z", "g33", "g31", "g32"};
  EXPECT_EQ(m.parameter_names(), expect);
}

namespace {

void brute_force_check(const StatisticModel& m, std::uint64_t seed, int patterns) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(0, 8);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::uniform_int_distribution<int> type(0, m.types() - 1);
  int checked = 0, infeasible = 0;
  for (int rep = 0; rep < patterns; ++rep) {
    std::vector<MarkedPoint> pts;
    const int n = count(rng);
    for (int a = 0; a < n; ++a) pts.push_back({{u(rng), u(rng)}, type(rng)});
    if (!oracle::full_statistic(m, pts)) continue;  // only feasible configurations
    const auto y = MarkedPointPattern(pts, Window(Rect{0, 0.2, 0, 0.2}), m.types());
    const NeighborIndex idx(y, markov_range(m.interaction));
    // at existing points (remove-then-add) and at fresh locations
    std::vector<std::pair<Point, int>> queries;
    for (const auto& pt : pts) queries.emplace_back(pt.location, type(rng));
    queries.emplace_back(Point{u(rng), u(rng)}, type(rng));
    for (const auto& [q, t] : queries) {
      const auto lc = local_contribution(m, idx, q, t);
      const auto ref = oracle::local_by_difference(m, pts, q, t);
      ASSERT_EQ(lc.feasible, ref.has_value());
      ++checked;
      if (!ref) {
        ++infeasible;
        continue;
      }
      ASSERT_LE((lc.v - *ref).lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
  EXPECT_GT(checked, patterns);
}

}  // namespace

TEST(LocalContribution, StraussHardcoreMatchesFullStatisticDifferences) {
  const Rect r{0, 0.2, 0, 0.2};
  auto spec = InteractionSpec::strauss((Eigen::MatrixXd(2, 2) << 0.05, 0.07, 0.06, 0.04).finished(),
                                       (Eigen::MatrixXd(2, 2) << 0.01, 0.02, 0.0, 0.015).finished());
  brute_force_check(fixture::model(2, spec, {{"z", fixture::wave_field(r, 8)}}), 1, 300);
}

TEST(LocalContribution, GeyerMatchesFullStatisticDifferences) {
  auto spec = InteractionSpec::geyer((Eigen::MatrixXd(2, 2) << 0.05, 0.07, 0.06, 0.04).finished(),
                                     (Eigen::MatrixXd(2, 2) << 1.0, 1.5, 2.0, 0.5).finished());
  brute_force_check(fixture::model(2, spec), 2, 300);
  brute_force_check(fixture::model(3, fixture::geyer(3, 0.06, 0.08, 1.0)), 3, 200);
}

TEST(LocalContribution, FiniteRange) {
  for (const auto& spec : {fixture::strauss(2, 0.02, 0.04, 0.005, 0.01), fixture::geyer(2, 0.02, 0.04, 1.0)}) {
    const auto m = fixture::model(2, spec);
    std::mt19937_64 rng(9);
    const auto pts = oracle::random_points(rng, 150, 2);
    std::vector<MarkedPoint> clean;
    for (const auto& pt : pts) {
      auto trial = clean;
      trial.push_back(pt);
      if (oracle::full_statistic(m, trial)) clean = trial;
    }
    const Point u{0.5, 0.5};
    const double R = markov_range(spec);
    const auto base = local_contribution(m, fixture::pattern(clean, 2), u, 0);
    auto far = clean;
    std::erase_if(far, [&](const MarkedPoint& q) { return oracle::dist2(q.location, {0.5 + R + 1e-9, 0.5}) < 1e-6; });
    far.push_back({{0.5 + R + 1e-9, 0.5}, 1});
    const auto after = local_contribution(m, fixture::pattern(far, 2), u, 0);
    EXPECT_EQ(base.feasible, after.feasible);
    EXPECT_EQ(base.v, after.v);
  }
}

TEST(LocalContribution, GeyerComponentsBounded) {
  const auto spec = fixture::geyer(2, 0.05, 0.05, 1.5);
  const auto m = fixture::model(2, spec);
  std::mt19937_64 rng(4);
  const auto y = fixture::pattern(oracle::random_points(rng, 400, 2), 2);
  const NeighborIndex idx(y, markov_range(spec));
  const auto lay = m.layout();
  for (int q = 0; q < 200; ++q) {
    const Point u = y[q].location;
    const auto lc = local_contribution(m, idx, u, y[q].type);
    const auto nb = static_cast<double>(idx.neighbors_within(u, 0.05).size());
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double v = lc.v[lay.interaction(i, j)];
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 2.0 * 1.5 * (1.0 + nb));
      }
    }
  }
}
