#include "fixtures.hpp"
#include "oracles.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <map>

using namespace smpp;

namespace {

ModelSpec make_spec(StatisticModel stats, double phi0, const Rect& r = {0, 1, 0, 1}) {
  ModelSpec s;
  s.stats = std::move(stats);
  s.reparam = ReparamMap::identity(s.stats.parameter_names());
  s.baseline = *fixture::constant_field(phi0, r);
  return s;
}

double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& expected, int lost_df = 1) {
  double stat = 0.0;
  for (std::size_t b = 0; b < observed.size(); ++b) {
    stat += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
  }
  const boost::math::chi_squared_distribution<double> chi(static_cast<double>(observed.size()) - lost_df);
  return boost::math::cdf(boost::math::complement(chi, stat));
}

}  // namespace

TEST(PoissonSampler, ZeroIntensityGivesEmptyPattern) {
  const std::vector<IntensityFn> f{[](const Point&) { return 0.0; }};
  const std::vector<double> dom{0.0};
  EXPECT_EQ(sample_poisson_multitype(fixture::unit_window(), f, dom, 1).size(), 0u);
}

TEST(PoissonSampler, ConstantIntensityCountMean) {
  const std::vector<IntensityFn> f{[](const Point&) { return 50.0; }, [](const Point&) { return 20.0; }};
  const std::vector<double> dom{50.0, 20.0};
  const Window w(Rect{0, 2, 0, 1});
  double total = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(sample_poisson_multitype(w, f, dom, s).size());
  const double expect = 70.0 * 2.0;
  EXPECT_LT(std::abs(total / seeds - expect), 3.0 * std::sqrt(expect / seeds));
}

TEST(PoissonSampler, InhomogeneousCellCounts) {
  const Rect r{0, 1, 0, 1};
  auto stats = fixture::model(1, fixture::strauss(1, 0.01, 0.01), {{"z", fixture::wave_field(r, 4)}});
  auto spec = make_spec(stats, 200.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(stats.layout().dimension());
  g[1] = 1.0;
  std::vector<double> obs(16, 0.0), expect(16, 0.0);
  const auto grid = GridGeometry::covering(r, 4, 4);
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s) {
    const auto y = sample_poisson_model(spec, g, fixture::unit_window(), s);
    for (const auto& pt : y.points()) {
      obs[RasterField::constant(grid, 0).cell_index(pt.location)] += 1.0;
    }
  }
  for (std::size_t c = 0; c < 16; ++c) {
    expect[c] = seeds * 200.0 * std::exp(stats.covariates[0].fields[0].field->values()[c]) / 16.0;
  }
  EXPECT_GT(chi_square_pvalue(obs, expect, 0), 0.01);
}

TEST(PoissonSampler, DominatingConstantExceeded) {
  const std::vector<IntensityFn> f{[](const Point& u) { return u.x > 0.5 ? 100.0 : 1.0; }};
  const std::vector<double> dom{50.0};
  EXPECT_THROW(sample_poisson_multitype(fixture::unit_window(), f, dom, 1), SimulationError);
}

TEST(BirthDeath, ReproducibleAndHardCoreRespected) {
  auto spec = make_spec(fixture::model(2, fixture::strauss(2, 0.03, 0.04, 0.02, 0.015)), 400.0);
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.stats.layout().dimension());
  ChainConfig cfg;
  cfg.seed = 17;
  cfg.steps = 50000;
  const auto a = sample_gibbs_mh(spec, g, fixture::unit_window(), cfg);
  const auto b = sample_gibbs_mh(spec, g, fixture::unit_window(), cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t n = 0; n < a.size(); ++n) EXPECT_EQ(a[n].location, b[n].location);
  for (std::size_t x = 0; x < a.size(); ++x) {
    for (std::size_t y = x + 1; y < a.size(); ++y) {
      const double core = a[x].type == a[y].type ? 0.02 : 0.015;
      EXPECT_GE(std::sqrt(oracle::dist2(a[x].location, a[y].location)), core);
    }
  }
  EXPECT_GT(a.size(), 100u);
}

TEST(BirthDeath, InfeasibleInitialStateAndUnstableModel) {
  auto spec = make_spec(fixture::model(1, fixture::strauss(1, 0.05, 0.05, 0.02, 0.02)), 100.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.stats.layout().dimension());
  ChainConfig cfg;
  cfg.initial_points = std::vector<MarkedPoint>{{{0.5, 0.5}, 0}, {{0.51, 0.5}, 0}};
  EXPECT_THROW(BirthDeathChain(spec, g, fixture::unit_window(), cfg), SimulationError);

  auto plain = make_spec(fixture::model(1, fixture::strauss(1, 0.05, 0.05)), 100.0);
  g[1] = 2.0;  // attractive Strauss without hard core
  ChainConfig unstable;
  unstable.lambda_bound = 500.0;
  unstable.steps = 200000;
  EXPECT_THROW(sample_gibbs_mh(plain, g, fixture::unit_window(), unstable), SimulationError);
  ChainConfig capped;
  capped.max_points = 2000;
  capped.steps = 200000;
  EXPECT_THROW(sample_gibbs_mh(plain, g, fixture::unit_window(), capped), SimulationError);
}

TEST(BirthDeath, DiscreteSitesMatchEnumeratedDensity) {
  // Three candidate sites, two types: 27 configurations.
  const std::vector<Point> sites{{0.40, 0.40}, {0.43, 0.40}, {0.40, 0.46}};
  auto stats = fixture::model(2, fixture::strauss(2, 0.05, 0.05, 0.0, 0.035));
  auto spec = make_spec(stats, 0.8);
  const auto lay = stats.layout();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(lay.dimension());
  g[lay.covariate(1, 0)] = 0.4;
  g[lay.interaction(0, 0)] = std::log(0.3);
  g[lay.interaction(1, 1)] = std::log(2.0);
  g[lay.interaction(0, 1)] = std::log(0.7);

  std::map<std::vector<int>, double> target;
  double z = 0.0;
  for (int code = 0; code < 27; ++code) {
    std::vector<int> state{code % 3, (code / 3) % 3, code / 9};
    std::vector<MarkedPoint> pts;
    for (int s = 0; s < 3; ++s) {
      if (state[s]) pts.push_back({sites[s], state[s] - 1});
    }
    const auto v = oracle::full_statistic(stats, pts);
    const double f = v ? std::pow(0.8, static_cast<double>(pts.size())) * std::exp(g.dot(*v)) : 0.0;
    target[state] = f;
    z += f;
  }
  ChainConfig cfg;
  cfg.seed = 5;
  cfg.sites = sites;
  cfg.lambda_bound = 100.0;
  BirthDeathChain chain(spec, g, fixture::unit_window(), cfg);
  std::map<std::vector<int>, double> visits;
  const int steps = 1000000;
  chain.run(10000);
  for (int s = 0; s < steps; ++s) {
    chain.step();
    visits[chain.site_states()] += 1.0;
  }
  const std::size_t visited = visits.size();
  double tv = 0.0;
  for (const auto& [state, f] : target) tv += std::abs(f / z - visits[state] / steps);
  EXPECT_LE(0.5 * tv, 0.02);
  EXPECT_EQ(visited, static_cast<std::size_t>(std::count_if(target.begin(), target.end(), [](const auto& kv) {
              return kv.second > 0.0;
            })));
}

TEST(BirthDeath, PoissonTargetCountDistribution) {
  auto spec = make_spec(fixture::model(2, fixture::strauss(2, 0.02, 0.04)), 12.0);
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.stats.layout().dimension());
  const double mean = 24.0;
  std::vector<double> counts;
  for (int c = 0; c < 200; ++c) {
    ChainConfig cfg;
    cfg.seed = 1000 + c;
    cfg.init = ChainInit::Empty;
    counts.push_back(static_cast<double>(sample_gibbs_mh(spec, g, fixture::unit_window(), cfg).size()));
  }
  // bins with expected count >= 5 under Poisson(24)
  const std::vector<int> edges{0, 18, 21, 24, 27, 30, 1000};
  std::vector<double> obs(edges.size() - 1, 0.0), expect(edges.size() - 1, 0.0);
  for (const double n : counts) {
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      if (n >= edges[b] && n < edges[b + 1]) obs[b] += 1.0;
    }
  }
  double pk = std::exp(-mean);
  for (int k = 0; k < 1000; ++k) {
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      if (k >= edges[b] && k < edges[b + 1]) expect[b] += pk * counts.size();
    }
    pk *= mean / (k + 1);
  }
  EXPECT_GT(chi_square_pvalue(obs, expect), 0.01);
}

namespace {

double mean_close_pairs(const ModelSpec& spec, const Eigen::VectorXd& g, int chains, double r) {
  double total = 0.0;
  for (int c = 0; c < chains; ++c) {
    ChainConfig cfg;
    cfg.seed = 300 + c;
    cfg.steps = 20000;
    const auto y = sample_gibbs_mh(spec, g, fixture::unit_window(), cfg);
    for (std::size_t a = 0; a < y.size(); ++a) {
      for (std::size_t b = a + 1; b < y.size(); ++b) {
        if (y[a].type == y[b].type && oracle::dist2(y[a].location, y[b].location) <= r * r) total += 1.0;
      }
    }
  }
  return total / chains;
}

}  // namespace

TEST(BirthDeath, InteractionSignShowsInClosePairs) {
  auto spec = make_spec(fixture::model(2, fixture::strauss(2, 0.05, 0.05)), 60.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.stats.layout().dimension());
  const double poisson = mean_close_pairs(spec, g, 50, 0.05);
  const auto lay = spec.stats.layout();
  g[lay.interaction(0, 0)] = g[lay.interaction(1, 1)] = std::log(0.8);
  const double repulsive = mean_close_pairs(spec, g, 50, 0.05);
  g[lay.interaction(0, 0)] = g[lay.interaction(1, 1)] = std::log(0.5);
  const double stronger = mean_close_pairs(spec, g, 50, 0.05);
  EXPECT_LT(repulsive, poisson);
  EXPECT_LT(stronger, repulsive);
}

TEST(BirthDeath, GeyerWithCrossInteractionRuns) {
  auto spec = make_spec(fixture::model(2, fixture::geyer(2, 0.03, 0.04, 2.0)), 150.0);
  const auto lay = spec.stats.layout();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(lay.dimension());
  g[lay.interaction(0, 0)] = std::log(1.3);
  g[lay.interaction(0, 1)] = g[lay.interaction(1, 0)] = std::log(0.7);
  ChainConfig cfg;
  cfg.steps = 40000;
  const auto y = sample_gibbs_mh(spec, g, fixture::unit_window(), cfg);
  EXPECT_GT(y.size(), 100u);
  EXPECT_LT(y.size(), 1000u);
}
