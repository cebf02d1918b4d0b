#pragma once

// Independent reference implementations used only by the test suites.
// They avoid the library's neighbour index, caches and stabilised sums.

#include "smpp/smpp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using smpp::MarkedPoint;
using smpp::Point;

inline double dist2(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Full stacked statistic of a configuration, by O(n^2) loops; nullopt when
/// a hard core is violated.
inline std::optional<Eigen::VectorXd> full_statistic(const smpp::StatisticModel& m,
                                                     const std::vector<MarkedPoint>& pts) {
  const auto lay = m.layout();
  const int p = m.types();
  const auto& spec = m.interaction;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(lay.dimension());
  for (const auto& a : pts) {
    Eigen::VectorXd z(m.covariates[a.type].size());
    m.covariates[a.type].evaluate(a.location, z);
    v.segment(lay.block_start(a.type), z.size()) += z;
  }
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (int j = 0; j < p; ++j) {
      const int i = pts[a].type;
      double count = 0.0;
      for (std::size_t b = 0; b < pts.size(); ++b) {
        if (b == a || pts[b].type != j) continue;
        const double d = std::sqrt(dist2(pts[a].location, pts[b].location));
        if (spec.family == smpp::InteractionFamily::StraussHardcore) {
          const double core = i == j ? spec.hardcore(i, i) : std::max(spec.hardcore(i, j), spec.hardcore(j, i));
          if (d < core) return std::nullopt;
        }
        if (d <= spec.range(i, j)) count += 1.0;
      }
      if (i == j) count *= 0.5;
      if (spec.family == smpp::InteractionFamily::GeyerSaturation) count = std::min(count, spec.saturation(i, j));
      v[lay.interaction(i, j)] += count;
    }
  }
  return v;
}

/// v{(u,i), y} as a difference of full statistics; nullopt when adding
/// (u,i) to y without u creates a hard-core violation.
inline std::optional<Eigen::VectorXd> local_by_difference(const smpp::StatisticModel& m,
                                                          std::vector<MarkedPoint> y, const Point& u, int type) {
  std::erase_if(y, [&](const MarkedPoint& q) { return q.location == u; });
  const auto without = full_statistic(m, y);
  y.push_back({u, type});
  const auto with = full_statistic(m, y);
  if (!without || !with) return std::nullopt;
  return Eigen::VectorXd(*with - *without);
}

struct Logit {
  double logpl = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian_neg;
};

/// Plain multinomial logit on a cached design: softmax by direct
/// exponentials, explicit loops, gamma = T beta.
inline Logit naive_logit(const smpp::StatCache& cache, const Eigen::MatrixXd& T, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd g = T * beta;
  const auto k = g.size();
  Logit out;
  Eigen::VectorXd sg = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd hg = Eigen::MatrixXd::Zero(k, k);
  for (const auto& cp : cache.points) {
    std::vector<double> w(cp.stats.size(), 0.0);
    double denom = 0.0;
    for (std::size_t l = 0; l < cp.stats.size(); ++l) {
      if (!cp.stats[l].feasible) continue;
      double eta = 0.0;
      for (Eigen::Index c = 0; c < k; ++c) eta += g[c] * cp.stats[l].v[c];
      w[l] = std::exp(eta);
      denom += w[l];
    }
    out.logpl += std::log(w[cp.mark] / denom);
    for (std::size_t l = 0; l < w.size(); ++l) {
      if (w[l] == 0.0) continue;
      const double pl = w[l] / denom;
      for (Eigen::Index a = 0; a < k; ++a) {
        sg[a] -= pl * cp.stats[l].v[a];
        for (Eigen::Index b = 0; b < k; ++b) hg(a, b) += pl * cp.stats[l].v[a] * cp.stats[l].v[b];
      }
    }
    for (Eigen::Index a = 0; a < k; ++a) sg[a] += cp.stats[cp.mark].v[a];
    // subtract E E'
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    for (std::size_t l = 0; l < w.size(); ++l) {
      if (w[l] > 0.0) e += (w[l] / denom) * cp.stats[l].v;
    }
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) hg(a, b) -= e[a] * e[b];
    }
  }
  out.score = T.transpose() * sg;
  out.hessian_neg = T.transpose() * hg * T;
  return out;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Central second differences.
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                  double h) {
  const auto n = x.size();
  Eigen::MatrixXd H(n, n);
  const double f0 = f(x);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      double val;
      if (a == b) {
        Eigen::VectorXd p = x, m = x;
        p[a] += h;
        m[a] -= h;
        val = (f(p) - 2.0 * f0 + f(m)) / (h * h);
      } else {
        Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
        pp[a] += h, pp[b] += h;
        pm[a] += h, pm[b] -= h;
        mp[a] -= h, mp[b] += h;
        mm[a] -= h, mm[b] -= h;
        val = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
      }
      H(a, b) = H(b, a) = val;
    }
  }
  return H;
}

/// Sum over ordered pairs of distinct points within r of h_a h_b'.
inline Eigen::MatrixXd brute_pair_sum(const std::vector<Point>& locs, const std::vector<Eigen::VectorXd>& h, double r) {
  const auto k = h.front().size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t a = 0; a < locs.size(); ++a) {
    for (std::size_t b = 0; b < locs.size(); ++b) {
      if (a != b && dist2(locs[a], locs[b]) <= r * r) out += h[a] * h[b].transpose();
    }
  }
  return out;
}

/// Uniform random pattern with at most `max_n` points on the unit square.
inline std::vector<MarkedPoint> random_points(std::mt19937_64& rng, std::size_t n, int types, double side = 1.0) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::uniform_int_distribution<int> t(0, types - 1);
  std::vector<MarkedPoint> out;
  for (std::size_t a = 0; a < n; ++a) out.push_back({{u(rng), u(rng)}, t(rng)});
  return out;
}

/// Direct kernel sum (1/p) sum_u k(u - v) w_u at one location.
inline double kernel_sum(const std::vector<MarkedPoint>& pts, const std::vector<double>& w, const Point& v, double bw,
                         int p) {
  double s = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    const double d2 = dist2(pts[a].location, v);
    if (d2 <= bw * bw) s += 2.0 / (M_PI * bw * bw) * (1.0 - d2 / (bw * bw)) * w[a];
  }
  return s / p;
}

}  // namespace oracle
