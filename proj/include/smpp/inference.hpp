#pragma once

#include "smpp/error.hpp"
#include "smpp/likelihood.hpp"
#include "smpp/neighbor_index.hpp"
#include "smpp/numeric.hpp"
#include "smpp/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace smpp {

/// Sum over ordered pairs of distinct cached points within the pair range
/// of h_a h_b' (beta coordinates).
inline Eigen::MatrixXd pair_covariance(const StatCache& cache, const ReparamMap& map, const Eigen::VectorXd& beta,
                                       unsigned threads = 1) {
  const auto residuals = score_residuals(cache, map, beta);
  const Eigen::Index kp = map.dimension();
  const double range = cache.pair_range;

  NeighborIndex index(cache.domain.rect(), range);
  for (const auto& cp : cache.points) index.insert({cp.location, cp.mark});

  std::vector<Eigen::MatrixXd> partial(cache.size());
  parallel_for(cache.size(), threads, [&](std::size_t a) {
    Eigen::VectorXd neighbour_sum = Eigen::VectorXd::Zero(kp);
    for (const std::size_t b : index.neighbors_within(cache.points[a].location, range)) neighbour_sum += residuals[b];
    partial[a] = residuals[a] * neighbour_sum.transpose();
  });
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(kp, kp);
  for (const auto& m : partial) total += m;
  return symmetrized(total);
}

/// S^-1 (S + Sigma_pair) S^-1, computed with two symmetric solves.
inline Eigen::MatrixXd sandwich_vcov(const Eigen::MatrixXd& S, const Eigen::MatrixXd& sigma_pair) {
  if (S.rows() != S.cols() || sigma_pair.rows() != S.rows() || sigma_pair.cols() != S.cols()) {
    throw InputError("sandwich matrices must be square and of equal size");
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  const double scale = S.diagonal().cwiseAbs().maxCoeff();
  const auto d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || scale == 0.0 || d.cwiseAbs().minCoeff() <= 1e-13 * scale) {
    throw RankDeficiencyError("sensitivity matrix is singular", {});
  }
  const Eigen::MatrixXd middle = S + sigma_pair;
  const Eigen::MatrixXd left = ldlt.solve(middle);
  const Eigen::MatrixXd vcov = ldlt.solve(left.transpose());
  return symmetrized(vcov);
}

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Halley step on erfc (relative error near machine precision).
inline double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    if (prob == 0.0) return -std::numeric_limits<double>::infinity();
    if (prob == 1.0) return std::numeric_limits<double>::infinity();
    throw InputError("normal quantile needs a probability in [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (prob < low) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - low) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - prob;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

struct ConfidenceInterval {
  double estimate = 0.0;
  double se = 0.0;
  double low = 0.0;
  double high = 0.0;
  double level = 0.95;
  /// False when the variance estimate is negative or not finite.
  bool valid = true;
};

inline std::vector<ConfidenceInterval> confidence_intervals(const Eigen::VectorXd& beta, const Eigen::MatrixXd& vcov,
                                                            double level) {
  if (!(level >= 0.0 && level < 1.0)) throw InputError("confidence level must lie in [0, 1)");
  if (vcov.rows() != beta.size() || vcov.cols() != beta.size()) throw InputError("vcov does not match beta");
  const double z = level == 0.0 ? 0.0 : normal_quantile(0.5 * (1.0 + level));
  std::vector<ConfidenceInterval> out;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    ConfidenceInterval ci;
    ci.estimate = beta[j];
    ci.level = level;
    const double var = vcov(j, j);
    if (!(var >= 0.0) || !std::isfinite(var)) {
      ci.valid = false;
      ci.se = std::numeric_limits<double>::quiet_NaN();
      ci.low = ci.high = std::numeric_limits<double>::quiet_NaN();
    } else {
      ci.se = std::sqrt(var);
      ci.low = beta[j] - z * ci.se;
      ci.high = beta[j] + z * ci.se;
    }
    out.push_back(ci);
  }
  return out;
}

/// Sensitivity, pair term and sandwich covariance at one parameter value.
struct SandwichEstimate {
  Eigen::MatrixXd S_hat;
  Eigen::MatrixXd Sigma_pair_hat;
  Eigen::MatrixXd Sigma_total_hat;
  Eigen::MatrixXd vcov;
};

inline SandwichEstimate sandwich_estimate(const StatCache& cache, const ReparamMap& map, const Eigen::VectorXd& beta,
                                          unsigned threads = 1) {
  SandwichEstimate s;
  s.S_hat = observed_sensitivity(cache, map, beta);
  s.Sigma_pair_hat = pair_covariance(cache, map, beta, threads);
  s.Sigma_total_hat = s.S_hat + s.Sigma_pair_hat;
  s.vcov = sandwich_vcov(s.S_hat, s.Sigma_pair_hat);
  return s;
}

}  // namespace smpp
