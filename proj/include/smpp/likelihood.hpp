#pragma once

#include "smpp/error.hpp"
#include "smpp/model.hpp"
#include "smpp/numeric.hpp"
#include "smpp/stat_cache.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace smpp {

/// Conditional pseudo log-likelihood with its derivatives in beta
/// coordinates. `sensitivity` is T' (sum of V) T, the negative Hessian.
struct PseudoLikelihood {
  double logpl = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd sensitivity;
};

namespace detail {

inline void check_compatible(const StatCache& cache, const ReparamMap& map, const Eigen::VectorXd& beta) {
  if (cache.points.empty()) throw InputError("statistic cache is empty");
  if (map.natural_dimension() != cache.dimension) {
    throw InputError("reparametrisation rows do not match the cached statistic dimension");
  }
  if (beta.size() != map.dimension()) throw InputError("parameter vector has the wrong length");
}

}  // namespace detail

enum class Derivatives { None, Score, Full };

inline PseudoLikelihood evaluate_pseudo_likelihood(const StatCache& cache, const ReparamMap& map,
                                                   const Eigen::VectorXd& beta, Derivatives what = Derivatives::Full) {
  detail::check_compatible(cache, map, beta);
  const Eigen::VectorXd gamma = map.gamma(beta);
  const Eigen::Index k = cache.dimension;
  const auto p = static_cast<Eigen::Index>(cache.types);

  CompensatedSum logpl;
  CompensatedVectorSum score(what == Derivatives::None ? 0 : k);
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(what == Derivatives::Full ? k : 0, what == Derivatives::Full ? k : 0);
  Eigen::VectorXd eta(p), prob(p), mean(k);

  for (const CachedPoint& cp : cache.points) {
    if (!cp.violation.empty()) throw InfeasibleDataError(cp.violation);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < p; ++l) {
      eta[l] = cp.stats[l].feasible ? gamma.dot(cp.stats[l].v) : -std::numeric_limits<double>::infinity();
      top = std::max(top, eta[l]);
    }
    double total = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      prob[l] = cp.stats[l].feasible ? std::exp(eta[l] - top) : 0.0;
      total += prob[l];
    }
    logpl.add(eta[cp.mark] - top - std::log(total));
    if (what == Derivatives::None) continue;
    prob /= total;
    mean.setZero();
    for (Eigen::Index l = 0; l < p; ++l) {
      if (prob[l] > 0.0) mean.noalias() += prob[l] * cp.stats[l].v;
    }
    score.add(cp.stats[cp.mark].v - mean);
    if (what != Derivatives::Full) continue;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (prob[l] == 0.0) continue;
      const Eigen::VectorXd centred = cp.stats[l].v - mean;
      sens.selfadjointView<Eigen::Lower>().rankUpdate(centred, prob[l]);
    }
  }

  PseudoLikelihood out;
  out.logpl = logpl.value();
  if (what != Derivatives::None) out.score = map.T.transpose() * score.value();
  if (what == Derivatives::Full) {
    const Eigen::MatrixXd full = sens.selfadjointView<Eigen::Lower>();
    out.sensitivity = symmetrized(map.T.transpose() * full * map.T);
  }
  return out;
}

inline double conditional_pseudo_loglik(const StatCache& cache, const ReparamMap& map, const Eigen::VectorXd& beta) {
  return evaluate_pseudo_likelihood(cache, map, beta, Derivatives::None).logpl;
}

inline Eigen::VectorXd score(const StatCache& cache, const ReparamMap& map, const Eigen::VectorXd& beta) {
  return evaluate_pseudo_likelihood(cache, map, beta, Derivatives::Score).score;
}

inline Eigen::MatrixXd observed_sensitivity(const StatCache& cache, const ReparamMap& map,
                                            const Eigen::VectorXd& beta) {
  return evaluate_pseudo_likelihood(cache, map, beta, Derivatives::Full).sensitivity;
}

/// Score residuals T' h{(u,i), Y \ (u,i)} of every cached point, in cache order.
inline std::vector<Eigen::VectorXd> score_residuals(const StatCache& cache, const ReparamMap& map,
                                                    const Eigen::VectorXd& beta) {
  detail::check_compatible(cache, map, beta);
  const Eigen::VectorXd gamma = map.gamma(beta);
  std::vector<Eigen::VectorXd> out;
  out.reserve(cache.size());
  for (const CachedPoint& cp : cache.points) {
    if (!cp.violation.empty()) throw InfeasibleDataError(cp.violation);
    const ConditionalMoments m = conditional_moments(gamma, cp.stats);
    out.push_back(map.T.transpose() * m.residuals[cp.mark]);
  }
  return out;
}

}  // namespace smpp
