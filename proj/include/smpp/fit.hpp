#pragma once

#include "smpp/error.hpp"
#include "smpp/inference.hpp"
#include "smpp/likelihood.hpp"
#include "smpp/model.hpp"
#include "smpp/parallel.hpp"
#include "smpp/stat_cache.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smpp {

struct FitOptions {
  double tol = 1e-8;  // sup-norm of the score
  int max_iter = 50;
  int max_halvings = 30;
  double level = 0.95;
  std::optional<Eigen::VectorXd> init;  // defaults to beta = 0
  bool inference = true;
  unsigned threads = 1;
};

struct FitResult {
  std::vector<std::string> beta_names;
  std::vector<std::string> gamma_names;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd gamma_hat;
  double logpl = 0.0;
  double score_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd S_hat;
  Eigen::MatrixXd Sigma_pair_hat;
  Eigen::MatrixXd vcov;
  std::vector<ConfidenceInterval> ci;
  std::size_t n_points = 0;
  std::vector<std::size_t> type_counts;
  double erosion = 0.0;
  double pair_range = 0.0;
};

namespace detail {

/// True when moving along d never lowers any observed-type logit relative
/// to a feasible alternative and strictly raises at least one, i.e. the
/// pseudo likelihood increases without bound along d.
inline bool is_separating_direction(const StatCache& cache, const ReparamMap& map, const Eigen::VectorXd& d) {
  const Eigen::VectorXd dg = map.gamma(d);
  if (dg.norm() == 0.0) return false;
  bool strict = false;
  for (const CachedPoint& cp : cache.points) {
    const double own = dg.dot(cp.stats[cp.mark].v);
    for (int l = 0; l < cache.types; ++l) {
      if (l == cp.mark || !cp.stats[l].feasible) continue;
      const Eigen::VectorXd diff = cp.stats[l].v - cp.stats[cp.mark].v;
      const double scale = 1e-7 * std::max(1.0, (map.T.transpose() * diff).norm());
      const double delta = dg.dot(cp.stats[l].v) - own;
      if (delta > scale) return false;
      if (delta < -scale) strict = true;
    }
  }
  return strict;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline std::string describe_direction(const ReparamMap& map, const Eigen::VectorXd& d) {
  std::string s;
  const double top = d.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (std::abs(d[j]) < 1e-3 * top) continue;
    if (!s.empty()) s += ", ";
    s += map.beta_names[j] + " " + (d[j] > 0 ? "+" : "-");
  }
  return s;
}

/// Null space of the sensitivity at beta = 0, where every feasible mark has
/// positive probability, so it reflects the design alone.
inline void check_identifiable(const StatCache& cache, const ReparamMap& map) {
  const Eigen::MatrixXd S0 = observed_sensitivity(cache, map, Eigen::VectorXd::Zero(map.dimension()));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S0);
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  std::vector<std::string> null_params;
  for (Eigen::Index c = 0; c < S0.rows(); ++c) {
    if (eig.eigenvalues()[c] > 1e-10 * top) continue;
    const Eigen::VectorXd vec = eig.eigenvectors().col(c);
    const double vmax = vec.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < vec.size(); ++j) {
      if (std::abs(vec[j]) >= 0.1 * vmax &&
          std::find(null_params.begin(), null_params.end(), map.beta_names[j]) == null_params.end()) {
        null_params.push_back(map.beta_names[j]);
      }
    }
  }
  if (!null_params.empty()) {
    std::string list;
    for (const auto& n : null_params) list += (list.empty() ? "" : ", ") + n;
    throw RankDeficiencyError("sensitivity matrix is singular; parameters not identifiable: " + list,
                              std::move(null_params));
  }
}

inline Eigen::VectorXd newton_direction(const Eigen::MatrixXd& S, const Eigen::VectorXd& g) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const Eigen::VectorXd d = ldlt.solve(g);
    if (d.allFinite()) return d;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * g;
  for (Eigen::Index c = 0; c < coeffs.size(); ++c) {
    coeffs[c] /= std::max(eig.eigenvalues()[c], 1e-14 * top);
  }
  return eig.eigenvectors() * coeffs;
}

}  // namespace detail

/// Newton-Raphson with step halving on the concave pseudo log-likelihood,
/// followed by sandwich inference at the optimum.
inline FitResult fit_newton(const StatCache& cache, const ReparamMap& map, const FitOptions& options = {}) {
  if (cache.points.empty()) throw InputError("statistic cache is empty");
  for (const auto& cp : cache.points) {
    if (!cp.violation.empty()) throw InfeasibleDataError(cp.violation);
  }
  const Eigen::Index kp = map.dimension();
  detail::check_identifiable(cache, map);
  for (Eigen::Index j = 0; j < kp; ++j) {
    for (const double sign : {1.0, -1.0}) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(kp);
      e[j] = sign;
      if (detail::is_separating_direction(cache, map, e)) {
        throw SeparationError("pseudo likelihood is unbounded: " + map.beta_names[j] + " diverges to " +
                                  (sign > 0 ? "+inf" : "-inf") + " (complete separation)",
                              detail::to_std(e));
      }
    }
  }

  FitResult r;
  r.beta_names = map.beta_names;
  r.gamma_names = map.gamma_names;
  Eigen::VectorXd beta = options.init.value_or(Eigen::VectorXd::Zero(kp));
  if (beta.size() != kp) throw InputError("initial value has the wrong length");

  PseudoLikelihood cur = evaluate_pseudo_likelihood(cache, map, beta);
  Eigen::VectorXd step = detail::newton_direction(cur.sensitivity, cur.score);
  int it = 0;
  bool stalled = false;
  while (cur.score.lpNorm<Eigen::Infinity>() > options.tol && it < options.max_iter) {
    ++it;
    double t = 1.0;
    bool accepted = false;
    PseudoLikelihood next;
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      next = evaluate_pseudo_likelihood(cache, map, beta + t * step);
      if (next.logpl >= cur.logpl - 1e-12 * (1.0 + std::abs(cur.logpl))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    beta += t * step;
    cur = std::move(next);
    step = detail::newton_direction(cur.sensitivity, cur.score);
  }
  r.iterations = it;
  r.converged = !stalled && cur.score.lpNorm<Eigen::Infinity>() <= options.tol;

  // A diverging iterate shows up as Newton steps of order one while the
  // score has already vanished numerically.
  if (step.lpNorm<Eigen::Infinity>() > 1e-4 * std::max(1.0, beta.lpNorm<Eigen::Infinity>())) {
    const Eigen::VectorXd dir = step.normalized();
    if (detail::is_separating_direction(cache, map, dir)) {
      throw SeparationError("pseudo likelihood is unbounded along " + detail::describe_direction(map, dir) +
                                " (complete or quasi-complete separation)",
                            detail::to_std(dir));
    }
  }

  r.beta_hat = beta;
  r.gamma_hat = map.gamma(beta);
  r.logpl = cur.logpl;
  r.score_norm = cur.score.lpNorm<Eigen::Infinity>();
  r.S_hat = cur.sensitivity;
  r.n_points = cache.size();
  r.type_counts.assign(static_cast<std::size_t>(cache.types), 0);
  for (const auto& cp : cache.points) ++r.type_counts[cp.mark];
  r.erosion = cache.erosion;
  r.pair_range = cache.pair_range;
  if (options.inference) {
    r.Sigma_pair_hat = pair_covariance(cache, map, beta, options.threads);
    try {
      r.vcov = sandwich_vcov(r.S_hat, r.Sigma_pair_hat);
    } catch (const RankDeficiencyError&) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.S_hat);
      const Eigen::VectorXd vec = eig.eigenvectors().col(0);
      std::vector<std::string> names;
      for (Eigen::Index j = 0; j < vec.size(); ++j) {
        if (std::abs(vec[j]) >= 0.1 * vec.cwiseAbs().maxCoeff()) names.push_back(map.beta_names[j]);
      }
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw RankDeficiencyError("sensitivity matrix is singular at the estimate; weakly identified: " + list,
                                std::move(names));
    }
    r.ci = confidence_intervals(beta, r.vcov, options.level);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grid search over interaction ranges and saturation.

struct ProfileCombo {
  double range_within = 0.0;
  double range_between = 0.0;
  double saturation = 1.0;  // ignored for Strauss models
};

struct ProfileRow {
  ProfileCombo combo;
  bool ok = false;
  bool converged = false;
  double logpl = 0.0;
  std::string error;
};

struct ProfileResult {
  ProfileCombo best;
  FitResult fit;
  std::vector<ProfileRow> table;
  double erosion = 0.0;
};

inline StatisticModel with_ranges(const StatisticModel& base, const ProfileCombo& combo) {
  StatisticModel m = base;
  const int p = base.types();
  m.interaction.range = InteractionSpec::two_level(p, combo.range_within, combo.range_between);
  if (m.interaction.family == InteractionFamily::GeyerSaturation) {
    m.interaction.saturation = Eigen::MatrixXd::Constant(p, p, combo.saturation);
  }
  m.interaction.validate();
  return m;
}

/// Fits every combination on one shared eroded domain (twice the largest
/// Markov range of the grid) and returns the combination with the largest
/// conditional pseudo log-likelihood.
inline ProfileResult profile_fit(const MarkedPointPattern& pattern, const StatisticModel& model_template,
                                 const ReparamConstraints& constraints, std::span<const ProfileCombo> grid,
                                 const FitOptions& options = {}) {
  if (grid.empty()) throw InputError("profile grid is empty");
  double widest = 0.0;
  for (const auto& combo : grid) widest = std::max(widest, markov_range(with_ranges(model_template, combo).interaction));
  ProfileResult out;
  out.erosion = 2.0 * widest;

  std::vector<std::optional<FitResult>> fits(grid.size());
  out.table.resize(grid.size());
  FitOptions inner = options;
  inner.threads = 1;
  parallel_for(grid.size(), options.threads, [&](std::size_t g) {
    ProfileRow& row = out.table[g];
    row.combo = grid[g];
    try {
      const StatisticModel m = with_ranges(model_template, grid[g]);
      const StatCache cache = compute_stat_cache(pattern, m, out.erosion);
      const ReparamMap map = build_reparam(m, constraints);
      FitResult fit = fit_newton(cache, map, inner);
      row.ok = true;
      row.converged = fit.converged;
      row.logpl = fit.logpl;
      fits[g] = std::move(fit);
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!out.table[g].ok || !out.table[g].converged) continue;
    if (!best || out.table[g].logpl > out.table[*best].logpl) best = g;
  }
  if (!best) throw Error("no grid combination produced a converged fit");
  out.best = grid[*best];
  out.fit = std::move(*fits[*best]);
  return out;
}

}  // namespace smpp
