#pragma once

#include "smpp/error.hpp"
#include "smpp/statistics.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smpp {

/// Linear map gamma = T * beta from identifiable parameters to the stacked
/// natural parameters.
struct ReparamMap {
  Eigen::MatrixXd T;
  std::vector<std::string> beta_names;
  std::vector<std::string> gamma_names;

  Eigen::Index natural_dimension() const noexcept { return T.rows(); }
  Eigen::Index dimension() const noexcept { return T.cols(); }
  Eigen::VectorXd gamma(const Eigen::VectorXd& beta) const { return T * beta; }

  static ReparamMap identity(std::vector<std::string> names) {
    const auto k = static_cast<Eigen::Index>(names.size());
    return {Eigen::MatrixXd::Identity(k, k), names, names};
  }
};

struct ReparamConstraints {
  /// Type (0-based) whose covariate block is fixed at zero so that the other
  /// types' covariate effects are contrasts against it.
  std::optional<int> reference_type;
  /// Merge gamma_ij and gamma_ji (i != j) into one parameter.
  bool symmetric_cross = false;
  /// Further gamma entries fixed at zero, by name.
  std::vector<std::string> fixed;
};

inline ReparamMap build_reparam(const StatisticModel& model, const ReparamConstraints& constraints) {
  const StatLayout layout = model.layout();
  const int p = model.types();
  const auto names = model.parameter_names();
  const Eigen::Index k = layout.dimension();

  std::vector<bool> fixed(static_cast<std::size_t>(k), false);
  if (constraints.reference_type) {
    const int ref = *constraints.reference_type;
    if (ref < 0 || ref >= p) {
      throw InputError("reference type " + std::to_string(ref + 1) + " not in 1.." + std::to_string(p));
    }
    for (int c = 0; c < layout.covariate_count(ref); ++c) fixed[layout.covariate(ref, c)] = true;
  }
  for (const auto& name : constraints.fixed) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("cannot fix unknown parameter '" + name + "'");
    fixed[static_cast<std::size_t>(it - names.begin())] = true;
  }

  // Column assigned to each gamma entry, -1 when fixed.
  std::vector<Eigen::Index> column(static_cast<std::size_t>(k), -1);
  std::vector<std::string> beta_names;
  for (Eigen::Index g = 0; g < k; ++g) {
    if (fixed[g]) continue;
    column[g] = static_cast<Eigen::Index>(beta_names.size());
    beta_names.push_back(names[g]);
  }
  if (constraints.symmetric_cross) {
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        const Eigen::Index a = layout.interaction(i, j);
        const Eigen::Index b = layout.interaction(j, i);
        if (fixed[a] != fixed[b]) {
          throw InputError("symmetric parametrisation needs " + names[a] + " and " + names[b] +
                           " both free or both fixed");
        }
        if (fixed[a]) continue;
        column[b] = column[a];
      }
    }
    // Re-number the surviving columns densely.
    std::vector<std::string> merged;
    std::map<Eigen::Index, Eigen::Index> renumber;
    for (Eigen::Index g = 0; g < k; ++g) {
      if (column[g] < 0) continue;
      auto [it, inserted] = renumber.emplace(column[g], static_cast<Eigen::Index>(merged.size()));
      if (inserted) merged.push_back(beta_names[column[g]]);
      column[g] = it->second;
    }
    beta_names = std::move(merged);
  }

  const auto kp = static_cast<Eigen::Index>(beta_names.size());
  if (kp == 0) throw RankDeficiencyError("every parameter is fixed", {});
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, kp);
  for (Eigen::Index g = 0; g < k; ++g) {
    if (column[g] >= 0) T(g, column[g]) = 1.0;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(T);
  if (qr.rank() != kp) throw RankDeficiencyError("reparametrisation map is not of full column rank", beta_names);
  return {std::move(T), std::move(beta_names), names};
}

/// Full model: statistics, parametrisation, and (for simulation and
/// diagnostics only) the common baseline phi_0.
struct ModelSpec {
  StatisticModel stats;
  ReparamMap reparam;
  std::optional<RasterField> baseline;

  int types() const noexcept { return stats.types(); }

  void validate() const {
    stats.validate();
    if (reparam.natural_dimension() != stats.layout().dimension()) {
      throw InputError("reparametrisation has " + std::to_string(reparam.natural_dimension()) +
                       " rows but the model has " + std::to_string(stats.layout().dimension()) + " parameters");
    }
    if (baseline && baseline->min_value() < 0.0) throw InputError("baseline must be non-negative");
  }
};

/// lambda{(u,i), y} = phi_0(u) * exp(gamma' v{(u,i), y}); zero under a hard-core violation.
inline double conditional_intensity(const ModelSpec& model, const Eigen::VectorXd& gamma, const NeighborIndex& context,
                                    const Point& u, int type) {
  if (!model.baseline) throw InputError("conditional intensity needs a baseline field");
  const LocalContribution lc = local_contribution(model.stats, context, u, type);
  if (!lc.feasible) return 0.0;
  return model.baseline->lookup(u) * std::exp(gamma.dot(lc.v));
}

inline double conditional_intensity(const ModelSpec& model, const Eigen::VectorXd& gamma, const MarkedPointPattern& y,
                                    const Point& u, int type) {
  const NeighborIndex idx(y, markov_range(model.stats.interaction));
  return conditional_intensity(model, gamma, idx, u, type);
}

inline constexpr double kProbabilityFloor = 1e-300;

/// p{(u,i), y} for all i from the p local contributions at u. Softmax with
/// max subtraction; probabilities below 1e-300 are flushed to zero and an
/// all-infeasible location gives the zero vector.
inline Eigen::VectorXd type_probability(const Eigen::VectorXd& gamma, std::span<const LocalContribution> stats) {
  const auto p = static_cast<Eigen::Index>(stats.size());
  Eigen::VectorXd eta(p);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < p; ++l) {
    if (!stats[l].feasible) continue;
    eta[l] = gamma.dot(stats[l].v);
    top = std::max(top, eta[l]);
  }
  Eigen::VectorXd prob = Eigen::VectorXd::Zero(p);
  if (top == -std::numeric_limits<double>::infinity()) return prob;
  double total = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) {
    if (!stats[l].feasible) continue;
    prob[l] = std::exp(eta[l] - top);
    total += prob[l];
  }
  prob /= total;
  for (Eigen::Index l = 0; l < p; ++l) {
    if (prob[l] < kProbabilityFloor) prob[l] = 0.0;
  }
  return prob;
}

/// Moments of v{(u, I), y} for I drawn from the type probabilities.
/// `residuals[i]` is h{(u,i), y} = v_i - E (zero for infeasible marks).
struct ConditionalMoments {
  Eigen::VectorXd probabilities;
  Eigen::VectorXd E;
  Eigen::MatrixXd E2;
  Eigen::MatrixXd V;
  std::vector<Eigen::VectorXd> residuals;
};

inline ConditionalMoments conditional_moments(const Eigen::VectorXd& gamma, std::span<const LocalContribution> stats) {
  if (stats.empty()) throw InputError("conditional moments need at least one mark");
  ConditionalMoments m;
  m.probabilities = type_probability(gamma, stats);
  if (m.probabilities.sum() == 0.0) throw InfeasibleDataError("every mark is infeasible at this location");
  const Eigen::Index k = stats.front().v.size();
  m.E = Eigen::VectorXd::Zero(k);
  m.E2 = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t l = 0; l < stats.size(); ++l) {
    const double w = m.probabilities[static_cast<Eigen::Index>(l)];
    if (w == 0.0) continue;
    m.E.noalias() += w * stats[l].v;
    m.E2.noalias() += w * stats[l].v * stats[l].v.transpose();
  }
  m.V = m.E2 - m.E * m.E.transpose();
  m.residuals.resize(stats.size());
  for (std::size_t l = 0; l < stats.size(); ++l) {
    m.residuals[l] = stats[l].feasible ? Eigen::VectorXd(stats[l].v - m.E) : Eigen::VectorXd::Zero(k);
  }
  return m;
}

/// Upper bound on phi_0(u) exp(gamma_i0' z_i(u)) from the raster extremes.
inline double first_order_bound(const ModelSpec& model, const Eigen::VectorXd& gamma, int type) {
  if (!model.baseline) throw InputError("bound needs a baseline field");
  const StatLayout layout = model.stats.layout();
  const auto& cov = model.stats.covariates[type];
  Eigen::Index c = layout.block_start(type);
  double eta = 0.0;
  if (cov.intercept) eta += gamma[c++];
  for (const auto& f : cov.fields) {
    eta += std::max(gamma[c] * f.field->min_value(), gamma[c] * f.field->max_value());
    ++c;
  }
  return std::max(0.0, model.baseline->max_value()) * std::exp(eta);
}

/// Uniform upper bound on lambda implied by the parameters, or std::nullopt
/// when none follows: a positive Strauss term without a hard core, or any
/// positive Geyer term (neighbour gains under cross saturation are not
/// uniformly bounded).
inline std::optional<double> local_stability_bound(const ModelSpec& model, const Eigen::VectorXd& gamma) {
  if (!model.baseline) return std::nullopt;
  const StatLayout layout = model.stats.layout();
  const int p = model.types();
  const auto& spec = model.stats.interaction;
  double first_order = 0.0;
  for (int i = 0; i < p; ++i) first_order = std::max(first_order, first_order_bound(model, gamma, i));
  if (spec.family == InteractionFamily::GeyerSaturation) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        if (gamma[layout.interaction(i, j)] > 0.0) return std::nullopt;
      }
    }
    return first_order;
  }
  // Points kept at least `core` apart: discs of radius core/2 pack into the
  // disc of radius R + core/2 around u.
  const auto packed = [](double range, double core) { return std::floor(std::pow((range + 0.5 * core) / (0.5 * core), 2)); };
  double worst = 0.0;
  for (int i = 0; i < p; ++i) {
    double s = 0.0;
    for (int j = 0; j < p; ++j) {
      if (j == i) {
        const double gii = gamma[layout.interaction(i, i)];
        if (gii <= 0.0) continue;
        if (spec.hardcore(i, i) <= 0.0) return std::nullopt;
        s += gii * packed(spec.range(i, i), spec.hardcore(i, i));
        continue;
      }
      const double core = std::max(spec.hardcore(i, j), spec.hardcore(j, i));
      for (const auto& [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        const double gab = gamma[layout.interaction(a, b)];
        if (gab <= 0.0) continue;
        if (core <= 0.0) return std::nullopt;
        s += gab * packed(spec.range(a, b), core);
      }
    }
    worst = std::max(worst, s);
  }
  return first_order * std::exp(worst);
}

}  // namespace smpp
