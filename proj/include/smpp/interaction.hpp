#pragma once

#include "smpp/error.hpp"
#include "smpp/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <span>
#include <string>

namespace smpp {

enum class InteractionFamily { StraussHardcore, GeyerSaturation };

inline std::string to_string(InteractionFamily f) {
  return f == InteractionFamily::StraussHardcore ? "strauss" : "geyer";
}

inline InteractionFamily interaction_family_from_string(const std::string& s) {
  if (s == "strauss" || s == "strauss_hardcore") return InteractionFamily::StraussHardcore;
  if (s == "geyer" || s == "geyer_saturation") return InteractionFamily::GeyerSaturation;
  throw InputError("unknown interaction family '" + s + "' (expected 'strauss' or 'geyer')");
}

/// Multi-type pairwise interaction. `range(i, j)` is R_ij; Strauss models
/// carry hard-core distances r_ij (zero gives a plain Strauss term), Geyer
/// models carry saturation thresholds c_ij. The matrix that does not belong
/// to the family is empty.
struct InteractionSpec {
  InteractionFamily family = InteractionFamily::StraussHardcore;
  Eigen::MatrixXd range;
  Eigen::MatrixXd hardcore;
  Eigen::MatrixXd saturation;

  static InteractionSpec strauss(Eigen::MatrixXd range, Eigen::MatrixXd hardcore = {}) {
    if (hardcore.size() == 0) hardcore = Eigen::MatrixXd::Zero(range.rows(), range.cols());
    InteractionSpec s{InteractionFamily::StraussHardcore, std::move(range), std::move(hardcore), {}};
    s.validate();
    return s;
  }
  static InteractionSpec geyer(Eigen::MatrixXd range, Eigen::MatrixXd saturation) {
    InteractionSpec s{InteractionFamily::GeyerSaturation, std::move(range), {}, std::move(saturation)};
    s.validate();
    return s;
  }
  /// Ranges `within` on the diagonal and `between` elsewhere.
  static Eigen::MatrixXd two_level(int types, double within, double between) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(types, types, between);
    m.diagonal().setConstant(within);
    return m;
  }

  int types() const noexcept { return static_cast<int>(range.rows()); }

  void validate() const {
    const auto p = range.rows();
    if (p < 1 || range.cols() != p) throw InputError("interaction range matrix must be square with at least one type");
    if ((range.array() < 0.0).any() || !range.allFinite()) {
      throw InputError("interaction ranges must be finite and non-negative");
    }
    if (family == InteractionFamily::StraussHardcore) {
      if (hardcore.rows() != p || hardcore.cols() != p) throw InputError("hard-core matrix must be p x p");
      if (saturation.size() != 0) throw InputError("Strauss interaction takes no saturation matrix");
      if ((hardcore.array() < 0.0).any() || (hardcore.array() > range.array()).any()) {
        throw InputError("hard-core distances must satisfy 0 <= r_ij <= R_ij");
      }
    } else {
      if (saturation.rows() != p || saturation.cols() != p) throw InputError("saturation matrix must be p x p");
      if (hardcore.size() != 0) throw InputError("Geyer interaction takes no hard-core matrix");
      if ((saturation.array() <= 0.0).any() || !saturation.allFinite()) {
        throw InputError("saturation thresholds must be positive and finite");
      }
    }
  }
};

/// Interaction radius of the conditional intensity: max R_ij for Strauss,
/// twice that for Geyer (saturation counts of neighbours depend on their own
/// neighbours).
inline double markov_range(const InteractionSpec& spec) {
  const double r = spec.range.size() ? spec.range.maxCoeff() : 0.0;
  return spec.family == InteractionFamily::StraussHardcore ? r : 2.0 * r;
}

/// s(u, x_j, R): number of points of x_j other than u within distance R,
/// halved for same-type counts.
inline double pair_count(const Point& u, std::span<const Point> xj, double range, bool same_type) {
  const double r2 = range * range;
  double n = 0.0;
  for (const Point& v : xj) {
    if (v == u) continue;
    if (squared_distance(u, v) <= r2) n += 1.0;
  }
  return same_type ? 0.5 * n : n;
}

/// Full statistic v_ij(x_i, x_j); std::nullopt when a Strauss hard core is
/// violated. Pass the same list twice (and i == j) for the within-type term.
inline std::optional<double> interaction_statistic(const InteractionSpec& spec, std::span<const Point> xi,
                                                   std::span<const Point> xj, int i, int j) {
  const bool same = i == j;
  const double range = spec.range(i, j);
  if (spec.family == InteractionFamily::StraussHardcore) {
    const double core2 = spec.hardcore(i, j) * spec.hardcore(i, j);
    double total = 0.0;
    for (const Point& u : xi) {
      for (const Point& v : xj) {
        if (v == u) continue;
        if (squared_distance(u, v) < core2) return std::nullopt;
      }
      total += pair_count(u, xj, range, same);
    }
    return total;
  }
  const double c = spec.saturation(i, j);
  double total = 0.0;
  for (const Point& u : xi) total += std::min(pair_count(u, xj, range, same), c);
  return total;
}

}  // namespace smpp
