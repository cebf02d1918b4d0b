#pragma once

#include "smpp/error.hpp"
#include "smpp/interaction.hpp"
#include "smpp/neighbor_index.hpp"
#include "smpp/pattern.hpp"
#include "smpp/raster.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace smpp {

struct CovariateField {
  std::string name;
  std::shared_ptr<const RasterField> field;
};

/// Covariate vector z_i(u) of one type: an optional leading intercept
/// followed by raster covariates in order.
struct TypeCovariates {
  bool intercept = true;
  std::vector<CovariateField> fields;

  int size() const noexcept { return static_cast<int>(fields.size()) + (intercept ? 1 : 0); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (intercept) out.emplace_back("intercept");
    for (const auto& f : fields) out.push_back(f.name);
    return out;
  }

  template <class Out>
  void evaluate(const Point& u, Out&& out) const {
    Eigen::Index k = 0;
    if (intercept) out[k++] = 1.0;
    for (const auto& f : fields) out[k++] = f.field->lookup(u);
  }

  friend bool operator==(const TypeCovariates& a, const TypeCovariates& b) {
    if (a.intercept != b.intercept || a.fields.size() != b.fields.size()) return false;
    for (std::size_t i = 0; i < a.fields.size(); ++i) {
      if (a.fields[i].name != b.fields[i].name || a.fields[i].field != b.fields[i].field) return false;
    }
    return true;
  }
};

/// Canonical stacking of the natural parameter gamma and of statistic
/// vectors. For each type i = 1..p the block is
///   [ covariates of z_i ; gamma_ii ; gamma_ij for j != i ascending ].
class StatLayout {
 public:
  StatLayout() = default;
  explicit StatLayout(std::vector<int> covariate_counts) : q_(std::move(covariate_counts)) {
    const int p = types();
    start_.resize(q_.size());
    Eigen::Index s = 0;
    for (int i = 0; i < p; ++i) {
      start_[i] = s;
      s += q_[i] + p;
    }
    k_ = s;
  }

  int types() const noexcept { return static_cast<int>(q_.size()); }
  Eigen::Index dimension() const noexcept { return k_; }
  int covariate_count(int i) const noexcept { return q_[i]; }
  Eigen::Index block_start(int i) const noexcept { return start_[i]; }
  Eigen::Index covariate(int i, int c) const noexcept { return start_[i] + c; }
  Eigen::Index interaction(int i, int j) const noexcept {
    const Eigen::Index off = i == j ? 0 : 1 + (j < i ? j : j - 1);
    return start_[i] + q_[i] + off;
  }
  bool is_covariate(Eigen::Index idx, int* type = nullptr) const noexcept {
    for (int i = 0; i < types(); ++i) {
      if (idx >= start_[i] && idx < start_[i] + q_[i]) {
        if (type) *type = i;
        return true;
      }
    }
    return false;
  }

 private:
  std::vector<int> q_;
  std::vector<Eigen::Index> start_;
  Eigen::Index k_ = 0;
};

inline std::string interaction_name(int i, int j, int types) {
  if (types < 10) return "g" + std::to_string(i + 1) + std::to_string(j + 1);
  return "g" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

/// Everything needed to evaluate sufficient statistics. It deliberately has
/// no baseline: pseudo-likelihood fitting never reads phi_0.
struct StatisticModel {
  std::vector<TypeCovariates> covariates;
  InteractionSpec interaction;

  int types() const noexcept { return static_cast<int>(covariates.size()); }

  StatLayout layout() const {
    std::vector<int> q;
    for (const auto& c : covariates) q.push_back(c.size());
    return StatLayout(std::move(q));
  }

  /// Names of gamma entries: "<mark>:<covariate>" and "g<i><j>".
  std::vector<std::string> parameter_names() const {
    const StatLayout lay = layout();
    std::vector<std::string> names(static_cast<std::size_t>(lay.dimension()));
    const int p = types();
    for (int i = 0; i < p; ++i) {
      const auto cov = covariates[i].names();
      for (int c = 0; c < lay.covariate_count(i); ++c) {
        names[lay.covariate(i, c)] = std::to_string(i + 1) + ":" + cov[c];
      }
      for (int j = 0; j < p; ++j) names[lay.interaction(i, j)] = interaction_name(i, j, p);
    }
    return names;
  }

  void validate() const {
    if (covariates.empty()) throw InputError("model needs at least one type");
    interaction.validate();
    if (interaction.types() != types()) {
      throw InputError("interaction matrices are " + std::to_string(interaction.types()) + " x " +
                       std::to_string(interaction.types()) + " but the model has " + std::to_string(types()) +
                       " types");
    }
    for (const auto& c : covariates) {
      for (const auto& f : c.fields) {
        if (!f.field) throw InputError("covariate '" + f.name + "' has no raster");
      }
    }
  }
};

/// v{(u,i), y}: the change in the stacked statistic when (u,i) is added to
/// y without u. When `feasible` is false a hard core is violated (the
/// conditional intensity is zero); `v` must not be read and `conflict`
/// holds the index id of an offending neighbour.
struct LocalContribution {
  Eigen::VectorXd v;
  bool feasible = true;
  std::optional<std::size_t> conflict;
};

namespace detail {

struct Neighbour {
  std::size_t id;
  int type;
  double d2;
  Point location;
};

/// Number of type `type` points within `range` of `centre`, ignoring points
/// located at `centre` itself or at `skip`.
inline int count_around(const NeighborIndex& ctx, const Point& centre, double range, int type, const Point& skip) {
  int n = 0;
  ctx.for_each_within(centre, range, [&](std::size_t, const MarkedPoint& pt, double d2) {
    if (pt.type == type && d2 > 0.0 && !(pt.location == skip)) ++n;
  });
  return n;
}

}  // namespace detail

/// Local contribution of (u, type) against the points of `context`. Any
/// context point located exactly at u is treated as the point itself and
/// ignored, so the same call serves (u,i) in y and (u,i) not in y.
/// Only neighbours within markov_range of u are visited.
inline void local_contribution(const StatisticModel& model, const StatLayout& layout, const NeighborIndex& context,
                               const Point& u, int type, LocalContribution& out,
                               std::vector<detail::Neighbour>& scratch) {
  const int p = model.types();
  const InteractionSpec& spec = model.interaction;
  out.v.setZero(layout.dimension());
  out.feasible = true;
  out.conflict.reset();

  const int i = type;
  model.covariates[i].evaluate(u, out.v.segment(layout.block_start(i), layout.covariate_count(i)));

  double reach = 0.0;
  for (int j = 0; j < p; ++j) reach = std::max({reach, spec.range(i, j), spec.range(j, i)});
  scratch.clear();
  context.for_each_within(u, reach, [&](std::size_t id, const MarkedPoint& pt, double d2) {
    if (d2 > 0.0) scratch.push_back({id, pt.type, d2, pt.location});
  });

  if (spec.family == InteractionFamily::StraussHardcore) {
    for (const auto& nb : scratch) {
      const int j = nb.type;
      if (j == i) {
        const double core = spec.hardcore(i, i);
        if (nb.d2 < core * core) {
          out.feasible = false;
          out.conflict = nb.id;
          return;
        }
        if (nb.d2 <= spec.range(i, i) * spec.range(i, i)) out.v[layout.interaction(i, i)] += 1.0;
      } else {
        const double core = std::max(spec.hardcore(i, j), spec.hardcore(j, i));
        if (nb.d2 < core * core) {
          out.feasible = false;
          out.conflict = nb.id;
          return;
        }
        if (nb.d2 <= spec.range(i, j) * spec.range(i, j)) out.v[layout.interaction(i, j)] += 1.0;
        if (nb.d2 <= spec.range(j, i) * spec.range(j, i)) out.v[layout.interaction(j, i)] += 1.0;
      }
    }
    return;
  }

  // Geyer saturation.
  std::vector<int> direct(static_cast<std::size_t>(p), 0);
  for (const auto& nb : scratch) {
    if (nb.d2 <= spec.range(i, nb.type) * spec.range(i, nb.type)) ++direct[nb.type];
  }
  for (int j = 0; j < p; ++j) {
    const double c = spec.saturation(i, j);
    const double s = j == i ? 0.5 * direct[j] : static_cast<double>(direct[j]);
    out.v[layout.interaction(i, j)] += std::min(s, c);
  }
  for (const auto& nb : scratch) {
    const int j = nb.type;
    const double r_ji = spec.range(j, i);
    if (nb.d2 > r_ji * r_ji) continue;
    // nb gains u as an R_ji-neighbour; its saturated count may increase.
    const int m = detail::count_around(context, nb.location, r_ji, i, u);
    const double c = spec.saturation(j, i);
    if (j == i) {
      out.v[layout.interaction(i, i)] += std::min(0.5 * (m + 1), c) - std::min(0.5 * m, c);
    } else {
      out.v[layout.interaction(j, i)] += std::min<double>(m + 1, c) - std::min<double>(m, c);
    }
  }
}

inline LocalContribution local_contribution(const StatisticModel& model, const NeighborIndex& context, const Point& u,
                                            int type) {
  LocalContribution out;
  std::vector<detail::Neighbour> scratch;
  local_contribution(model, model.layout(), context, u, type, out, scratch);
  return out;
}

/// Pattern-level convenience; builds a neighbour index on each call.
inline LocalContribution local_contribution(const StatisticModel& model, const MarkedPointPattern& y, const Point& u,
                                            int type) {
  const NeighborIndex idx(y, markov_range(model.interaction));
  return local_contribution(model, idx, u, type);
}

}  // namespace smpp
