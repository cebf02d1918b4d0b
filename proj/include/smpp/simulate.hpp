#pragma once

#include "smpp/error.hpp"
#include "smpp/model.hpp"
#include "smpp/neighbor_index.hpp"
#include "smpp/pattern.hpp"
#include "smpp/text_io.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace smpp {

using IntensityFn = std::function<double(const Point&)>;

/// Independent thinning of homogeneous Poisson processes, one per type:
/// type i proposals have rate dominating[i] on the window rectangle and are
/// kept with probability intensity[i](u) / dominating[i] when u is in W.
inline MarkedPointPattern sample_poisson_multitype(const Window& window, std::span<const IntensityFn> intensity,
                                                   std::span<const double> dominating, std::uint64_t seed) {
  if (intensity.size() != dominating.size() || intensity.empty()) {
    throw InputError("need one intensity and one dominating constant per type");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Rect& r = window.rect();
  std::vector<MarkedPoint> points;
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!(dominating[i] >= 0.0) || !std::isfinite(dominating[i])) {
      throw InputError("dominating constant must be finite and non-negative");
    }
    if (dominating[i] == 0.0) continue;
    std::poisson_distribution<long long> count(dominating[i] * r.area());
    const long long n = count(rng);
    for (long long m = 0; m < n; ++m) {
      const Point u{r.x_min + r.width() * unif(rng), r.y_min + r.height() * unif(rng)};
      const double keep = unif(rng);
      if (!window.contains(u)) continue;
      const double lambda = intensity[i](u);
      if (lambda > dominating[i] * (1.0 + 1e-12)) {
        throw SimulationError("intensity " + detail::format_double(lambda) + " of type " + std::to_string(i + 1) +
                              " at (" + detail::format_double(u.x) + ", " + detail::format_double(u.y) +
                              ") exceeds the dominating constant " + detail::format_double(dominating[i]));
      }
      if (keep * dominating[i] < lambda) points.push_back({u, static_cast<int>(i)});
    }
  }
  return MarkedPointPattern(std::move(points), window, static_cast<int>(intensity.size()));
}

/// First-order intensities phi_0(u) exp(gamma_i0' z_i(u)) of a model and
/// bounds for them over the rasters.
struct FirstOrder {
  std::vector<IntensityFn> intensity;
  std::vector<double> bound;
};

inline FirstOrder first_order_intensities(const ModelSpec& model, const Eigen::VectorXd& gamma) {
  if (!model.baseline) throw InputError("simulation needs a baseline field");
  const StatLayout layout = model.stats.layout();
  FirstOrder out;
  for (int i = 0; i < model.types(); ++i) {
    const auto& cov = model.stats.covariates[i];
    const Eigen::VectorXd coef = gamma.segment(layout.block_start(i), layout.covariate_count(i));
    const RasterField* base = &*model.baseline;
    out.intensity.push_back([base, cov, coef](const Point& u) {
      Eigen::VectorXd z(cov.size());
      cov.evaluate(u, z);
      return base->lookup(u) * std::exp(coef.dot(z));
    });
    out.bound.push_back(first_order_bound(model, gamma, i));
  }
  return out;
}

/// Exact draw of the model with all interaction parameters set to zero.
inline MarkedPointPattern sample_poisson_model(const ModelSpec& model, const Eigen::VectorXd& gamma,
                                               const Window& window, std::uint64_t seed) {
  const FirstOrder fo = first_order_intensities(model, gamma);
  return sample_poisson_multitype(window, fo.intensity, fo.bound, seed);
}

/// Expected number of points per type of the first-order (Poisson) model,
/// by midpoint quadrature on the baseline raster cells inside the window.
inline std::vector<double> expected_first_order_counts(const ModelSpec& model, const Eigen::VectorXd& gamma,
                                                       const Window& window) {
  const FirstOrder fo = first_order_intensities(model, gamma);
  const auto& g = model.baseline->geometry();
  std::vector<double> out(fo.intensity.size(), 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const Point u = g.cell_center(c);
    if (!window.contains(u)) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += fo.intensity[i](u) * g.dx * g.dy;
  }
  return out;
}

enum class ChainInit { Empty, Poisson };

struct ChainConfig {
  std::size_t steps = 0;  // 0 selects 1e5 * expected count / 100 (at least 1e4)
  double birth_prob = 0.5;
  std::uint64_t seed = 1;
  ChainInit init = ChainInit::Poisson;
  /// Declared local-stability bound; exceeding it aborts the chain. When
  /// unset, the bound implied by the parameters is used if one exists.
  std::optional<double> lambda_bound;
  std::size_t max_points = 1000000;
  /// Optional starting configuration; must be feasible.
  std::optional<std::vector<MarkedPoint>> initial_points;
  /// Optional finite support: births propose uniformly among these sites
  /// (at most one point per site) instead of uniformly on the window.
  std::vector<Point> sites;
};

/// Birth-death Metropolis-Hastings chain targeting the density
/// prod phi_0(u) exp(gamma' v(y)) on a bounded window (free boundary).
class BirthDeathChain {
 public:
  struct Step {
    bool birth = false;
    bool accepted = false;
    MarkedPoint point{};  // proposed birth or death; unset for an empty death proposal
  };

  BirthDeathChain(const ModelSpec& model, Eigen::VectorXd gamma, Window window, ChainConfig config)
      : model_(model),
        gamma_(std::move(gamma)),
        window_(std::move(window)),
        config_(std::move(config)),
        layout_(model.stats.layout()),
        index_(window_.rect(), markov_range(model.stats.interaction)),
        rng_(config_.seed) {
    model_.validate();
    if (!model_.baseline) throw InputError("simulation needs a baseline field");
    if (gamma_.size() != layout_.dimension()) throw InputError("gamma has the wrong length");
    if (!(config_.birth_prob > 0.0 && config_.birth_prob < 1.0)) throw InputError("birth probability must lie in (0,1)");
    bound_ = config_.lambda_bound ? config_.lambda_bound : local_stability_bound(model_, gamma_);
    volume_ = config_.sites.empty() ? window_.area() : static_cast<double>(config_.sites.size());
    if (!config_.sites.empty()) {
      for (const auto& s : config_.sites) {
        if (!window_.contains(s)) throw InputError("candidate site outside the window");
      }
      site_of_id_.clear();
      occupied_.assign(config_.sites.size(), false);
    }
    initialise();
  }

  Step step() {
    Step s;
    s.birth = unif_(rng_) < config_.birth_prob;
    const double q = config_.birth_prob;
    const double p = static_cast<double>(model_.types());
    const double n = static_cast<double>(live_.size());
    if (s.birth) {
      std::optional<std::size_t> site;
      Point u;
      if (config_.sites.empty()) {
        u = uniform_location();
      } else {
        site = std::min(static_cast<std::size_t>(unif_(rng_) * static_cast<double>(config_.sites.size())),
                        config_.sites.size() - 1);
        u = config_.sites[*site];
      }
      const int type = std::min(static_cast<int>(unif_(rng_) * p), model_.types() - 1);
      const double accept_u = unif_(rng_);
      s.point = {u, type};
      if (site && occupied_[*site]) return s;
      const double lambda = intensity(u, type);
      const double ratio = lambda * (1.0 - q) * p * volume_ / (q * (n + 1.0));
      if (accept_u < ratio) {
        add({u, type}, site);
        s.accepted = true;
      }
      return s;
    }
    if (live_.empty()) return s;
    const std::size_t pick = std::min(static_cast<std::size_t>(unif_(rng_) * n), live_.size() - 1);
    const double accept_u = unif_(rng_);
    const std::size_t id = live_[pick];
    const MarkedPoint pt = index_.point(id);
    s.point = pt;
    const double lambda = intensity(pt.location, pt.type);
    const double ratio = lambda > 0.0 ? q * n / ((1.0 - q) * p * volume_ * lambda) : 1.0;
    if (accept_u < ratio) {
      remove(pick);
      s.accepted = true;
    }
    return s;
  }

  void run(std::size_t steps) {
    for (std::size_t s = 0; s < steps; ++s) step();
  }

  std::size_t size() const noexcept { return live_.size(); }

  std::vector<MarkedPoint> points() const {
    std::vector<MarkedPoint> out;
    out.reserve(live_.size());
    for (const auto id : live_) out.push_back(index_.point(id));
    return out;
  }

  /// Occupancy code for site-based chains: 0 empty, else mark + 1, per site.
  std::vector<int> site_states() const {
    std::vector<int> out(config_.sites.size(), 0);
    for (const auto id : live_) out[site_of_id_.at(id)] = index_.point(id).type + 1;
    return out;
  }

  MarkedPointPattern state() const { return MarkedPointPattern(points(), window_, model_.types()); }

  /// Conditional intensity of (u, type) given the current state (a point
  /// located at u is ignored).
  double intensity(const Point& u, int type) {
    local_contribution(model_.stats, layout_, index_, u, type, lc_, scratch_);
    if (!lc_.feasible) return 0.0;
    const double phi0 = model_.baseline->lookup(u);
    if (phi0 <= 0.0) return 0.0;
    const double lambda = phi0 * std::exp(gamma_.dot(lc_.v));
    if (bound_ && lambda > *bound_ * (1.0 + 1e-9)) {
      throw SimulationError("conditional intensity " + detail::format_double(lambda) +
                            " exceeds the local-stability bound " + detail::format_double(*bound_) +
                            "; the model is not locally stable");
    }
    return lambda;
  }

  double expected_first_order_count() const {
    if (!config_.sites.empty()) {
      const FirstOrder fo = first_order_intensities(model_, gamma_);
      double total = 0.0;
      for (const auto& s : config_.sites) {
        for (const auto& f : fo.intensity) total += f(s);
      }
      return total;
    }
    double total = 0.0;
    for (const double c : expected_first_order_counts(model_, gamma_, window_)) total += c;
    return total;
  }

  std::size_t default_steps() const {
    const double n = 1e5 * expected_first_order_count() / 100.0;
    return static_cast<std::size_t>(std::max(1e4, std::ceil(n)));
  }

 private:
  Point uniform_location() {
    const Rect& r = window_.rect();
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Point u{r.x_min + r.width() * unif_(rng_), r.y_min + r.height() * unif_(rng_)};
      if (window_.contains(u)) return u;
    }
    throw SimulationError("could not draw a location inside the window mask");
  }

  void add(const MarkedPoint& pt, std::optional<std::size_t> site) {
    if (live_.size() >= config_.max_points) {
      throw SimulationError("chain exceeded " + std::to_string(config_.max_points) +
                            " points; the model appears unstable");
    }
    const std::size_t id = index_.insert(pt);
    position_.resize(index_.slots(), 0);
    position_[id] = live_.size();
    live_.push_back(id);
    if (site) {
      site_of_id_[id] = *site;
      occupied_[*site] = true;
    }
  }

  void remove(std::size_t pick) {
    const std::size_t id = live_[pick];
    index_.erase(id);
    live_[pick] = live_.back();
    position_[live_[pick]] = pick;
    live_.pop_back();
    if (!config_.sites.empty()) {
      occupied_[site_of_id_.at(id)] = false;
      site_of_id_.erase(id);
    }
  }

  void initialise() {
    if (config_.initial_points) {
      for (const auto& pt : *config_.initial_points) {
        if (!window_.contains(pt.location)) throw SimulationError("initial point outside the window");
        std::optional<std::size_t> site;
        if (!config_.sites.empty()) {
          for (std::size_t s = 0; s < config_.sites.size(); ++s) {
            if (config_.sites[s] == pt.location) site = s;
          }
          if (!site || occupied_[*site]) throw SimulationError("initial point is not on a free candidate site");
        }
        if (intensity(pt.location, pt.type) <= 0.0) {
          throw SimulationError("initial state is infeasible at (" + detail::format_double(pt.location.x) + ", " +
                                detail::format_double(pt.location.y) + ")");
        }
        add(pt, site);
      }
      return;
    }
    if (config_.init == ChainInit::Empty || !config_.sites.empty()) return;
    // Poisson start at the first-order intensity, dropping points that
    // would violate a hard core.
    const MarkedPointPattern start =
        sample_poisson_model(model_, gamma_, window_, derive_start_seed(config_.seed));
    for (const auto& pt : start.points()) {
      local_contribution(model_.stats, layout_, index_, pt.location, pt.type, lc_, scratch_);
      if (lc_.feasible) add(pt, std::nullopt);
    }
  }

  static std::uint64_t derive_start_seed(std::uint64_t seed) { return seed ^ 0xa0761d6478bd642fULL; }

  ModelSpec model_;
  Eigen::VectorXd gamma_;
  Window window_;
  ChainConfig config_;
  StatLayout layout_;
  NeighborIndex index_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::optional<double> bound_;
  double volume_ = 1.0;
  std::vector<std::size_t> live_;
  std::vector<std::size_t> position_;
  std::unordered_map<std::size_t, std::size_t> site_of_id_;
  std::vector<bool> occupied_;
  LocalContribution lc_;
  std::vector<detail::Neighbour> scratch_;
};

/// Runs a birth-death chain for config.steps proposals (or the default
/// length) and returns its final state.
inline MarkedPointPattern sample_gibbs_mh(const ModelSpec& model, const Eigen::VectorXd& gamma, const Window& window,
                                          const ChainConfig& config) {
  BirthDeathChain chain(model, gamma, window, config);
  chain.run(config.steps ? config.steps : chain.default_steps());
  return chain.state();
}

}  // namespace smpp
