#pragma once

#include "smpp/error.hpp"
#include "smpp/neighbor_index.hpp"
#include "smpp/parallel.hpp"
#include "smpp/pattern.hpp"
#include "smpp/statistics.hpp"
#include "smpp/text_io.hpp"

#include <optional>
#include <string>
#include <vector>

namespace smpp {

/// Statistics of one observed point (u, i) in the eroded domain D: the
/// local contributions v{(u,l), Y \ (u,i)} for every candidate mark l.
struct CachedPoint {
  Point location;
  int mark = 0;
  std::size_t pattern_index = 0;
  std::vector<LocalContribution> stats;
  /// Non-empty when the observed mark itself violates a hard core.
  std::string violation;
};

/// Parameter-free design of the conditional pseudo likelihood. Only points
/// of Y_D are response terms; the whole pattern on W is used as context.
struct StatCache {
  int types = 0;
  Eigen::Index dimension = 0;
  double pair_range = 0.0;
  double erosion = 0.0;
  Window domain;
  std::vector<std::string> gamma_names;
  std::vector<CachedPoint> points;

  std::size_t size() const noexcept { return points.size(); }
};

/// Builds the cache. `erosion` defaults to markov_range(model.interaction).
inline StatCache compute_stat_cache(const MarkedPointPattern& pattern, const StatisticModel& model,
                                    std::optional<double> erosion = std::nullopt, unsigned threads = 1) {
  model.validate();
  if (pattern.types() != model.types()) {
    throw InputError("pattern has " + std::to_string(pattern.types()) + " types but the model has " +
                     std::to_string(model.types()));
  }
  const double range = markov_range(model.interaction);
  StatCache cache;
  cache.types = model.types();
  cache.pair_range = range;
  cache.erosion = erosion.value_or(range);
  cache.domain = erode_window(pattern.window(), cache.erosion);
  cache.gamma_names = model.parameter_names();
  const StatLayout layout = model.layout();
  cache.dimension = layout.dimension();

  std::vector<std::size_t> members;
  for (std::size_t n = 0; n < pattern.size(); ++n) {
    if (cache.domain.contains(pattern[n].location)) members.push_back(n);
  }
  if (members.empty()) throw InputError("no points of the pattern lie in the eroded domain");

  const NeighborIndex context(pattern, range);
  cache.points.resize(members.size());
  parallel_for(members.size(), threads, [&](std::size_t m) {
    std::vector<detail::Neighbour> scratch;
    const MarkedPoint& pt = pattern[members[m]];
    CachedPoint& cp = cache.points[m];
    cp.location = pt.location;
    cp.mark = pt.type;
    cp.pattern_index = members[m];
    cp.stats.resize(static_cast<std::size_t>(model.types()));
    for (int l = 0; l < model.types(); ++l) {
      local_contribution(model, layout, context, pt.location, l, cp.stats[l], scratch);
    }
    const auto& own = cp.stats[pt.type];
    if (!own.feasible) {
      const MarkedPoint& other = pattern[*own.conflict];
      cp.violation = "observed point " + std::to_string(members[m] + 1) + " (" + detail::format_double(pt.location.x) +
                     ", " + detail::format_double(pt.location.y) + ", mark " + std::to_string(pt.type + 1) +
                     ") violates the hard core with point " + std::to_string(*own.conflict + 1) + " (" +
                     detail::format_double(other.location.x) + ", " + detail::format_double(other.location.y) +
                     ", mark " + std::to_string(other.type + 1) + ")";
    }
  });
  return cache;
}

}  // namespace smpp
