#pragma once

#include "smpp/error.hpp"
#include "smpp/neighbor_index.hpp"
#include "smpp/numeric.hpp"
#include "smpp/parallel.hpp"
#include "smpp/pattern.hpp"
#include "smpp/raster.hpp"
#include "smpp/statistics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <vector>

namespace smpp {

struct KernelSpec {
  double bandwidth = 0.25;
  GridGeometry grid;

  void validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InputError("kernel bandwidth must be positive");
    grid.validate();
  }
};

/// Planar Epanechnikov kernel with support B(0, w), integrating to one.
inline double epanechnikov(double d2, double bandwidth) {
  const double w2 = bandwidth * bandwidth;
  if (d2 > w2) return 0.0;
  return 2.0 / (std::numbers::pi * w2) * (1.0 - d2 / w2);
}

/// Weights 1 / exp(gamma' v{(u,i), y \ (u,i)}) of every point of y.
inline std::vector<double> baseline_weights(const MarkedPointPattern& y, const StatisticModel& model,
                                            const Eigen::VectorXd& gamma) {
  model.validate();
  const StatLayout layout = model.layout();
  if (gamma.size() != layout.dimension()) throw InputError("gamma has the wrong length");
  const NeighborIndex idx(y, markov_range(model.interaction));
  std::vector<double> w(y.size());
  LocalContribution lc;
  std::vector<detail::Neighbour> scratch;
  for (std::size_t n = 0; n < y.size(); ++n) {
    local_contribution(model, layout, idx, y[n].location, y[n].type, lc, scratch);
    if (!lc.feasible) throw InfeasibleDataError("point " + std::to_string(n + 1) + " violates a hard core");
    w[n] = std::exp(-gamma.dot(lc.v));
  }
  return w;
}

/// phi0_hat(v) = (1/p) sum over y of k(u - v) / exp(gamma' v{(u,i), y \ (u,i)})
/// at every cell centre of spec.grid; no edge correction.
inline RasterField kernel_phi0(const MarkedPointPattern& y, const StatisticModel& model, const Eigen::VectorXd& gamma,
                               const KernelSpec& spec, unsigned threads = 1) {
  spec.validate();
  const std::vector<double> weight = baseline_weights(y, model, gamma);
  const Rect ext = spec.grid.extent();
  const Rect& wr = y.window().rect();
  const Rect bounds{std::min(ext.x_min, wr.x_min), std::max(ext.x_max, wr.x_max), std::min(ext.y_min, wr.y_min),
                    std::max(ext.y_max, wr.y_max)};
  NeighborIndex idx(bounds, spec.bandwidth);
  for (const auto& pt : y.points()) idx.insert(pt);
  const double p = static_cast<double>(y.types());
  std::vector<double> values(spec.grid.cells(), 0.0);
  parallel_for(values.size(), threads, [&](std::size_t c) {
    const Point v = spec.grid.cell_center(c);
    CompensatedSum sum;
    idx.for_each_within(v, spec.bandwidth, [&](std::size_t id, const MarkedPoint&, double d2) {
      sum.add(epanechnikov(d2, spec.bandwidth) * weight[id]);
    });
    values[c] = sum.value() / p;
  });
  return RasterField(spec.grid, std::move(values));
}

/// Replaces each cell by the mean over cells sharing its label. Cells with
/// a NaN label are left unchanged.
inline RasterField region_average(const RasterField& field, const RasterField& labels) {
  if (!(field.geometry() == labels.geometry())) throw InputError("label raster grid differs from the field grid");
  std::map<double, std::pair<double, std::size_t>> acc;
  const auto& v = field.values();
  const auto& l = labels.values();
  for (std::size_t c = 0; c < v.size(); ++c) {
    if (std::isnan(l[c])) continue;
    auto& a = acc[l[c]];
    a.first += v[c];
    ++a.second;
  }
  std::vector<double> out = v;
  for (std::size_t c = 0; c < v.size(); ++c) {
    if (std::isnan(l[c])) continue;
    const auto& a = acc[l[c]];
    out[c] = a.first / static_cast<double>(a.second);
  }
  return RasterField(field.geometry(), std::move(out));
}

/// Pearson correlation between log(phi0_hat) and a reference raster on the
/// same grid, over cells where phi0_hat > 0 and the reference is finite.
inline double log_correlation(const RasterField& phi0, const RasterField& reference) {
  if (!(phi0.geometry() == reference.geometry())) throw InputError("reference raster grid differs from the estimate");
  std::vector<double> a, b;
  for (std::size_t c = 0; c < phi0.values().size(); ++c) {
    const double x = phi0.values()[c], r = reference.values()[c];
    if (x > 0.0 && std::isfinite(r)) {
      a.push_back(std::log(x));
      b.push_back(r);
    }
  }
  if (a.size() < 2) throw InputError("too few comparable cells for a correlation");
  const Eigen::Map<const Eigen::VectorXd> va(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> vb(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd ca = va.array() - va.mean();
  const Eigen::VectorXd cb = vb.array() - vb.mean();
  const double denom = ca.norm() * cb.norm();
  if (denom == 0.0) throw InputError("correlation undefined for a constant raster");
  return ca.dot(cb) / denom;
}

}  // namespace smpp
