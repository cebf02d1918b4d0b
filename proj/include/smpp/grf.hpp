#pragma once

#include "smpp/error.hpp"
#include "smpp/raster.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace smpp {

/// Stationary Gaussian random field with exponential covariance
/// C(u, v) = sigma2 * exp(-|u - v| / phi), sampled at the cell centres of `grid`.
struct GrfSpec {
  double mean = 0.0;
  double sigma2 = 1.0;
  double phi = 0.1;
  GridGeometry grid;
  bool truncate_at_zero = false;
};

inline double exponential_covariance(const GrfSpec& spec, const Point& u, const Point& v) {
  return spec.sigma2 * std::exp(-std::sqrt(squared_distance(u, v)) / spec.phi);
}

inline constexpr std::size_t kDefaultCholeskyCellLimit = 10000;

/// Factorises the covariance once; every draw is an independent field.
class GrfSampler {
 public:
  explicit GrfSampler(GrfSpec spec, std::size_t cell_limit = kDefaultCholeskyCellLimit) : spec_(std::move(spec)) {
    if (!(spec_.sigma2 > 0.0)) throw InputError("GRF variance must be positive");
    if (!(spec_.phi > 0.0)) throw InputError("GRF range must be positive");
    spec_.grid.validate();
    const std::size_t n = spec_.grid.cells();
    if (n > cell_limit) {
      throw InputError("GRF grid has " + std::to_string(n) + " cells; the dense factorisation limit is " +
                       std::to_string(cell_limit));
    }
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Point ua = spec_.grid.cell_center(static_cast<std::size_t>(a));
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double c = exponential_covariance(spec_, ua, spec_.grid.cell_center(static_cast<std::size_t>(b)));
        cov(a, b) = c;
        cov(b, a) = c;
      }
      cov(a, a) += 1e-10 * spec_.sigma2;
    }
    llt_.compute(cov);
    if (llt_.info() != Eigen::Success) throw Error("GRF covariance factorisation failed");
  }

  const GrfSpec& spec() const noexcept { return spec_; }

  RasterField draw(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const Eigen::Index n = llt_.matrixLLT().rows();
    Eigen::VectorXd white(n);
    for (Eigen::Index i = 0; i < n; ++i) white[i] = normal(rng);
    const Eigen::VectorXd field = llt_.matrixL() * white;
    std::vector<double> values(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = spec_.mean + field[i];
      if (spec_.truncate_at_zero && v < 0.0) v = 0.0;
      values[static_cast<std::size_t>(i)] = v;
    }
    return RasterField(spec_.grid, std::move(values));
  }

 private:
  GrfSpec spec_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline RasterField simulate_grf(const GrfSpec& spec, std::uint64_t seed,
                                std::size_t cell_limit = kDefaultCholeskyCellLimit) {
  return GrfSampler(spec, cell_limit).draw(seed);
}

}  // namespace smpp
