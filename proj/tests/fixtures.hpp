#pragma once

#include "smpp/smpp.hpp"

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace fixture {

inline smpp::Window unit_window(double side = 1.0) { return smpp::Window(smpp::Rect{0.0, side, 0.0, side}); }

inline std::shared_ptr<const smpp::RasterField> constant_field(double value, const smpp::Rect& r, std::size_t n = 8) {
  return std::make_shared<const smpp::RasterField>(smpp::RasterField::constant(smpp::GridGeometry::covering(r, n, n), value));
}

/// Smooth deterministic covariate on the rectangle.
inline std::shared_ptr<const smpp::RasterField> wave_field(const smpp::Rect& r, std::size_t n = 32) {
  const auto g = smpp::GridGeometry::covering(r, n, n);
  std::vector<double> v(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto u = g.cell_center(c);
    v[c] = 0.4 * std::sin(6.0 * u.x) * std::cos(4.0 * u.y);
  }
  return std::make_shared<const smpp::RasterField>(smpp::RasterField(g, std::move(v)));
}

inline smpp::StatisticModel model(int types, smpp::InteractionSpec interaction,
                                  std::vector<smpp::CovariateField> fields = {}, bool intercept = true) {
  smpp::StatisticModel m;
  m.covariates.assign(static_cast<std::size_t>(types), smpp::TypeCovariates{intercept, std::move(fields)});
  m.interaction = std::move(interaction);
  m.validate();
  return m;
}

inline smpp::InteractionSpec strauss(int p, double within, double between, double core_w = 0.0, double core_b = 0.0) {
  return smpp::InteractionSpec::strauss(smpp::InteractionSpec::two_level(p, within, between),
                                        smpp::InteractionSpec::two_level(p, core_w, core_b));
}

inline smpp::InteractionSpec geyer(int p, double within, double between, double c) {
  return smpp::InteractionSpec::geyer(smpp::InteractionSpec::two_level(p, within, between),
                                      Eigen::MatrixXd::Constant(p, p, c));
}

inline smpp::MarkedPointPattern pattern(std::vector<smpp::MarkedPoint> pts, int types, double side = 1.0) {
  return smpp::MarkedPointPattern(std::move(pts), unit_window(side), types);
}

/// Per-test scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() / ("smpp_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace fixture
