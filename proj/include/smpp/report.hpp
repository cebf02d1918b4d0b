#pragma once

#include "smpp/error.hpp"
#include "smpp/fit.hpp"
#include "smpp/text_io.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace smpp {

inline constexpr int kResultSchema = 1;
inline constexpr const char* kVersion = "1.0.0";

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline nlohmann::json fit_result_to_json(const FitResult& r) {
  nlohmann::json coef = nlohmann::json::array();
  for (std::size_t j = 0; j < r.beta_names.size(); ++j) {
    nlohmann::json row = {{"name", r.beta_names[j]}, {"estimate", r.beta_hat[static_cast<Eigen::Index>(j)]}};
    if (j < r.ci.size()) {
      const auto& ci = r.ci[j];
      row["se"] = ci.se;
      row["ci_low"] = ci.low;
      row["ci_high"] = ci.high;
      row["valid"] = ci.valid;
    }
    coef.push_back(std::move(row));
  }
  nlohmann::json j = {{"schema", kResultSchema},
                      {"converged", r.converged},
                      {"iterations", r.iterations},
                      {"logpl", r.logpl},
                      {"score_norm", r.score_norm},
                      {"n_points", r.n_points},
                      {"type_counts", r.type_counts},
                      {"erosion", r.erosion},
                      {"pair_range", r.pair_range},
                      {"level", r.ci.empty() ? 0.0 : r.ci.front().level},
                      {"coefficients", std::move(coef)},
                      {"beta_names", r.beta_names},
                      {"beta", vector_to_json(r.beta_hat)},
                      {"gamma_names", r.gamma_names},
                      {"gamma", vector_to_json(r.gamma_hat)},
                      {"S_hat", matrix_to_json(r.S_hat)}};
  if (r.Sigma_pair_hat.size()) j["Sigma_pair_hat"] = matrix_to_json(r.Sigma_pair_hat);
  if (r.vcov.size()) j["vcov"] = matrix_to_json(r.vcov);
  return j;
}

/// Natural parameters stored in a result file, keyed by name.
inline std::map<std::string, double> gamma_from_result(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema") != kResultSchema) throw InputError("result file has an unsupported schema");
  const auto names = j.at("gamma_names").get<std::vector<std::string>>();
  const auto values = j.at("gamma").get<std::vector<double>>();
  if (names.size() != values.size()) throw InputError("result file: gamma names and values differ in length");
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = values[i];
  return out;
}

inline void write_coefficient_table(std::ostream& out, const FitResult& r) {
  out << "parameter,estimate,se,ci_low,ci_high,valid\n";
  for (std::size_t j = 0; j < r.beta_names.size(); ++j) {
    out << r.beta_names[j] << ',' << detail::format_double(r.beta_hat[static_cast<Eigen::Index>(j)]);
    if (j < r.ci.size()) {
      const auto& ci = r.ci[j];
      out << ',' << detail::format_double(ci.se) << ',' << detail::format_double(ci.low) << ','
          << detail::format_double(ci.high) << ',' << (ci.valid ? 1 : 0);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

inline void write_profile_table(std::ostream& out, const ProfileResult& p) {
  out << "range_within,range_between,saturation,ok,converged,logpl,error\n";
  for (const auto& row : p.table) {
    std::string err = row.error;
    for (auto& ch : err) {
      if (ch == ',' || ch == '\n') ch = ' ';
    }
    out << detail::format_double(row.combo.range_within) << ',' << detail::format_double(row.combo.range_between)
        << ',' << detail::format_double(row.combo.saturation) << ',' << (row.ok ? 1 : 0) << ','
        << (row.converged ? 1 : 0) << ',' << (row.ok ? detail::format_double(row.logpl) : std::string()) << ','
        << err << '\n';
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace smpp
