#pragma once

#include "smpp/error.hpp"
#include "smpp/fit.hpp"
#include "smpp/grf.hpp"
#include "smpp/model.hpp"
#include "smpp/parallel.hpp"
#include "smpp/random.hpp"
#include "smpp/simulate.hpp"
#include "smpp/text_io.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace smpp {

/// Monte-Carlo study: one realisation of the baseline and covariate fields
/// is shared by every replication on every window; each replication draws
/// a pattern from the true model and refits the working model.
struct StudyConfig {
  int types = 3;
  GrfSpec baseline;
  std::vector<std::pair<std::string, GrfSpec>> covariates;  // shared by all types
  std::size_t grid_cells = 64;  // per side, over the bounding box of the windows
  /// Interaction of the true model; std::nullopt for a Poisson truth.
  std::optional<InteractionSpec> truth_interaction;
  /// Natural parameters of the truth by name ("1:intercept", "2:z", "g11").
  std::map<std::string, double> truth_gamma;
  InteractionSpec fit_interaction;
  ReparamConstraints constraints;
  std::vector<Rect> windows;
  std::size_t replications = 100;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::size_t chain_steps = 0;  // 0: chain default
  FitOptions fit;
  unsigned threads = 1;
};

struct ReplicateRecord {
  std::size_t window = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<std::size_t> type_counts;
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  std::vector<bool> covered;
};

struct StudySummaryRow {
  std::size_t window = 0;
  std::string parameter;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double empirical_se = 0.0;
  double mean_estimated_se = 0.0;
  double coverage = 0.0;
  std::size_t successes = 0;
};

struct StudyReport {
  std::vector<std::string> parameters;
  Eigen::VectorXd truth_beta;
  std::vector<StudySummaryRow> summary;
  std::vector<ReplicateRecord> replicates;
  std::vector<std::size_t> failures;         // per window
  std::vector<std::vector<double>> mean_counts;  // per window, per type
  std::uint64_t baseline_seed = 0;
  std::vector<std::uint64_t> covariate_seeds;

  const StudySummaryRow& row(std::size_t window, const std::string& name) const {
    for (const auto& r : summary) {
      if (r.window == window && r.parameter == name) return r;
    }
    throw InputError("no study row for parameter '" + name + "'");
  }
};

namespace detail {

inline Rect bounding_box(const std::vector<Rect>& rects) {
  Rect box = rects.front();
  for (const auto& r : rects) {
    box.x_min = std::min(box.x_min, r.x_min);
    box.x_max = std::max(box.x_max, r.x_max);
    box.y_min = std::min(box.y_min, r.y_min);
    box.y_max = std::max(box.y_max, r.y_max);
  }
  return box;
}

inline StatisticModel study_statistics(const StudyConfig& cfg, const InteractionSpec& interaction,
                                       const std::vector<CovariateField>& fields) {
  StatisticModel m;
  m.covariates.assign(static_cast<std::size_t>(cfg.types), TypeCovariates{true, fields});
  m.interaction = interaction;
  m.validate();
  return m;
}

inline Eigen::VectorXd named_vector(const std::vector<std::string>& names, const std::map<std::string, double>& values) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));
  for (const auto& [name, value] : values) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("unknown true parameter '" + name + "'");
    v[it - names.begin()] = value;
  }
  return v;
}

}  // namespace detail

/// Working-model parameters implied by natural parameters: the reference
/// type's covariate block is subtracted from every type's (the conditional
/// type distribution is invariant to that shift), then beta solves
/// T beta = gamma exactly or the truth is not representable.
inline Eigen::VectorXd true_beta(const StatisticModel& model, const ReparamMap& map,
                                 const ReparamConstraints& constraints, Eigen::VectorXd gamma) {
  const StatLayout layout = model.layout();
  if (constraints.reference_type) {
    const int ref = *constraints.reference_type;
    const Eigen::VectorXd base = gamma.segment(layout.block_start(ref), layout.covariate_count(ref));
    for (int i = 0; i < model.types(); ++i) {
      if (!(model.covariates[i] == model.covariates[ref])) {
        throw InputError("reference contrasts need identical covariates for every type");
      }
      gamma.segment(layout.block_start(i), layout.covariate_count(i)) -= base;
    }
  }
  const Eigen::VectorXd beta = map.T.colPivHouseholderQr().solve(gamma);
  if ((map.T * beta - gamma).lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + gamma.lpNorm<Eigen::Infinity>())) {
    throw InputError("true parameters violate the working model's constraints");
  }
  return beta;
}

/// Fields, true model and working model shared by every replication.
struct StudySetup {
  ModelSpec truth;
  Eigen::VectorXd truth_gamma;
  StatisticModel fit_stats;
  ReparamMap fit_map;
  Eigen::VectorXd truth_beta;
  std::uint64_t baseline_seed = 0;
  std::vector<std::uint64_t> covariate_seeds;
};

inline StudySetup prepare_study(const StudyConfig& cfg) {
  if (cfg.windows.empty()) throw InputError("study needs at least one window");
  StudySetup out;
  const Rect box = detail::bounding_box(cfg.windows);
  const GridGeometry grid = GridGeometry::covering(box, cfg.grid_cells, cfg.grid_cells);

  GrfSpec base_spec = cfg.baseline;
  base_spec.grid = grid;
  out.baseline_seed = derive_seed(cfg.seed, {0xba5e});
  RasterField baseline = simulate_grf(base_spec, out.baseline_seed);
  std::vector<CovariateField> fields;
  for (std::size_t c = 0; c < cfg.covariates.size(); ++c) {
    GrfSpec spec = cfg.covariates[c].second;
    spec.grid = grid;
    out.covariate_seeds.push_back(derive_seed(cfg.seed, {0xc0, c}));
    fields.push_back({cfg.covariates[c].first,
                      std::make_shared<const RasterField>(simulate_grf(spec, out.covariate_seeds.back()))});
  }

  out.fit_stats = detail::study_statistics(cfg, cfg.fit_interaction, fields);
  out.fit_map = build_reparam(out.fit_stats, cfg.constraints);
  const InteractionSpec truth_spec = cfg.truth_interaction.value_or(cfg.fit_interaction);
  out.truth.stats = detail::study_statistics(cfg, truth_spec, fields);
  out.truth.reparam = ReparamMap::identity(out.truth.stats.parameter_names());
  out.truth.baseline = std::move(baseline);
  out.truth_gamma = detail::named_vector(out.truth.stats.parameter_names(), cfg.truth_gamma);
  if (!cfg.truth_interaction) {
    const StatLayout lay = out.truth.stats.layout();
    for (int i = 0; i < cfg.types; ++i) {
      for (int j = 0; j < cfg.types; ++j) {
        if (out.truth_gamma[lay.interaction(i, j)] != 0.0) throw InputError("Poisson truth cannot have interactions");
      }
    }
  }
  // The working model must contain the truth, with matching gamma layout.
  if (out.truth.stats.parameter_names() != out.fit_stats.parameter_names()) {
    throw InputError("true and working models differ in parameter layout");
  }
  out.truth_beta = true_beta(out.fit_stats, out.fit_map, cfg.constraints, out.truth_gamma);
  return out;
}

/// Draws one pattern from the true model of a study.
inline MarkedPointPattern sample_truth(const StudyConfig& cfg, const StudySetup& setup, const Window& window,
                                       std::uint64_t seed) {
  if (!cfg.truth_interaction) return sample_poisson_model(setup.truth, setup.truth_gamma, window, seed);
  ChainConfig chain;
  chain.seed = seed;
  chain.steps = cfg.chain_steps;
  return sample_gibbs_mh(setup.truth, setup.truth_gamma, window, chain);
}

/// Runs the study. Replication failures are recorded, not thrown.
inline StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.replications < 1) throw InputError("replications must be at least 1");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw InputError("level must lie in (0,1)");

  const StudySetup setup = prepare_study(cfg);
  StudyReport report;
  report.baseline_seed = setup.baseline_seed;
  report.covariate_seeds = setup.covariate_seeds;
  report.parameters = setup.fit_map.beta_names;
  report.truth_beta = setup.truth_beta;
  const StatisticModel& fit_stats = setup.fit_stats;
  const ReparamMap& fit_map = setup.fit_map;

  const std::size_t nw = cfg.windows.size();
  const std::size_t reps = cfg.replications;
  report.replicates.resize(nw * reps);
  FitOptions fit_options = cfg.fit;
  fit_options.level = cfg.level;
  fit_options.threads = 1;
  parallel_for(nw * reps, cfg.threads, [&](std::size_t job) {
    ReplicateRecord& rec = report.replicates[job];
    rec.window = job / reps;
    rec.replicate = job % reps;
    rec.seed = derive_seed(cfg.seed, {rec.window, rec.replicate});
    const Window window(cfg.windows[rec.window]);
    try {
      const MarkedPointPattern y = sample_truth(cfg, setup, window, rec.seed);
      rec.type_counts.assign(static_cast<std::size_t>(cfg.types), 0);
      for (const auto& pt : y.points()) ++rec.type_counts[static_cast<std::size_t>(pt.type)];
      const StatCache cache = compute_stat_cache(y, fit_stats);
      const FitResult fit = fit_newton(cache, fit_map, fit_options);
      if (!fit.converged) throw Error("Newton iteration did not converge");
      rec.estimate = fit.beta_hat;
      rec.se.resize(fit.beta_hat.size());
      rec.covered.resize(static_cast<std::size_t>(fit.beta_hat.size()));
      bool valid = true;
      for (Eigen::Index j = 0; j < fit.beta_hat.size(); ++j) {
        const auto& ci = fit.ci[static_cast<std::size_t>(j)];
        valid = valid && ci.valid;
        rec.se[j] = ci.se;
        rec.covered[static_cast<std::size_t>(j)] = ci.low <= report.truth_beta[j] && report.truth_beta[j] <= ci.high;
      }
      if (!valid) throw Error("negative variance estimate");
      rec.ok = true;
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  const auto k = static_cast<Eigen::Index>(report.parameters.size());
  report.failures.assign(nw, 0);
  report.mean_counts.assign(nw, std::vector<double>(static_cast<std::size_t>(cfg.types), 0.0));
  for (std::size_t w = 0; w < nw; ++w) {
    std::vector<const ReplicateRecord*> good;
    std::size_t counted = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const ReplicateRecord& rec = report.replicates[w * reps + r];
      if (!rec.type_counts.empty()) {
        ++counted;
        for (int i = 0; i < cfg.types; ++i) report.mean_counts[w][i] += static_cast<double>(rec.type_counts[i]);
      }
      if (rec.ok) {
        good.push_back(&rec);
      } else {
        ++report.failures[w];
      }
    }
    if (counted) {
      for (auto& c : report.mean_counts[w]) c /= static_cast<double>(counted);
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      StudySummaryRow row;
      row.window = w;
      row.parameter = report.parameters[static_cast<std::size_t>(j)];
      row.truth = report.truth_beta[j];
      row.successes = good.size();
      const double n = static_cast<double>(good.size());
      if (good.empty()) {
        row.mean = row.bias = row.empirical_se = row.mean_estimated_se = row.coverage = std::nan("");
        report.summary.push_back(row);
        continue;
      }
      double sum = 0.0, se_sum = 0.0, cover = 0.0;
      for (const auto* rec : good) {
        sum += rec->estimate[j];
        se_sum += rec->se[j];
        cover += rec->covered[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      }
      row.mean = sum / n;
      row.bias = row.mean - row.truth;
      double ss = 0.0;
      for (const auto* rec : good) ss += (rec->estimate[j] - row.mean) * (rec->estimate[j] - row.mean);
      row.empirical_se = good.size() > 1 ? std::sqrt(ss / (n - 1.0)) : std::nan("");
      row.mean_estimated_se = se_sum / n;
      row.coverage = cover / n;
      report.summary.push_back(row);
    }
  }
  return report;
}

inline void write_study_summary(std::ostream& out, const StudyReport& report, const StudyConfig& cfg) {
  out << "window,x_min,x_max,y_min,y_max,parameter,truth,mean,bias,empirical_se,mean_estimated_se,coverage,"
         "successes,failures\n";
  for (const auto& r : report.summary) {
    const Rect& w = cfg.windows[r.window];
    out << r.window + 1 << ',' << detail::format_double(w.x_min) << ',' << detail::format_double(w.x_max) << ','
        << detail::format_double(w.y_min) << ',' << detail::format_double(w.y_max) << ',' << r.parameter << ','
        << detail::format_double(r.truth) << ',' << detail::format_double(r.mean) << ','
        << detail::format_double(r.bias) << ',' << detail::format_double(r.empirical_se) << ','
        << detail::format_double(r.mean_estimated_se) << ',' << detail::format_double(r.coverage) << ','
        << r.successes << ',' << report.failures[r.window] << '\n';
  }
}

inline void write_study_replicates(std::ostream& out, const StudyReport& report) {
  out << "window,replicate,seed,ok,parameter,estimate,se,covered,error\n";
  for (const auto& rec : report.replicates) {
    if (!rec.ok) {
      std::string msg = rec.error;
      for (auto& ch : msg) {
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
      }
      out << rec.window + 1 << ',' << rec.replicate + 1 << ',' << rec.seed << ",0,,,,," << msg << '\n';
      continue;
    }
    for (std::size_t j = 0; j < report.parameters.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out << rec.window + 1 << ',' << rec.replicate + 1 << ',' << rec.seed << ",1," << report.parameters[j] << ','
          << detail::format_double(rec.estimate[jj]) << ',' << detail::format_double(rec.se[jj]) << ','
          << (rec.covered[j] ? 1 : 0) << ",\n";
    }
  }
}

}  // namespace smpp
