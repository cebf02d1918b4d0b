#include "smpp/smpp.hpp"

#include <CLI11.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> level;
  std::optional<int> reference_type;
};

struct Run {
  smpp::RunConfig cfg;
  fs::path out;
  json manifest;
  bool ok = true;

  std::string file(const std::string& name) {
    manifest["outputs"].push_back(name);
    return (out / name).string();
  }
};

void apply_overrides(smpp::RunConfig& cfg, const Overrides& o) {
  if (o.out) cfg.output = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.level) {
    if (!(*o.level > 0.0 && *o.level < 1.0)) throw smpp::InputError("--level must lie in (0,1)");
    cfg.fit.level = *o.level;
  }
  if (o.reference_type) {
    const int ref = *o.reference_type - 1;
    if (cfg.model) {
      if (ref < 0 || ref >= cfg.model->types) throw smpp::InputError("--reference-type out of range");
      cfg.model->constraints.reference_type = ref;
    }
    if (cfg.study) {
      if (ref < 0 || ref >= cfg.study->types) throw smpp::InputError("--reference-type out of range");
      cfg.study->constraints.reference_type = ref;
    }
  }
  if (cfg.threads == 0) cfg.threads = smpp::default_threads();
  cfg.fit.threads = cfg.threads;
}

smpp::MarkedPointPattern load_input_pattern(const smpp::RunConfig& cfg) {
  const int p = cfg.model->types;
  if (cfg.window) return smpp::load_pattern(*cfg.pattern, p, smpp::load_window(*cfg.window));
  return smpp::load_pattern(*cfg.pattern, p);
}

void print_fit(const smpp::FitResult& r) {
  std::cout << "converged: " << (r.converged ? "yes" : "no") << " after " << r.iterations
            << " iterations, logpl = " << smpp::detail::format_double(r.logpl) << ", points in D = " << r.n_points
            << '\n';
  smpp::write_coefficient_table(std::cout, r);
}

void cmd_fit(Run& run) {
  const auto& cfg = run.cfg;
  const auto y = load_input_pattern(cfg);
  const smpp::ModelSpec model = smpp::build_model(*cfg.model, false);
  const smpp::StatCache cache = smpp::compute_stat_cache(y, model.stats, std::nullopt, cfg.threads);
  const smpp::FitResult r = smpp::fit_newton(cache, model.reparam, cfg.fit);
  json j = smpp::fit_result_to_json(r);
  j["model"] = cfg.model->echo;
  smpp::write_json_file(run.file("fit.json"), j);
  std::ofstream(run.file("coefficients.csv")) << [&] {
    std::ostringstream s;
    smpp::write_coefficient_table(s, r);
    return s.str();
  }();
  print_fit(r);
  run.ok = r.converged;
}

void cmd_profile(Run& run) {
  const auto& cfg = run.cfg;
  const auto y = load_input_pattern(cfg);
  const smpp::ModelSpec model = smpp::build_model(*cfg.model, false);
  std::vector<smpp::ProfileCombo> grid;
  const bool geyer = model.stats.interaction.family == smpp::InteractionFamily::GeyerSaturation;
  const std::vector<double> sats = geyer ? cfg.profile->saturation : std::vector<double>{1.0};
  for (const double rw : cfg.profile->range_within) {
    for (const double rb : cfg.profile->range_between) {
      for (const double c : sats) grid.push_back({rw, rb, c});
    }
  }
  const smpp::ProfileResult p = smpp::profile_fit(y, model.stats, cfg.model->constraints, grid, cfg.fit);
  {
    std::ofstream out(run.file("profile.csv"));
    smpp::write_profile_table(out, p);
  }
  json j = smpp::fit_result_to_json(p.fit);
  j["model"] = cfg.model->echo;
  j["profile"] = {{"range_within", p.best.range_within},
                  {"range_between", p.best.range_between},
                  {"erosion", p.erosion}};
  if (geyer) j["profile"]["saturation"] = p.best.saturation;
  smpp::write_json_file(run.file("fit.json"), j);
  std::cout << "best: range_within = " << p.best.range_within << ", range_between = " << p.best.range_between;
  if (geyer) std::cout << ", saturation = " << p.best.saturation;
  std::cout << '\n';
  print_fit(p.fit);
  run.ok = p.fit.converged;
}

void cmd_simulate(Run& run) {
  const auto& cfg = run.cfg;
  const auto& sim = *cfg.simulate;
  const smpp::ModelSpec model = smpp::build_model(*cfg.model, true);
  const auto names = model.stats.parameter_names();
  const Eigen::VectorXd gamma = smpp::detail::named_vector(names, sim.gamma);
  const smpp::Window window(sim.window);
  run.manifest["seeds"]["chain"] = cfg.seed;
  smpp::MarkedPointPattern y = [&] {
    if (sim.exact_poisson) {
      const auto lay = model.stats.layout();
      for (int i = 0; i < model.types(); ++i) {
        for (int k = 0; k < model.types(); ++k) {
          if (gamma[lay.interaction(i, k)] != 0.0) throw smpp::InputError("exact Poisson sampling needs zero interactions");
        }
      }
      return smpp::sample_poisson_model(model, gamma, window, cfg.seed);
    }
    smpp::ChainConfig chain;
    chain.steps = sim.steps;
    chain.birth_prob = sim.birth_prob;
    chain.seed = cfg.seed;
    chain.init = sim.init;
    chain.lambda_bound = sim.lambda_bound;
    return smpp::sample_gibbs_mh(model, gamma, window, chain);
  }();
  const std::string path = run.file("pattern.csv");
  smpp::save_pattern(path, y);
  run.manifest["outputs"].push_back(fs::path(smpp::window_sidecar_path(path)).filename().string());
  std::cout << "simulated " << y.size() << " points";
  for (int i = 0; i < y.types(); ++i) std::cout << (i ? ", " : " (") << "type " << i + 1 << ": " << y.count(i);
  std::cout << ")\n";
}

void cmd_study(Run& run) {
  smpp::StudyConfig study = *run.cfg.study;
  study.seed = run.cfg.seed;
  study.threads = run.cfg.threads;
  study.level = run.cfg.fit.level;
  study.fit = run.cfg.fit;
  const smpp::StudyReport report = smpp::run_study(study);
  {
    std::ofstream out(run.file("study_summary.csv"));
    smpp::write_study_summary(out, report, study);
  }
  {
    std::ofstream out(run.file("study_replicates.csv"));
    smpp::write_study_replicates(out, report);
  }
  run.manifest["seeds"] = {{"study", study.seed},
                           {"baseline_field", report.baseline_seed},
                           {"covariate_fields", report.covariate_seeds}};
  run.manifest["mean_type_counts"] = report.mean_counts;
  run.manifest["failures"] = report.failures;
  smpp::write_study_summary(std::cout, report, study);
  for (std::size_t w = 0; w < report.failures.size(); ++w) {
    if (report.failures[w]) {
      std::cout << "window " << w + 1 << ": " << report.failures[w] << " replication(s) failed\n";
      run.ok = false;
    }
  }
}

void cmd_baseline(Run& run) {
  const auto& cfg = run.cfg;
  const auto& b = *cfg.baseline;
  const auto y = load_input_pattern(cfg);
  const smpp::ModelSpec model = smpp::build_model(*cfg.model, false);
  std::map<std::string, double> values;
  if (b.fit_result) {
    std::ifstream in(*b.fit_result);
    if (!in) throw smpp::InputError("cannot open fit result '" + *b.fit_result + "'");
    values = smpp::gamma_from_result(json::parse(in));
  } else {
    values = *b.gamma;
  }
  const Eigen::VectorXd gamma = smpp::detail::named_vector(model.stats.parameter_names(), values);
  smpp::KernelSpec spec{b.bandwidth, smpp::GridGeometry::covering(y.window().rect(), b.n_x, b.n_y)};
  const smpp::RasterField phi0 = smpp::kernel_phi0(y, model.stats, gamma, spec, cfg.threads);
  smpp::save_raster(run.file("phi0.csv"), phi0);
  std::vector<double> logs(phi0.values().size());
  for (std::size_t c = 0; c < logs.size(); ++c) {
    logs[c] = phi0.values()[c] > 0.0 ? std::log(phi0.values()[c]) : -std::numeric_limits<double>::infinity();
  }
  smpp::save_raster(run.file("log_phi0.csv"), smpp::RasterField(phi0.geometry(), logs));
  json summary = {{"schema", smpp::kResultSchema}, {"bandwidth", b.bandwidth}};
  smpp::RasterField shown = phi0;
  if (b.regions) {
    shown = smpp::region_average(phi0, smpp::load_raster(*b.regions));
    smpp::save_raster(run.file("phi0_regions.csv"), shown);
  }
  if (b.reference) {
    const double r = smpp::log_correlation(shown, smpp::load_raster(*b.reference));
    summary["log_correlation"] = r;
    std::cout << "correlation of log phi0 with the reference: " << smpp::detail::format_double(r) << '\n';
  }
  smpp::write_json_file(run.file("baseline.json"), summary);
  std::cout << "wrote " << phi0.geometry().nx << " x " << phi0.geometry().ny << " baseline raster\n";
}

int execute(const std::string& command, const Overrides& o) {
  Run run;
  run.cfg = smpp::load_config(o.config, command);
  apply_overrides(run.cfg, o);
  run.out = run.cfg.output;
  fs::create_directories(run.out);
  run.manifest = {{"schema", smpp::kResultSchema},
                  {"command", command},
                  {"config_path", o.config},
                  {"config", run.cfg.raw},
                  {"effective",
                   {{"seed", run.cfg.seed},
                    {"threads", run.cfg.threads},
                    {"level", run.cfg.fit.level},
                    {"tol", run.cfg.fit.tol},
                    {"max_iter", run.cfg.fit.max_iter}}},
                  {"versions",
                   {{"smpp", smpp::kVersion},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"compiler", __VERSION__}}},
                  {"outputs", json::array()}};
  if (run.cfg.model && run.cfg.model->constraints.reference_type) {
    run.manifest["effective"]["reference_type"] = *run.cfg.model->constraints.reference_type + 1;
  }
  try {
    if (command == "fit") cmd_fit(run);
    if (command == "profile") cmd_profile(run);
    if (command == "simulate") cmd_simulate(run);
    if (command == "study") cmd_study(run);
    if (command == "baseline") cmd_baseline(run);
  } catch (const smpp::Error& e) {
    run.manifest["error"] = e.what();
    smpp::write_json_file((run.out / "manifest.json").string(), run.manifest);
    throw;
  }
  run.manifest["success"] = run.ok;
  smpp::write_json_file((run.out / "manifest.json").string(), run.manifest);
  return run.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-type Gibbs point process fitting by conditional pseudo likelihood"};
  app.require_subcommand(1);
  Overrides o;
  std::string chosen;
  for (const auto& name : smpp::known_commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    sub->add_option("--level", o.level, "confidence level");
    sub->add_option("--reference-type", o.reference_type, "reference type (1-based)");
    sub->callback([&chosen, name] { chosen = name; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return execute(chosen, o);
  } catch (const smpp::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const smpp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
