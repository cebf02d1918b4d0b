#pragma once

#include "smpp/baseline.hpp"
#include "smpp/error.hpp"
#include "smpp/fit.hpp"
#include "smpp/grf.hpp"
#include "smpp/interaction.hpp"
#include "smpp/model.hpp"
#include "smpp/pattern.hpp"
#include "smpp/raster.hpp"
#include "smpp/simulate.hpp"
#include "smpp/statistics.hpp"
#include "smpp/study.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace smpp {

namespace detail {

/// Strict view of a JSON object: every key must be consumed before
/// finish(), otherwise the first unknown key is reported.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw InputError(context_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const nlohmann::json& raw(const std::string& key) {
    if (!has(key)) throw InputError(context_ + ": missing required key '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const auto& v = raw(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw InputError(context_ + ": key '" + key + "' has the wrong type (got " + v.type_name() + ")");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return get<T>(key);
  }

  const std::string& context() const noexcept { return context_; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw InputError(context_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

inline std::string resolve_path(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return path.string();
}

/// A p x p matrix given as a number (every entry), a nested array, or
/// {"within": a, "between": b}.
inline Eigen::MatrixXd parse_type_matrix(const nlohmann::json& j, int p, const std::string& what) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(p, p, j.get<double>());
  if (j.is_object()) {
    StrictObject o(j, what);
    const double within = o.get<double>("within");
    const double between = o.get<double>("between");
    o.finish();
    return InteractionSpec::two_level(p, within, between);
  }
  if (!j.is_array() || static_cast<int>(j.size()) != p) {
    throw InputError(what + " must be a number, a " + std::to_string(p) + " x " + std::to_string(p) +
                     " array or {\"within\", \"between\"}");
  }
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != p) throw InputError(what + " row " + std::to_string(i + 1) + " must have " + std::to_string(p) + " entries");
    for (int k = 0; k < p; ++k) {
      if (!j[i][k].is_number()) throw InputError(what + " entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

inline Rect parse_rect(const nlohmann::json& j, const std::string& what) {
  if (j.is_array() && j.size() == 4) {
    for (const auto& v : j) {
      if (!v.is_number()) throw InputError(what + " entries must be numbers");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  }
  StrictObject o(j, what);
  const Rect r{o.get<double>("x_min"), o.get<double>("x_max"), o.get<double>("y_min"), o.get<double>("y_max")};
  o.finish();
  return r;
}

inline GrfSpec parse_grf(const nlohmann::json& j, const std::string& what) {
  StrictObject o(j, what);
  GrfSpec s;
  s.mean = o.get<double>("mean", 0.0);
  s.sigma2 = o.get<double>("variance");
  s.phi = o.get<double>("scale");
  s.truncate_at_zero = o.get<bool>("truncate_at_zero", false);
  o.finish();
  return s;
}

/// "reference_type": a mark in 1..p, or "none"; defaults to the last type.
inline std::optional<int> parse_reference(StrictObject& o, int types) {
  if (!o.has("reference_type")) return types - 1;
  const auto& v = o.raw("reference_type");
  if (v.is_string() && v.get<std::string>() == "none") return std::nullopt;
  const int ref = o.get<int>("reference_type");
  if (ref < 1 || ref > types) {
    throw InputError(o.context() + ": reference_type must be in 1.." + std::to_string(types) + " or \"none\"");
  }
  return ref - 1;
}

}  // namespace detail

/// Interaction block: {"family", "range", "hardcore", "saturation"}.
inline InteractionSpec parse_interaction(const nlohmann::json& j, int types, const std::string& context = "interaction") {
  detail::StrictObject o(j, context);
  InteractionSpec s;
  s.family = interaction_family_from_string(o.get<std::string>("family"));
  s.range = detail::parse_type_matrix(o.raw("range"), types, context + ".range");
  if (s.family == InteractionFamily::StraussHardcore) {
    s.hardcore = o.has("hardcore") ? detail::parse_type_matrix(o.raw("hardcore"), types, context + ".hardcore")
                                   : Eigen::MatrixXd::Zero(types, types);
    if (o.has("saturation")) throw InputError(context + ": 'saturation' applies to the geyer family only");
  } else {
    s.saturation = detail::parse_type_matrix(o.raw("saturation"), types, context + ".saturation");
    if (o.has("hardcore")) throw InputError(context + ": 'hardcore' applies to the strauss family only");
  }
  o.finish();
  s.validate();
  return s;
}

/// Model block of a run configuration. Raster paths are resolved against
/// the configuration's directory.
struct ModelConfig {
  int types = 0;
  std::vector<std::pair<std::string, std::string>> covariates;  // name, raster path
  std::optional<std::vector<std::vector<std::string>>> type_covariates;
  bool intercept = true;
  InteractionSpec interaction;
  ReparamConstraints constraints;
  std::optional<std::string> baseline;
  nlohmann::json echo;
};

inline ModelConfig parse_model_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                      const std::string& context = "model") {
  detail::StrictObject o(j, context);
  ModelConfig m;
  m.echo = j;
  m.types = o.get<int>("types");
  if (m.types < 1) throw InputError(context + ": 'types' must be at least 1");
  if (o.has("covariates")) {
    const auto& cov = o.raw("covariates");
    if (!cov.is_object()) throw InputError(context + ".covariates must map names to raster paths");
    for (const auto& [name, path] : cov.items()) {
      if (!path.is_string()) throw InputError(context + ".covariates['" + name + "'] must be a path");
      m.covariates.emplace_back(name, detail::resolve_path(base_dir, path.get<std::string>()));
    }
  }
  m.type_covariates = o.optional<std::vector<std::vector<std::string>>>("type_covariates");
  if (m.type_covariates && static_cast<int>(m.type_covariates->size()) != m.types) {
    throw InputError(context + ".type_covariates needs one list per type");
  }
  m.intercept = o.get<bool>("intercept", true);
  if (!o.has("interaction")) throw InputError(context + ": missing required 'interaction' block");
  m.interaction = parse_interaction(o.raw("interaction"), m.types, context + ".interaction");
  m.constraints.reference_type = detail::parse_reference(o, m.types);
  m.constraints.symmetric_cross = o.get<bool>("symmetric", true);
  m.constraints.fixed = o.get<std::vector<std::string>>("fixed", {});
  if (const auto b = o.optional<std::string>("baseline")) m.baseline = detail::resolve_path(base_dir, *b);
  o.finish();
  return m;
}

/// Loads the rasters of a model block. The baseline is only loaded when
/// `with_baseline` is set (fitting never reads it).
inline ModelSpec build_model(const ModelConfig& cfg, bool with_baseline) {
  std::map<std::string, std::shared_ptr<const RasterField>> rasters;
  for (const auto& [name, path] : cfg.covariates) {
    if (rasters.count(name)) throw InputError("covariate '" + name + "' declared twice");
    rasters[name] = std::make_shared<const RasterField>(load_raster(path));
  }
  ModelSpec spec;
  spec.stats.interaction = cfg.interaction;
  for (int i = 0; i < cfg.types; ++i) {
    TypeCovariates tc;
    tc.intercept = cfg.intercept;
    if (cfg.type_covariates) {
      for (const auto& name : (*cfg.type_covariates)[i]) {
        const auto it = rasters.find(name);
        if (it == rasters.end()) throw InputError("type " + std::to_string(i + 1) + " uses undeclared covariate '" + name + "'");
        tc.fields.push_back({name, it->second});
      }
    } else {
      for (const auto& [name, _] : cfg.covariates) tc.fields.push_back({name, rasters.at(name)});
    }
    spec.stats.covariates.push_back(std::move(tc));
  }
  spec.stats.validate();
  spec.reparam = build_reparam(spec.stats, cfg.constraints);
  if (with_baseline) {
    if (!cfg.baseline) throw InputError("model block needs a 'baseline' raster for this command");
    spec.baseline = load_raster(*cfg.baseline);
  }
  spec.validate();
  return spec;
}

struct SimulateSection {
  Rect window;
  std::map<std::string, double> gamma;
  std::size_t steps = 0;
  double birth_prob = 0.5;
  ChainInit init = ChainInit::Poisson;
  bool exact_poisson = false;  // thinning sampler; requires zero interactions
  std::optional<double> lambda_bound;
};

struct ProfileSection {
  std::vector<double> range_within;
  std::vector<double> range_between;
  std::vector<double> saturation{1.0};
};

struct BaselineSection {
  std::optional<std::string> fit_result;
  std::optional<std::map<std::string, double>> gamma;
  double bandwidth = 0.25;
  std::size_t n_x = 100;
  std::size_t n_y = 100;
  std::optional<std::string> regions;
  std::optional<std::string> reference;
};

struct RunConfig {
  std::string command;
  std::filesystem::path base_dir;
  std::optional<std::string> pattern;
  std::optional<std::string> window;
  std::optional<ModelConfig> model;
  FitOptions fit;
  std::optional<SimulateSection> simulate;
  std::optional<ProfileSection> profile;
  std::optional<BaselineSection> baseline;
  std::optional<StudyConfig> study;
  std::string output = "out";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  nlohmann::json raw;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"fit", "simulate", "study", "profile", "baseline"};
  return c;
}

inline StudyConfig parse_study(const nlohmann::json& j) {
  detail::StrictObject o(j, "study");
  StudyConfig s;
  s.types = o.get<int>("types");
  if (s.types < 1) throw InputError("study: 'types' must be at least 1");
  s.baseline = detail::parse_grf(o.raw("baseline_field"), "study.baseline_field");
  if (o.has("covariate_fields")) {
    const auto& arr = o.raw("covariate_fields");
    if (!arr.is_array()) throw InputError("study.covariate_fields must be an array");
    for (const auto& f : arr) {
      if (!f.is_object() || !f.contains("name") || !f["name"].is_string()) {
        throw InputError("study.covariate_fields entries need a 'name'");
      }
      nlohmann::json spec = f;
      spec.erase("name");
      s.covariates.emplace_back(f["name"].get<std::string>(),
                                detail::parse_grf(spec, "study.covariate_fields." + f["name"].get<std::string>()));
    }
  }
  s.grid_cells = o.get<std::size_t>("grid_cells", 64);
  {
    detail::StrictObject t(o.raw("truth"), "study.truth");
    if (t.has("interaction")) s.truth_interaction = parse_interaction(t.raw("interaction"), s.types, "study.truth.interaction");
    s.truth_gamma = t.get<std::map<std::string, double>>("gamma");
    t.finish();
  }
  if (!o.has("interaction")) throw InputError("study: missing required 'interaction' block");
  s.fit_interaction = parse_interaction(o.raw("interaction"), s.types, "study.interaction");
  s.constraints.reference_type = detail::parse_reference(o, s.types);
  s.constraints.symmetric_cross = o.get<bool>("symmetric", true);
  s.constraints.fixed = o.get<std::vector<std::string>>("fixed", {});
  for (const auto& w : o.raw("windows")) s.windows.push_back(detail::parse_rect(w, "study.windows"));
  if (s.windows.empty()) throw InputError("study: 'windows' must not be empty");
  s.replications = o.get<std::size_t>("replications");
  if (s.replications < 1) throw InputError("study: 'replications' must be at least 1");
  s.chain_steps = o.get<std::size_t>("chain_steps", 0);
  o.finish();
  return s;
}

/// Parses and validates a run configuration for `command`. Relative paths
/// resolve against `base_dir`.
inline RunConfig parse_config(const nlohmann::json& j, const std::string& command,
                              const std::filesystem::path& base_dir = {}) {
  if (std::find(known_commands().begin(), known_commands().end(), command) == known_commands().end()) {
    throw InputError("unknown command '" + command + "'");
  }
  detail::StrictObject o(j, "config");
  RunConfig rc;
  rc.command = command;
  rc.base_dir = base_dir;
  rc.raw = j;
  if (const auto p = o.optional<std::string>("pattern")) rc.pattern = detail::resolve_path(base_dir, *p);
  if (const auto w = o.optional<std::string>("window")) rc.window = detail::resolve_path(base_dir, *w);
  if (o.has("model")) rc.model = parse_model_config(o.raw("model"), base_dir);
  if (o.has("fit")) {
    detail::StrictObject f(o.raw("fit"), "fit");
    rc.fit.tol = f.get<double>("tol", rc.fit.tol);
    rc.fit.max_iter = f.get<int>("max_iter", rc.fit.max_iter);
    rc.fit.max_halvings = f.get<int>("max_halvings", rc.fit.max_halvings);
    rc.fit.level = f.get<double>("level", rc.fit.level);
    f.finish();
  }
  if (!(rc.fit.tol > 0.0)) throw InputError("fit.tol must be positive");
  if (rc.fit.max_iter < 1) throw InputError("fit.max_iter must be at least 1");
  if (!(rc.fit.level > 0.0 && rc.fit.level < 1.0)) throw InputError("fit.level must lie in (0,1)");
  if (o.has("simulate")) {
    detail::StrictObject s(o.raw("simulate"), "simulate");
    SimulateSection sim;
    sim.window = detail::parse_rect(s.raw("window"), "simulate.window");
    sim.gamma = s.get<std::map<std::string, double>>("gamma", {});
    sim.steps = s.get<std::size_t>("steps", 0);
    sim.birth_prob = s.get<double>("birth_prob", 0.5);
    const auto init = s.get<std::string>("init", "poisson");
    if (init == "poisson") {
      sim.init = ChainInit::Poisson;
    } else if (init == "empty") {
      sim.init = ChainInit::Empty;
    } else {
      throw InputError("simulate.init must be 'poisson' or 'empty'");
    }
    sim.exact_poisson = s.get<bool>("exact_poisson", false);
    sim.lambda_bound = s.optional<double>("lambda_bound");
    s.finish();
    if (!(sim.birth_prob > 0.0 && sim.birth_prob < 1.0)) throw InputError("simulate.birth_prob must lie in (0,1)");
    rc.simulate = sim;
  }
  if (o.has("profile")) {
    detail::StrictObject s(o.raw("profile"), "profile");
    ProfileSection p;
    p.range_within = s.get<std::vector<double>>("range_within");
    p.range_between = s.get<std::vector<double>>("range_between");
    p.saturation = s.get<std::vector<double>>("saturation", {1.0});
    s.finish();
    if (p.range_within.empty() || p.range_between.empty() || p.saturation.empty()) {
      throw InputError("profile: grids must not be empty");
    }
    rc.profile = p;
  }
  if (o.has("baseline")) {
    detail::StrictObject s(o.raw("baseline"), "baseline");
    BaselineSection b;
    if (const auto f = s.optional<std::string>("fit_result")) b.fit_result = detail::resolve_path(base_dir, *f);
    b.gamma = s.optional<std::map<std::string, double>>("gamma");
    b.bandwidth = s.get<double>("bandwidth", 0.25);
    b.n_x = s.get<std::size_t>("n_x", 100);
    b.n_y = s.get<std::size_t>("n_y", 100);
    if (const auto r = s.optional<std::string>("regions")) b.regions = detail::resolve_path(base_dir, *r);
    if (const auto r = s.optional<std::string>("reference")) b.reference = detail::resolve_path(base_dir, *r);
    s.finish();
    if (!(b.bandwidth > 0.0)) throw InputError("baseline.bandwidth must be positive");
    if (b.fit_result && b.gamma) throw InputError("baseline: give either 'fit_result' or 'gamma'");
    rc.baseline = b;
  }
  if (o.has("study")) rc.study = parse_study(o.raw("study"));
  rc.output = o.get<std::string>("output", rc.output);
  rc.seed = o.get<std::uint64_t>("seed", rc.seed);
  rc.threads = o.get<unsigned>("threads", rc.threads);
  o.finish();

  const auto need = [&](bool present, const std::string& what) {
    if (!present) throw InputError("command '" + command + "' needs " + what);
  };
  if (command == "fit" || command == "profile" || command == "baseline") {
    need(rc.pattern.has_value(), "a 'pattern' path");
    need(rc.model.has_value(), "a 'model' block");
  }
  if (command == "simulate") {
    need(rc.model.has_value(), "a 'model' block");
    need(rc.simulate.has_value(), "a 'simulate' block");
    need(rc.model->baseline.has_value(), "a model 'baseline' raster");
  }
  if (command == "profile") need(rc.profile.has_value(), "a 'profile' block");
  if (command == "baseline") {
    need(rc.baseline.has_value(), "a 'baseline' block");
    need(rc.baseline->fit_result || rc.baseline->gamma, "baseline 'fit_result' or 'gamma'");
  }
  if (command == "study") need(rc.study.has_value(), "a 'study' block");
  return rc;
}

inline RunConfig load_config(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return parse_config(j, command, std::filesystem::path(path).parent_path());
}

}  // namespace smpp
