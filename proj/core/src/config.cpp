#include "chest/config.hpp"

#include "chest/dataset_io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chest {

using detail::get_or;
using detail::get_required;
using detail::json;
using detail::require_keys;

namespace {

const std::set<std::string> kMethods{"rls", "lasso", "dm", "dm-matched", "dmvb", "langevin"};

DenoiserConfig parse_network(const json& j, int nr, int nt, DenoiserConfig fallback,
                             const std::string& where) {
  require_keys(j, {"time_dim", "widths"}, where);
  DenoiserConfig cfg = fallback;
  cfg.nr = nr;
  cfg.nt = nt;
  cfg.time_dim = get_or(j, "time_dim", cfg.time_dim);
  cfg.widths = get_or(j, "widths", cfg.widths);
  return cfg;
}

MethodConfig parse_method(const json& j, const std::string& where) {
  require_keys(j,
               {"method", "s", "lambda_ratio", "lasso_iterations", "max_iterations", "tolerance",
                "subset_size", "refine_step", "warm_start", "langevin_c", "steps_per_level"},
               where);
  MethodConfig m;
  m.method = get_required<std::string>(j, "method", where);
  m.s = get_or(j, "s", m.s);
  m.lambda_ratio = get_or(j, "lambda_ratio", m.lambda_ratio);
  m.lasso_iterations = get_or(j, "lasso_iterations", m.lasso_iterations);
  m.max_iterations = get_or(j, "max_iterations", m.max_iterations);
  m.tolerance = get_or(j, "tolerance", m.tolerance);
  m.subset_size = get_or(j, "subset_size", m.subset_size);
  m.refine_step = get_or(j, "refine_step", m.refine_step);
  m.warm_start = get_or(j, "warm_start", m.warm_start);
  m.langevin_c = get_or(j, "langevin_c", m.langevin_c);
  m.steps_per_level = get_or(j, "steps_per_level", m.steps_per_level);
  return m;
}

}  // namespace

int ExperimentConfig::pilots_for(double alpha_value) const {
  const double np = alpha_value * nt;
  const double rounded = std::round(np);
  if (std::abs(np - rounded) > 1e-9 || rounded < 1.0) {
    throw std::invalid_argument("config: alpha " + std::to_string(alpha_value) + " times Nt = " +
                                std::to_string(nt) + " is not a positive integer");
  }
  return static_cast<int>(rounded);
}

const EnvironmentConfig& ExperimentConfig::environment(const std::string& id) const {
  for (const auto& e : environments) {
    if (e.id == id) return e;
  }
  throw std::invalid_argument("config: unknown environment '" + id + "'");
}

void ExperimentConfig::validate() const {
  if (nr < 1 || nt < 1) throw std::invalid_argument("config: dims must be >= 1");
  static_cast<void>(pilots_for(alpha));
  for (double a : alpha_grid) static_cast<void>(pilots_for(a));
  if (snr_grid_db.empty()) throw std::invalid_argument("config: snr_grid_db must be nonempty");
  if (test_size < 1) throw std::invalid_argument("config: test_size must be >= 1");
  if (environments.empty()) throw std::invalid_argument("config: no environments");
  std::set<std::string> ids;
  for (const auto& e : environments) {
    if (e.id.empty() || e.id.find_first_of(",/\\ \t\n") != std::string::npos) {
      throw std::invalid_argument("config: environment id '" + e.id +
                                  "' must be nonempty without separators");
    }
    if (e.id == "aggregated") throw std::invalid_argument("config: 'aggregated' is reserved");
    if (!ids.insert(e.id).second) throw std::invalid_argument("config: duplicate environment " + e.id);
    if (e.train_size < 1) throw std::invalid_argument("config: train_size must be >= 1");
    if (e.spec.nr != nr || e.spec.nt != nt) {
      throw std::invalid_argument("config: environment '" + e.id + "' dims differ from config dims");
    }
    e.spec.validate();
  }
  for (const auto& id : sweep_environments) static_cast<void>(environment(id));
  expert_network.validate();
  aggregated_network.validate();
  static_cast<void>(schedule.build());
  if (training.epochs < 1 || training.batch_size < 1 || !(training.learning_rate > 0.0) ||
      training.min_steps_per_epoch < 0) {
    throw std::invalid_argument("config: bad training settings");
  }
  if (sweep_seeds.empty()) throw std::invalid_argument("config: seeds.sweep must be nonempty");
  std::set<std::string> names;
  for (const auto& m : methods) {
    if (!kMethods.contains(m.method)) {
      throw std::invalid_argument("config: unknown estimator '" + m.method + "'");
    }
    if (!names.insert(m.method).second) {
      throw std::invalid_argument("config: estimator '" + m.method + "' listed twice");
    }
    if (m.s > 0.0 && m.s < 1.0) throw std::invalid_argument("config: s must be >= 1");
    if (!(m.lambda_ratio >= 0.0) || m.lasso_iterations < 1 || m.max_iterations < 1 ||
        !(m.tolerance > 0.0) || m.subset_size < 1 || m.refine_step < 0 || !(m.langevin_c > 0.0) ||
        m.steps_per_level < 1) {
      throw std::invalid_argument("config: bad hyperparameters for '" + m.method + "'");
    }
    if (m.refine_step > schedule.steps) {
      throw std::invalid_argument("config: refine_step exceeds the schedule length");
    }
  }
  if (methods.empty()) throw std::invalid_argument("config: no estimators");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  const std::string where = "config";
  require_keys(root,
               {"name", "dims", "alpha", "snr_grid_db", "alpha_grid", "alpha_sweep_snr_db",
                "schedule", "environments", "test_size", "networks", "training", "estimators",
                "seeds", "sweep_environments", "output"},
               where);
  ExperimentConfig cfg;
  cfg.name = get_or(root, "name", cfg.name);
  const json& dims = root.at("dims");
  require_keys(dims, {"nr", "nt"}, "config.dims");
  cfg.nr = get_required<int>(dims, "nr", "config.dims");
  cfg.nt = get_required<int>(dims, "nt", "config.dims");
  cfg.alpha = get_or(root, "alpha", cfg.alpha);
  cfg.snr_grid_db = get_or(root, "snr_grid_db", cfg.snr_grid_db);
  cfg.alpha_grid = get_or(root, "alpha_grid", cfg.alpha_grid);
  cfg.alpha_sweep_snr_db = get_or(root, "alpha_sweep_snr_db", cfg.alpha_sweep_snr_db);
  cfg.test_size = get_or(root, "test_size", cfg.test_size);

  if (root.contains("schedule")) {
    const json& s = root.at("schedule");
    require_keys(s, {"steps", "beta_start", "beta_end"}, "config.schedule");
    cfg.schedule.steps = get_or(s, "steps", cfg.schedule.steps);
    cfg.schedule.beta_start = get_or(s, "beta_start", cfg.schedule.beta_start);
    cfg.schedule.beta_end = get_or(s, "beta_end", cfg.schedule.beta_end);
  }

  const json& envs = root.at("environments");
  if (!envs.is_array()) throw std::invalid_argument("config.environments must be an array");
  for (std::size_t i = 0; i < envs.size(); ++i) {
    const std::string ew = "config.environments[" + std::to_string(i) + "]";
    require_keys(envs[i], {"id", "train_size", "channel"}, ew);
    EnvironmentConfig env;
    env.id = get_required<std::string>(envs[i], "id", ew);
    env.train_size = get_or(envs[i], "train_size", env.train_size);
    json channel = envs[i].at("channel");
    if (channel.is_object()) {
      if (!channel.contains("nr")) channel["nr"] = cfg.nr;
      if (!channel.contains("nt")) channel["nt"] = cfg.nt;
    }
    env.spec = detail::spec_from_json_value(channel, ew + ".channel");
    cfg.environments.push_back(std::move(env));
  }

  DenoiserConfig expert_default;
  DenoiserConfig aggregated_default;
  aggregated_default.widths = {32, 64, 36, 32};
  cfg.expert_network = expert_default;
  cfg.aggregated_network = aggregated_default;
  cfg.expert_network.nr = cfg.aggregated_network.nr = cfg.nr;
  cfg.expert_network.nt = cfg.aggregated_network.nt = cfg.nt;
  if (root.contains("networks")) {
    const json& nets = root.at("networks");
    require_keys(nets, {"expert", "aggregated"}, "config.networks");
    if (nets.contains("expert")) {
      cfg.expert_network =
          parse_network(nets.at("expert"), cfg.nr, cfg.nt, expert_default, "config.networks.expert");
    }
    if (nets.contains("aggregated")) {
      cfg.aggregated_network = parse_network(nets.at("aggregated"), cfg.nr, cfg.nt,
                                             aggregated_default, "config.networks.aggregated");
    }
  }

  if (root.contains("training")) {
    const json& t = root.at("training");
    require_keys(t, {"epochs", "batch_size", "learning_rate", "min_steps_per_epoch"},
                 "config.training");
    cfg.training.epochs = get_or(t, "epochs", cfg.training.epochs);
    cfg.training.batch_size = get_or(t, "batch_size", cfg.training.batch_size);
    cfg.training.learning_rate = get_or(t, "learning_rate", cfg.training.learning_rate);
    cfg.training.min_steps_per_epoch =
        get_or(t, "min_steps_per_epoch", cfg.training.min_steps_per_epoch);
  }

  const json& methods = root.at("estimators");
  if (!methods.is_array()) throw std::invalid_argument("config.estimators must be an array");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    cfg.methods.push_back(parse_method(methods[i], "config.estimators[" + std::to_string(i) + "]"));
  }

  if (root.contains("seeds")) {
    const json& s = root.at("seeds");
    require_keys(s, {"data", "train", "sweep"}, "config.seeds");
    cfg.data_seed = get_or(s, "data", cfg.data_seed);
    cfg.train_seed = get_or(s, "train", cfg.train_seed);
    cfg.sweep_seeds = get_or(s, "sweep", cfg.sweep_seeds);
  }
  cfg.sweep_environments = get_or(root, "sweep_environments", cfg.sweep_environments);

  if (root.contains("output")) {
    const json& o = root.at("output");
    require_keys(o, {"data_dir", "weights_dir"}, "config.output");
    cfg.data_dir = get_or(o, "data_dir", cfg.data_dir.string());
    cfg.weights_dir = get_or(o, "weights_dir", cfg.weights_dir.string());
  }
  if (cfg.data_dir.is_relative()) cfg.data_dir = base_dir / cfg.data_dir;
  if (cfg.weights_dir.is_relative()) cfg.weights_dir = base_dir / cfg.weights_dir;

  // Output locations do not change results, so they stay out of the hash.
  json canonical = root;
  canonical.erase("output");
  cfg.hash = hex64(fnv1a64(canonical.dump()));

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace chest
