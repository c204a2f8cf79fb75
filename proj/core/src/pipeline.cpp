#include "chest/pipeline.hpp"

#include "chest/dataset_io.hpp"
#include "chest/estimators.hpp"
#include "chest/parallel.hpp"
#include "chest/training.hpp"
#include "chest/variational.hpp"
#include "chest/weights_io.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

namespace chest {

namespace {

constexpr const char* kAggregated = "aggregated";

std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::size_t environment_index(const ExperimentConfig& cfg, const std::string& id) {
  for (std::size_t i = 0; i < cfg.environments.size(); ++i) {
    if (cfg.environments[i].id == id) return i;
  }
  throw std::invalid_argument("unknown environment '" + id + "'");
}

std::shared_ptr<const ScorePrior> load_prior(const ExperimentConfig& cfg, const std::string& id) {
  WeightsFile w = read_weights(weights_path(cfg, id));
  const DenoiserConfig& net = w.network->config();
  if (net.nr != cfg.nr || net.nt != cfg.nt) {
    throw std::runtime_error("weights '" + id + "' are for " + std::to_string(net.nr) + "x" +
                             std::to_string(net.nt) + " channels");
  }
  if (w.schedule.steps != cfg.schedule.steps || w.schedule.beta_start != cfg.schedule.beta_start ||
      w.schedule.beta_end != cfg.schedule.beta_end) {
    throw std::runtime_error("weights '" + id + "' were trained with a different schedule");
  }
  return std::make_shared<DenoiserPrior>(std::move(w.network), w.schedule.build(), id);
}

void write_loss_csv(const std::vector<double>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << (i + 1) << ',' << format("%.10g", history[i]) << '\n';
  }
}

FileChecksum train_one(const ExperimentConfig& cfg, const std::string& id,
                       const DenoiserConfig& net_cfg, std::span<const ComplexMatrix> samples,
                       std::uint64_t stream, std::ostream& log) {
  auto net = std::make_shared<DenoiserNetwork>(net_cfg);
  RngStream rng = RngStream(cfg.train_seed).substream(stream);
  net->initialize(rng);
  TrainOptions options;
  options.epochs = cfg.training.epochs;
  options.batch_size = cfg.training.batch_size;
  options.learning_rate = cfg.training.learning_rate;
  options.min_steps_per_epoch = cfg.training.min_steps_per_epoch;
  const std::vector<double> history = train_expert(samples, *net, cfg.schedule.build(), options, rng);
  log << id << ": " << net->parameter_count() << " parameters, " << samples.size()
      << " samples, loss " << format("%.4f", history.front()) << " -> "
      << format("%.4f", history.back()) << '\n';
  WeightsFile file{net, cfg.schedule, id, cfg.train_seed};
  const auto path = weights_path(cfg, id);
  write_weights(file, path);
  write_loss_csv(history, loss_path(cfg, id));
  return {path, hex64(file_checksum(path))};
}

}  // namespace

std::filesystem::path train_data_path(const ExperimentConfig& cfg, const std::string& env) {
  return cfg.data_dir / (env + ".train.chds");
}
std::filesystem::path test_data_path(const ExperimentConfig& cfg, const std::string& env) {
  return cfg.data_dir / (env + ".test.chds");
}
std::filesystem::path weights_path(const ExperimentConfig& cfg, const std::string& id) {
  return cfg.weights_dir / (id + ".dmwt");
}
std::filesystem::path loss_path(const ExperimentConfig& cfg, const std::string& id) {
  return cfg.weights_dir / (id + ".loss.csv");
}

std::vector<FileChecksum> gen_data(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  ensure_dir(cfg.data_dir);
  std::vector<FileChecksum> out;
  for (std::size_t e = 0; e < cfg.environments.size(); ++e) {
    const EnvironmentConfig& env = cfg.environments[e];
    // Test samples come first so the test set does not depend on train_size.
    Dataset all = generate_dataset(env.spec, cfg.test_size + env.train_size,
                                   RngStream(cfg.data_seed).substream(e));
    Dataset test{env.spec, {}, cfg.data_seed};
    Dataset train{env.spec, {}, cfg.data_seed};
    const auto split = all.samples.begin() + static_cast<std::ptrdiff_t>(cfg.test_size);
    test.samples.assign(all.samples.begin(), split);
    train.samples.assign(split, all.samples.end());
    for (const auto& [data, path] : {std::pair{&train, train_data_path(cfg, env.id)},
                                     std::pair{&test, test_data_path(cfg, env.id)}}) {
      write_dataset(*data, path);
      out.push_back({path, hex64(file_checksum(path))});
      log << out.back().checksum << "  " << path.string() << '\n';
    }
  }
  return out;
}

std::vector<FileChecksum> train(const ExperimentConfig& cfg, const TrainSelection& selection,
                                std::ostream& log) {
  cfg.validate();
  if (selection.expert && selection.aggregated_only) {
    throw std::invalid_argument("train: choose either one expert or the aggregated model");
  }
  std::vector<std::vector<ComplexMatrix>> sets;
  for (const auto& env : cfg.environments) {
    const auto path = train_data_path(cfg, env.id);
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("train: missing dataset '" + path.string() + "' (run gen-data)");
    }
    Dataset d = read_dataset(path);
    if (d.spec.nr != cfg.nr || d.spec.nt != cfg.nt) {
      throw std::runtime_error("train: dataset '" + path.string() + "' is " +
                               std::to_string(d.spec.nr) + "x" + std::to_string(d.spec.nt) +
                               " but the config expects " + std::to_string(cfg.nr) + "x" +
                               std::to_string(cfg.nt));
    }
    sets.push_back(std::move(d.samples));
  }
  ensure_dir(cfg.weights_dir);
  std::vector<FileChecksum> out;
  const std::size_t k = cfg.environments.size();
  if (!selection.aggregated_only) {
    for (std::size_t e = 0; e < k; ++e) {
      const std::string& id = cfg.environments[e].id;
      if (selection.expert && *selection.expert != id) continue;
      out.push_back(train_one(cfg, id, cfg.expert_network, sets[e], e, log));
    }
    if (selection.expert && out.empty()) static_cast<void>(environment_index(cfg, *selection.expert));
  }
  if (!selection.expert) {
    std::vector<ComplexMatrix> pooled;
    for (const auto& s : sets) pooled.insert(pooled.end(), s.begin(), s.end());
    out.push_back(train_one(cfg, kAggregated, cfg.aggregated_network, pooled, k, log));
  }
  return out;
}

SweepResult sweep(const ExperimentConfig& cfg, const SweepOptions& options) {
  cfg.validate();
  std::vector<std::string> envs = cfg.sweep_environments;
  if (envs.empty()) {
    for (const auto& e : cfg.environments) envs.push_back(e.id);
  }
  bool need_aggregated = false;
  bool need_all_experts = false;
  bool need_matched = false;
  for (const auto& m : cfg.methods) {
    need_aggregated |= m.method == "dm" || m.method == "langevin";
    need_all_experts |= m.method == "dmvb";
    need_matched |= m.method == "dm-matched";
  }
  std::vector<std::filesystem::path> required;
  for (const auto& id : envs) required.push_back(test_data_path(cfg, id));
  if (need_aggregated) required.push_back(weights_path(cfg, kAggregated));
  for (const auto& e : cfg.environments) {
    const bool swept = std::find(envs.begin(), envs.end(), e.id) != envs.end();
    if (need_all_experts || (need_matched && swept)) required.push_back(weights_path(cfg, e.id));
  }
  std::string missing;
  for (const auto& p : required) {
    if (!std::filesystem::exists(p)) missing += "\n  " + p.string();
  }
  if (!missing.empty()) throw std::runtime_error("sweep: missing artifacts:" + missing);

  const NoiseSchedule schedule = cfg.schedule.build();
  std::shared_ptr<const ScorePrior> aggregated;
  if (need_aggregated) aggregated = load_prior(cfg, kAggregated);
  std::map<std::string, std::shared_ptr<const ScorePrior>> experts;
  PriorSet all_experts;
  for (const auto& e : cfg.environments) {
    if (std::filesystem::exists(weights_path(cfg, e.id)) && (need_all_experts || need_matched)) {
      experts[e.id] = load_prior(cfg, e.id);
      all_experts.push_back(experts[e.id]);
    }
  }
  std::map<std::string, std::vector<ComplexMatrix>> tests;
  for (const auto& id : envs) {
    Dataset d = read_dataset(test_data_path(cfg, id));
    if (d.spec.nr != cfg.nr || d.spec.nt != cfg.nt) {
      throw std::runtime_error("sweep: test set for '" + id + "' has the wrong dims");
    }
    if (d.size() < cfg.test_size) throw std::runtime_error("sweep: test set for '" + id + "' too small");
    d.samples.resize(cfg.test_size);
    tests[id] = std::move(d.samples);
  }

  std::vector<std::pair<double, double>> points;
  for (double snr : cfg.snr_grid_db) points.emplace_back(snr, cfg.alpha);
  for (double a : cfg.alpha_grid) {
    const std::pair<double, double> p{cfg.alpha_sweep_snr_db, a};
    if (std::find(points.begin(), points.end(), p) == points.end()) points.push_back(p);
  }
  struct Cell {
    std::string env;
    double snr, alpha;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& env : envs) {
    for (const auto& [snr, alpha] : points) {
      for (std::uint64_t seed : cfg.sweep_seeds) cells.push_back({env, snr, alpha, seed});
    }
  }

  struct Run {
    double nmse = 0.0;
    int iters = 1;
    long long reverse_steps = 0;
    double wall_ms = 0.0;
    std::vector<double> rho;
  };
  // results[cell][method][sample]
  std::vector<std::vector<std::vector<Run>>> results(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const Cell& cell = cells[c];
    const std::size_t env_index = environment_index(cfg, cell.env);
    const int np = cfg.pilots_for(cell.alpha);
    const std::uint64_t point_key =
        mix64(std::bit_cast<std::uint64_t>(cell.snr)) ^ std::bit_cast<std::uint64_t>(cell.alpha);
    const RngStream cell_rng = RngStream(cell.seed).substream(env_index).substream(point_key);
    const auto& samples = tests.at(cell.env);
    auto& out = results[c];
    out.assign(cfg.methods.size(), std::vector<Run>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const ComplexMatrix& h = samples[i];
      RngStream srng = cell_rng.substream(i);
      const MeasurementSetup setup =
          make_setup(make_pilots(cfg.nt, np, srng), noise_variance_for_snr(cfg.nt, cell.snr));
      const ComplexMatrix y = simulate_measurement(h, setup, srng);
      for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const MethodConfig& mc = cfg.methods[m];
        RngStream mrng = srng.substream(fnv1a64(mc.method));
        const double s = mc.s > 0.0 ? mc.s : default_likelihood_weight(cfg.nt, np);
        const std::vector<double> one{1.0};
        Run& run = out[m][i];
        const auto start = std::chrono::steady_clock::now();
        ComplexMatrix estimate;
        try {
          if (mc.method == "rls") {
            estimate = rls_estimate(y, setup);
          } else if (mc.method == "lasso") {
            estimate = lasso_ista(y, setup, mc.lambda_ratio * lasso_lambda_max(y, setup),
                                  mc.lasso_iterations);
            run.iters = mc.lasso_iterations;
          } else if (mc.method == "dm" || mc.method == "dm-matched") {
            const PriorSet prior{mc.method == "dm" ? aggregated : experts.at(cell.env)};
            estimate = deterministic_dm_estimate(y, setup, prior, one, s, schedule, mrng);
            run.reverse_steps = schedule.steps();
          } else if (mc.method == "langevin") {
            LangevinOptions lo;
            lo.c = mc.langevin_c;
            lo.steps_per_level = mc.steps_per_level;
            estimate = annealed_langevin_estimate(y, setup, PriorSet{aggregated}, one, s, schedule,
                                                  lo, mrng);
            run.reverse_steps = static_cast<long long>(schedule.steps()) * mc.steps_per_level;
          } else if (mc.method == "dmvb") {
            VBOptions vo;
            vo.s = s;
            vo.max_iterations = mc.max_iterations;
            vo.tolerance = mc.tolerance;
            vo.subset = default_time_subset(schedule.steps(), mc.subset_size);
            vo.refine_step = mc.refine_step;
            vo.warm_start = mc.warm_start;
            EstimatorReport report = dmvb_estimate(y, setup, all_experts, schedule, vo, mrng);
            estimate = std::move(report.estimate);
            run.iters = report.iterations;
            run.reverse_steps = report.reverse_steps;
            run.rho = report.final_rho();
          }
        } catch (const std::exception& e) {
          throw std::runtime_error("sweep: " + mc.method + " failed on " + cell.env + " sample " +
                                   std::to_string(i) + " at " + format("%g", cell.snr) +
                                   " dB: " + e.what());
        }
        if (options.timing) {
          run.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        }
        run.nmse = nmse(h, estimate);
      }
    }
  });

  SweepResult result;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const auto& runs = results[c][m];
      ResultRow row;
      row.config_hash = cfg.hash;
      row.method = cfg.methods[m].method;
      row.environment = cell.env;
      row.snr_db = cell.snr;
      row.alpha = cell.alpha;
      row.seed = cell.seed;
      double nmse_sum = 0.0, steps_sum = 0.0, wall_sum = 0.0, rho_sum = 0.0;
      std::vector<int> iters;
      std::vector<std::size_t> votes(all_experts.size(), 0);
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& r = runs[i];
        nmse_sum += r.nmse;
        steps_sum += static_cast<double>(r.reverse_steps);
        wall_sum += r.wall_ms;
        iters.push_back(r.iters);
        SampleOutcome so{row.method, row.environment, row.snr_db, row.alpha, row.seed, i,
                         r.nmse, r.iters, 0};
        if (!r.rho.empty()) {
          so.rho_argmax = argmax(r.rho);
          ++votes[so.rho_argmax];
          rho_sum += *std::max_element(r.rho.begin(), r.rho.end());
        }
        result.samples.push_back(so);
      }
      const double n = static_cast<double>(runs.size());
      row.nmse_db = to_db(nmse_sum / n);
      std::sort(iters.begin(), iters.end());
      const std::size_t mid = iters.size() / 2;
      row.iters = iters.size() % 2 == 1 ? iters[mid] : 0.5 * (iters[mid - 1] + iters[mid]);
      row.reverse_steps = steps_sum / n;
      row.wall_ms = wall_sum / n;
      if (row.method == "dmvb") {
        const auto best = static_cast<std::size_t>(
            std::max_element(votes.begin(), votes.end()) - votes.begin());
        row.rho_argmax = cfg.environments[best].id;
        row.rho_max = rho_sum / n;
      }
      result.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.method, a.environment, a.snr_db, a.alpha, a.seed) <
           std::tie(b.method, b.environment, b.snr_db, b.alpha, b.seed);
  });
  return result;
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "config_hash,method,environment,snr_db,alpha,seed,nmse_db,iters,reverse_steps,wall_ms,"
         "rho_argmax,rho_max\n";
  for (const auto& r : rows) {
    out << r.config_hash << ',' << r.method << ',' << r.environment << ','
        << format("%.10g", r.snr_db) << ',' << format("%.10g", r.alpha) << ',' << r.seed << ','
        << format("%.6f", r.nmse_db) << ',' << format("%.10g", r.iters) << ','
        << format("%.10g", r.reverse_steps) << ',' << format("%.3f", r.wall_ms) << ','
        << r.rho_argmax.value_or("") << ','
        << (r.rho_max ? format("%.6f", *r.rho_max) : std::string()) << '\n';
  }
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_results_csv(rows, out);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace chest
