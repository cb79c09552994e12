/*
 * Copyright 2026 The uscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uscore/uscore.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using uscore::driver::Config;
using uscore::driver::RunManifest;

struct CommonFlags {
  std::string config_file;
  std::optional<std::string> model, level, n_particles, dist, l_max, seed, workers, out, data;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "flat key=value config file");
  cmd->add_option("--model", f.model, "ou | gbm | lorenz");
  cmd->add_option("--level", f.level, "data level l* (simulate-data) or fixed level");
  cmd->add_option("--n-particles", f.n_particles, "particles per cloud N");
  cmd->add_option("--dist", f.dist, "level distribution: geom:<p> | empirical");
  cmd->add_option("--l-max", f.l_max, "truncation level L_max");
  cmd->add_option("--seed", f.seed, "root seed");
  cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--data", f.data, "data file written by simulate-data");
  cmd->add_option("--set", f.overrides, "extra key=value setting (repeatable)");
}

Config resolve(const std::string& command, const CommonFlags& f) {
  Config cfg = f.config_file.empty() ? Config{} : Config::from_file(f.config_file);
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) cfg.set(key, *v);
  };
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw uscore::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  put("model", f.model);
  if (f.level) cfg.set(command == "simulate-data" ? "l_star" : "level", *f.level);
  put("n_particles", f.n_particles);
  put("dist", f.dist);
  put("l_max", f.l_max);
  put("seed", f.seed);
  put("workers", f.workers);
  put("out", f.out);
  put("data", f.data);
  cfg.set_default("model", "ou");
  cfg.set_default("seed", "1");
  cfg.set_default("workers", "1");
  return cfg;
}

template <class M>
uscore::ObservationRecord model_data(const M& model, const Config& cfg, M& conditioned) {
  auto data = uscore::driver::load_data(cfg);
  conditioned = uscore::with_start(model, data);
  return data;
}

int simulate_data(const Config& cfg, const std::string& hash) {
  const std::string out = cfg.str("out", "data.bin");
  uscore::driver::with_model(cfg.str("model"), [&](const auto& model) {
    const auto theta = uscore::driver::theta_of(model, cfg);
    const int l_star = static_cast<int>(cfg.integer("l_star", 6));
    const int horizon = static_cast<int>(cfg.integer("horizon", 10));
    const auto seed = static_cast<std::uint64_t>(cfg.integer("data_seed", cfg.integer("seed")));
    const auto sim = uscore::simulate_data(model, theta, l_star, horizon, seed);
    uscore::write_data(out, sim.observations);
    uscore::export_csv(cfg.str("csv", out + ".csv"), sim.observations, hash);
  });
  std::cout << "wrote " << out << "\n";
  return 0;
}

int estimate_score(Config cfg, const std::string& hash) {
  const std::string out = cfg.str("out", "estimate.csv");
  uscore::driver::with_model(cfg.str("model"), [&](const auto& base) {
    auto model = base;
    const auto data = model_data(base, cfg, model);
    const auto run = uscore::driver::estimate_score(model, data, cfg);
    uscore::driver::write_estimate_csv(run, out, hash);
    std::cout << "score estimate:";
    for (int i = 0; i < run.mean.size(); ++i) std::cout << ' ' << run.mean(i);
    std::cout << "  (" << run.failed << " of " << run.replicates.size()
              << " replicates failed to meet)\n";
  });
  std::cout << "wrote " << out << "\n";
  return 0;
}

int variance_sweep(const Config& cfg, const std::string& hash) {
  const std::string out = cfg.str("out", "variance.csv");
  uscore::driver::with_model(cfg.str("model"), [&](const auto& base) {
    auto model = base;
    const auto data = model_data(base, cfg, model);
    uscore::driver::write_variance_csv(uscore::driver::variance_sweep(model, data, cfg), out, hash);
  });
  std::cout << "wrote " << out << "\n";
  return 0;
}

int mse_sweep(const Config& cfg, const std::string& hash) {
  const std::string out = cfg.str("out", "mse.csv");
  uscore::driver::with_model(cfg.str("model"), [&](const auto& base) {
    auto model = base;
    const auto data = model_data(base, cfg, model);
    uscore::driver::write_mse_csv(uscore::driver::mse_sweep(model, data, cfg), out, hash);
  });
  std::cout << "wrote " << out << "\n";
  return 0;
}

int sgd(const Config& cfg, const std::string& hash) {
  const std::string out = cfg.str("out", "sgd.csv");
  uscore::driver::with_model(cfg.str("model"), [&](const auto& model) {
    const auto rows = uscore::driver::sgd_campaign(model, cfg);
    uscore::driver::write_sgd_csv(rows, out, hash);
    for (const auto& r : rows) {
      std::cout << "series " << r.series << " restart " << r.restart << ": theta_hat "
                << r.theta_hat << " after " << r.iterations << " iterations\n";
    }
  });
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uscore: unbiased score estimation for diffusion state-space models"};
  app.require_subcommand(1);
  const std::vector<std::string> names = {"simulate-data", "estimate-score", "variance-sweep",
                                          "mse-sweep", "sgd"};
  const std::map<std::string, std::string> help = {
      {"simulate-data", "simulate an observation path and write the data file"},
      {"estimate-score", "replicated unbiased score estimates"},
      {"variance-sweep", "sample variance of Psi^l per level and per ensemble size"},
      {"mse-sweep", "MSE and cost of the unbiased and level-0 estimators per N"},
      {"sgd", "stochastic gradient campaign over series and restarts"}};
  std::map<std::string, CommonFlags> flags;
  for (const auto& n : names) add_common(app.add_subcommand(n, help.at(n)), flags[n]);
  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& n : names) {
      if (!app.got_subcommand(n)) continue;
      const Config cfg = resolve(n, flags[n]);
      const RunManifest manifest{n, cfg};
      const std::string hash = manifest.hash();
      std::cout << "manifest " << hash << "\n";
      if (n == "simulate-data") return simulate_data(cfg, hash);
      if (n == "estimate-score") return estimate_score(cfg, hash);
      if (n == "variance-sweep") return variance_sweep(cfg, hash);
      if (n == "mse-sweep") return mse_sweep(cfg, hash);
      return sgd(cfg, hash);
    }
  } catch (const uscore::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
