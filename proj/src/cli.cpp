#include "scq/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "scq/envs.hpp"
#include "scq/estimators.hpp"
#include "scq/experiments.hpp"
#include "scq/presets.hpp"
#include "scq/scdqn.hpp"

namespace scq::cli {
namespace {

// One JSON object per line on stderr.
void diagnose(std::ostream& err, const std::string& kind, const std::string& message,
              const std::string& path = {}) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  if (!path.empty()) j["path"] = path;
  err << j.dump() << '\n';
}

void apply(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.runs) cfg.n_runs = *o.runs;
  if (o.episodes) {
    cfg.n_episodes = *o.episodes;
    cfg.smoothing_window = std::min(cfg.smoothing_window, cfg.n_episodes);
  }
  if (o.threads) cfg.threads = *o.threads;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void print_summary(const AggregateResult& result, std::ostream& out) {
  for (const auto& agent : result.agents) {
    std::string line = fmt::format("{}/{}:", result.config.name, agent.name);
    for (auto m : result.config.metrics) {
      const auto key = "final_" + to_string(m);
      line += fmt::format(" {}={:.4f}±{:.4f}", key, agent.summary.at(key), agent.summary.at(key + "_sem"));
    }
    if (agent.truncated_episodes) line += fmt::format(" truncated_episodes={}", agent.truncated_episodes);
    out << line << '\n';
  }
}

int execute(ExperimentConfig cfg, const std::filesystem::path& out_dir, const Overrides& overrides,
            std::ostream& out, std::ostream& err) {
  apply(cfg, overrides);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    diagnose(err, "config", e.what());
    return kExitUsage;
  }
  try {
    const auto result = run_experiment(cfg);
    write_result(result, out_dir);
    print_summary(result, out);
  } catch (const std::exception& e) {
    diagnose(err, "runtime", e.what(), (out_dir / cfg.name).string());
    return kExitRuntime;
  }
  return kExitOk;
}

int run_estimator_bias_preset(const std::filesystem::path& out_dir, const Overrides& o, std::ostream& out,
                              std::ostream& err) {
  auto preset = estimator_bias_preset();
  if (o.seed) preset.seed = *o.seed;
  if (o.runs) preset.n_trials = static_cast<int>(*o.runs);
  try {
    const auto dir = out_dir / "estimator-bias";
    std::filesystem::create_directories(dir);
    nlohmann::json reports = nlohmann::json::array();
    for (double tau : preset.taus) {
      const auto report = estimate_bias(preset.dists, tau, preset.samples_per_set, preset.n_trials, preset.seed);
      write_text(dir / fmt::format("tau-{}.csv", tau), to_csv(report));
      reports.push_back(to_json(report));
      out << fmt::format("estimator-bias tau={}: single={:+.4f} double={:+.4f} self_correcting={:+.4f}\n", tau,
                         report.at("single").bias, report.at("double").bias, report.at("self_correcting").bias);
    }
    write_text(dir / "summary.json", nlohmann::json{{"experiment", "estimator-bias"}, {"reports", reports}}.dump(2) + "\n");
  } catch (const std::invalid_argument& e) {
    diagnose(err, "config", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    diagnose(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

int run_scdqn_preset(const std::filesystem::path& out_dir, const Overrides& o, std::ostream& out, std::ostream& err) {
  auto preset = scdqn_toy_preset();
  try {
    const auto mdp = make_grid_world(3, preset.reward_lo, preset.reward_hi, preset.gamma);
    const auto dir = out_dir / "scdqn-toy";
    nlohmann::json summary = {{"experiment", "scdqn-toy"},
                              {"env", {{"kind", "grid_world"}, {"n", 3}, {"reward_lo", preset.reward_lo},
                                       {"reward_hi", preset.reward_hi}, {"gamma", preset.gamma}}}};
    for (auto& cfg : preset.runs) {
      if (o.seed) cfg.seed = *o.seed;
      if (o.steps) cfg.total_steps = *o.steps;
      const auto run = train_scdqn(mdp, cfg);
      const auto rule = to_string(cfg.rule);
      std::filesystem::create_directories(dir / rule);
      write_text(dir / rule / "training.csv", training_csv(run.log));

      Rng eval_rng = make_rng(cfg.seed, 99);
      int reached = 0;
      for (int ep = 0; ep < 100; ++ep) reached += greedy_rollout_steps(run.state.online, mdp, 10, eval_rng) <= 10;
      const double final_value = run.log.empty() ? 0.0 : run.log.back().selected_action_value_mean;
      summary["rules"][rule] = {{"seed", cfg.seed},
                                {"total_steps", cfg.total_steps},
                                {"greedy_success_of_100", reached},
                                {"final_selected_action_value", final_value}};
      out << fmt::format("scdqn-toy/{}: greedy success {}/100, selected-action value {:.4f}\n", rule, reached,
                         final_value);
    }
    std::filesystem::create_directories(dir);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    diagnose(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("SCQ_OUT_DIR"); env && *env) return env;
  return "out";
}

int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const Overrides& overrides, std::ostream& out, std::ostream& err) {
  std::ifstream in(config_path);
  if (!in) {
    diagnose(err, "io", "cannot read config file", config_path.string());
    return kExitUsage;
  }
  ExperimentConfig cfg;
  try {
    cfg = config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    diagnose(err, "parse", e.what(), config_path.string());
    return kExitUsage;
  } catch (const std::exception& e) {
    diagnose(err, "config", e.what(), config_path.string());
    return kExitUsage;
  }
  return execute(std::move(cfg), out_dir, overrides, out, err);
}

int cmd_preset(const std::string& name, const std::filesystem::path& out_dir, const Overrides& overrides,
               std::ostream& out, std::ostream& err) {
  if (name == "estimator-bias") return run_estimator_bias_preset(out_dir, overrides, out, err);
  if (name == "scdqn-toy") return run_scdqn_preset(out_dir, overrides, out, err);
  if (!is_experiment_preset(name)) {
    diagnose(err, "usage", "unknown preset '" + name + "'");
    return kExitUsage;
  }
  for (auto& cfg : preset_configs(name)) {
    if (const int rc = execute(cfg, out_dir, overrides, out, err); rc != kExitOk) return rc;
  }
  return kExitOk;
}

int cmd_estimator_bias(const EstimatorBiasArgs& args, const std::filesystem::path& out_dir, std::ostream& out,
                       std::ostream& err) {
  try {
    const std::vector<DistributionSpec> dists(args.m, DistributionSpec::gaussian(args.mean, args.std));
    const auto report = estimate_bias(dists, args.tau, args.samples_per_set, args.trials, args.seed);
    out << to_json(report).dump(2) << '\n';
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      write_text(out_dir / "estimator-bias.csv", to_csv(report));
    }
  } catch (const std::invalid_argument& e) {
    diagnose(err, "config", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    diagnose(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_show_preset(const std::string& name, std::ostream& out, std::ostream& err) {
  if (!is_experiment_preset(name)) {
    diagnose(err, "usage", "'" + name + "' is not an experiment preset");
    return kExitUsage;
  }
  nlohmann::json configs = nlohmann::json::array();
  for (const auto& cfg : preset_configs(name)) configs.push_back(to_json(cfg));
  out << configs.dump(2) << '\n';
  return kExitOk;
}

int main(int argc, char** argv) {
  CLI::App app{"Self-correcting Q-learning experiments"};
  app.require_subcommand(1);

  std::string out_dir_flag;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs, episodes, steps;
  std::string threads_flag;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir_flag, "Output root (default $SCQ_OUT_DIR or ./out)");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--runs", runs, "Number of independent runs")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads_flag, "Worker threads: a positive integer or 'auto'");
    sub->add_option("--episodes", episodes, "Episodes per run")->check(CLI::PositiveNumber);
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common(run);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "Run a bundled preset");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_option("--steps", steps, "Training steps (scdqn-toy)")->check(CLI::PositiveNumber);
  add_common(preset);

  std::string show_name;
  auto* show = app.add_subcommand("show-preset", "Print the config(s) of an experiment preset");
  show->add_option("name", show_name, "Preset name")->required();

  EstimatorBiasArgs bias;
  auto* bias_cmd = app.add_subcommand("estimator-bias", "Monte-Carlo bias of the three max estimators");
  bias_cmd->add_option("--m", bias.m, "Number of variables")->check(CLI::PositiveNumber);
  bias_cmd->add_option("--mean", bias.mean, "Mean of every variable");
  bias_cmd->add_option("--std", bias.std, "Standard deviation of every variable");
  bias_cmd->add_option("--tau", bias.tau, "Dependence tau in [0,1)");
  bias_cmd->add_option("--samples", bias.samples_per_set, "Samples per estimator set")->check(CLI::PositiveNumber);
  bias_cmd->add_option("--trials", bias.trials, "Monte-Carlo trials");
  bias_cmd->add_option("--seed", bias.seed, "Seed");
  std::string bias_out;
  bias_cmd->add_option("--out-dir", bias_out, "Also write estimator-bias.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  Overrides overrides;
  overrides.seed = seed;
  overrides.runs = runs;
  overrides.episodes = episodes;
  overrides.steps = steps;
  if (!threads_flag.empty()) {
    if (threads_flag == "auto") {
      overrides.threads = 0;
    } else {
      try {
        std::size_t pos = 0;
        const long long n = std::stoll(threads_flag, &pos);
        if (pos != threads_flag.size() || n < 1) throw std::invalid_argument("threads");
        overrides.threads = static_cast<std::size_t>(n);
      } catch (const std::exception&) {
        diagnose(std::cerr, "usage", "--threads expects a positive integer or 'auto'");
        return kExitUsage;
      }
    }
  }
  const std::filesystem::path out_dir = out_dir_flag.empty() ? default_out_dir() : std::filesystem::path(out_dir_flag);

  if (*run) return cmd_run(config_path, out_dir, overrides, std::cout, std::cerr);
  if (*preset) return cmd_preset(preset_name, out_dir, overrides, std::cout, std::cerr);
  if (*show) return cmd_show_preset(show_name, std::cout, std::cerr);
  if (*bias_cmd) return cmd_estimator_bias(bias, bias_out, std::cout, std::cerr);
  return kExitUsage;
}

}  // namespace scq::cli
