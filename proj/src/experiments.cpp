#include "scq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "scq/envs.hpp"
#include "scq/random.hpp"
#include "scq/stats.hpp"

namespace scq {

// ---------------------------------------------------------------------------
// Environments

TabularMdp build_env(const EnvSpec& env) {
  struct Visitor {
    TabularMdp operator()(const BiasExampleEnv& e) const { return make_bias_example(e.k_b_actions); }
    TabularMdp operator()(const GridWorldEnv& e) const {
      return make_grid_world(e.n, e.reward_lo, e.reward_hi, e.gamma);
    }
    TabularMdp operator()(const CliffWalkEnv& e) const { return make_cliff_walk(e.height, e.width); }
  };
  return std::visit(Visitor{}, env);
}

nlohmann::json to_json(const EnvSpec& env) {
  struct Visitor {
    nlohmann::json operator()(const BiasExampleEnv& e) const {
      return {{"kind", "bias_example"}, {"k_b_actions", e.k_b_actions}};
    }
    nlohmann::json operator()(const GridWorldEnv& e) const {
      return {{"kind", "grid_world"},
              {"n", e.n},
              {"reward_lo", e.reward_lo},
              {"reward_hi", e.reward_hi},
              {"gamma", e.gamma}};
    }
    nlohmann::json operator()(const CliffWalkEnv& e) const {
      return {{"kind", "cliff_walk"}, {"height", e.height}, {"width", e.width}};
    }
  };
  return std::visit(Visitor{}, env);
}

EnvSpec env_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "bias_example") return BiasExampleEnv{j.value("k_b_actions", std::size_t{8})};
  if (kind == "grid_world") {
    GridWorldEnv e;
    e.n = j.value("n", e.n);
    e.reward_lo = j.at("reward_lo").get<double>();
    e.reward_hi = j.at("reward_hi").get<double>();
    e.gamma = j.value("gamma", e.gamma);
    return e;
  }
  if (kind == "cliff_walk") {
    return CliffWalkEnv{j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>()};
  }
  throw ConfigError("unknown env kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Config

std::string to_string(Metric m) {
  switch (m) {
    case Metric::percent_left: return "percent_left";
    case Metric::avg_reward_per_step: return "avg_reward_per_step";
    case Metric::start_state_bias: return "start_state_bias";
    case Metric::episode_reward: return "episode_reward";
    case Metric::relative_total_reward: return "relative_total_reward";
  }
  return "?";
}

Metric metric_from_string(const std::string& s) {
  for (auto m : {Metric::percent_left, Metric::avg_reward_per_step, Metric::start_state_bias,
                 Metric::episode_reward, Metric::relative_total_reward}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown metric '" + s + "'");
}

namespace {

bool safe_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!safe_name(name)) throw ConfigError(fmt::format("experiment name '{}' is not a safe file name", name));
  if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (n_episodes < 1) throw ConfigError("n_episodes must be >= 1");
  if (max_steps_per_episode < 1) throw ConfigError("max_steps_per_episode must be >= 1");
  if (reward_window < 1) throw ConfigError("reward_window must be >= 1");
  if (smoothing_window > n_episodes) throw ConfigError("smoothing_window exceeds n_episodes");
  if (agents.empty()) throw ConfigError("at least one agent is required");
  if (metrics.empty()) throw ConfigError("at least one metric is required");

  std::set<std::string> names;
  bool has_random = false;
  for (const auto& a : agents) {
    try {
      a.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!safe_name(a.name)) throw ConfigError(fmt::format("agent name '{}' is not a safe file name", a.name));
    if (!names.insert(a.name).second) throw ConfigError(fmt::format("duplicate agent name '{}'", a.name));
    has_random = has_random || a.kind == AgentKind::random;
  }

  std::set<Metric> seen;
  for (auto m : metrics) {
    if (!seen.insert(m).second) throw ConfigError("duplicate metric '" + to_string(m) + "'");
    if (m == Metric::percent_left && !std::holds_alternative<BiasExampleEnv>(env)) {
      throw ConfigError("metric percent_left applies only to the bias_example env");
    }
    if (m == Metric::relative_total_reward && !has_random) {
      throw ConfigError("metric relative_total_reward needs a baseline agent of kind 'random'");
    }
  }

  try {
    (void)build_env(env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg, bool include_threads) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : cfg.agents) agents.push_back(to_json(a));
  nlohmann::json metrics = nlohmann::json::array();
  for (auto m : cfg.metrics) metrics.push_back(to_string(m));
  nlohmann::json j = {{"schema_version", kConfigSchemaVersion},
                      {"name", cfg.name},
                      {"env", to_json(cfg.env)},
                      {"agents", agents},
                      {"n_runs", cfg.n_runs},
                      {"n_episodes", cfg.n_episodes},
                      {"max_steps_per_episode", cfg.max_steps_per_episode},
                      {"master_seed", cfg.master_seed},
                      {"metrics", metrics},
                      {"smoothing_window", cfg.smoothing_window},
                      {"reward_window", cfg.reward_window}};
  if (include_threads) {
    j["threads"] = cfg.threads == 0 ? nlohmann::json("auto") : nlohmann::json(cfg.threads);
  }
  return j;
}

namespace {

const std::set<std::string> kConfigKeys = {
    "schema_version", "name",    "env",              "agents",         "n_runs",  "n_episodes",
    "max_steps_per_episode",     "master_seed",      "metrics",        "smoothing_window",
    "reward_window",  "threads"};

template <class T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(fmt::format("missing required field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("field '{}' has the wrong type", key));
  }
}

template <class T>
T optional_field(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.count(key)) throw ConfigError(fmt::format("unknown field '{}'", key));
  }
  const int version = field<int>(j, "schema_version");
  if (version != kConfigSchemaVersion) {
    throw ConfigError(fmt::format("unsupported schema_version {} (expected {})", version, kConfigSchemaVersion));
  }

  ExperimentConfig cfg;
  cfg.name = field<std::string>(j, "name");
  try {
    cfg.env = env_from_json(j.at("env"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  if (!j.contains("agents") || !j.at("agents").is_array()) throw ConfigError("'agents' must be an array");
  for (std::size_t i = 0; i < j.at("agents").size(); ++i) {
    try {
      cfg.agents.push_back(agent_spec_from_json(j.at("agents")[i]));
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("agents[{}]: {}", i, e.what()));
    }
  }
  cfg.n_runs = field<std::size_t>(j, "n_runs");
  cfg.n_episodes = field<std::size_t>(j, "n_episodes");
  cfg.max_steps_per_episode = optional_field<std::size_t>(j, "max_steps_per_episode", cfg.max_steps_per_episode);
  cfg.master_seed = optional_field<std::uint64_t>(j, "master_seed", 0);
  for (const auto& m : field<std::vector<std::string>>(j, "metrics")) cfg.metrics.push_back(metric_from_string(m));
  cfg.smoothing_window = optional_field<std::size_t>(j, "smoothing_window", 0);
  cfg.reward_window = optional_field<std::size_t>(j, "reward_window", cfg.reward_window);
  if (j.contains("threads")) {
    const auto& t = j.at("threads");
    if (t.is_string() && t.get<std::string>() == "auto") {
      cfg.threads = 0;
    } else if (t.is_number_unsigned() && t.get<std::size_t>() >= 1) {
      cfg.threads = t.get<std::size_t>();
    } else {
      throw ConfigError("'threads' must be a positive integer or \"auto\"");
    }
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Metric building blocks

TrailingRewardWindow::TrailingRewardWindow(std::size_t window) : window_(window), ring_(window, 0.0) {
  if (window == 0) throw std::invalid_argument("reward window must be >= 1");
}

void TrailingRewardWindow::push(double reward) {
  if (filled_ == window_) {
    sum_ -= ring_[head_];
  } else {
    ++filled_;
  }
  ring_[head_] = reward;
  sum_ += reward;
  head_ = (head_ + 1) % window_;
}

double TrailingRewardWindow::average() const {
  return filled_ == 0 ? 0.0 : sum_ / static_cast<double>(filled_);
}

namespace {

double left_indicator(const EpisodeLog& log) {
  if (log.transitions.empty()) return 0.0;
  const auto& first = log.transitions.front();
  if (first.s != BiasExample::kA || first.a > BiasExample::kRight) {
    throw std::invalid_argument("percent_left applies only to bias-example episodes");
  }
  return first.a == BiasExample::kLeft ? 100.0 : 0.0;
}

}  // namespace

std::vector<double> metric_percent_left(const std::vector<std::vector<EpisodeLog>>& runs) {
  if (runs.empty()) return {};
  const std::size_t n_episodes = runs.front().size();
  std::vector<double> out(n_episodes, 0.0);
  for (const auto& run : runs) {
    if (run.size() != n_episodes) throw std::invalid_argument("runs differ in episode count");
    for (std::size_t e = 0; e < n_episodes; ++e) out[e] += left_indicator(run[e]);
  }
  for (auto& v : out) v /= static_cast<double>(runs.size());
  return out;
}

WindowedSeries metric_avg_reward_per_step(std::span<const EpisodeLog> episodes, std::size_t window) {
  TrailingRewardWindow trailing(window);
  WindowedSeries out;
  for (const auto& ep : episodes) {
    for (const auto& t : ep.transitions) trailing.push(t.r);
    out.values.push_back(trailing.average());
    out.partial.push_back(!trailing.full());
  }
  return out;
}

double metric_start_state_bias(const QTable& q, const QTable& q_star, StateId start) {
  if (!q.same_shape(q_star)) throw std::invalid_argument("start_state_bias: table shapes differ");
  return q.max(start) - q_star.max(start);
}

double metric_relative_total_reward(std::span<const double> agent_series,
                                    std::span<const double> baseline_series) {
  if (baseline_series.empty()) throw std::invalid_argument("relative_total_reward: baseline series missing");
  if (agent_series.empty()) throw std::invalid_argument("relative_total_reward: agent series empty");
  return agent_series.back() - baseline_series.back();
}

std::vector<double> smooth(std::span<const double> series, std::size_t window) {
  if (window > series.size()) throw std::invalid_argument("smoothing window longer than the series");
  if (window <= 1) return {series.begin(), series.end()};
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window / 2;
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(series.size() - 1, i + right);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += series[k];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runner

const std::vector<SeriesPoint>& AgentResult::at(Metric m) const {
  const auto it = series.find(m);
  if (it == series.end()) throw std::out_of_range("metric '" + to_string(m) + "' not recorded for " + name);
  return it->second;
}

const AgentResult& AggregateResult::agent(const std::string& name) const {
  for (const auto& a : agents) {
    if (a.name == name) return a;
  }
  throw std::out_of_range("no agent named '" + name + "'");
}

namespace {

struct AgentRun {
  std::vector<std::vector<double>> metric_values;  // [metric][episode]
  std::vector<double> episode_rewards;
  std::uint64_t truncated = 0;
};

struct RunContext {
  const ExperimentConfig& cfg;
  const TabularMdp& mdp;
  double optimal_start_value;
};

AgentRun run_agent(const RunContext& ctx, std::size_t run, std::size_t agent_index) {
  const auto& cfg = ctx.cfg;
  Rng rng = make_rng(cfg.master_seed, run, agent_index);
  AgentState agent = make_agent(cfg.agents[agent_index], ctx.mdp);
  const bool is_random = agent.kind() == AgentKind::random;

  AgentRun out;
  out.metric_values.assign(cfg.metrics.size(), std::vector<double>(cfg.n_episodes, 0.0));
  out.episode_rewards.resize(cfg.n_episodes);
  TrailingRewardWindow trailing(cfg.reward_window);
  EpisodeLog log;
  const StateId start = ctx.mdp.start_state();

  for (std::size_t e = 0; e < cfg.n_episodes; ++e) {
    run_episode(agent, ctx.mdp, cfg.max_steps_per_episode, rng, log);
    if (log.truncated) ++out.truncated;
    for (const auto& t : log.transitions) trailing.push(t.r);
    out.episode_rewards[e] = log.total_reward;
    for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
      double v = 0.0;
      switch (cfg.metrics[m]) {
        case Metric::percent_left: v = left_indicator(log); break;
        case Metric::avg_reward_per_step: v = trailing.average(); break;
        case Metric::start_state_bias: {
          if (is_random) break;
          double best = agent.behavior_value(start, 0);
          for (ActionId a = 1; a < agent.n_actions(start); ++a) best = std::max(best, agent.behavior_value(start, a));
          v = best - ctx.optimal_start_value;
          break;
        }
        case Metric::episode_reward: v = log.total_reward; break;
        case Metric::relative_total_reward: break;  // filled once the baseline is known
      }
      out.metric_values[m][e] = v;
    }
  }
  return out;
}

std::vector<AgentRun> run_one(const RunContext& ctx, std::size_t run) {
  const auto& cfg = ctx.cfg;
  std::vector<AgentRun> agents;
  agents.reserve(cfg.agents.size());
  for (std::size_t a = 0; a < cfg.agents.size(); ++a) agents.push_back(run_agent(ctx, run, a));

  const auto rel = std::find(cfg.metrics.begin(), cfg.metrics.end(), Metric::relative_total_reward);
  if (rel != cfg.metrics.end()) {
    const std::size_t m = static_cast<std::size_t>(rel - cfg.metrics.begin());
    std::size_t baseline = 0;
    while (cfg.agents[baseline].kind != AgentKind::random) ++baseline;
    const auto& base = agents[baseline].episode_rewards;
    for (auto& ar : agents) {
      for (std::size_t e = 0; e < cfg.n_episodes; ++e) ar.metric_values[m][e] = ar.episode_rewards[e] - base[e];
    }
  }
  return agents;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Rethrows the first
// exception after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

AggregateResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TabularMdp mdp = build_env(cfg.env);
  double optimal_start_value = 0.0;
  if (std::find(cfg.metrics.begin(), cfg.metrics.end(), Metric::start_state_bias) != cfg.metrics.end()) {
    optimal_start_value = value_iteration(mdp, 1e-10, 1000000).max(mdp.start_state());
  }
  const RunContext ctx{cfg, mdp, optimal_start_value};

  const std::size_t n_agents = cfg.agents.size();
  const std::size_t n_metrics = cfg.metrics.size();
  // acc[agent][metric][episode]
  std::vector<std::vector<std::vector<RunningStats>>> acc(
      n_agents, std::vector<std::vector<RunningStats>>(n_metrics, std::vector<RunningStats>(cfg.n_episodes)));
  std::vector<std::uint64_t> truncated(n_agents, 0);

  const std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t batch = std::max<std::size_t>(8, 4 * threads);
  std::vector<std::vector<AgentRun>> outputs;
  for (std::size_t first = 0; first < cfg.n_runs; first += batch) {
    const std::size_t count = std::min(batch, cfg.n_runs - first);
    outputs.assign(count, {});
    parallel_for(count, threads, [&](std::size_t i) { outputs[i] = run_one(ctx, first + i); });
    // Ordered fold by run index.
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t a = 0; a < n_agents; ++a) {
        const AgentRun& ar = outputs[i][a];
        truncated[a] += ar.truncated;
        for (std::size_t m = 0; m < n_metrics; ++m) {
          for (std::size_t e = 0; e < cfg.n_episodes; ++e) acc[a][m][e].push(ar.metric_values[m][e]);
        }
      }
    }
  }

  AggregateResult result;
  result.config = cfg;
  for (std::size_t a = 0; a < n_agents; ++a) {
    AgentResult ar;
    ar.name = cfg.agents[a].name;
    ar.truncated_episodes = truncated[a];
    for (std::size_t m = 0; m < n_metrics; ++m) {
      std::vector<SeriesPoint> series;
      series.reserve(cfg.n_episodes);
      for (const auto& s : acc[a][m]) series.push_back({s.mean(), s.min(), s.max(), s.sem()});
      const std::string key = to_string(cfg.metrics[m]);
      ar.summary["final_" + key] = series.back().mean;
      ar.summary["final_" + key + "_sem"] = series.back().sem;
      const std::size_t tail = std::min<std::size_t>(5, series.size());
      double last5 = 0.0;
      for (std::size_t e = series.size() - tail; e < series.size(); ++e) last5 += series[e].mean;
      ar.summary["last5_" + key] = last5 / static_cast<double>(tail);
      ar.series.emplace(cfg.metrics[m], std::move(series));
    }
    result.agents.push_back(std::move(ar));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string series_csv(const std::vector<SeriesPoint>& series) {
  std::string out = "episode,mean,min,max,sem\n";
  for (std::size_t e = 0; e < series.size(); ++e) {
    const auto& p = series[e];
    out += fmt::format("{},{},{},{},{}\n", e + 1, p.mean, p.min, p.max, p.sem);
  }
  return out;
}

std::vector<SeriesPoint> smooth_series(const std::vector<SeriesPoint>& series, std::size_t window) {
  auto column = [&](double SeriesPoint::*field) {
    std::vector<double> v;
    v.reserve(series.size());
    for (const auto& p : series) v.push_back(p.*field);
    return smooth(v, window);
  };
  const auto mean = column(&SeriesPoint::mean);
  const auto min = column(&SeriesPoint::min);
  const auto max = column(&SeriesPoint::max);
  const auto sem = column(&SeriesPoint::sem);
  std::vector<SeriesPoint> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = {mean[i], min[i], max[i], sem[i]};
  return out;
}

}  // namespace

void write_result(const AggregateResult& result, const std::filesystem::path& out_root) {
  const auto& cfg = result.config;
  const auto dir = out_root / cfg.name;
  std::filesystem::create_directories(dir);

  nlohmann::json agents = nlohmann::json::object();
  for (const auto& ar : result.agents) {
    const auto agent_dir = dir / ar.name;
    std::filesystem::create_directories(agent_dir);
    for (const auto& [metric, series] : ar.series) {
      write_file(agent_dir / (to_string(metric) + ".csv"), series_csv(series));
      if (cfg.smoothing_window > 1) {
        write_file(agent_dir / (to_string(metric) + "_smoothed.csv"),
                   series_csv(smooth_series(series, cfg.smoothing_window)));
      }
    }
    nlohmann::json summary(ar.summary);
    summary["truncated_episodes"] = ar.truncated_episodes;
    agents[ar.name] = summary;
  }

  const nlohmann::json summary = {{"experiment", cfg.name},
                                  {"seed", cfg.master_seed},
                                  {"config", to_json(cfg, false)},
                                  {"agents", agents}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace scq
