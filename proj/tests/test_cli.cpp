#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scq/cli.hpp"
#include "scq/experiments.hpp"
#include "scq/presets.hpp"

using namespace scq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("scq_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "scq");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(int(argv.size()), argv.data());
}

cli::Overrides tiny() {
  cli::Overrides o;
  o.runs = 4;
  o.episodes = 6;
  o.threads = 1;
  return o;
}

}  // namespace

TEST(Cli, MissingConfigNamesPath) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_run("/no/such/config.json", scratch("missing"), {}, out, err), cli::kExitUsage);
  EXPECT_NE(err.str().find("/no/such/config.json"), std::string::npos);
  const auto diag = nlohmann::json::parse(err.str());
  EXPECT_EQ(diag.at("error"), "io");
}

TEST(Cli, MalformedAndInvalidConfigs) {
  const auto dir = scratch("bad");
  write(dir / "broken.json", "{\"name\": ");
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_run(dir / "broken.json", dir, {}, out, err), cli::kExitUsage);
  EXPECT_EQ(nlohmann::json::parse(err.str()).at("error"), "parse");

  auto j = to_json(preset_configs("fig1").front());
  j["n_runs"] = 0;
  write(dir / "zero.json", j.dump());
  std::ostringstream out2, err2;
  EXPECT_EQ(cli::cmd_run(dir / "zero.json", dir, {}, out2, err2), cli::kExitUsage);
  EXPECT_EQ(nlohmann::json::parse(err2.str()).at("error"), "config");
}

TEST(Cli, RunConfigWritesOutputs) {
  const auto dir = scratch("run");
  auto cfg = preset_configs("fig1").front();
  cfg.name = "mini";
  write(dir / "mini.json", to_json(cfg).dump(2));
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_run(dir / "mini.json", dir / "out", tiny(), out, err), cli::kExitOk) << err.str();
  EXPECT_TRUE(fs::exists(dir / "out" / "mini" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "mini" / "scq_beta4" / "percent_left.csv"));
  EXPECT_NE(out.str().find("mini/q_learning:"), std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(dir / "out" / "mini" / "summary.json"));
  EXPECT_EQ(summary.at("config").at("n_runs"), 4);
  EXPECT_EQ(summary.at("config").at("n_episodes"), 6);
}

TEST(Cli, PresetOutputsIndependentOfThreads) {
  const auto dir = scratch("threads");
  auto o = tiny();
  o.runs = 10;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_preset("fig3-10", dir / "t1", o, out, err), cli::kExitOk) << err.str();
  o.threads = 3;
  ASSERT_EQ(cli::cmd_preset("fig3-10", dir / "t3", o, out, err), cli::kExitOk) << err.str();
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "t1")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "t1");
    EXPECT_EQ(slurp(e.path()), slurp(dir / "t3" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
}

TEST(Cli, UnknownPresetAndShowPreset) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_preset("fig9", scratch("unknown"), {}, out, err), cli::kExitUsage);
  std::ostringstream shown, err2;
  ASSERT_EQ(cli::cmd_show_preset("fig2-med", shown, err2), cli::kExitOk);
  const auto configs = nlohmann::json::parse(shown.str());
  ASSERT_EQ(configs.size(), 1u);
  EXPECT_EQ(config_from_json(configs[0]).n_episodes, 10000u);
  EXPECT_EQ(cli::cmd_show_preset("scdqn-toy", shown, err2), cli::kExitUsage);
}

TEST(Cli, EstimatorBiasCommand) {
  const auto dir = scratch("bias");
  cli::EstimatorBiasArgs args;
  args.trials = 2000;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_estimator_bias(args, dir, out, err), cli::kExitOk) << err.str();
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j.at("estimators").size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "estimator-bias.csv"));
  args.tau = 1.0;
  std::ostringstream out2, err2;
  EXPECT_EQ(cli::cmd_estimator_bias(args, {}, out2, err2), cli::kExitUsage);
}

TEST(Cli, EstimatorBiasPresetWritesPerTauFiles) {
  const auto dir = scratch("bias_preset");
  cli::Overrides o;
  o.runs = 500;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_preset("estimator-bias", dir, o, out, err), cli::kExitOk) << err.str();
  for (const auto* f : {"tau-0.25.csv", "tau-0.5.csv", "tau-0.75.csv", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / "estimator-bias" / f)) << f;
}

TEST(Cli, ArgumentParsing) {
  EXPECT_EQ(run_main({"--help"}), cli::kExitOk);
  EXPECT_EQ(run_main({}), cli::kExitUsage);
  EXPECT_EQ(run_main({"preset", "fig1", "--threads", "banana"}), cli::kExitUsage);
  EXPECT_EQ(run_main({"preset", "fig1", "--runs", "0"}), cli::kExitUsage);
  EXPECT_EQ(run_main({"run"}), cli::kExitUsage);
  const auto dir = scratch("argv");
  EXPECT_EQ(run_main({"preset", "fig1", "--runs", "3", "--episodes", "4", "--threads", "auto", "--out-dir",
                      dir.string()}),
            cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "fig1" / "summary.json"));
}

TEST(Cli, OutDirFromEnvironment) {
  ::setenv("SCQ_OUT_DIR", "/tmp/scq-env-out", 1);
  EXPECT_EQ(cli::default_out_dir(), fs::path("/tmp/scq-env-out"));
  ::unsetenv("SCQ_OUT_DIR");
  EXPECT_EQ(cli::default_out_dir(), fs::path("out"));
}
