#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace scq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, unreadable or invalid config
inline constexpr int kExitRuntime = 2;  // failure while running or writing outputs

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> threads;  // 0 = auto
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> steps;    // scdqn-toy training steps
};

/// `--out-dir`, else $SCQ_OUT_DIR, else ./out.
std::filesystem::path default_out_dir();

int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const Overrides& overrides, std::ostream& out, std::ostream& err);

int cmd_preset(const std::string& name, const std::filesystem::path& out_dir, const Overrides& overrides,
               std::ostream& out, std::ostream& err);

struct EstimatorBiasArgs {
  std::size_t m = 8;
  double mean = -0.1;
  double std = 1.0;
  double tau = 0.5;
  int samples_per_set = 1;
  int trials = 100000;
  std::uint64_t seed = 2021;
};

/// Prints the report as JSON on `out`; writes `<out_dir>/estimator-bias.csv`
/// when out_dir is non-empty.
int cmd_estimator_bias(const EstimatorBiasArgs& args, const std::filesystem::path& out_dir, std::ostream& out,
                       std::ostream& err);

/// Prints the bundled config(s) of an experiment preset as JSON.
int cmd_show_preset(const std::string& name, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace scq::cli
