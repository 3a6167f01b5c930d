#include "scq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "scq/stats.hpp"

namespace scq {
namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw std::invalid_argument(fmt::format("tau must lie in [0,1), got {}", tau));
  }
}

double sample_mean(const DistributionSpec& dist, int n, Rng& rng) {
  // Incremental mean keeps constant laws exact.
  double mean = 0.0;
  for (int k = 1; k <= n; ++k) mean += (dist.sample(rng) - mean) / k;
  return mean;
}

}  // namespace

CorrelatedEstimates CorrelatedEstimates::combine(std::vector<double> b1, std::vector<double> btau,
                                                 double tau) {
  check_tau(tau);
  if (b1.empty()) throw std::invalid_argument("correlated estimates need M >= 1");
  if (b1.size() != btau.size()) throw std::invalid_argument("b1 and btau differ in length");
  CorrelatedEstimates out;
  out.b0_.resize(b1.size());
  for (std::size_t i = 0; i < b1.size(); ++i) {
    // tau*b1 + (1-tau)*btau, written so that b1 == btau gives b0 == btau exactly.
    out.b0_[i] = btau[i] + tau * (b1[i] - btau[i]);
  }
  out.b1_ = std::move(b1);
  out.btau_ = std::move(btau);
  out.tau_ = tau;
  return out;
}

CorrelatedEstimates generate_correlated_sets(std::span<const DistributionSpec> dists, double tau,
                                             int samples_per_set, Rng& rng) {
  Rng b1_stream(rng());
  Rng btau_stream(rng());
  return generate_correlated_sets(dists, tau, samples_per_set, b1_stream, btau_stream);
}

CorrelatedEstimates generate_correlated_sets(std::span<const DistributionSpec> dists, double tau,
                                             int samples_per_set, Rng& b1_stream,
                                             Rng& btau_stream) {
  check_tau(tau);
  if (dists.empty()) throw std::invalid_argument("need at least one distribution");
  if (samples_per_set < 1) throw std::invalid_argument("samples_per_set must be >= 1");
  std::vector<double> b1(dists.size());
  std::vector<double> btau(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    b1[i] = sample_mean(dists[i], samples_per_set, b1_stream);
    btau[i] = sample_mean(dists[i], samples_per_set, btau_stream);
  }
  return CorrelatedEstimates::combine(std::move(b1), std::move(btau), tau);
}

double single_estimate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("single_estimate of an empty set");
  return *std::max_element(values.begin(), values.end());
}

double double_estimate(std::span<const double> selector, std::span<const double> evaluator,
                       Rng& tie_rng) {
  if (selector.empty()) throw std::invalid_argument("double_estimate of an empty set");
  if (selector.size() != evaluator.size()) {
    throw std::invalid_argument("double_estimate: selector and evaluator differ in length");
  }
  return evaluator[argmax_uniform_ties(selector, tie_rng)];
}

double self_correcting_estimate(const CorrelatedEstimates& corr, Rng& tie_rng) {
  return corr.b0()[argmax_uniform_ties(corr.btau(), tie_rng)];
}

double pearson_rho(double tau, double sigma1, double sigmatau) {
  check_tau(tau);
  if (!(sigma1 > 0.0) || !(sigmatau > 0.0)) {
    throw std::invalid_argument("pearson_rho: standard deviations must be positive");
  }
  const double a = tau * sigma1;
  const double b = (1.0 - tau) * sigmatau;
  return a / std::sqrt(a * a + b * b);
}

const EstimatorStats& BiasReport::at(const std::string& name) const {
  for (const auto& e : estimators) {
    if (e.estimator == name) return e;
  }
  throw std::out_of_range("no estimator named '" + name + "' in report");
}

BiasReport estimate_bias(std::span<const DistributionSpec> dists, double tau, int samples_per_set,
                         int n_trials, std::uint64_t seed) {
  if (n_trials < 2) throw std::invalid_argument("estimate_bias needs n_trials >= 2");
  check_tau(tau);
  if (dists.empty()) throw std::invalid_argument("need at least one distribution");

  double true_max = dists[0].expected_value();
  for (const auto& d : dists) true_max = std::max(true_max, d.expected_value());

  Rng b1_stream = make_rng(seed, 1);
  Rng btau_stream = make_rng(seed, 2);
  Rng tie_stream = make_rng(seed, 3);

  RunningStats single, dbl, sc;
  for (int t = 0; t < n_trials; ++t) {
    const auto corr = generate_correlated_sets(dists, tau, samples_per_set, b1_stream, btau_stream);
    const std::size_t a_star = argmax_uniform_ties(corr.btau(), tie_stream);
    single.push(corr.btau()[a_star]);
    dbl.push(corr.b1()[a_star]);
    sc.push(corr.b0()[a_star]);
  }

  BiasReport report;
  report.tau = tau;
  report.samples_per_set = samples_per_set;
  report.n_trials = n_trials;
  report.seed = seed;
  auto row = [&](const char* name, const RunningStats& s) {
    return EstimatorStats{name, s.mean(), s.sem(), true_max, s.mean() - true_max};
  };
  report.estimators = {row("single", single), row("double", dbl), row("self_correcting", sc)};
  return report;
}

nlohmann::json to_json(const BiasReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report.estimators) {
    rows.push_back({{"estimator", e.estimator},
                    {"mean", e.mean},
                    {"stderr", e.std_error},
                    {"true_max", e.true_max},
                    {"bias", e.bias}});
  }
  return {{"tau", report.tau},
          {"beta", 1.0 / (1.0 - report.tau)},
          {"samples_per_set", report.samples_per_set},
          {"n_trials", report.n_trials},
          {"seed", report.seed},
          {"estimators", rows}};
}

std::string to_csv(const BiasReport& report) {
  std::string out = "estimator,mean,stderr,true_max,bias\n";
  for (const auto& e : report.estimators) {
    out += fmt::format("{},{},{},{},{}\n", e.estimator, e.mean, e.std_error, e.true_max, e.bias);
  }
  return out;
}

}  // namespace scq
