#pragma once

// Estimators of max_i E[Q(a_i)] for a finite set of random variables:
// the single estimator (max of one sample set), the double estimator
// (argmax on one set, evaluated on an independent one), and the
// self-correcting estimator built from two correlated sets.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scq/distribution.hpp"
#include "scq/random.hpp"

namespace scq {

/// The triple {b1, btau, b0} with b0 = tau*b1 + (1-tau)*btau element-wise.
/// Equivalently btau = b1 - beta*(b1 - b0) with beta = 1/(1-tau).
class CorrelatedEstimates {
 public:
  /// Builds b0 from b1 and btau. Throws on length mismatch, empty input,
  /// or tau outside [0,1).
  static CorrelatedEstimates combine(std::vector<double> b1, std::vector<double> btau, double tau);

  const std::vector<double>& b1() const { return b1_; }
  const std::vector<double>& btau() const { return btau_; }
  const std::vector<double>& b0() const { return b0_; }
  double tau() const { return tau_; }
  double beta() const { return 1.0 / (1.0 - tau_); }
  std::size_t size() const { return b1_.size(); }

 private:
  CorrelatedEstimates() = default;
  std::vector<double> b1_;
  std::vector<double> btau_;
  std::vector<double> b0_;
  double tau_ = 0.0;
};

/// Draws b1 and btau as sample means of `samples_per_set` draws per
/// variable. Two child streams are split off `rng`, so b1 and btau never
/// share random numbers.
CorrelatedEstimates generate_correlated_sets(std::span<const DistributionSpec> dists, double tau,
                                             int samples_per_set, Rng& rng);

/// Same, with the two independent streams supplied explicitly.
CorrelatedEstimates generate_correlated_sets(std::span<const DistributionSpec> dists, double tau,
                                             int samples_per_set, Rng& b1_stream,
                                             Rng& btau_stream);

double single_estimate(std::span<const double> values);

double double_estimate(std::span<const double> selector, std::span<const double> evaluator,
                       Rng& tie_rng);

/// b0 evaluated at argmax btau.
double self_correcting_estimate(const CorrelatedEstimates& corr, Rng& tie_rng);

/// Correlation between b0 and b1 for per-variable standard deviations
/// sigma1 (of b1) and sigmatau (of btau).
double pearson_rho(double tau, double sigma1, double sigmatau);

struct EstimatorStats {
  std::string estimator;
  double mean = 0.0;
  double std_error = 0.0;
  double true_max = 0.0;
  double bias = 0.0;
};

struct BiasReport {
  double tau = 0.0;
  int samples_per_set = 1;
  int n_trials = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorStats> estimators;  // single, double, self_correcting

  const EstimatorStats& at(const std::string& name) const;
};

/// Monte-Carlo bias of the three estimators. Per trial: single = max btau,
/// double = b1 at argmax btau, self_correcting = b0 at argmax btau (the same
/// argmax draw is shared by double and self_correcting).
BiasReport estimate_bias(std::span<const DistributionSpec> dists, double tau, int samples_per_set,
                         int n_trials, std::uint64_t seed);

nlohmann::json to_json(const BiasReport& report);

/// `estimator,mean,stderr,true_max,bias` header plus one row per estimator.
std::string to_csv(const BiasReport& report);

}  // namespace scq
