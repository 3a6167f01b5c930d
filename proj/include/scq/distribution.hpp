#pragma once

#include <variant>

#include <json.hpp>

#include "scq/random.hpp"

namespace scq {

struct ConstantDist {
  double value = 0.0;
};

struct GaussianDist {
  double mean = 0.0;
  double std = 1.0;
};

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};

/// A scalar reward / random-variable law. Immutable once built; the
/// factories reject negative standard deviations and inverted intervals.
class DistributionSpec {
 public:
  using Kind = std::variant<ConstantDist, GaussianDist, UniformDist>;

  DistributionSpec() = default;

  static DistributionSpec constant(double value);
  static DistributionSpec gaussian(double mean, double std);
  static DistributionSpec uniform(double lo, double hi);

  double expected_value() const;
  double sample(Rng& rng) const;
  bool is_constant() const { return std::holds_alternative<ConstantDist>(kind_); }
  const Kind& kind() const { return kind_; }

  friend bool operator==(const DistributionSpec& a, const DistributionSpec& b);

 private:
  explicit DistributionSpec(Kind kind) : kind_(kind) {}
  Kind kind_{ConstantDist{}};
};

nlohmann::json to_json(const DistributionSpec& dist);
DistributionSpec distribution_from_json(const nlohmann::json& j);

}  // namespace scq
