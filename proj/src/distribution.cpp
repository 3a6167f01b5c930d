#include "scq/distribution.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scq {

DistributionSpec DistributionSpec::constant(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("constant distribution: value must be finite");
  return DistributionSpec(ConstantDist{value});
}

DistributionSpec DistributionSpec::gaussian(double mean, double std) {
  if (!std::isfinite(mean) || !std::isfinite(std) || std < 0.0) {
    throw std::invalid_argument("gaussian distribution: need finite mean and std >= 0");
  }
  return DistributionSpec(GaussianDist{mean, std});
}

DistributionSpec DistributionSpec::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw std::invalid_argument("uniform distribution: need finite lo <= hi");
  }
  return DistributionSpec(UniformDist{lo, hi});
}

double DistributionSpec::expected_value() const {
  struct Visitor {
    double operator()(const ConstantDist& d) const { return d.value; }
    double operator()(const GaussianDist& d) const { return d.mean; }
    double operator()(const UniformDist& d) const { return 0.5 * (d.lo + d.hi); }
  };
  return std::visit(Visitor{}, kind_);
}

double DistributionSpec::sample(Rng& rng) const {
  struct Visitor {
    Rng& rng;
    double operator()(const ConstantDist& d) const { return d.value; }
    double operator()(const GaussianDist& d) const {
      if (d.std == 0.0) return d.mean;
      return std::normal_distribution<double>(d.mean, d.std)(rng);
    }
    double operator()(const UniformDist& d) const { return d.lo + (d.hi - d.lo) * uniform01(rng); }
  };
  return std::visit(Visitor{rng}, kind_);
}

bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
  return to_json(a) == to_json(b);
}

nlohmann::json to_json(const DistributionSpec& dist) {
  struct Visitor {
    nlohmann::json operator()(const ConstantDist& d) const {
      return {{"kind", "constant"}, {"value", d.value}};
    }
    nlohmann::json operator()(const GaussianDist& d) const {
      return {{"kind", "gaussian"}, {"mean", d.mean}, {"std", d.std}};
    }
    nlohmann::json operator()(const UniformDist& d) const {
      return {{"kind", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    }
  };
  return std::visit(Visitor{}, dist.kind());
}

DistributionSpec distribution_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return DistributionSpec::constant(j.at("value").get<double>());
  if (kind == "gaussian") {
    return DistributionSpec::gaussian(j.at("mean").get<double>(), j.at("std").get<double>());
  }
  if (kind == "uniform") {
    return DistributionSpec::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  }
  throw std::invalid_argument("unknown distribution kind '" + kind + "'");
}

}  // namespace scq
