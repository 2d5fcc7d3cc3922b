#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "swrecon/rng.hpp"

namespace swrecon {

/// Observation-time law on a finite support, closed under truncation.
/// Immutable; sampling goes through a caller-owned Rng.
class TimeDistribution {
  public:
    enum class Kind { Uniform, TruncatedNormal };

    static TimeDistribution uniform(double a, double b);
    /// Normal(mean, sd^2) restricted to [low, high].
    static TimeDistribution truncated_normal(double mean, double sd, double low, double high);

    Kind kind() const { return kind_; }
    double low() const { return low_; }
    double high() const { return high_; }
    double mean_param() const { return mean_; }
    double sd_param() const { return sd_; }

    double pdf(double t) const;
    double cdf(double t) const;
    /// Quantile; u must be in [0,1]. inv_cdf(0)=low, inv_cdf(1)=high.
    double inv_cdf(double u) const;

    /// Law proportional to this pdf restricted to [a, b].
    TimeDistribution truncate(double a, double b) const;

    std::vector<double> sample(std::size_t n, Rng& rng) const;
    std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

    nlohmann::json to_json() const;
    static TimeDistribution from_json(const nlohmann::json& j);

  private:
    TimeDistribution() = default;

    Kind kind_ = Kind::Uniform;
    double low_ = 0.0, high_ = 1.0;
    // TruncatedNormal parameters (of the untruncated parent).
    double mean_ = 0.0, sd_ = 1.0;
    double cdf_low_ = 0.0, cdf_high_ = 1.0;  // parent CDF at the bounds
};

}  // namespace swrecon
