#include "swrecon/timedist.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"

namespace swrecon {

TimeDistribution TimeDistribution::uniform(double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        throw ConfigError("uniform distribution requires finite a < b");
    TimeDistribution d;
    d.kind_ = Kind::Uniform;
    d.low_ = a;
    d.high_ = b;
    return d;
}

TimeDistribution TimeDistribution::truncated_normal(double mean, double sd, double low, double high) {
    if (!(low < high) || !(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd) ||
        !std::isfinite(low) || !std::isfinite(high))
        throw ConfigError("truncated normal requires finite parameters, sd > 0, low < high");
    TimeDistribution d;
    d.kind_ = Kind::TruncatedNormal;
    d.low_ = low;
    d.high_ = high;
    d.mean_ = mean;
    d.sd_ = sd;
    d.cdf_low_ = normal_cdf((low - mean) / sd);
    d.cdf_high_ = normal_cdf((high - mean) / sd);
    if (!(d.cdf_high_ > d.cdf_low_))
        throw ConfigError("truncated normal support has vanishing probability mass");
    return d;
}

double TimeDistribution::pdf(double t) const {
    if (t < low_ || t > high_) return 0.0;
    if (kind_ == Kind::Uniform) return 1.0 / (high_ - low_);
    const double inv_sqrt2pi = 0.3989422804014326779;
    double z = (t - mean_) / sd_;
    return inv_sqrt2pi * std::exp(-0.5 * z * z) / (sd_ * (cdf_high_ - cdf_low_));
}

double TimeDistribution::cdf(double t) const {
    if (t <= low_) return 0.0;
    if (t >= high_) return 1.0;
    if (kind_ == Kind::Uniform) return (t - low_) / (high_ - low_);
    double u = (normal_cdf((t - mean_) / sd_) - cdf_low_) / (cdf_high_ - cdf_low_);
    return std::clamp(u, 0.0, 1.0);
}

double TimeDistribution::inv_cdf(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("inv_cdf: u outside [0,1]");
    if (u == 0.0) return low_;
    if (u == 1.0) return high_;
    if (kind_ == Kind::Uniform) return low_ + u * (high_ - low_);
    double t = mean_ + sd_ * normal_quantile(cdf_low_ + u * (cdf_high_ - cdf_low_));
    return std::clamp(t, low_, high_);
}

TimeDistribution TimeDistribution::truncate(double a, double b) const {
    if (!(a < b)) throw std::domain_error("truncate: empty interval");
    if (a < low_ - 1e-12 || b > high_ + 1e-12)
        throw std::domain_error("truncate: interval escapes the current support");
    a = std::max(a, low_);
    b = std::min(b, high_);
    if (kind_ == Kind::Uniform) return uniform(a, b);
    // Truncating a truncated normal re-truncates the same parent law.
    return truncated_normal(mean_, sd_, a, b);
}

std::vector<double> TimeDistribution::sample(std::size_t n, Rng& rng) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = inv_cdf(rng.uniform01());
    return out;
}

std::vector<double> TimeDistribution::sample(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    return sample(n, rng);
}

nlohmann::json TimeDistribution::to_json() const {
    if (kind_ == Kind::Uniform) return {{"kind", "uniform"}, {"a", low_}, {"b", high_}};
    return {{"kind", "truncnormal"}, {"mean", mean_}, {"sd", sd_}, {"low", low_}, {"high", high_}};
}

TimeDistribution TimeDistribution::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform") return uniform(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "truncnormal")
        return truncated_normal(j.at("mean").get<double>(), j.at("sd").get<double>(),
                                j.at("low").get<double>(), j.at("high").get<double>());
    throw ConfigError("unknown distribution kind '" + kind + "'");
}

}  // namespace swrecon
