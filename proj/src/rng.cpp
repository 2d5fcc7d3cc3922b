#include "swrecon/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace swrecon {

namespace {

// Acklam's rational approximation for the probit function.
double probit_estimate(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

double normal_quantile(double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("normal_quantile: u outside [0,1]");
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    double x = probit_estimate(u);
    // One Halley refinement against the erf-based CDF.
    const double inv_sqrt2pi = 0.3989422804014326779;
    double e = normal_cdf(x) - u;
    double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
    double t = e / pdf;
    x -= t / (1.0 + 0.5 * x * t);
    return x;
}

double Rng::normal() {
    // uniform01 returns values in [0,1); shift off exact zero.
    double u = uniform01();
    if (u <= 0.0) u = 0x1.0p-53;
    return normal_quantile(u);
}

}  // namespace swrecon
