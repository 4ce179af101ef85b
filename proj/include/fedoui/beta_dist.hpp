#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fedoui/errors.hpp"

namespace fedoui {

struct BetaParams {
    double alpha = 0.0;
    double beta = 0.0;
};

// Result of fitting the round-wise OUI distribution.  A degenerate fit
// (too few distinct samples, vanishing variance, or a mean at the boundary)
// means the round carries no usable shape information; callers assign every
// client a structural score of 1, which collapses the method to plain
// sample-size weighting for that round.
struct BetaFit {
    bool degenerate = true;
    BetaParams params{};
};

namespace beta_limits {
constexpr double param_min = 1e-3;
constexpr double param_max = 1e6;
constexpr double variance_min = 1e-12;
}  // namespace beta_limits

// Method-of-moments fit on samples in [0,1].  With population mean m and
// variance v, c = m(1-m)/v - 1 gives alpha = m c and beta = (1-m) c, both
// clamped to [1e-3, 1e6].
inline BetaFit fit_beta_moments(const std::vector<double>& samples) {
    if (samples.empty()) throw input_error("beta fit: at least one sample required");
    for (double s : samples)
        if (!(s >= 0.0 && s <= 1.0))
            throw input_error("beta fit: sample " + std::to_string(s) + " outside [0,1]");

    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= n;

    bool two_distinct = false;
    for (double s : samples)
        if (s != samples.front()) {
            two_distinct = true;
            break;
        }

    BetaFit fit;
    if (!two_distinct || var <= beta_limits::variance_min || mean <= 0.0 || mean >= 1.0)
        return fit;  // degenerate

    double c = mean * (1.0 - mean) / var - 1.0;
    fit.degenerate = false;
    fit.params.alpha = std::clamp(mean * c, beta_limits::param_min, beta_limits::param_max);
    fit.params.beta = std::clamp((1.0 - mean) * c, beta_limits::param_min, beta_limits::param_max);
    return fit;
}

namespace detail {

// lgamma_r avoids the signgam global that makes std::lgamma thread-unsafe
inline double log_gamma(double x) {
#if defined(__GLIBC__) || defined(__APPLE__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

// Continued fraction for the regularized incomplete beta, evaluated with
// Lentz's method.  Only called for x below the symmetry switch point, where
// convergence is fast.
inline double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-14;
    constexpr double tiny = 1e-300;

    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;

    for (int m = 1; m <= max_iter; ++m) {
        double dm = static_cast<double>(m);
        // even-step coefficient
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= d * c;
        // odd-step coefficient
        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < eps) return f;
    }
    throw numeric_error("incomplete beta: continued fraction did not converge for a=" +
                        std::to_string(a) + " b=" + std::to_string(b) + " x=" +
                        std::to_string(x));
}

}  // namespace detail

// Regularized incomplete beta I_x(alpha, beta) = CDF of Beta(alpha, beta) at x.
// Uses the continued fraction directly for x below (alpha+1)/(alpha+beta+2)
// and the reflection I_x(a,b) = 1 - I_{1-x}(b,a) above it.
inline double regularized_incomplete_beta(double x, const BetaParams& p) {
    const double a = p.alpha, b = p.beta;
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw input_error("incomplete beta: alpha and beta must be positive and finite");
    if (!(x >= 0.0 && x <= 1.0))
        throw input_error("incomplete beta: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    double front = std::exp(a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Bilateral structural score: 2 min(F(o), 1 - F(o)).  1 at the fitted
// median, 0 in either tail.
inline double bilateral_score(double oui_value, const BetaParams& p) {
    double f = regularized_incomplete_beta(oui_value, p);
    return 2.0 * std::min(f, 1.0 - f);
}

}  // namespace fedoui
