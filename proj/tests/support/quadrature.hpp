#pragma once

// Test-only oracle for the Beta CDF: tanh-sinh (double-exponential)
// quadrature of the Beta density, refined until two consecutive levels
// agree.  Works in log space so endpoint singularities (alpha or beta < 1)
// and sharply peaked densities (alpha + beta ~ 1e4) are both handled.
// Independent of the continued-fraction evaluation under test.

#include <cmath>
#include <stdexcept>

namespace oracle {

namespace detail {

inline double log_gamma(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

// stable pieces of the node transform s = 1 / (1 + exp(-2g)), g = (pi/2) sinh t
struct Node {
    double log_s;        // ln s
    double one_minus_s;  // 1 - s, computed without cancellation
    double log_weight;   // ln( (pi/4) cosh t / cosh^2 g )
};

inline Node make_node(double t) {
    const double half_pi = 1.5707963267948966;
    double g = half_pi * std::sinh(t);
    Node n;
    if (g >= 0.0) {
        n.log_s = -std::log1p(std::exp(-2.0 * g));
        n.one_minus_s = 1.0 / (1.0 + std::exp(2.0 * g));
    } else {
        n.log_s = 2.0 * g - std::log1p(std::exp(2.0 * g));
        n.one_minus_s = 1.0 / (1.0 + std::exp(2.0 * g));
    }
    double abs_g = std::fabs(g);
    double log_cosh_g = abs_g + std::log1p(std::exp(-2.0 * abs_g)) - std::log(2.0);
    n.log_weight = std::log(half_pi / 2.0) + std::log(std::cosh(t)) - 2.0 * log_cosh_g;
    return n;
}

// integrand of int_0^u Beta(a,b) density after t = u s:
//   exp( a ln u + (a-1) ln s + (b-1) ln(1 - u s) - ln B(a,b) )
inline double log_integrand(const Node& n, double u, double a, double b, double log_beta_ab) {
    // 1 - u s = (1 - u) + u (1 - s), exact to double precision
    double one_minus_us = (1.0 - u) + u * n.one_minus_s;
    if (one_minus_us <= 0.0) return -INFINITY;
    return a * std::log(u) + (a - 1.0) * n.log_s + (b - 1.0) * std::log(one_minus_us) -
           log_beta_ab;
}

// tanh-sinh over s in (0,1) with level doubling
inline double de_integral(double u, double a, double b) {
    const double t_max = 12.0;  // tail mass below 1e-12 even for a = 1e-3
    const double log_beta_ab = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
    const int min_level = 7;    // resolve interior peaks before trusting agreement
    const int max_level = 12;

    auto node_value = [&](double t) {
        Node n = make_node(t);
        double l = log_integrand(n, u, a, b, log_beta_ab) + n.log_weight;
        return l > -745.0 ? std::exp(l) : 0.0;
    };

    double h = 0.5;
    long double sum = node_value(0.0);
    {
        long k_max = static_cast<long>(t_max / h);
        for (long k = 1; k <= k_max; ++k) {
            sum += node_value(k * h);
            sum += node_value(-k * h);
        }
    }
    double prev = static_cast<double>(sum) * h;

    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        // new nodes at odd multiples of h
        long k_max = static_cast<long>(t_max / h);
        for (long k = 1; k <= k_max; k += 2) {
            sum += node_value(k * h);
            sum += node_value(-k * h);
        }
        double cur = static_cast<double>(sum) * h;
        if (level >= min_level &&
            std::fabs(cur - prev) <= 1e-13 + 1e-13 * std::fabs(cur))
            return cur;
        prev = cur;
    }
    throw std::runtime_error("quadrature oracle did not converge");
}

}  // namespace detail

// CDF of Beta(a, b) at x by adaptive double-exponential quadrature
inline double beta_cdf(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("beta_cdf oracle: bad arguments");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    // integrate the smaller side for accuracy
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - detail::de_integral(1.0 - x, b, a);
    return detail::de_integral(x, a, b);
}

}  // namespace oracle
