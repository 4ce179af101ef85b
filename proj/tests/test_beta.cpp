#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedoui/beta_dist.hpp"
#include "fedoui/rng.hpp"
#include "support/quadrature.hpp"

using namespace fedoui;

namespace {

std::vector<double> beta_samples(double alpha, double beta, std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (auto& v : out) {
        double x = rng.gamma(alpha);
        double y = rng.gamma(beta);
        v = x / (x + y);
    }
    return out;
}

double find_median(const BetaParams& p) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (regularized_incomplete_beta(mid, p) < 0.5)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("moment fit: symmetric samples give alpha == beta") {
    auto fit = fit_beta_moments({0.3, 0.7, 0.4, 0.6});
    REQUIRE(!fit.degenerate);
    CHECK(fit.params.alpha == fit.params.beta);
    CHECK(fit.params.alpha > 0.0);
}

TEST_CASE("moment fit: constant samples are degenerate") {
    CHECK(fit_beta_moments({0.3, 0.3, 0.3}).degenerate);
    CHECK(fit_beta_moments({0.0, 0.0}).degenerate);
    CHECK(fit_beta_moments({1.0}).degenerate);
}

TEST_CASE("moment fit: input validation") {
    CHECK_THROWS_AS(fit_beta_moments({}), input_error);
    CHECK_THROWS_AS(fit_beta_moments({0.5, 1.2}), input_error);
    CHECK_THROWS_AS(fit_beta_moments({-0.1}), input_error);
}

TEST_CASE("moment fit: samples drawn from Beta(6.10, 15.94) recover the mean") {
    Rng rng(31, StreamPurpose::dataset);
    auto samples = beta_samples(6.10, 15.94, 10000, rng);
    auto fit = fit_beta_moments(samples);
    REQUIRE(!fit.degenerate);
    double fitted_mean = fit.params.alpha / (fit.params.alpha + fit.params.beta);
    CHECK(std::fabs(fitted_mean - 0.2768) < 0.01);
}

TEST_CASE("moment fit reproduces sample moments exactly (round trip)") {
    Rng rng(32, StreamPurpose::dataset);
    for (int trial = 0; trial < 10; ++trial) {
        double a = rng.uniform(0.5, 50.0), b = rng.uniform(0.5, 50.0);
        auto samples = beta_samples(a, b, 10000, rng);
        double n = static_cast<double>(samples.size());
        double m = 0, v = 0;
        for (double s : samples) m += s;
        m /= n;
        for (double s : samples) v += (s - m) * (s - m);
        v /= n;

        auto fit = fit_beta_moments(samples);
        REQUIRE(!fit.degenerate);
        double sum = fit.params.alpha + fit.params.beta;
        double fit_mean = fit.params.alpha / sum;
        double fit_var = fit.params.alpha * fit.params.beta / (sum * sum * (sum + 1.0));
        CHECK(fit_mean == doctest::Approx(m).epsilon(1e-12));
        CHECK(fit_var == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("moment fit clamps the all-boundary case instead of failing") {
    // samples on {0,1}: variance equals m(1-m), c = 0, clamped to the floor
    auto fit = fit_beta_moments({0.0, 1.0, 0.0, 1.0});
    REQUIRE(!fit.degenerate);
    CHECK(fit.params.alpha == beta_limits::param_min);
    CHECK(fit.params.beta == beta_limits::param_min);
}

TEST_CASE("incomplete beta: closed forms") {
    SUBCASE("I_x(1,1) = x") {
        for (double x : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0})
            CHECK(regularized_incomplete_beta(x, {1.0, 1.0}) ==
                  doctest::Approx(x).epsilon(1e-12));
    }
    SUBCASE("symmetry point: I_0.5(a,a) = 0.5") {
        for (double a : {0.5, 2.0, 40.0, 1000.0})
            CHECK(regularized_incomplete_beta(0.5, {a, a}) ==
                  doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("I_x(a,1) = x^a and I_x(1,b) = 1-(1-x)^b") {
        for (double x : {0.2, 0.6, 0.9}) {
            CHECK(regularized_incomplete_beta(x, {3.5, 1.0}) ==
                  doctest::Approx(std::pow(x, 3.5)).epsilon(1e-12));
            CHECK(regularized_incomplete_beta(x, {1.0, 2.25}) ==
                  doctest::Approx(1.0 - std::pow(1.0 - x, 2.25)).epsilon(1e-12));
        }
    }
    SUBCASE("boundaries are exact") {
        CHECK(regularized_incomplete_beta(0.0, {2.0, 3.0}) == 0.0);
        CHECK(regularized_incomplete_beta(1.0, {2.0, 3.0}) == 1.0);
    }
}

TEST_CASE("incomplete beta: input validation") {
    CHECK_THROWS_AS(regularized_incomplete_beta(-0.1, {1.0, 1.0}), input_error);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.1, {1.0, 1.0}), input_error);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.5, {0.0, 1.0}), input_error);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.5, {1.0, -2.0}), input_error);
}

TEST_CASE("continued-fraction nonconvergence raises instead of returning silently") {
    // at the clamp ceiling the fraction stalls right at the symmetry switch;
    // the validated accuracy domain tops out at 1e4, which always converges
    CHECK_THROWS_AS(regularized_incomplete_beta(0.4999, {1e6, 1e6}), numeric_error);
    CHECK_NOTHROW(regularized_incomplete_beta(0.4999, {1e4, 1e4}));
}

TEST_CASE("quadrature oracle self-checks") {
    CHECK(oracle::beta_cdf(0.3, 1.0, 1.0) == doctest::Approx(0.3).epsilon(1e-12));
    // I_x(2,2) = 3x^2 - 2x^3
    for (double x : {0.2, 0.5, 0.8})
        CHECK(oracle::beta_cdf(x, 2.0, 2.0) ==
              doctest::Approx(3 * x * x - 2 * x * x * x).epsilon(1e-11));
    CHECK(oracle::beta_cdf(0.5, 7.0, 7.0) == doctest::Approx(0.5).epsilon(1e-11));
    CHECK(oracle::beta_cdf(0.4, 2.5, 1.0) == doctest::Approx(std::pow(0.4, 2.5)).epsilon(1e-11));
}

TEST_CASE("incomplete beta matches the quadrature oracle") {
    // representative corner of the acceptance grid; the full sweep runs there
    const double alphas[] = {1e-3, 0.2, 1.0, 6.10, 85.0, 1e4};
    const double betas[] = {1e-3, 0.7, 2.0, 15.94, 300.0, 1e4};
    const double xs[] = {1e-6, 0.01, 0.2767, 0.5, 0.8, 0.999};
    for (double a : alphas)
        for (double b : betas)
            for (double x : xs) {
                double got = regularized_incomplete_beta(x, {a, b});
                double want = oracle::beta_cdf(x, a, b);
                REQUIRE(std::fabs(got - want) < 1e-10);
            }
}

TEST_CASE("reflection identity I_x(a,b) = 1 - I_{1-x}(b,a)") {
    Rng rng(33, StreamPurpose::dataset);
    for (int trial = 0; trial < 200; ++trial) {
        double a = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
        double b = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
        double x = rng.uniform();
        double lhs = regularized_incomplete_beta(x, {a, b});
        double rhs = 1.0 - regularized_incomplete_beta(1.0 - x, {b, a});
        REQUIRE(std::fabs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("cdf is monotone nondecreasing in x") {
    Rng rng(34, StreamPurpose::dataset);
    for (int trial = 0; trial < 20; ++trial) {
        double a = std::exp(rng.uniform(std::log(1e-2), std::log(1e3)));
        double b = std::exp(rng.uniform(std::log(1e-2), std::log(1e3)));
        double prev = 0.0;
        for (int i = 0; i <= 500; ++i) {
            double x = static_cast<double>(i) / 500.0;
            double f = regularized_incomplete_beta(x, {a, b});
            REQUIRE(f >= prev - 1e-14);
            prev = f;
        }
        REQUIRE(prev == 1.0);
    }
}

TEST_CASE("bilateral score: exact endpoints and the median") {
    BetaParams p{6.10, 15.94};
    CHECK(bilateral_score(0.0, p) == 0.0);
    CHECK(bilateral_score(1.0, p) == 0.0);
    double median = find_median(p);
    CHECK(bilateral_score(median, p) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("bilateral score at a representative round distribution") {
    BetaParams p{6.10, 15.94};
    double f = oracle::beta_cdf(0.2767, 6.10, 15.94);
    double expected = 2.0 * std::min(f, 1.0 - f);
    CHECK(bilateral_score(0.2767, p) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bilateral score is unimodal along o") {
    Rng rng(35, StreamPurpose::dataset);
    for (int trial = 0; trial < 10; ++trial) {
        BetaParams p{std::exp(rng.uniform(std::log(0.5), std::log(50.0))),
                     std::exp(rng.uniform(std::log(0.5), std::log(50.0)))};
        int direction = 1;  // rising phase, then falling
        double prev = bilateral_score(0.0, p);
        for (int i = 1; i <= 1000; ++i) {
            double score = bilateral_score(static_cast<double>(i) / 1000.0, p);
            if (direction == 1 && score < prev - 1e-9) direction = -1;
            if (direction == -1) REQUIRE(score <= prev + 1e-9);
            prev = score;
        }
    }
}
