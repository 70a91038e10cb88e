#include <doctest.h>

#include <cmath>

#include "tmsc/special.hpp"

using namespace tmsc;

namespace {

// Slowly convergent but independent reference: psi(x) = -gamma + sum_{n>=0}
// (1/(n+1) - 1/(n+x)), truncated with the tail integral correction.
double digamma_series(double x) {
    constexpr double euler = 0.57721566490153286061;
    double acc = -euler;
    constexpr int terms = 2000000;
    for (int n = 0; n < terms; ++n) {
        acc += 1.0 / (n + 1.0) - 1.0 / (n + x);
    }
    // tail: sum_{n>=N} (x-1)/((n+1)(n+x)) ~ (x-1)/N
    acc += (x - 1.0) / terms;
    return acc;
}

}  // namespace

TEST_CASE("digamma fixture values") {
    CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-10));
    CHECK(digamma(2.0) == doctest::Approx(-0.57721566490153286 + 1.0).epsilon(1e-10));
    // psi(1/2) = -gamma - 2 ln 2
    CHECK(digamma(0.5) ==
          doctest::Approx(-0.57721566490153286 - 2.0 * std::log(2.0)).epsilon(1e-10));
    CHECK(digamma(1.0) == doctest::Approx(digamma_series(1.0)).epsilon(1e-6));
    CHECK(digamma(3.25) == doctest::Approx(digamma_series(3.25)).epsilon(1e-6));
}

TEST_CASE("digamma recurrence holds across the series threshold") {
    for (double x : {0.1, 0.7, 1.0, 2.5, 5.9, 6.1, 40.0}) {
        CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-10));
    }
}

TEST_CASE("digamma rejects non-positive input") {
    CHECK_THROWS(digamma(0.0));
    CHECK_THROWS(digamma(-1.0));
}

TEST_CASE("trigamma fixtures and recurrence") {
    // psi'(1) = pi^2/6
    CHECK(trigamma(1.0) == doctest::Approx(1.6449340668482264).epsilon(1e-10));
    // psi'(1/2) = pi^2/2
    CHECK(trigamma(0.5) == doctest::Approx(4.9348022005446793).epsilon(1e-10));
    for (double x : {0.3, 1.0, 5.5, 6.5, 20.0}) {
        CHECK(trigamma(x) - trigamma(x + 1.0) == doctest::Approx(1.0 / (x * x)).epsilon(1e-10));
    }
    CHECK_THROWS(trigamma(0.0));
}

TEST_CASE("lgamma fixtures") {
    CHECK(lgamma_pos(1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lgamma_pos(2.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lgamma_pos(3.0) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    // Gamma(1/2) = sqrt(pi)
    CHECK(lgamma_pos(0.5) == doctest::Approx(0.5 * std::log(3.14159265358979323846))
                                 .epsilon(1e-10));
    // 10! spot check
    CHECK(lgamma_pos(11.0) == doctest::Approx(std::log(3628800.0)).epsilon(1e-10));
    CHECK_THROWS(lgamma_pos(0.0));
}

TEST_CASE("lgamma functional equation ln Gamma(x+1) = ln Gamma(x) + ln x") {
    for (double x : {0.2, 0.9, 3.7, 9.9, 10.1, 123.0}) {
        CHECK(lgamma_pos(x + 1.0) - lgamma_pos(x) == doctest::Approx(std::log(x)).epsilon(1e-10));
    }
}
