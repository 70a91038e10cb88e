#include "tmsc/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tmsc {

namespace {

void require_positive(double x, const char* fn) {
    if (!(x > 0.0)) {
        throw std::domain_error(std::string(fn) + ": argument must be > 0, got " +
                                std::to_string(x));
    }
}

}  // namespace

double digamma(double x) {
    require_positive(x, "digamma");
    double acc = 0.0;
    // psi(x) = psi(x+1) - 1/x, climb until the series is accurate
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n)
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = std::log(x) - 0.5 * inv;
    series -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return acc + series;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    double acc = 0.0;
    // psi'(x) = psi'(x+1) + 1/x^2
    while (x < 6.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2n / x^(2n+1)
    double series = inv + 0.5 * inv2;
    series += inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 -
               inv2 * (1.0 / 30.0))));
    return acc + series;
}

double lgamma_pos(double x) {
    require_positive(x, "lgamma");
    double acc = 0.0;
    // ln Gamma(x) = ln Gamma(x+1) - ln x
    while (x < 10.0) {
        acc -= std::log(x);
        x += 1.0;
    }
    static const double half_log_two_pi = 0.91893853320467274178;
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = (x - 0.5) * std::log(x) - x + half_log_two_pi;
    series += inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 -
               inv2 * (1.0 / 1680.0))));
    return acc + series;
}

}  // namespace tmsc
