#pragma once

namespace tmsc {

// Digamma psi(x) for x > 0. Recurrence up to x >= 6, then the asymptotic
// series in 1/x^2. Absolute error below 1e-10 over the positive axis.
double digamma(double x);

// Trigamma psi'(x) for x > 0, same recurrence-plus-series scheme.
double trigamma(double x);

// log Gamma(x) for x > 0 via Stirling's series with upward recurrence.
double lgamma_pos(double x);

}  // namespace tmsc
