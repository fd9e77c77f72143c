#pragma once

namespace san::special {

// Accurate to ~1e-13 relative for x in [1e-3, 1e6]; x must be > 0.
double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

// log Γ_d(a) = d(d-1)/4 log π + Σ_{i=1..d} log Γ(a + (1-i)/2)
double log_multigamma(double a, int d);
// Σ_{i=1..d} ψ(a + (1-i)/2)
double multi_digamma(double a, int d);

// y with digamma(y) = x, Newton on a standard initial guess.
double inverse_digamma(double x);

}  // namespace san::special
