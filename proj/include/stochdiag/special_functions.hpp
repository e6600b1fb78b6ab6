#pragma once

#include <cmath>

namespace stochdiag::sf {

// log |Gamma(x)|. glibc's lgamma writes the global signgam on every call,
// which serializes parallel callers on one cache line; use the reentrant
// variant where available.
inline double log_gamma(double x) {
#ifdef __GLIBC__
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

// Regularized lower incomplete gamma P(a, x). Series for x < a+1, Lentz
// continued fraction otherwise. Absolute accuracy ~1e-14.
double lower_incomplete_gamma_regularized(double a, double x);

// Regularized incomplete beta I_x(a, b) via the textbook continued fraction.
double incomplete_beta_regularized(double x, double a, double b);

// psi(x) for x > 0: recurrence below 6, asymptotic expansion above.
double digamma(double x);

// psi'(x) for x > 0, same scheme. Gives the sampling variance of log S^2
// for normal replicate pools: Var[log S^2] = psi'((r-1)/2).
double trigamma(double x);

// Standard normal density.
double std_normal_pdf(double z);

}  // namespace stochdiag::sf
