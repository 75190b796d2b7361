#pragma once

namespace rmlab::theory {

/// Closed-form targets for a p x n ensemble with entry law N(mu, sigma^2),
/// all evaluated at the finite-size plug-in c = p/n.
struct TheoryParams {
    double l = 0.0;           // p mu^2 + sigma^2
    double clt_mean = 0.0;    // p mu^2 + (1 + c) sigma^2, stored as l + correction
    double clt_var = 0.0;     // 4 c mu^2 sigma^2
    double correction = 0.0;  // p sigma^2 / n
    double c = 0.0;           // p / n
    double a = 0.0;           // sigma^2 (1 - sqrt(c))^2
    double b = 0.0;           // sigma^2 (1 + sqrt(c))^2
};

/// clt_mean is computed as l + correction so that clt_mean - l == correction
/// holds bit-exactly.
TheoryParams clt_params(int p, int n, double mu, double sigma);

/// Expected one-step estimate: p mu^2 + sigma^2.
double estimator_expectation(int p, double mu, double sigma);

/// Leading-order variance of the one-step estimate: 4 mu^2 sigma^2 p / n.
double estimator_variance(int p, int n, double mu, double sigma);

/// Continuous bulk density at x for aspect ratio c and scale sigma; zero at
/// and outside the support edges. The c > 1 point mass at zero is reported
/// separately by mp_point_mass.
double mp_density(double x, double c, double sigma);

/// Mass at zero: 1 - 1/c for c > 1, else 0.
double mp_point_mass(double c);

/// k-th moment of the standard bulk law (c = 1, sigma = 1): the k-th Catalan
/// number. Throws NonPositiveInput for k < 0.
double mp_moment(int k);

/// Integral of x^k times the bulk density over [a, b] by adaptive Simpson
/// after the substitution x = a + (b - a) sin^2(theta), which removes both
/// square-root edges and the 1/x factor at a = 0. Absolute tolerance ~1e-10.
double mp_bulk_moment(int k, double c, double sigma);

}  // namespace rmlab::theory
