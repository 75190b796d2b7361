#include "rmlab/theory.hpp"

#include <cmath>
#include <numbers>

#include "rmlab/errors.hpp"

namespace rmlab::theory {

namespace {

constexpr int kSimpsonMaxDepth = 48;
// Trig-polynomial integrands alias on coarse uniform nodes (the 2- and
// 4-panel estimates can agree to machine precision while both are wrong),
// so the error estimate is only trusted after a few forced subdivisions.
constexpr int kSimpsonMinDepth = 6;

// Adaptive Simpson with the classic 15x error estimate.
template <class F>
double simpson_rec(const F& f, double lo, double hi, double flo, double fmid, double fhi,
                   double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double flm = f(lmid);
    const double frm = f(rmid);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double delta = left + right - whole;
    const bool deep_enough = depth <= kSimpsonMaxDepth - kSimpsonMinDepth;
    if (depth <= 0 || (deep_enough && std::abs(delta) <= 15.0 * tol)) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double lo, double hi, double tol) {
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    return simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol, kSimpsonMaxDepth);
}

}  // namespace

TheoryParams clt_params(int p, int n, double mu, double sigma) {
    TheoryParams t;
    const double s2 = sigma * sigma;
    t.c = static_cast<double>(p) / static_cast<double>(n);
    t.l = p * mu * mu + s2;
    t.correction = t.c * s2;
    t.clt_mean = t.l + t.correction;
    t.clt_var = 4.0 * t.c * mu * mu * s2;
    const double sq = std::sqrt(t.c);
    t.a = s2 * (1.0 - sq) * (1.0 - sq);
    t.b = s2 * (1.0 + sq) * (1.0 + sq);
    return t;
}

double estimator_expectation(int p, double mu, double sigma) {
    return p * mu * mu + sigma * sigma;
}

double estimator_variance(int p, int n, double mu, double sigma) {
    return 4.0 * mu * mu * sigma * sigma * (static_cast<double>(p) / static_cast<double>(n));
}

double mp_density(double x, double c, double sigma) {
    const double s2 = sigma * sigma;
    const double sq = std::sqrt(c);
    const double a = s2 * (1.0 - sq) * (1.0 - sq);
    const double b = s2 * (1.0 + sq) * (1.0 + sq);
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((b - x) * (x - a)) / (2.0 * std::numbers::pi * x * c * s2);
}

double mp_point_mass(double c) { return c > 1.0 ? 1.0 - 1.0 / c : 0.0; }

double mp_moment(int k) {
    if (k < 0) throw NonPositiveInput("mp_moment: k must be non-negative");
    // Catalan numbers: C_0 = 1, C_{j+1} = C_j * 2(2j+1)/(j+2).
    double cat = 1.0;
    for (int j = 0; j < k; ++j) {
        cat = cat * 2.0 * (2.0 * j + 1.0) / (j + 2.0);
    }
    return cat;
}

double mp_bulk_moment(int k, double c, double sigma) {
    if (k < 0) throw NonPositiveInput("mp_bulk_moment: k must be non-negative");
    if (c <= 0.0 || sigma <= 0.0) throw NonPositiveInput("mp_bulk_moment: c and sigma must be positive");
    const double s2 = sigma * sigma;
    const double sq = std::sqrt(c);
    const double a = s2 * (1.0 - sq) * (1.0 - sq);
    const double b = s2 * (1.0 + sq) * (1.0 + sq);
    const double width = b - a;
    // x = a + width sin^2(theta) turns the integrand into
    //   x^k cos^2(theta) * width^2 / (pi c sigma^2) * sin^2(theta) / x,
    // smooth on [0, pi/2] even when a = 0.
    auto g = [&](double theta) {
        const double st = std::sin(theta);
        const double ct = std::cos(theta);
        const double s2t = st * st;
        const double x = a + width * s2t;
        const double ratio = (x > 0.0) ? s2t / x : 1.0 / width;  // limit at theta = 0 when a = 0
        double xk = 1.0;
        for (int j = 0; j < k; ++j) xk *= x;
        return xk * ct * ct * width * width * ratio / (std::numbers::pi * c * s2);
    };
    return adaptive_simpson(g, 0.0, std::numbers::pi / 2.0, 1e-11);
}

}  // namespace rmlab::theory
