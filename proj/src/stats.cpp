#include "rmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmlab/errors.hpp"

namespace rmlab::stats {

namespace {

constexpr double kQuantileLevels[] = {0.05, 0.25, 0.5, 0.75, 0.95};

// erf by its alternating Maclaurin series; used for |z| < 1.5 where it
// converges in at most ~40 terms to full double precision.
double erf_series(double z) {
    const double z2 = z * z;
    double term = z;
    double sum = z;
    for (int k = 1; k < 80; ++k) {
        term *= -z2 / k;
        const double add = term / (2.0 * k + 1.0);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return sum * 2.0 / std::sqrt(std::numbers::pi);
}

// erfc for z >= 2 by the Laplace continued fraction, evaluated with the
// modified Lentz algorithm:
//   erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
double erfc_cf(double z) {
    constexpr double kTiny = 1e-300;
    double f = z;
    double c = f;
    double d = 0.0;
    for (int k = 1; k < 300; ++k) {
        const double an = 0.5 * k;
        d = z + an * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = z + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-17) break;
    }
    return std::exp(-z * z) / (std::sqrt(std::numbers::pi) * f);
}

double erfc_positive(double z) {
    if (z < 1.5) return 1.0 - erf_series(z);
    return erfc_cf(z);
}

}  // namespace

SummaryStats summarize(std::span<const double> samples) {
    if (samples.empty()) throw EmptyInput("summarize: empty sample vector");
    SummaryStats s;
    s.count = samples.size();

    // Welford one-pass accumulation.
    double mean = 0.0;
    double m2 = 0.0;
    double lo = samples[0], hi = samples[0];
    std::size_t k = 0;
    for (double x : samples) {
        ++k;
        const double d1 = x - mean;
        mean += d1 / static_cast<double>(k);
        m2 += d1 * (x - mean);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    s.mean = mean;
    s.variance = s.count > 1 ? std::max(m2 / static_cast<double>(s.count - 1), 0.0) : 0.0;
    s.min = lo;
    s.max = hi;

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    for (double q : kQuantileLevels) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto idx = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(idx);
        const double val = (idx + 1 < sorted.size())
                               ? sorted[idx] + frac * (sorted[idx + 1] - sorted[idx])
                               : sorted[idx];
        s.quantiles[q] = val;
    }
    return s;
}

double standard_normal_cdf(double x) {
    const double z = x / std::numbers::sqrt2;
    // Phi(x) = erfc(-z)/2; express both signs through erfc of |z| so that
    // Phi(x) + Phi(-x) == 1 holds exactly.
    if (z < 0.0) return 0.5 * erfc_positive(-z);
    return 1.0 - 0.5 * erfc_positive(z);
}

KsResult ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw EmptyInput("ks_statistic: empty sample vector");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = std::clamp(cdf(sorted[i]), 0.0, 1.0);
        const double upper = static_cast<double>(i + 1) / n - f;
        const double lower = f - static_cast<double>(i) / n;
        d = std::max({d, upper, lower});
    }
    return {std::min(d, 1.0), sorted.size()};
}

RegressionFit loglog_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw NonPositiveInput("loglog_slope: need at least 2 points");
    for (const auto& [x, y] : points) {
        if (x <= 0.0 || y <= 0.0) {
            throw NonPositiveInput("loglog_slope: sizes and values must be positive");
        }
    }
    const auto n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : points) {
        sx += std::log(x);
        sy += std::log(y);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mx;
        const double dy = std::log(y) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    RegressionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        const double ss_res = syy - fit.slope * sxy;
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    } else {
        fit.r_squared = 1.0;  // constant values: the flat line is an exact fit
    }
    return fit;
}

Histogram histogram(std::span<const double> samples, double lo, double hi, int bins) {
    if (bins < 1 || !(lo < hi)) throw BadRange("histogram: need bins >= 1 and lo < hi");
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.bins = bins;
    h.densities.assign(bins, 0.0);
    const double width = (hi - lo) / bins;
    std::vector<std::size_t> counts(bins, 0);
    for (double x : samples) {
        if (x < lo || x > hi) {
            ++h.out_of_range;
            continue;
        }
        auto bin = static_cast<long>((x - lo) / width);
        if (bin >= bins) bin = bins - 1;  // x == hi lands in the last bin
        if (bin < 0) bin = 0;
        ++counts[static_cast<std::size_t>(bin)];
        ++h.in_range;
    }
    const double total = static_cast<double>(samples.size());
    if (total > 0.0) {
        for (int b = 0; b < bins; ++b) {
            h.densities[b] = static_cast<double>(counts[b]) / (total * width);
        }
    }
    return h;
}

}  // namespace rmlab::stats
