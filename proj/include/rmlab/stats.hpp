#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace rmlab::stats {

/// Moments and quantiles of one sample vector.
struct SummaryStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased (divisor count - 1); 0 when count < 2
    double min = 0.0;
    double max = 0.0;
    std::map<double, double> quantiles;  // levels 0.05, 0.25, 0.5, 0.75, 0.95
};

/// One-pass Welford mean/variance plus sorted-linear-interpolation quantiles
/// (value at order-statistic position (count - 1) * q). Throws EmptyInput.
SummaryStats summarize(std::span<const double> samples);

/// Standard normal CDF Phi(x), evaluated through an error-function pair:
/// alternating Maclaurin series of erf for small arguments and a Lentz
/// continued fraction for erfc in the tails. Absolute error below 1e-13;
/// both signs share one erfc evaluation, so Phi(x) + Phi(-x) = 1 to within
/// one rounding.
double standard_normal_cdf(double x);

struct KsResult {
    double d_statistic = 0.0;  // in [0, 1]
    std::size_t sample_size = 0;
};

/// Kolmogorov-Smirnov distance between the sample ECDF and a reference CDF:
/// D = max_i max(i/N - F(x_(i)), F(x_(i)) - (i-1)/N). Throws EmptyInput.
KsResult ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (log size, log value). Needs at least two
/// points, all coordinates positive; throws NonPositiveInput otherwise.
RegressionFit loglog_slope(std::span<const std::pair<double, double>> points);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    int bins = 0;
    std::vector<double> densities;  // per bin; sum(density * width) = in-range fraction
    std::size_t in_range = 0;
    std::size_t out_of_range = 0;

    double bin_width() const { return (hi - lo) / bins; }
    double center(int bin) const { return lo + (bin + 0.5) * bin_width(); }
};

/// Equal-width histogram on [lo, hi]; half-open bins except the last, which
/// includes hi. Densities are normalized by the total sample count, so they
/// integrate to the in-range fraction. Throws BadRange for bins < 1 or
/// lo >= hi.
Histogram histogram(std::span<const double> samples, double lo, double hi, int bins);

}  // namespace rmlab::stats
