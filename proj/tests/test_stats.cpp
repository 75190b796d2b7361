#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rmlab/errors.hpp"
#include "rmlab/matgen.hpp"
#include "rmlab/stats.hpp"

using namespace rmlab;
using namespace rmlab::stats;

namespace {

// Composite-Simpson oracle for Phi(x) - 1/2 on [0, x]; independent of the
// series/continued-fraction path under test.
double phi_by_quadrature(double x) {
    const int panels = 4000;
    const double h = x / panels;
    auto pdf = [](double t) {
        return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
    };
    double sum = pdf(0.0) + pdf(x);
    for (int i = 1; i < panels; ++i) {
        sum += pdf(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return 0.5 + sum * h / 3.0;
}

}  // namespace

TEST_CASE("summarize handles constant and small samples") {
    const std::vector<double> ones{1.0, 1.0, 1.0};
    const SummaryStats c = summarize(ones);
    CHECK(c.mean == 1.0);
    CHECK(c.variance == 0.0);
    CHECK(c.min == 1.0);
    CHECK(c.max == 1.0);

    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const SummaryStats s = summarize(v);
    CHECK(s.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(s.variance == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(s.quantiles.at(0.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
}

TEST_CASE("summarize rejects empty input") {
    CHECK_THROWS_AS(summarize(std::vector<double>{}), EmptyInput);
}

TEST_CASE("summarize is permutation invariant") {
    std::vector<double> v{3.5, -1.0, 2.25, 9.0, 0.5, 2.25};
    const SummaryStats a = summarize(v);
    std::sort(v.begin(), v.end());
    const SummaryStats b = summarize(v);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-15));
    CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-12));
    CHECK(a.min == b.min);
    CHECK(a.max == b.max);
    for (const auto& [q, val] : a.quantiles) CHECK(val == b.quantiles.at(q));
}

TEST_CASE("quantiles stay within the sample range") {
    matgen::SeedStream s = matgen::derive_stream(55, 0);
    std::vector<double> v(101);
    for (double& e : v) e = matgen::next_unit(s) * 10.0 - 5.0;
    const SummaryStats st = summarize(v);
    for (const auto& [q, val] : st.quantiles) {
        CHECK(val >= st.min);
        CHECK(val <= st.max);
    }
}

TEST_CASE("standard_normal_cdf reference values") {
    CHECK(standard_normal_cdf(0.0) == 0.5);
    CHECK(standard_normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK(standard_normal_cdf(-1.0) == doctest::Approx(1.0 - 0.8413447460685429).epsilon(1e-12));
    CHECK(standard_normal_cdf(2.0) == doctest::Approx(0.9772498680518208).epsilon(1e-12));
    CHECK(standard_normal_cdf(5.0) == doctest::Approx(0.9999997133484281).epsilon(1e-12));
    CHECK(standard_normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-3));
}

TEST_CASE("standard_normal_cdf agrees with the quadrature oracle") {
    for (double x : {0.1, 0.5, 1.0, 1.4, 1.7, 2.5, 3.0, 4.0}) {
        CHECK(standard_normal_cdf(x) == doctest::Approx(phi_by_quadrature(x)).epsilon(1e-10));
    }
}

TEST_CASE("standard_normal_cdf is symmetric") {
    for (double x : {0.5, 1.0, 2.0, 5.0}) {
        CHECK(standard_normal_cdf(-x) + standard_normal_cdf(x) ==
              doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("ks_statistic on a single median sample") {
    const std::vector<double> v{0.0};
    const KsResult r = ks_statistic(v, standard_normal_cdf);
    CHECK(r.d_statistic == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.sample_size == 1);
}

TEST_CASE("ks_statistic on the exact mid-quantile grid") {
    // samples at F^{-1}((i - 0.5)/N) for the uniform reference: D = 0.05
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i) v.push_back((i - 0.5) / 10.0);
    const KsResult r = ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(r.d_statistic == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("ks_statistic saturates under total separation") {
    const std::vector<double> v{-50.0, -49.0, -48.0};
    const KsResult r = ks_statistic(v, standard_normal_cdf);
    CHECK(r.d_statistic > 0.999);
    CHECK(r.d_statistic <= 1.0);
}

TEST_CASE("ks_statistic against the sample's own ECDF is at most 1/N") {
    matgen::SeedStream s = matgen::derive_stream(77, 0);
    std::vector<double> v(64);
    for (double& e : v) e = matgen::next_unit(s);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    auto ecdf = [&sorted](double x) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
        return static_cast<double>(it - sorted.begin()) / sorted.size();
    };
    const KsResult r = ks_statistic(v, ecdf);
    CHECK(r.d_statistic <= 1.0 / 64.0 + 1e-15);
}

TEST_CASE("ks_statistic rejects empty input") {
    CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, standard_normal_cdf), EmptyInput);
}

TEST_CASE("loglog_slope recovers exact power laws") {
    const std::vector<std::pair<double, double>> inverse{{2.0, 1.0}, {4.0, 0.5}, {8.0, 0.25}};
    const RegressionFit f1 = loglog_slope(inverse);
    CHECK(f1.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(f1.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<std::pair<double, double>> flat{{2.0, 1.0}, {4.0, 1.0}, {8.0, 1.0}};
    CHECK(loglog_slope(flat).slope == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<std::pair<double, double>> half;
    for (double p : {64.0, 128.0, 256.0, 512.0}) half.emplace_back(p, 3.7 / std::sqrt(p));
    const RegressionFit f2 = loglog_slope(half);
    CHECK(f2.slope == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(f2.r_squared == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("loglog_slope validates its input") {
    CHECK_THROWS_AS(loglog_slope(std::vector<std::pair<double, double>>{{1.0, 1.0}}),
                    NonPositiveInput);
    CHECK_THROWS_AS(
        loglog_slope(std::vector<std::pair<double, double>>{{1.0, 1.0}, {2.0, -1.0}, {3.0, 1.0}}),
        NonPositiveInput);
}

TEST_CASE("histogram places a point mass in its bin") {
    std::vector<double> v(100, 1.0);
    const Histogram h = histogram(v, 0.0, 2.0, 2);
    REQUIRE(h.densities.size() == 2);
    CHECK(h.densities[0] == 0.0);
    CHECK(h.densities[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(h.in_range == 100);
}

TEST_CASE("histogram of a uniform grid is flat") {
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) v.push_back((i + 0.5) / 1000.0);
    const Histogram h = histogram(v, 0.0, 1.0, 10);
    for (double d : h.densities) CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("histogram counts out-of-range samples separately") {
    const std::vector<double> v{3.0};
    const Histogram h = histogram(v, 0.0, 2.0, 4);
    CHECK(h.out_of_range == 1);
    CHECK(h.in_range == 0);
    double integral = 0.0;
    for (double d : h.densities) integral += d * h.bin_width();
    CHECK(integral == 0.0);
}

TEST_CASE("histogram densities integrate to the in-range fraction") {
    matgen::SeedStream s = matgen::derive_stream(88, 1);
    std::vector<double> v(500);
    for (double& e : v) e = matgen::next_unit(s) * 3.0 - 0.5;  // some fall outside [0, 2]
    const Histogram h = histogram(v, 0.0, 2.0, 7);
    double integral = 0.0;
    for (double d : h.densities) {
        CHECK(d >= 0.0);
        integral += d * h.bin_width();
    }
    const double fraction = static_cast<double>(h.in_range) / v.size();
    CHECK(integral == doctest::Approx(fraction).epsilon(1e-12));
    CHECK(h.in_range + h.out_of_range == v.size());
}

TEST_CASE("histogram validates its range") {
    const std::vector<double> v{1.0};
    CHECK_THROWS_AS(histogram(v, 1.0, 1.0, 4), BadRange);
    CHECK_THROWS_AS(histogram(v, 0.0, 1.0, 0), BadRange);
}
