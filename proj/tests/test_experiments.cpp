#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "rmlab/cli.hpp"
#include "rmlab/errors.hpp"
#include "rmlab/experiments.hpp"

using namespace rmlab;
using namespace rmlab::experiments;

namespace {

ExperimentConfig config_of(int p, int n, double mu, double sigma, std::uint64_t seed, int reps,
                           int parallelism = 0) {
    ExperimentConfig cfg;
    cfg.params = MatrixParams{p, n, mu, sigma, seed};
    cfg.replications = reps;
    cfg.parallelism = parallelism;
    return cfg;
}

bool status_of(const std::vector<Check>& checks, const std::string& name, CheckStatus want) {
    for (const auto& c : checks) {
        if (c.name == name) return c.status == want;
    }
    return false;
}

}  // namespace

TEST_CASE("run_replication on the degenerate variance case") {
    const SpectralSample s = run_replication(MatrixParams{3, 5, 2.0, 0.0, 42}, 0);
    CHECK(s.lambda1 == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(s.est1 == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(s.est2 == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(std::abs(s.lambda2) <= 1e-9);
    CHECK(s.lambda1_centered == 0.0);
    CHECK(s.sum_sq_dev == 0.0);
}

TEST_CASE("run_replication is a pure function of (params, index)") {
    const MatrixParams params{24, 48, 1.0, 1.0, 42};
    const SpectralSample a = run_replication(params, 3);
    const SpectralSample b = run_replication(params, 3);
    CHECK(a.lambda1 == b.lambda1);
    CHECK(a.lambda2 == b.lambda2);
    CHECK(a.est1 == b.est1);
    CHECK(a.est2 == b.est2);
    CHECK(a.lambda1_centered == b.lambda1_centered);
    CHECK(a.sum_sq_dev == b.sum_sq_dev);
}

TEST_CASE("run_replication satisfies the ordering chains") {
    const SpectralSample s = run_replication(MatrixParams{64, 128, 1.0, 1.0, 42}, 0);
    const double slack = 1e-9 * s.lambda1;
    CHECK(s.est1 <= s.est2 + slack);
    CHECK(s.est2 <= s.lambda1 + slack);
    CHECK(s.lambda2 <= s.lambda1_centered + slack);
    CHECK(s.lambda1_centered <= s.lambda1 + slack);
}

TEST_CASE("verify_clt with a single replication marks variance not-applicable") {
    const CltReport rep = verify_clt(config_of(8, 16, 1.0, 1.0, 7, 1));
    CHECK(!rep.variance_ratio.has_value());
    CHECK(status_of(rep.checks, "clt-variance", CheckStatus::kNotApplicable));
    CHECK(rep.summary.count == 1);
}

TEST_CASE("verify_clt with sigma = 0 degenerates to a point mass") {
    const CltReport rep = verify_clt(config_of(3, 5, 2.0, 0.0, 42, 20));
    CHECK(rep.mean_error <= 1e-12);
    CHECK(!rep.standardized_ks.has_value());
    CHECK(status_of(rep.checks, "clt-ks", CheckStatus::kNotApplicable));
    CHECK(status_of(rep.checks, "clt-mean", CheckStatus::kPass));
    CHECK(rep.pass());
}

TEST_CASE("reports are identical for any worker count") {
    const int parallelisms[] = {1, 2, 8};
    std::vector<std::string> dumps;
    for (int par : parallelisms) {
        ExperimentConfig cfg = config_of(32, 64, 1.0, 1.0, 42, 40, par);
        const CltReport rep = verify_clt(cfg);
        dumps.push_back(cli::to_json(rep).dump());
    }
    CHECK(dumps[0] == dumps[1]);
    CHECK(dumps[0] == dumps[2]);
}

TEST_CASE("scaling fits recover injected exact power laws") {
    std::vector<ScalingPoint> grid;
    for (int p : {64, 128, 256, 512}) {
        ScalingPoint g;
        g.p = p;
        g.n = 2 * p;
        g.median_abs_err_est2 = 3.0 / p;                  // exact p^-1 law
        g.median_abs_err_est1_corrected = 0.7 / std::sqrt(p);  // exact p^-1/2 law
        grid.push_back(g);
    }
    const auto [fit2, fit1] = scaling_fits(grid);
    CHECK(fit2.slope == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(fit2.r_squared == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit1.slope == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("error_scaling produces sane exponents on a small grid") {
    ExperimentConfig cfg = config_of(0, 0, 1.0, 1.0, 42, 100);
    cfg.size_grid = {{16, 32}, {32, 64}, {64, 128}};
    const ScalingReport rep = error_scaling(cfg);
    REQUIRE(rep.grid.size() == 3);
    for (std::size_t i = 0; i < rep.grid.size(); ++i) {
        CHECK(rep.grid[i].median_abs_err_est2 > 0.0);
        CHECK(rep.grid[i].median_abs_err_est1_corrected > 0.0);
        if (i > 0) CHECK(rep.grid[i].p > rep.grid[i - 1].p);
    }
    CHECK(rep.fit_est2.slope > -1.4);
    CHECK(rep.fit_est2.slope < -0.5);
    CHECK(rep.fit_est1.slope > -1.0);
    CHECK(rep.fit_est1.slope < -0.15);
}

TEST_CASE("error_scaling validates its grid") {
    ExperimentConfig cfg = config_of(0, 0, 1.0, 1.0, 42, 10);
    cfg.size_grid = {{16, 32}, {32, 64}};
    CHECK_THROWS_AS(error_scaling(cfg), BadRange);
    cfg.size_grid = {{16, 32}, {16, 64}, {64, 128}};
    CHECK_THROWS_AS(error_scaling(cfg), BadRange);
}

TEST_CASE("bulk_check on centered runs matches the limiting moment") {
    ExperimentConfig cfg = config_of(64, 64, 0.0, 1.0, 42, 5);
    const BulkReport rep = bulk_check(cfg);
    REQUIRE(rep.mean_spectral_moment.has_value());
    CHECK(*rep.mean_spectral_moment == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rep.hist.in_range > 0);
    CHECK(!rep.edge_exceedance_rate.has_value());
    CHECK(status_of(rep.checks, "edge-rate", CheckStatus::kNotApplicable));
}

TEST_CASE("bulk_check on noncentral runs tracks the second eigenvalue") {
    ExperimentConfig cfg = config_of(48, 96, 1.0, 1.0, 42, 20);
    const BulkReport rep = bulk_check(cfg);
    REQUIRE(rep.edge_exceedance_rate.has_value());
    CHECK(!rep.mean_spectral_moment.has_value());
    CHECK(*rep.edge_exceedance_rate >= 0.0);
    CHECK(*rep.edge_exceedance_rate <= 1.0);
}

TEST_CASE("bulk_check at p = 1 marks the bulk comparison not-applicable") {
    ExperimentConfig cfg = config_of(1, 8, 0.0, 1.0, 42, 3);
    const BulkReport rep = bulk_check(cfg);
    CHECK(status_of(rep.checks, "bulk-supgap", CheckStatus::kNotApplicable));
}

TEST_CASE("bulk_check rejects oversized matrices") {
    ExperimentConfig cfg = config_of(2000, 2000, 0.0, 1.0, 42, 1);
    CHECK_THROWS_AS(bulk_check(cfg), SizeExceeded);
}

TEST_CASE("identity_checks finds no violations and a sane moment ratio") {
    ExperimentConfig cfg = config_of(64, 128, 1.0, 1.0, 42, 50);
    std::vector<SpectralSample> samples;
    const IdentityReport rep = identity_checks(cfg, &samples);
    CHECK(rep.chain_violations == 0);
    CHECK(rep.ordering_violations == 0);
    CHECK(rep.eq36_max_residual < 1e-8);
    CHECK(rep.gram_max_gap < 1e-8);
    REQUIRE(rep.moment_ratio.has_value());
    CHECK(*rep.moment_ratio > 0.7);
    CHECK(*rep.moment_ratio < 1.3);
    CHECK(samples.size() == 50);
    CHECK(rep.pass());
}

TEST_CASE("identity_checks marks the moment ratio not-applicable for small R") {
    ExperimentConfig cfg = config_of(16, 32, 1.0, 1.0, 42, 10);
    const IdentityReport rep = identity_checks(cfg);
    CHECK(!rep.moment_ratio.has_value());
    CHECK(status_of(rep.checks, "moment-ratio", CheckStatus::kNotApplicable));
}

TEST_CASE("identity_checks on centered runs skips the ordering check") {
    ExperimentConfig cfg = config_of(16, 32, 0.0, 1.0, 42, 10);
    const IdentityReport rep = identity_checks(cfg);
    CHECK(status_of(rep.checks, "ordering", CheckStatus::kNotApplicable));
    CHECK(rep.chain_violations == 0);
}

TEST_CASE("tolerance overrides flip verdicts") {
    ExperimentConfig cfg = config_of(16, 32, 1.0, 1.0, 42, 30);
    CHECK(cfg.tol.set("mean-error", 1e-15));
    CHECK(!cfg.tol.set("no-such-key", 1.0));
    const CltReport rep = verify_clt(cfg);
    CHECK(status_of(rep.checks, "clt-mean", CheckStatus::kFail));
    CHECK(!rep.pass());
}

TEST_CASE("growing the replication count keeps the mean stable") {
    // stochastic-stability bound: going from R = 500 to R = 2000 moves the
    // mean error by at most 3 sqrt(clt_var / 500)
    ExperimentConfig small = config_of(64, 128, 1.0, 1.0, 42, 500);
    ExperimentConfig big = config_of(64, 128, 1.0, 1.0, 42, 2000);
    const CltReport a = verify_clt(small);
    const CltReport b = verify_clt(big);
    const double bound = 3.0 * std::sqrt(a.theoretical.clt_var / 500.0);
    CHECK(std::abs(b.mean_error - a.mean_error) <= bound);
}
