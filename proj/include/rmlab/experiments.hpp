#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rmlab/linalg.hpp"
#include "rmlab/matgen.hpp"
#include "rmlab/stats.hpp"
#include "rmlab/theory.hpp"

namespace rmlab::experiments {

/// Everything recorded about one replication.
struct SpectralSample {
    int rep_index = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double est1 = 0.0;              // one-step estimate
    double est2 = 0.0;              // two-step estimate
    double lambda1_centered = 0.0;  // lambda1 of the centered-matrix covariance
    double sum_sq_dev = 0.0;        // sum_i (W_i - l)^2
};

enum class CheckStatus { kPass, kFail, kNotApplicable };

struct Check {
    std::string name;
    CheckStatus status = CheckStatus::kNotApplicable;
    double observed = 0.0;
    std::string criterion;  // human-readable bound, e.g. "<= 0.3"
};

/// Verdict thresholds; defaults match the pinned acceptance values.
struct Tolerances {
    double mean_error = 0.3;
    double var_ratio_lo = 0.85;
    double var_ratio_hi = 1.15;
    double ks = 0.05;
    double slope_est2_lo = -1.35;
    double slope_est2_hi = -0.65;
    double slope_est1_lo = -0.8;
    double slope_est1_hi = -0.2;
    double edge_slack = 0.15;   // lambda2 allowed above the bulk edge b
    double edge_rate = 0.99;    // required fraction of replications inside
    double moment_lo = 0.8;
    double moment_hi = 1.2;
    double bulk_moment = 0.03;  // |(1/p) sum lambda / sigma^2 - 1|
    double bulk_supgap = 0.05;
    double chain_rel = 1e-9;
    double eq36_residual = 1e-8;
    double gram_rel = 1e-8;

    /// Set a threshold by its CLI key ("mean-error", "var-lo", ...).
    /// Returns false for an unknown key.
    bool set(std::string_view key, double value);
};

struct ExperimentConfig {
    MatrixParams params;
    int replications = 100;
    int parallelism = 0;  // worker threads; 0 = hardware concurrency
    std::vector<std::pair<int, int>> size_grid;
    Tolerances tol;
    int hist_bins = 40;
    // Histogram window; NaN means the default [a - 0.1, b + 0.1].
    double hist_lo = std::numeric_limits<double>::quiet_NaN();
    double hist_hi = std::numeric_limits<double>::quiet_NaN();
    std::string output_path;
};

/// One replication, a pure function of (params, index): stream (seed, index),
/// sample, estimators in O(pn), top two eigenvalues, centered-matrix lambda1,
/// and the row-sum deviation energy. NoConvergence failures carry the index.
SpectralSample run_replication(const MatrixParams& params, int index);

/// All replications, executed on config.parallelism workers. Replication i
/// always uses stream (seed, i), so results are identical for any worker
/// count. The first failure aborts the run and is rethrown.
std::vector<SpectralSample> run_replications(const ExperimentConfig& config);

struct CltReport {
    stats::SummaryStats summary;           // of lambda1
    theory::TheoryParams theoretical;
    std::optional<stats::KsResult> standardized_ks;  // z-scores vs Phi; absent when degenerate
    double mean_error = 0.0;
    std::optional<double> variance_ratio;  // sample variance / theory; absent when undefined
    std::vector<Check> checks;
    bool pass() const;
};

CltReport make_clt_report(std::span<const SpectralSample> samples, const ExperimentConfig& config);
CltReport verify_clt(const ExperimentConfig& config);

struct ScalingPoint {
    int p = 0;
    int n = 0;
    double median_abs_err_est2 = 0.0;            // median |est2 - lambda1|
    double median_abs_err_est1_corrected = 0.0;  // median |est1 - lambda1 + p sigma^2 / n|
};

struct ScalingReport {
    std::vector<ScalingPoint> grid;
    stats::RegressionFit fit_est2;  // target exponent -1
    stats::RegressionFit fit_est1;  // target exponent -1/2 at fixed c
    std::vector<Check> checks;
    bool pass() const;
};

/// Fits for both error laws from already-computed grid medians (also the
/// harness self-test hook).
std::pair<stats::RegressionFit, stats::RegressionFit> scaling_fits(
    std::span<const ScalingPoint> grid);

ScalingReport error_scaling(const ExperimentConfig& config);

struct BulkReport {
    stats::Histogram hist;
    std::optional<double> sup_gap;               // interior bins vs the bulk density
    int interior_bins = 0;
    std::optional<double> mean_spectral_moment;  // (1/p) sum lambda, mu = 0 runs
    std::optional<double> edge_exceedance_rate;  // fraction with lambda2 > b + slack, mu > 0 runs
    std::vector<Check> checks;
    bool pass() const;
};

BulkReport bulk_check(const ExperimentConfig& config);

struct IdentityReport {
    double eq36_max_residual = 0.0;
    long chain_violations = 0;
    long ordering_violations = 0;
    double gram_max_gap = 0.0;
    std::optional<double> moment_ratio;          // mean sum_sq_dev over mu^2 sigma^2 p^3 / n
    std::optional<double> edge_exceedance_rate;  // mu > 0 runs
    std::vector<Check> checks;
    bool pass() const;
};

/// Per-replication exact identities plus the aggregated moment ratio. When
/// samples_out is non-null the full per-replication records are stored there.
IdentityReport identity_checks(const ExperimentConfig& config,
                               std::vector<SpectralSample>* samples_out = nullptr);

}  // namespace rmlab::experiments
