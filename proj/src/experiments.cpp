#include "rmlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rmlab/errors.hpp"

namespace rmlab::experiments {

namespace {

int worker_count(int parallelism, int replications) {
    int w = parallelism > 0 ? parallelism
                            : static_cast<int>(std::thread::hardware_concurrency());
    if (w < 1) w = 1;
    return std::min(w, replications);
}

// Runs body(0..count-1) on `workers` threads; indices are claimed from an
// atomic counter but each body(i) writes only slot i, so results do not
// depend on scheduling. The first exception aborts the run and is rethrown.
template <class Fn>
void parallel_apply(int count, int workers, const Fn& body) {
    if (count <= 0) return;
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> abort{false};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto loop = [&]() {
        for (;;) {
            if (abort.load(std::memory_order_relaxed)) return;
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                {
                    const std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
                abort.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool exceeds(double a, double b, double rel, double scale) {
    return a - b > rel * scale;
}

Check make_check(std::string name, bool ok, double observed, std::string criterion) {
    return {std::move(name), ok ? CheckStatus::kPass : CheckStatus::kFail, observed,
            std::move(criterion)};
}

Check na_check(std::string name, std::string why) {
    return {std::move(name), CheckStatus::kNotApplicable, 0.0, std::move(why)};
}

bool all_pass(const std::vector<Check>& checks) {
    return std::none_of(checks.begin(), checks.end(),
                        [](const Check& c) { return c.status == CheckStatus::kFail; });
}

std::string band(double lo, double hi) {
    return "in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
}

}  // namespace

bool Tolerances::set(std::string_view key, double value) {
    struct Entry {
        std::string_view key;
        double Tolerances::* field;
    };
    static constexpr Entry kEntries[] = {
        {"mean-error", &Tolerances::mean_error},
        {"var-lo", &Tolerances::var_ratio_lo},
        {"var-hi", &Tolerances::var_ratio_hi},
        {"ks", &Tolerances::ks},
        {"slope-est2-lo", &Tolerances::slope_est2_lo},
        {"slope-est2-hi", &Tolerances::slope_est2_hi},
        {"slope-est1-lo", &Tolerances::slope_est1_lo},
        {"slope-est1-hi", &Tolerances::slope_est1_hi},
        {"edge-slack", &Tolerances::edge_slack},
        {"edge-rate", &Tolerances::edge_rate},
        {"moment-lo", &Tolerances::moment_lo},
        {"moment-hi", &Tolerances::moment_hi},
        {"bulk-moment", &Tolerances::bulk_moment},
        {"bulk-supgap", &Tolerances::bulk_supgap},
        {"chain-rel", &Tolerances::chain_rel},
        {"eq36-residual", &Tolerances::eq36_residual},
        {"gram-rel", &Tolerances::gram_rel},
    };
    for (const auto& e : kEntries) {
        if (e.key == key) {
            this->*e.field = value;
            return true;
        }
    }
    return false;
}

SpectralSample run_replication(const MatrixParams& params, int index) {
    try {
        const matgen::SeedStream stream =
            matgen::derive_stream(params.seed, static_cast<std::uint64_t>(index));
        const RealMatrix x = matgen::sample_matrix(params, stream);

        SpectralSample s;
        s.rep_index = index;
        s.est1 = linalg::estimator_one(x);
        s.est2 = linalg::estimator_two(x);

        const double l = theory::estimator_expectation(params.p, params.mu, params.sigma);
        const linalg::RowSumVector rs = linalg::row_sums(x);
        double ssd = 0.0;
        for (double v : rs.values) {
            const double d = v - l;
            ssd += d * d;
        }
        s.sum_sq_dev = ssd;

        const linalg::EigenPairTop pair = linalg::top_two_eigenvalues(x);
        s.lambda1 = pair.lambda1;
        s.lambda2 = pair.lambda2;

        const RealMatrix centered = matgen::center(x, params.mu);
        s.lambda1_centered = linalg::largest_eigenpair(centered).lambda;
        return s;
    } catch (const NoConvergence& e) {
        throw NoConvergence(e.iterations(),
                            "replication " + std::to_string(index) + ": " + e.what());
    }
}

std::vector<SpectralSample> run_replications(const ExperimentConfig& config) {
    const int r = config.replications;
    if (r < 1) throw BadRange("run_replications: need at least one replication");
    std::vector<SpectralSample> samples(static_cast<std::size_t>(r));
    parallel_apply(r, worker_count(config.parallelism, r),
                   [&](int i) { samples[static_cast<std::size_t>(i)] = run_replication(config.params, i); });
    return samples;
}

bool CltReport::pass() const { return all_pass(checks); }

CltReport make_clt_report(std::span<const SpectralSample> samples, const ExperimentConfig& config) {
    if (samples.empty()) throw EmptyInput("make_clt_report: no samples");
    const MatrixParams& mp = config.params;
    CltReport rep;
    rep.theoretical = theory::clt_params(mp.p, mp.n, mp.mu, mp.sigma);

    std::vector<double> lambda1s;
    lambda1s.reserve(samples.size());
    for (const auto& s : samples) lambda1s.push_back(s.lambda1);
    rep.summary = stats::summarize(lambda1s);

    const Tolerances& tol = config.tol;
    rep.mean_error = std::abs(rep.summary.mean - rep.theoretical.clt_mean);
    rep.checks.push_back(make_check("clt-mean", rep.mean_error <= tol.mean_error, rep.mean_error,
                                    "<= " + std::to_string(tol.mean_error)));

    const bool degenerate = rep.theoretical.clt_var <= 0.0;
    if (!degenerate && rep.summary.count >= 2) {
        rep.variance_ratio = rep.summary.variance / rep.theoretical.clt_var;
        rep.checks.push_back(make_check(
            "clt-variance",
            *rep.variance_ratio >= tol.var_ratio_lo && *rep.variance_ratio <= tol.var_ratio_hi,
            *rep.variance_ratio, band(tol.var_ratio_lo, tol.var_ratio_hi)));
    } else {
        rep.checks.push_back(na_check("clt-variance",
                                      degenerate ? "degenerate law" : "needs at least 2 samples"));
    }

    if (!degenerate) {
        const double sd = std::sqrt(rep.theoretical.clt_var);
        std::vector<double> z(lambda1s.size());
        for (std::size_t i = 0; i < lambda1s.size(); ++i) {
            z[i] = (lambda1s[i] - rep.theoretical.clt_mean) / sd;
        }
        rep.standardized_ks = stats::ks_statistic(z, stats::standard_normal_cdf);
        rep.checks.push_back(make_check("clt-ks", rep.standardized_ks->d_statistic <= tol.ks,
                                        rep.standardized_ks->d_statistic,
                                        "<= " + std::to_string(tol.ks)));
    } else {
        rep.checks.push_back(na_check("clt-ks", "degenerate law"));
    }
    return rep;
}

CltReport verify_clt(const ExperimentConfig& config) {
    return make_clt_report(run_replications(config), config);
}

bool ScalingReport::pass() const { return all_pass(checks); }

std::pair<stats::RegressionFit, stats::RegressionFit> scaling_fits(
    std::span<const ScalingPoint> grid) {
    std::vector<std::pair<double, double>> pts2, pts1;
    for (const auto& g : grid) {
        pts2.emplace_back(static_cast<double>(g.p), g.median_abs_err_est2);
        pts1.emplace_back(static_cast<double>(g.p), g.median_abs_err_est1_corrected);
    }
    return {stats::loglog_slope(pts2), stats::loglog_slope(pts1)};
}

ScalingReport error_scaling(const ExperimentConfig& config) {
    if (config.size_grid.size() < 3) {
        throw BadRange("error_scaling: need a grid of at least 3 sizes");
    }
    for (std::size_t i = 1; i < config.size_grid.size(); ++i) {
        if (config.size_grid[i].first <= config.size_grid[i - 1].first) {
            throw BadRange("error_scaling: grid sizes must be strictly increasing in p");
        }
    }
    const int r = config.replications;
    if (r < 1) throw BadRange("error_scaling: need at least one replication");

    ScalingReport rep;
    for (const auto& [p, n] : config.size_grid) {
        MatrixParams mp = config.params;
        mp.p = p;
        mp.n = n;
        std::vector<double> err2(static_cast<std::size_t>(r)), err1(static_cast<std::size_t>(r));
        const double correction =
            mp.sigma * mp.sigma * static_cast<double>(p) / static_cast<double>(n);
        parallel_apply(r, worker_count(config.parallelism, r), [&](int i) {
            const matgen::SeedStream stream =
                matgen::derive_stream(mp.seed, static_cast<std::uint64_t>(i));
            const RealMatrix x = matgen::sample_matrix(mp, stream);
            const double e1 = linalg::estimator_one(x);
            const double e2 = linalg::estimator_two(x);
            const double lambda1 = linalg::largest_eigenpair(x).lambda;
            err2[static_cast<std::size_t>(i)] = std::abs(e2 - lambda1);
            err1[static_cast<std::size_t>(i)] = std::abs(e1 - lambda1 + correction);
        });
        ScalingPoint point;
        point.p = p;
        point.n = n;
        point.median_abs_err_est2 = median_of(std::move(err2));
        point.median_abs_err_est1_corrected = median_of(std::move(err1));
        if (point.median_abs_err_est2 <= 0.0 || point.median_abs_err_est1_corrected <= 0.0) {
            throw NonPositiveInput("error_scaling: zero median error at p = " + std::to_string(p));
        }
        rep.grid.push_back(point);
    }

    std::tie(rep.fit_est2, rep.fit_est1) = scaling_fits(rep.grid);
    const Tolerances& tol = config.tol;
    rep.checks.push_back(make_check(
        "slope-est2",
        rep.fit_est2.slope >= tol.slope_est2_lo && rep.fit_est2.slope <= tol.slope_est2_hi,
        rep.fit_est2.slope, band(tol.slope_est2_lo, tol.slope_est2_hi)));
    rep.checks.push_back(make_check(
        "slope-est1",
        rep.fit_est1.slope >= tol.slope_est1_lo && rep.fit_est1.slope <= tol.slope_est1_hi,
        rep.fit_est1.slope, band(tol.slope_est1_lo, tol.slope_est1_hi)));
    return rep;
}

bool BulkReport::pass() const { return all_pass(checks); }

BulkReport bulk_check(const ExperimentConfig& config) {
    const MatrixParams& mp = config.params;
    if (mp.p > linalg::kDefaultSpectrumLimit) {
        throw SizeExceeded("bulk_check: p exceeds the dense-spectrum limit");
    }
    const int r = config.replications;
    if (r < 1) throw BadRange("bulk_check: need at least one replication");
    const theory::TheoryParams th = theory::clt_params(mp.p, mp.n, mp.mu, mp.sigma);
    const bool noncentral = mp.mu > 0.0;

    std::vector<std::vector<double>> spectra(static_cast<std::size_t>(r));
    parallel_apply(r, worker_count(config.parallelism, r), [&](int i) {
        const matgen::SeedStream stream =
            matgen::derive_stream(mp.seed, static_cast<std::uint64_t>(i));
        const RealMatrix x = matgen::sample_matrix(mp, stream);
        spectra[static_cast<std::size_t>(i)] = linalg::full_spectrum(linalg::covariance(x));
    });

    BulkReport rep;
    const Tolerances& tol = config.tol;
    std::vector<double> pooled;
    double moment_sum = 0.0;
    long exceed = 0;
    for (const auto& spec : spectra) {
        if (noncentral) {
            // the detached top eigenvalue is not part of the bulk
            pooled.insert(pooled.end(), spec.begin() + 1, spec.end());
            if (spec.size() >= 2 && spec[1] > th.b + tol.edge_slack) ++exceed;
        } else {
            pooled.insert(pooled.end(), spec.begin(), spec.end());
            double m = 0.0;
            for (double lam : spec) m += lam;
            moment_sum += m / mp.p;
        }
    }

    const double lo = std::isnan(config.hist_lo) ? th.a - 0.1 : config.hist_lo;
    const double hi = std::isnan(config.hist_hi) ? th.b + 0.1 : config.hist_hi;
    if (!pooled.empty()) {
        rep.hist = stats::histogram(pooled, lo, hi, config.hist_bins);
    } else {
        rep.hist.lo = lo;
        rep.hist.hi = hi;
        rep.hist.bins = config.hist_bins;
        rep.hist.densities.assign(config.hist_bins, 0.0);
    }

    if (mp.p >= 2 && !pooled.empty()) {
        // Sup-gap over interior bins: at least one bin-width away from the
        // support edges, where the density is smooth on the bin scale.
        double sup = 0.0;
        int interior = 0;
        const double width = rep.hist.bin_width();
        for (int b = 0; b < rep.hist.bins; ++b) {
            const double left = lo + b * width;
            const double right = left + width;
            if (left < th.a + width || right > th.b - width) continue;
            ++interior;
            const double f = theory::mp_density(rep.hist.center(b), th.c, mp.sigma);
            sup = std::max(sup, std::abs(rep.hist.densities[b] - f));
        }
        rep.interior_bins = interior;
        if (interior > 0) {
            rep.sup_gap = sup;
            rep.checks.push_back(make_check("bulk-supgap", sup <= tol.bulk_supgap, sup,
                                            "<= " + std::to_string(tol.bulk_supgap)));
        } else {
            rep.checks.push_back(na_check("bulk-supgap", "no interior bins"));
        }
    } else {
        rep.checks.push_back(na_check("bulk-supgap", "bulk comparison needs p >= 2"));
    }

    if (!noncentral) {
        const double s2 = mp.sigma * mp.sigma;
        if (s2 > 0.0) {
            rep.mean_spectral_moment = moment_sum / r;
            const double dev = std::abs(*rep.mean_spectral_moment / s2 - 1.0);
            rep.checks.push_back(make_check("bulk-moment", dev <= tol.bulk_moment, dev,
                                            "<= " + std::to_string(tol.bulk_moment)));
        } else {
            rep.checks.push_back(na_check("bulk-moment", "sigma = 0"));
        }
        rep.checks.push_back(na_check("edge-rate", "mu = 0 run"));
    } else {
        rep.checks.push_back(na_check("bulk-moment", "mu > 0 run"));
        if (mp.p >= 2) {
            rep.edge_exceedance_rate = static_cast<double>(exceed) / r;
            const double inside = 1.0 - *rep.edge_exceedance_rate;
            rep.checks.push_back(make_check("edge-rate", inside >= tol.edge_rate, inside,
                                            ">= " + std::to_string(tol.edge_rate)));
        } else {
            rep.checks.push_back(na_check("edge-rate", "needs p >= 2"));
        }
    }
    return rep;
}

bool IdentityReport::pass() const { return all_pass(checks); }

IdentityReport identity_checks(const ExperimentConfig& config,
                               std::vector<SpectralSample>* samples_out) {
    const MatrixParams& mp = config.params;
    const int r = config.replications;
    if (r < 1) throw BadRange("identity_checks: need at least one replication");
    const theory::TheoryParams th = theory::clt_params(mp.p, mp.n, mp.mu, mp.sigma);
    const double l = th.l;
    const Tolerances& tol = config.tol;
    const bool noncentral = mp.mu > 0.0;

    struct PerRep {
        SpectralSample sample;
        double eq36 = 0.0;
        double gram_gap = 0.0;
        bool chain_bad = false;
        bool ordering_bad = false;
    };
    std::vector<PerRep> reps(static_cast<std::size_t>(r));

    parallel_apply(r, worker_count(config.parallelism, r), [&](int i) {
        const matgen::SeedStream stream =
            matgen::derive_stream(mp.seed, static_cast<std::uint64_t>(i));
        const RealMatrix x = matgen::sample_matrix(mp, stream);
        PerRep& out = reps[static_cast<std::size_t>(i)];

        const linalg::SymmetricMatrix w = linalg::covariance(x);
        const linalg::EigenPairTop pair =
            mp.p <= mp.n ? linalg::top_two_of(w) : linalg::top_two_eigenvalues(x);

        SpectralSample& s = out.sample;
        s.rep_index = i;
        s.est1 = linalg::estimator_one(x);
        s.est2 = linalg::estimator_two(x);
        s.lambda1 = pair.lambda1;
        s.lambda2 = pair.lambda2;
        const RealMatrix centered = matgen::center(x, mp.mu);
        s.lambda1_centered = linalg::largest_eigenpair(centered).lambda;

        const linalg::RowSumVector rs = linalg::row_sums(x);
        double ssd = 0.0;
        for (double v : rs.values) {
            const double d = v - l;
            ssd += d * d;
        }
        s.sum_sq_dev = ssd;

        out.eq36 = linalg::decompose_ones(w, pair, l).identity_residual;
        out.chain_bad = exceeds(s.est1, s.est2, tol.chain_rel, std::abs(s.est2)) ||
                        exceeds(s.est2, s.lambda1, tol.chain_rel, std::abs(s.lambda1));
        if (noncentral) {
            out.ordering_bad =
                exceeds(s.lambda2, s.lambda1_centered, tol.chain_rel, std::abs(s.lambda1)) ||
                exceeds(s.lambda1_centered, s.lambda1, tol.chain_rel, std::abs(s.lambda1));
        }

        // Gram duality: top two eigenvalues from the dual side X^T X / n.
        const linalg::EigenPairTop dual = linalg::top_two_of(linalg::gram_other_side(x));
        const double scale = std::max(std::abs(pair.lambda1), 1e-300);
        double gap = std::abs(pair.lambda1 - dual.lambda1) / scale;
        if (std::min(mp.p, mp.n) >= 2) {
            gap = std::max(gap, std::abs(pair.lambda2 - dual.lambda2) / scale);
        }
        out.gram_gap = gap;
    });

    IdentityReport rep;
    double ssd_sum = 0.0;
    long exceed = 0;
    for (const auto& pr : reps) {
        rep.eq36_max_residual = std::max(rep.eq36_max_residual, pr.eq36);
        rep.gram_max_gap = std::max(rep.gram_max_gap, pr.gram_gap);
        rep.chain_violations += pr.chain_bad ? 1 : 0;
        rep.ordering_violations += pr.ordering_bad ? 1 : 0;
        ssd_sum += pr.sample.sum_sq_dev;
        if (pr.sample.lambda2 > th.b + tol.edge_slack) ++exceed;
    }
    if (samples_out) {
        samples_out->clear();
        samples_out->reserve(reps.size());
        for (const auto& pr : reps) samples_out->push_back(pr.sample);
    }

    rep.checks.push_back(make_check("chain", rep.chain_violations == 0,
                                    static_cast<double>(rep.chain_violations), "= 0 violations"));
    rep.checks.push_back(make_check("eq36", rep.eq36_max_residual < tol.eq36_residual,
                                    rep.eq36_max_residual,
                                    "< " + std::to_string(tol.eq36_residual)));
    rep.checks.push_back(make_check("gram", rep.gram_max_gap < tol.gram_rel, rep.gram_max_gap,
                                    "< " + std::to_string(tol.gram_rel)));
    if (noncentral) {
        rep.checks.push_back(make_check("ordering", rep.ordering_violations == 0,
                                        static_cast<double>(rep.ordering_violations),
                                        "= 0 violations"));
        rep.edge_exceedance_rate = static_cast<double>(exceed) / r;
    } else {
        rep.checks.push_back(na_check("ordering", "mu = 0 run"));
    }

    const double denom = mp.mu * mp.mu * mp.sigma * mp.sigma *
                         std::pow(static_cast<double>(mp.p), 3) / static_cast<double>(mp.n);
    if (denom > 0.0 && r >= 50) {
        rep.moment_ratio = (ssd_sum / r) / denom;
        rep.checks.push_back(make_check(
            "moment-ratio", *rep.moment_ratio >= tol.moment_lo && *rep.moment_ratio <= tol.moment_hi,
            *rep.moment_ratio, band(tol.moment_lo, tol.moment_hi)));
    } else {
        rep.checks.push_back(
            na_check("moment-ratio", denom > 0.0 ? "needs R >= 50" : "degenerate leading term"));
    }
    return rep;
}

}  // namespace rmlab::experiments
