#include "rmlab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rmlab/errors.hpp"

namespace rmlab::cli {

namespace {

constexpr const char* kCsvHeader = "rep,lambda1,lambda2,est1,est2,lambda1_centered,sum_sq_dev";

constexpr const char* kTolKeys[] = {
    "mean-error", "var-lo",        "var-hi",        "ks",           "slope-est2-lo",
    "slope-est2-hi", "slope-est1-lo", "slope-est1-hi", "edge-slack",   "edge-rate",
    "moment-lo",  "moment-hi",     "bulk-moment",   "bulk-supgap",  "chain-rel",
    "eq36-residual", "gram-rel",
};

const char* status_str(experiments::CheckStatus s) {
    switch (s) {
        case experiments::CheckStatus::kPass:
            return "pass";
        case experiments::CheckStatus::kFail:
            return "fail";
        default:
            return "not-applicable";
    }
}

nlohmann::ordered_json checks_json(const std::vector<experiments::Check>& checks) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name},
                       {"status", status_str(c.status)},
                       {"observed", c.observed},
                       {"criterion", c.criterion}});
    }
    return arr;
}

nlohmann::ordered_json summary_json(const stats::SummaryStats& s) {
    nlohmann::ordered_json q;
    for (const auto& [level, value] : s.quantiles) {
        char label[32];
        std::snprintf(label, sizeof label, "%g", level);
        q[label] = value;
    }
    return {{"count", s.count}, {"mean", s.mean},    {"variance", s.variance},
            {"min", s.min},     {"max", s.max},      {"quantiles", q}};
}

nlohmann::ordered_json fit_json(const stats::RegressionFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
    if (v) return *v;
    return nullptr;
}

std::vector<std::pair<int, int>> parse_grid(const std::string& s) {
    std::vector<std::pair<int, int>> grid;
    std::stringstream ss(s);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto colon = token.find(':');
        if (colon == std::string::npos) {
            throw UsageError("--grid: expected 'p1:n1,p2:n2,...', got '" + token + "'");
        }
        int p = 0, n = 0;
        try {
            p = std::stoi(token.substr(0, colon));
            n = std::stoi(token.substr(colon + 1));
        } catch (const std::exception&) {
            throw UsageError("--grid: '" + token + "' is not a pair of integers");
        }
        if (p < 1 || n < 1) throw UsageError("--grid: sizes must be positive");
        grid.emplace_back(p, n);
    }
    if (grid.size() < 3) throw UsageError("--grid: need at least 3 sizes");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i].first <= grid[i - 1].first) {
            throw UsageError("--grid: sizes must be strictly increasing in p");
        }
    }
    return grid;
}

double median_seconds(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double m = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return std::max(m, 1e-9);  // clock granularity floor keeps timings positive
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << content;
    os.flush();
    if (!os.good()) throw IoError("write to '" + path + "' failed");
}

}  // namespace

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Command parse(const std::vector<std::string>& argv) {
    Command cmd;
    experiments::ExperimentConfig& cfg = cmd.config;
    MatrixParams& mp = cfg.params;
    mp.p = 256;
    mp.n = 512;
    mp.mu = 1.0;
    mp.sigma = 1.0;
    mp.seed = 42;
    cfg.replications = 200;

    std::string grid_str;
    std::string format_str = "csv";

    CLI::App app{"rmlab: sample-covariance spectral laboratory"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool with_pn, bool with_grid, bool with_tol) {
        if (with_pn) {
            sub->add_option("--p", mp.p, "row count p")->check(CLI::Range(1, 1 << 24))
                ->capture_default_str();
            sub->add_option("--n", mp.n, "column count n")->check(CLI::Range(1, 1 << 24))
                ->capture_default_str();
        }
        sub->add_option("--mu", mp.mu, "entry mean")->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        sub->add_option("--sigma", mp.sigma, "entry standard deviation")
            ->check(CLI::NonNegativeNumber)->capture_default_str();
        sub->add_option("--seed", mp.seed, "master seed (falls back to RMLAB_SEED, then 42)")
            ->envname("RMLAB_SEED")->capture_default_str();
        sub->add_option("--reps", cfg.replications, "replication count")
            ->check(CLI::Range(1, 100000000))->capture_default_str();
        sub->add_option("--parallelism", cfg.parallelism, "worker threads (0 = all cores)")
            ->check(CLI::Range(0, 4096))->capture_default_str();
        if (with_grid) {
            sub->add_option("--grid", grid_str, "size grid 'p1:n1,p2:n2,...' (at least 3 sizes)")
                ->required();
        }
        sub->add_option("--out", cfg.output_path, "write results to PATH (reports go to stdout)");
        sub->add_option("--format", format_str, "samples file format")
            ->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        if (with_tol) {
            for (const char* key : kTolKeys) {
                sub->add_option_function<double>(
                    std::string("--tol-") + key,
                    [&cfg, key](double v) { cfg.tol.set(key, v); },
                    std::string("override the ") + key + " verdict threshold");
            }
        }
    };

    CLI::App* sim = app.add_subcommand("simulate", "run replications and emit per-replication samples");
    add_common(sim, true, false, false);
    CLI::App* clt = app.add_subcommand("verify-clt", "Monte Carlo check of the lambda1 normal law");
    add_common(clt, true, false, true);
    CLI::App* scaling = app.add_subcommand("error-scaling", "estimator error exponents over a size grid");
    add_common(scaling, false, true, true);
    CLI::App* bulk = app.add_subcommand("bulk-check", "pooled spectrum against the bulk law");
    add_common(bulk, true, false, true);
    CLI::App* ident = app.add_subcommand("identity-check", "per-replication exact spectral identities");
    add_common(ident, true, false, true);

    CLI::App* bench = app.add_subcommand("bench", "time the O(pn) estimators against a full eigensolve");
    bench->add_option("--p", mp.p, "row count p")->check(CLI::Range(1, 1 << 24))
        ->capture_default_str();
    bench->add_option("--n", mp.n, "column count n")->check(CLI::Range(1, 1 << 24))
        ->capture_default_str();
    bench->add_option("--mu", mp.mu, "entry mean")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    bench->add_option("--sigma", mp.sigma, "entry standard deviation")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
    bench->add_option("--seed", mp.seed, "master seed (falls back to RMLAB_SEED, then 42)")
        ->envname("RMLAB_SEED")->capture_default_str();
    bench->add_option("--reps", cmd.bench_repeat, "timing repetitions (median taken, at least 3)")
        ->check(CLI::Range(1, 1000000))->capture_default_str();
    bench->add_option("--out", cfg.output_path, "write the bench report to PATH");

    std::vector<const char*> cargv;
    cargv.reserve(argv.size() + 1);
    cargv.push_back("rmlab");
    for (const auto& a : argv) cargv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream out, err;
        const int code = app.exit(e, out, err);
        if (code == 0) throw HelpRequested{out.str()};
        throw UsageError(err.str().empty() ? std::string(e.what()) : err.str());
    }

    if (sim->parsed()) cmd.kind = CommandKind::kSimulate;
    else if (clt->parsed()) cmd.kind = CommandKind::kVerifyClt;
    else if (scaling->parsed()) cmd.kind = CommandKind::kErrorScaling;
    else if (bulk->parsed()) cmd.kind = CommandKind::kBulkCheck;
    else if (ident->parsed()) cmd.kind = CommandKind::kIdentityCheck;
    else cmd.kind = CommandKind::kBench;

    if (cmd.kind == CommandKind::kErrorScaling) cfg.size_grid = parse_grid(grid_str);
    cmd.format = format_str == "json" ? Format::kJson : Format::kCsv;
    return cmd;
}

void write_samples(std::span<const experiments::SpectralSample> samples,
                   const MatrixParams& params, std::ostream& os, Format format) {
    if (format == Format::kCsv) {
        os << kCsvHeader << '\n';
        for (const auto& s : samples) {
            os << s.rep_index << ',' << fmt17(s.lambda1) << ',' << fmt17(s.lambda2) << ','
               << fmt17(s.est1) << ',' << fmt17(s.est2) << ',' << fmt17(s.lambda1_centered) << ','
               << fmt17(s.sum_sq_dev) << '\n';
        }
        return;
    }
    os << "{\n  \"params\": {\"p\": " << params.p << ", \"n\": " << params.n
       << ", \"mu\": " << fmt17(params.mu) << ", \"sigma\": " << fmt17(params.sigma)
       << ", \"seed\": " << params.seed << "},\n  \"samples\": [";
    bool first = true;
    for (const auto& s : samples) {
        os << (first ? "\n" : ",\n");
        first = false;
        os << "    {\"rep\": " << s.rep_index << ", \"lambda1\": " << fmt17(s.lambda1)
           << ", \"lambda2\": " << fmt17(s.lambda2) << ", \"est1\": " << fmt17(s.est1)
           << ", \"est2\": " << fmt17(s.est2) << ", \"lambda1_centered\": "
           << fmt17(s.lambda1_centered) << ", \"sum_sq_dev\": " << fmt17(s.sum_sq_dev) << "}";
    }
    os << (first ? "]\n}\n" : "\n  ]\n}\n");
}

void write_samples_file(std::span<const experiments::SpectralSample> samples,
                        const MatrixParams& params, const std::string& path, Format format) {
    std::ostringstream buf;
    write_samples(samples, params, buf, format);
    write_file(path, buf.str());
}

std::vector<experiments::SpectralSample> read_samples(std::istream& is, Format format) {
    std::vector<experiments::SpectralSample> samples;
    if (format == Format::kCsv) {
        std::string line;
        if (!std::getline(is, line) || line != kCsvHeader) {
            throw IoError("samples CSV: missing or unexpected header");
        }
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ss, field, ',')) fields.push_back(field);
            if (fields.size() != 7) throw IoError("samples CSV: malformed row '" + line + "'");
            experiments::SpectralSample s;
            s.rep_index = std::stoi(fields[0]);
            s.lambda1 = std::strtod(fields[1].c_str(), nullptr);
            s.lambda2 = std::strtod(fields[2].c_str(), nullptr);
            s.est1 = std::strtod(fields[3].c_str(), nullptr);
            s.est2 = std::strtod(fields[4].c_str(), nullptr);
            s.lambda1_centered = std::strtod(fields[5].c_str(), nullptr);
            s.sum_sq_dev = std::strtod(fields[6].c_str(), nullptr);
            samples.push_back(s);
        }
        return samples;
    }
    nlohmann::json doc = nlohmann::json::parse(is);
    for (const auto& j : doc.at("samples")) {
        experiments::SpectralSample s;
        s.rep_index = j.at("rep").get<int>();
        s.lambda1 = j.at("lambda1").get<double>();
        s.lambda2 = j.at("lambda2").get<double>();
        s.est1 = j.at("est1").get<double>();
        s.est2 = j.at("est2").get<double>();
        s.lambda1_centered = j.at("lambda1_centered").get<double>();
        s.sum_sq_dev = j.at("sum_sq_dev").get<double>();
        samples.push_back(s);
    }
    return samples;
}

BenchResult run_bench(const MatrixParams& params, int repeat) {
    if (repeat < 3) throw UsageError("bench: repeat must be at least 3");
    if (params.p > linalg::kDefaultSpectrumLimit) {
        throw SizeExceeded("bench: p exceeds the dense-spectrum limit");
    }
    const RealMatrix x = matgen::sample_matrix(params, matgen::derive_stream(params.seed, 0));

    double sink = 0.0;
    auto estimator_pass = [&] { sink += linalg::estimator_one(x) + linalg::estimator_two(x); };
    auto full_pass = [&] { sink += linalg::full_spectrum(linalg::covariance(x))[0]; };
    auto timed = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };

    estimator_pass();  // warm-up, untimed
    full_pass();
    std::vector<double> te, tf;
    te.reserve(repeat);
    tf.reserve(repeat);
    for (int i = 0; i < repeat; ++i) {
        te.push_back(timed(estimator_pass));
        tf.push_back(timed(full_pass));
    }

    BenchResult b;
    b.p = params.p;
    b.n = params.n;
    b.repeat = repeat;
    b.t_estimators = median_seconds(std::move(te));
    b.t_full_eigen = median_seconds(std::move(tf));
    b.speedup = b.t_full_eigen / b.t_estimators;
    if (!std::isfinite(sink)) throw std::runtime_error("bench: non-finite estimator outputs");
    return b;
}

nlohmann::ordered_json params_json(const MatrixParams& p) {
    return {{"p", p.p}, {"n", p.n}, {"mu", p.mu}, {"sigma", p.sigma}, {"seed", p.seed}};
}

nlohmann::ordered_json to_json(const experiments::CltReport& rep) {
    nlohmann::ordered_json j;
    j["theory"] = {{"l", rep.theoretical.l},
                   {"clt_mean", rep.theoretical.clt_mean},
                   {"clt_var", rep.theoretical.clt_var},
                   {"correction", rep.theoretical.correction},
                   {"c", rep.theoretical.c},
                   {"a", rep.theoretical.a},
                   {"b", rep.theoretical.b}};
    j["summary"] = summary_json(rep.summary);
    j["mean_error"] = rep.mean_error;
    j["variance_ratio"] = opt_json(rep.variance_ratio);
    if (rep.standardized_ks) {
        j["ks"] = {{"d_statistic", rep.standardized_ks->d_statistic},
                   {"sample_size", rep.standardized_ks->sample_size}};
    } else {
        j["ks"] = nullptr;
    }
    j["checks"] = checks_json(rep.checks);
    j["pass"] = rep.pass();
    return j;
}

nlohmann::ordered_json to_json(const experiments::ScalingReport& rep) {
    nlohmann::ordered_json j;
    auto grid = nlohmann::ordered_json::array();
    for (const auto& g : rep.grid) {
        grid.push_back({{"p", g.p},
                        {"n", g.n},
                        {"median_abs_err_est2", g.median_abs_err_est2},
                        {"median_abs_err_est1_corrected", g.median_abs_err_est1_corrected}});
    }
    j["grid"] = grid;
    j["fit_est2"] = fit_json(rep.fit_est2);
    j["fit_est1"] = fit_json(rep.fit_est1);
    j["checks"] = checks_json(rep.checks);
    j["pass"] = rep.pass();
    return j;
}

nlohmann::ordered_json to_json(const experiments::BulkReport& rep) {
    nlohmann::ordered_json j;
    j["histogram"] = {{"lo", rep.hist.lo},
                      {"hi", rep.hist.hi},
                      {"bins", rep.hist.bins},
                      {"densities", rep.hist.densities},
                      {"in_range", rep.hist.in_range},
                      {"out_of_range", rep.hist.out_of_range}};
    j["interior_bins"] = rep.interior_bins;
    j["sup_gap"] = opt_json(rep.sup_gap);
    j["mean_spectral_moment"] = opt_json(rep.mean_spectral_moment);
    j["edge_exceedance_rate"] = opt_json(rep.edge_exceedance_rate);
    j["checks"] = checks_json(rep.checks);
    j["pass"] = rep.pass();
    return j;
}

nlohmann::ordered_json to_json(const experiments::IdentityReport& rep) {
    nlohmann::ordered_json j;
    j["eq36_max_residual"] = rep.eq36_max_residual;
    j["chain_violations"] = rep.chain_violations;
    j["ordering_violations"] = rep.ordering_violations;
    j["gram_max_gap"] = rep.gram_max_gap;
    j["moment_ratio"] = opt_json(rep.moment_ratio);
    j["edge_exceedance_rate"] = opt_json(rep.edge_exceedance_rate);
    j["checks"] = checks_json(rep.checks);
    j["pass"] = rep.pass();
    return j;
}

nlohmann::ordered_json to_json(const BenchResult& rep) {
    return {{"p", rep.p},
            {"n", rep.n},
            {"repeat", rep.repeat},
            {"t_estimators", rep.t_estimators},
            {"t_full_eigen", rep.t_full_eigen},
            {"speedup", rep.speedup}};
}

namespace {

nlohmann::ordered_json report_envelope(const char* command, const Command& cmd) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["params"] = params_json(cmd.config.params);
    j["replications"] = cmd.config.replications;
    return j;
}

int execute(const Command& cmd) {
    const experiments::ExperimentConfig& cfg = cmd.config;
    switch (cmd.kind) {
        case CommandKind::kSimulate: {
            const auto samples = experiments::run_replications(cfg);
            if (!cfg.output_path.empty()) {
                write_samples_file(samples, cfg.params, cfg.output_path, cmd.format);
            } else {
                write_samples(samples, cfg.params, std::cout, Format::kJson);
            }
            return 0;
        }
        case CommandKind::kVerifyClt: {
            const auto samples = experiments::run_replications(cfg);
            const auto report = experiments::make_clt_report(samples, cfg);
            auto j = report_envelope("verify-clt", cmd);
            j.update(to_json(report));
            std::cout << j.dump(2) << '\n';
            if (!cfg.output_path.empty()) {
                write_samples_file(samples, cfg.params, cfg.output_path, cmd.format);
            }
            return report.pass() ? 0 : 2;
        }
        case CommandKind::kErrorScaling: {
            const auto report = experiments::error_scaling(cfg);
            auto j = report_envelope("error-scaling", cmd);
            j.update(to_json(report));
            const std::string text = j.dump(2) + "\n";
            std::cout << text;
            if (!cfg.output_path.empty()) write_file(cfg.output_path, text);
            return report.pass() ? 0 : 2;
        }
        case CommandKind::kBulkCheck: {
            const auto report = experiments::bulk_check(cfg);
            auto j = report_envelope("bulk-check", cmd);
            j.update(to_json(report));
            const std::string text = j.dump(2) + "\n";
            std::cout << text;
            if (!cfg.output_path.empty()) write_file(cfg.output_path, text);
            return report.pass() ? 0 : 2;
        }
        case CommandKind::kIdentityCheck: {
            std::vector<experiments::SpectralSample> samples;
            const auto report = experiments::identity_checks(cfg, &samples);
            auto j = report_envelope("identity-check", cmd);
            j.update(to_json(report));
            std::cout << j.dump(2) << '\n';
            if (!cfg.output_path.empty()) {
                write_samples_file(samples, cfg.params, cfg.output_path, cmd.format);
            }
            return report.pass() ? 0 : 2;
        }
        case CommandKind::kBench: {
            const auto result = run_bench(cfg.params, cmd.bench_repeat);
            nlohmann::ordered_json j;
            j["command"] = "bench";
            j["params"] = params_json(cfg.params);
            j.update(to_json(result));
            const std::string text = j.dump(2) + "\n";
            std::cout << text;
            if (!cfg.output_path.empty()) write_file(cfg.output_path, text);
            return 0;
        }
    }
    return 4;
}

}  // namespace

int run(int argc, const char* const* argv) {
    try {
        const Command cmd = parse(std::vector<std::string>(argv + 1, argv + argc));
        return execute(cmd);
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace rmlab::cli
