#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmlab/experiments.hpp"

namespace rmlab::cli {

enum class CommandKind { kSimulate, kVerifyClt, kErrorScaling, kBulkCheck, kIdentityCheck, kBench };

enum class Format { kCsv, kJson };

struct Command {
    CommandKind kind = CommandKind::kSimulate;
    experiments::ExperimentConfig config;
    Format format = Format::kCsv;
    int bench_repeat = 5;
};

/// Help text was requested; the CLI prints it and exits 0.
struct HelpRequested {
    std::string text;
};

/// Parse a full argument list (subcommand first, program name excluded).
/// Unknown flags are rejected. --seed falls back to the RMLAB_SEED
/// environment variable when absent, then to 42. Throws UsageError on any
/// parse or validation failure and HelpRequested for -h/--help.
Command parse(const std::vector<std::string>& argv);

/// 17-significant-digit decimal rendering; round-trips any finite double.
std::string fmt17(double v);

/// Samples serialization. CSV: fixed header
/// rep,lambda1,lambda2,est1,est2,lambda1_centered,sum_sq_dev with fmt17
/// values. JSON: {"params": {...}, "samples": [...]} with the same field
/// names and the same decimal renderings.
void write_samples(std::span<const experiments::SpectralSample> samples,
                   const MatrixParams& params, std::ostream& os, Format format);

/// As above, to a file. Throws IoError when the path cannot be written.
void write_samples_file(std::span<const experiments::SpectralSample> samples,
                        const MatrixParams& params, const std::string& path, Format format);

std::vector<experiments::SpectralSample> read_samples(std::istream& is, Format format);

struct BenchResult {
    int p = 0;
    int n = 0;
    int repeat = 0;
    double t_estimators = 0.0;  // seconds, median of the timed runs
    double t_full_eigen = 0.0;
    double speedup = 0.0;       // t_full_eigen / t_estimators
};

/// Median wall-clock comparison of the O(pn) estimator pair against a full
/// dense eigensolution on the same pre-sampled matrix; one warm-up run of
/// each path is excluded. Throws UsageError for repeat < 3 and SizeExceeded
/// when the full solve is over the dense-spectrum limit.
BenchResult run_bench(const MatrixParams& params, int repeat);

nlohmann::ordered_json to_json(const experiments::CltReport& rep);
nlohmann::ordered_json to_json(const experiments::ScalingReport& rep);
nlohmann::ordered_json to_json(const experiments::BulkReport& rep);
nlohmann::ordered_json to_json(const experiments::IdentityReport& rep);
nlohmann::ordered_json to_json(const BenchResult& rep);
nlohmann::ordered_json params_json(const MatrixParams& params);

/// Full command-line entry point. Exit codes: 0 success (all verdicts pass),
/// 1 usage error, 2 one or more verdicts failed, 3 I/O failure, 4 internal
/// computation failure.
int run(int argc, const char* const* argv);

}  // namespace rmlab::cli
