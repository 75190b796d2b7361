#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rmlab {

/// Dimensions, entry law and master seed of one simulated ensemble.
struct MatrixParams {
    int p = 1;                 // rows
    int n = 1;                 // columns
    double mu = 0.0;           // entry mean
    double sigma = 1.0;        // entry standard deviation (0 = deterministic matrix)
    std::uint64_t seed = 42;   // master seed
};

/// Dense row-major matrix of 64-bit reals.
struct RealMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries;  // rows * cols values, row-major

    RealMatrix() = default;
    RealMatrix(int r, int c)
        : rows(r), cols(c), entries(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * cols + j]; }
};

namespace matgen {

/// Counter-based pseudo-random stream (splitmix64).
///
/// The state advances by the golden-ratio increment on every draw and each
/// output passes through the splitmix64 avalanche finalizer, so every output
/// bit depends on every state bit. Streams for distinct replication indices
/// start at mixed, decorrelated points of the 2^64 counter cycle.
struct SeedStream {
    std::uint64_t state = 0;
    std::uint64_t master = 0;  // origin, kept for reproducibility records
    std::uint64_t index = 0;
};

/// splitmix64 finalizer (Vigna). Bijective avalanche mix of a 64-bit word.
std::uint64_t mix64(std::uint64_t z);

/// Deterministic stream for replication `index` under `master`.
/// derive_stream(m, i) == derive_stream(m, i) always, and the starting state
/// is never zero (the all-zero input is offset before mixing).
SeedStream derive_stream(std::uint64_t master, std::uint64_t index);

/// Next raw 64-bit word from the stream.
std::uint64_t next_u64(SeedStream& s);

/// Next uniform double in [0, 1) with 53 random bits.
double next_unit(SeedStream& s);

/// Standard normal draws via Marsaglia polar rejection.
///
/// Each accepted (u, v) disc point yields two normals; the second is cached
/// and returned by the following call. The method is exact (no CDF
/// approximation) and fixed: fixtures generated with one build replay
/// bit-identically on any platform with a faithful libm sqrt/log.
class NormalSampler {
  public:
    explicit NormalSampler(SeedStream stream) : stream_(stream) {}
    double next();

  private:
    SeedStream stream_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// p x n matrix of i.i.d. N(mu, sigma^2) entries drawn from `stream`.
/// Entries are consumed in row-major order (row 0 left to right, then row 1,
/// ...). sigma == 0 yields the constant matrix without consuming draws.
/// Throws NonPositiveInput for p < 1 or n < 1, or sigma < 0.
RealMatrix sample_matrix(const MatrixParams& params, SeedStream stream);

/// Entry-wise shift by -mu; shape preserved, each entry exactly x - mu.
RealMatrix center(const RealMatrix& x, double mu);

}  // namespace matgen
}  // namespace rmlab
