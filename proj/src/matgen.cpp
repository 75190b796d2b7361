#include "rmlab/matgen.hpp"

#include <cmath>

#include "rmlab/errors.hpp"

namespace rmlab::matgen {

namespace {
// Golden-ratio increment of the splitmix64 counter.
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

SeedStream derive_stream(std::uint64_t master, std::uint64_t index) {
    SeedStream s;
    s.master = master;
    s.index = index;
    // The +1 offset keeps (master=0, index=0) away from the fixed point
    // mix64(0) == 0; mixing then places each stream at a pseudo-random start
    // of the counter cycle so distinct indices are decorrelated.
    s.state = mix64(master + (index + 1) * kGamma);
    return s;
}

std::uint64_t next_u64(SeedStream& s) {
    s.state += kGamma;
    return mix64(s.state);
}

double next_unit(SeedStream& s) {
    return static_cast<double>(next_u64(s) >> 11) * 0x1.0p-53;
}

double NormalSampler::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Marsaglia polar: rejection-sample the unit disc, then transform.
    for (;;) {
        const double u = 2.0 * next_unit(stream_) - 1.0;
        const double v = 2.0 * next_unit(stream_) - 1.0;
        const double s = u * u + v * v;
        if (s >= 1.0 || s == 0.0) continue;
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }
}

RealMatrix sample_matrix(const MatrixParams& params, SeedStream stream) {
    if (params.p < 1 || params.n < 1) {
        throw NonPositiveInput("sample_matrix: p and n must be at least 1");
    }
    if (params.sigma < 0.0) {
        throw NonPositiveInput("sample_matrix: sigma must be non-negative");
    }
    RealMatrix x(params.p, params.n);
    if (params.sigma == 0.0) {
        for (double& e : x.entries) e = params.mu;
        return x;
    }
    NormalSampler normal(stream);
    for (double& e : x.entries) {  // row-major fill
        e = params.mu + params.sigma * normal.next();
    }
    return x;
}

RealMatrix center(const RealMatrix& x, double mu) {
    RealMatrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.entries.size(); ++i) {
        y.entries[i] = x.entries[i] - mu;
    }
    return y;
}

}  // namespace rmlab::matgen
