#include "rmlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "rmlab/errors.hpp"

namespace rmlab::linalg {

namespace {

// Eight-way accumulator dot product: the independent partial sums break the
// loop-carried dependency so the compiler can keep the SIMD units busy
// without reassociating a single strict-FP reduction chain.
double dot_n(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0;
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
        s4 += a[j + 4] * b[j + 4];
        s5 += a[j + 5] * b[j + 5];
        s6 += a[j + 6] * b[j + 6];
        s7 += a[j + 7] * b[j + 7];
    }
    double tail = 0.0;
    for (; j < n; ++j) tail += a[j] * b[j];
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7)) + tail;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return dot_n(a.data(), b.data(), static_cast<int>(a.size()));
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void dense_apply(const SymmetricMatrix& g, const std::vector<double>& v, std::vector<double>& y) {
    const int d = g.dim;
    const double* a = g.entries.data();
    for (int i = 0; i < d; ++i) {
        y[i] = dot_n(a + static_cast<std::size_t>(i) * d, v.data(), d);
    }
}

void project_out(const std::vector<const std::vector<double>*>& basis, std::vector<double>& x) {
    for (const auto* b : basis) {
        const double c = dot(*b, x);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * (*b)[i];
    }
}

struct PowerOutcome {
    double lambda = 0.0;
    std::vector<double> v;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

// Power iteration with deflation. Stops when the Rayleigh quotient is stable
// to tol (relative) and ||A v - rho v|| <= tol * max(|rho|, scale_floor).
// When the residual stalls on a near-degenerate eigenvalue pair, a 2x2
// Rayleigh-Ritz step on span{v, residual direction} separates the cluster.
template <class ApplyFn>
PowerOutcome power_iterate(const ApplyFn& apply, int dim,
                           const std::vector<const std::vector<double>*>& deflate,
                           std::vector<double> start, double tol, int max_iter,
                           double scale_floor) {
    PowerOutcome out;
    project_out(deflate, start);
    const double sn = norm(start);
    if (sn == 0.0) return out;  // start lies in the deflated span; caller retries
    for (double& e : start) e /= sn;
    out.v = std::move(start);

    std::vector<double> w(dim), u(dim), gu(dim);
    double rho_prev = std::numeric_limits<double>::infinity();
    double stall_ref = std::numeric_limits<double>::infinity();
    int since_stall_check = 0;
    constexpr int kStallWindow = 400;

    int applies = 0;
    while (applies < max_iter) {
        apply(out.v, w);
        ++applies;
        project_out(deflate, w);
        double rho = dot(out.v, w);
        double rn2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double d = w[i] - rho * out.v[i];
            rn2 += d * d;
        }
        double resid = std::sqrt(rn2);

        ++since_stall_check;
        if (resid > tol * std::max(std::abs(rho), scale_floor) &&
            since_stall_check >= kStallWindow && applies + 2 < max_iter) {
            if (resid > 0.9 * stall_ref) {
                for (int i = 0; i < dim; ++i) u[i] = (w[i] - rho * out.v[i]) / resid;
                apply(u, gu);
                ++applies;
                project_out(deflate, gu);
                const double h12 = 0.5 * (dot(out.v, gu) + dot(u, w));
                const double h22 = dot(u, gu);
                const double mid = 0.5 * (rho + h22);
                const double rad = std::hypot(0.5 * (rho - h22), h12);
                const double theta = mid + rad;
                double c1 = h12;
                double c2 = theta - rho;
                if (c1 == 0.0 && c2 == 0.0) c1 = 1.0;
                const double cn = std::hypot(c1, c2);
                for (int i = 0; i < dim; ++i) out.v[i] = (c1 * out.v[i] + c2 * u[i]) / cn;
                const double nvn = norm(out.v);
                if (nvn > 0.0) {
                    for (double& e : out.v) e /= nvn;
                }
                apply(out.v, w);
                ++applies;
                project_out(deflate, w);
                rho = dot(out.v, w);
                rn2 = 0.0;
                for (int i = 0; i < dim; ++i) {
                    const double d = w[i] - rho * out.v[i];
                    rn2 += d * d;
                }
                resid = std::sqrt(rn2);
            }
            stall_ref = resid;
            since_stall_check = 0;
        }

        out.lambda = rho;
        out.iterations = applies;
        out.residual = resid;
        const bool rayleigh_stable = std::abs(rho - rho_prev) <= tol * std::max(std::abs(rho), 1.0);
        if (rayleigh_stable && resid <= tol * std::max(std::abs(rho), scale_floor)) {
            out.converged = true;
            return out;
        }
        rho_prev = rho;

        const double wn = norm(w);
        if (wn == 0.0) {
            // v lies in the kernel: exact eigenpair with eigenvalue 0.
            out.lambda = 0.0;
            out.residual = 0.0;
            out.converged = true;
            return out;
        }
        for (int i = 0; i < dim; ++i) out.v[i] = w[i] / wn;
    }
    out.converged = false;
    return out;
}

// Deterministic pseudo-random unit-ish start for convergence retries.
std::vector<double> perturbed_start(int dim, int attempt) {
    matgen::SeedStream s =
        matgen::derive_stream(0x72657472ULL + static_cast<std::uint64_t>(attempt),
                              static_cast<std::uint64_t>(dim));
    std::vector<double> v(dim);
    for (double& e : v) e = matgen::next_unit(s) - 0.5;
    return v;
}

template <class ApplyFn>
PowerOutcome run_with_retry(const ApplyFn& apply, int dim,
                            const std::vector<const std::vector<double>*>& deflate,
                            std::vector<double> start, double tol, int max_iter,
                            double scale_floor, const char* label) {
    PowerOutcome out = power_iterate(apply, dim, deflate, std::move(start), tol, max_iter, scale_floor);
    if (out.converged) return out;
    const int used = out.iterations;
    out = power_iterate(apply, dim, deflate, perturbed_start(dim, 1), tol, max_iter, scale_floor);
    if (out.converged) {
        out.iterations += used;
        return out;
    }
    throw NoConvergence(used + out.iterations,
                        std::string("power iteration: ") + label + " did not converge");
}

// lambda1 and lambda2 of the operator, both on the iterated side.
template <class ApplyFn>
std::pair<PowerOutcome, PowerOutcome> top_two_core(const ApplyFn& apply, int dim, double tol,
                                                   int max_iter) {
    PowerOutcome top = run_with_retry(apply, dim, {}, std::vector<double>(dim, 1.0), tol, max_iter,
                                      0.0, "lambda1");
    PowerOutcome second;
    second.converged = true;
    if (dim >= 2) {
        const std::vector<const std::vector<double>*> defl{&top.v};
        std::vector<double> s(dim, 1.0);
        {
            std::vector<double> probe = s;
            project_out(defl, probe);
            if (norm(probe) < 1e-8 * std::sqrt(static_cast<double>(dim))) {
                // ones is (numerically) the top eigenvector; restart from the
                // basis vector least aligned with it
                int k = 0;
                for (int i = 1; i < dim; ++i)
                    if (std::abs(top.v[i]) < std::abs(top.v[k])) k = i;
                s.assign(dim, 0.0);
                s[k] = 1.0;
            }
        }
        second = run_with_retry(apply, dim, defl, std::move(s), tol, max_iter,
                                std::abs(top.lambda), "lambda2");
        if (second.lambda > top.lambda) std::swap(top, second);
    }
    return {std::move(top), std::move(second)};
}

// y = X (X^T v) / n without forming the covariance.
void implicit_p_side(const RealMatrix& x, std::vector<double>& tmp, const std::vector<double>& v,
                     std::vector<double>& y) {
    const int p = x.rows, n = x.cols;
    const double* a = x.entries.data();
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (int i = 0; i < p; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        const double vi = v[i];
        for (int j = 0; j < n; ++j) tmp[j] += vi * row[j];
    }
    for (int i = 0; i < p; ++i) {
        y[i] = dot_n(a + static_cast<std::size_t>(i) * n, tmp.data(), n) / n;
    }
}

// y = X^T (X v) / n without forming the dual Gram matrix.
void implicit_n_side(const RealMatrix& x, std::vector<double>& tmp, const std::vector<double>& v,
                     std::vector<double>& y) {
    const int p = x.rows, n = x.cols;
    const double* a = x.entries.data();
    for (int i = 0; i < p; ++i) {
        tmp[i] = dot_n(a + static_cast<std::size_t>(i) * n, v.data(), n);
    }
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < p; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        const double ti = tmp[i];
        for (int j = 0; j < n; ++j) y[j] += ti * row[j];
    }
    for (double& e : y) e /= n;
}

// Gram operator on the smaller side: starts with implicit products and forms
// the dense matrix once the iteration count justifies the O(m^2 k) build.
struct AdaptiveGramOp {
    const RealMatrix* x;
    bool p_side;
    int materialize_after;
    mutable int applies = 0;
    mutable std::unique_ptr<SymmetricMatrix> g;
    mutable std::vector<double> tmp;

    AdaptiveGramOp(const RealMatrix* xx, bool ps, int after)
        : x(xx), p_side(ps), materialize_after(after), tmp(ps ? xx->cols : xx->rows, 0.0) {}

    void operator()(const std::vector<double>& v, std::vector<double>& y) const {
        ++applies;
        if (!g && applies > materialize_after) {
            g = std::make_unique<SymmetricMatrix>(p_side ? covariance(*x) : gram_other_side(*x));
        }
        if (g) {
            dense_apply(*g, v, y);
        } else if (p_side) {
            implicit_p_side(*x, tmp, v, y);
        } else {
            implicit_n_side(*x, tmp, v, y);
        }
    }
};

// Map an n-side eigenvector u of X^T X/n to the p side (v = Xu up to norm),
// then polish with implicit power steps until the p-side residual meets tol.
void map_to_p_side(const RealMatrix& x, const PowerOutcome& top, double tol, int max_iter,
                   double& lambda1, std::vector<double>& v1, int& iterations, double& residual) {
    const int p = x.rows, n = x.cols;
    const double* a = x.entries.data();
    v1.assign(p, 0.0);
    for (int i = 0; i < p; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += row[j] * top.v[j];
        v1[i] = s;
    }
    const double vn = norm(v1);
    if (vn == 0.0) {
        // zero matrix: every vector is an eigenvector of eigenvalue 0
        v1.assign(p, 1.0 / std::sqrt(static_cast<double>(p)));
        lambda1 = 0.0;
        residual = 0.0;
        return;
    }
    for (double& e : v1) e /= vn;

    std::vector<double> tmp(n), y(p);
    double rho = top.lambda;
    double resid = 0.0;
    for (int extra = 0; extra <= 64 && iterations < max_iter; ++extra) {
        implicit_p_side(x, tmp, v1, y);
        ++iterations;
        rho = dot(v1, y);
        double rn2 = 0.0;
        for (int i = 0; i < p; ++i) {
            const double d = y[i] - rho * v1[i];
            rn2 += d * d;
        }
        resid = std::sqrt(rn2);
        if (resid <= tol * std::abs(rho) || rho == 0.0) break;
        const double yn = norm(y);
        if (yn == 0.0) break;
        for (int i = 0; i < p; ++i) v1[i] = y[i] / yn;
    }
    lambda1 = rho;
    residual = resid;
}

void fix_sign(std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e;
    if (s < 0.0) {
        for (double& e : v) e = -e;
    }
}

}  // namespace

double frobenius_norm(const SymmetricMatrix& w) {
    double s = 0.0;
    for (double e : w.entries) s += e * e;
    return std::sqrt(s);
}

SymmetricMatrix covariance(const RealMatrix& x) {
    if (x.rows < 1 || x.cols < 1) throw EmptyInput("covariance: empty input matrix");
    const int p = x.rows, n = x.cols;
    SymmetricMatrix w(p);
    const double* a = x.entries.data();
    for (int i = 0; i < p; ++i) {
        const double* ri = a + static_cast<std::size_t>(i) * n;
        for (int j = i; j < p; ++j) {
            const double* rj = a + static_cast<std::size_t>(j) * n;
            const double v = dot_n(ri, rj, n) / n;
            w.at(i, j) = v;
            w.at(j, i) = v;
        }
    }
    return w;
}

SymmetricMatrix gram_other_side(const RealMatrix& x) {
    if (x.rows < 1 || x.cols < 1) throw EmptyInput("gram_other_side: empty input matrix");
    const int p = x.rows, n = x.cols;
    SymmetricMatrix b(n);
    const double* a = x.entries.data();
    for (int i = 0; i < p; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double rj = row[j];
            double* brow = b.entries.data() + static_cast<std::size_t>(j) * n;
            for (int k = j; k < n; ++k) brow[k] += rj * row[k];
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
            const double v = b.at(j, k) / n;
            b.at(j, k) = v;
            b.at(k, j) = v;
        }
    }
    return b;
}

RowSumVector row_sums(const RealMatrix& x) {
    const int p = x.rows, n = x.cols;
    RowSumVector rs;
    rs.values.assign(p, 0.0);
    if (p == 0 || n == 0) return rs;
    std::vector<double> colsum(n, 0.0);
    const double* a = x.entries.data();
    for (int i = 0; i < p; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) colsum[j] += row[j];
    }
    for (int i = 0; i < p; ++i) {
        rs.values[i] = dot_n(a + static_cast<std::size_t>(i) * n, colsum.data(), n) / n;
    }
    rs.total = dot_n(colsum.data(), colsum.data(), n) / n;
    return rs;
}

double estimator_one(const RealMatrix& x) {
    if (x.rows < 1 || x.cols < 1) throw EmptyInput("estimator_one: empty input matrix");
    const int p = x.rows, n = x.cols;
    std::vector<double> colsum(n, 0.0);
    const double* a = x.entries.data();
    for (int i = 0; i < p; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) colsum[j] += row[j];
    }
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += colsum[j] * colsum[j];
    return s / (static_cast<double>(n) * static_cast<double>(p));
}

double estimator_two(const RealMatrix& x) {
    if (x.rows < 1 || x.cols < 1) throw EmptyInput("estimator_two: empty input matrix");
    const RowSumVector rs = row_sums(x);
    double denom = 0.0, numer = 0.0;
    for (double v : rs.values) {
        denom += v;
        numer += v * v;
    }
    if (std::abs(denom) < 1e-12 * static_cast<double>(x.rows)) {
        throw DegenerateDenominator("estimator_two: row-sum total is numerically zero");
    }
    return numer / denom;
}

EigenPairTop top_two_eigenvalues(const RealMatrix& x, double tol, int max_iter) {
    if (x.rows < 1 || x.cols < 1) throw EmptyInput("top_two_eigenvalues: empty input matrix");
    if (tol <= 0.0) throw NonPositiveInput("top_two_eigenvalues: tol must be positive");
    const int p = x.rows, n = x.cols;
    EigenPairTop pair;
    if (n < p) {
        const SymmetricMatrix g = gram_other_side(x);
        auto apply = [&g](const std::vector<double>& v, std::vector<double>& y) {
            dense_apply(g, v, y);
        };
        auto [top, second] = top_two_core(apply, n, tol, max_iter);
        pair.lambda2 = second.lambda;
        pair.iterations = top.iterations + second.iterations;
        map_to_p_side(x, top, tol, max_iter + pair.iterations, pair.lambda1, pair.v1,
                      pair.iterations, pair.residual);
    } else {
        const SymmetricMatrix w = covariance(x);
        auto apply = [&w](const std::vector<double>& v, std::vector<double>& y) {
            dense_apply(w, v, y);
        };
        auto [top, second] = top_two_core(apply, p, tol, max_iter);
        pair.lambda1 = top.lambda;
        pair.lambda2 = second.lambda;
        pair.v1 = std::move(top.v);
        pair.iterations = top.iterations + second.iterations;
        pair.residual = top.residual;
    }
    fix_sign(pair.v1);
    return pair;
}

EigenPairTop top_two_of(const SymmetricMatrix& w, double tol, int max_iter) {
    if (w.dim < 1) throw EmptyInput("top_two_of: empty matrix");
    if (tol <= 0.0) throw NonPositiveInput("top_two_of: tol must be positive");
    auto apply = [&w](const std::vector<double>& v, std::vector<double>& y) {
        dense_apply(w, v, y);
    };
    auto [top, second] = top_two_core(apply, w.dim, tol, max_iter);
    EigenPairTop pair;
    pair.lambda1 = top.lambda;
    pair.lambda2 = second.lambda;
    pair.v1 = std::move(top.v);
    pair.iterations = top.iterations + second.iterations;
    pair.residual = top.residual;
    fix_sign(pair.v1);
    return pair;
}

TopEigen largest_eigenpair(const RealMatrix& x, double tol, int max_iter) {
    if (x.rows < 1 || x.cols < 1) throw EmptyInput("largest_eigenpair: empty input matrix");
    if (tol <= 0.0) throw NonPositiveInput("largest_eigenpair: tol must be positive");
    const int p = x.rows, n = x.cols;
    const bool p_side = p <= n;
    const int m = p_side ? p : n;
    AdaptiveGramOp op(&x, p_side, std::max(16, m / 4));
    auto apply = [&op](const std::vector<double>& v, std::vector<double>& y) { op(v, y); };
    PowerOutcome top = run_with_retry(apply, m, {}, std::vector<double>(m, 1.0), tol, max_iter,
                                      0.0, "lambda1");
    TopEigen result;
    result.iterations = top.iterations;
    if (p_side) {
        result.lambda = top.lambda;
        result.v = std::move(top.v);
        result.residual = top.residual;
    } else {
        map_to_p_side(x, top, tol, max_iter + result.iterations, result.lambda, result.v,
                      result.iterations, result.residual);
    }
    fix_sign(result.v);
    return result;
}

std::vector<double> full_spectrum(const SymmetricMatrix& w, int size_limit) {
    if (w.dim < 1) throw EmptyInput("full_spectrum: empty matrix");
    if (w.dim > size_limit) {
        throw SizeExceeded("full_spectrum: dim " + std::to_string(w.dim) + " exceeds limit " +
                           std::to_string(size_limit));
    }
    const int d = w.dim;
    std::vector<double> a = w.entries;
    const double target = 1e-12 * frobenius_norm(w);
    const double skip = 0.3 * target / d;

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double* row = a.data() + static_cast<std::size_t>(i) * d;
            for (int j = i + 1; j < d; ++j) s += row[j] * row[j];
        }
        return std::sqrt(2.0 * s);
    };

    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        if (off_norm() <= target) break;
        for (int i = 0; i < d - 1; ++i) {
            for (int j = i + 1; j < d; ++j) {
                const double apq = a[static_cast<std::size_t>(i) * d + j];
                if (apq == 0.0 || std::abs(apq) < skip) continue;
                const double app = a[static_cast<std::size_t>(i) * d + i];
                const double aqq = a[static_cast<std::size_t>(j) * d + j];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                double* ri = a.data() + static_cast<std::size_t>(i) * d;
                double* rj = a.data() + static_cast<std::size_t>(j) * d;
                for (int k = 0; k < d; ++k) {
                    const double aki = ri[k];
                    const double akj = rj[k];
                    ri[k] = c * aki - s * akj;
                    rj[k] = s * aki + c * akj;
                }
                ri[i] = app - t * apq;
                rj[j] = aqq + t * apq;
                ri[j] = 0.0;
                rj[i] = 0.0;
                for (int k = 0; k < d; ++k) {
                    a[static_cast<std::size_t>(k) * d + i] = ri[k];
                    a[static_cast<std::size_t>(k) * d + j] = rj[k];
                }
            }
        }
    }
    if (sweep == kMaxSweeps && off_norm() > target) {
        throw NoConvergence(sweep, "full_spectrum: Jacobi sweeps exhausted");
    }

    std::vector<double> lambda(d);
    for (int i = 0; i < d; ++i) lambda[i] = a[static_cast<std::size_t>(i) * d + i];
    std::sort(lambda.begin(), lambda.end(), std::greater<double>());
    return lambda;
}

OnesDecomposition decompose_ones(const SymmetricMatrix& w, const EigenPairTop& pair, double l) {
    const int p = w.dim;
    OnesDecomposition d;
    double alpha = 0.0;
    for (double e : pair.v1) alpha += e;

    d.v_component.resize(p);
    d.r.resize(p);
    for (int i = 0; i < p; ++i) {
        d.v_component[i] = alpha * pair.v1[i];
        d.r[i] = 1.0 - d.v_component[i];
    }
    d.r_norm_sq = dot(d.r, d.r);

    // W 1 is the vector of row sums of W.
    std::vector<double> w1(p, 0.0), wr(p, 0.0);
    for (int i = 0; i < p; ++i) {
        const double* row = w.entries.data() + static_cast<std::size_t>(i) * p;
        double s1 = 0.0, sr = 0.0;
        for (int j = 0; j < p; ++j) {
            s1 += row[j];
            sr += row[j] * d.r[j];
        }
        w1[i] = s1;
        wr[i] = sr;
    }

    double lhs = 0.0, term_r = 0.0;
    for (int i = 0; i < p; ++i) {
        const double e1 = w1[i] - l;
        lhs += e1 * e1;
        const double er = wr[i] - l * d.r[i];
        term_r += er * er;
    }
    const double dev = pair.lambda1 - l;
    const double term_v = dev * dev * (alpha * alpha);
    const double defect = std::abs(lhs - term_v - term_r);
    d.identity_residual = lhs > 0.0 ? defect / lhs : 0.0;
    return d;
}

}  // namespace rmlab::linalg
