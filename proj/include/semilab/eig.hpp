#pragma once

// Self-contained Hermitian eigensolvers:
//  - cyclic Jacobi on the complex matrix (small n),
//  - Householder tridiagonalization + QL on the 2n real symmetric
//    embedding [[Re,-Im],[Im,Re]] (large n),
//  - Lanczos with full reorthogonalization for extreme eigenvalues.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "matrix.hpp"

namespace semilab {

namespace detail {

/// One cyclic-Jacobi pass count limit.
constexpr int kJacobiMaxSweeps = 60;

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations. The input
/// is copied; result is unsorted.
inline std::vector<double> jacobi_eigenvalues(ComplexMatrix a) {
    const int n = a.size();
    if (n == 0) return {};
    const double scale = std::max(a.max_abs(), 1e-300);

    auto offdiag_norm = [&]() {
        double s = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += std::norm(a(i, j));
        return std::sqrt(2 * s);
    };

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        if (offdiag_norm() <= 1e-14 * n * scale) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx g = a(p, q);
                const double ag = std::abs(g);
                if (ag <= 1e-300) continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const cplx phase = g / ag;
                // Zero a(p,q): t solves t^2 + 2*theta*t - 1 = 0.
                const double theta = (app - aqq) / (2 * ag);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1 + theta * theta));
                const double c = 1 / std::sqrt(1 + t * t);
                const double s = t * c;

                const double dpp = c * c * app + s * s * aqq + 2 * c * s * ag;
                const double dqq = c * c * aqq + s * s * app - 2 * c * s * ag;
                a(p, p) = dpp;
                a(q, q) = dqq;
                a(p, q) = 0;
                a(q, p) = 0;
                for (int r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const cplx arp = a(r, p);
                    const cplx arq = a(r, q);
                    const cplx nrp = c * arp + s * std::conj(phase) * arq;
                    const cplx nrq = -s * phase * arp + c * arq;
                    a(r, p) = nrp;
                    a(p, r) = std::conj(nrp);
                    a(r, q) = nrq;
                    a(q, r) = std::conj(nrq);
                }
            }
        }
    }

    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a(i, i).real();
    return ev;
}

/// Householder reduction of a real symmetric matrix (row-major, size n) to
/// tridiagonal form; d gets the diagonal, e the subdiagonal (e[0] unused).
inline void tred_no_vectors(std::vector<double>& a, int n, std::vector<double>& d,
                            std::vector<double>& e) {
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };

    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0, sc = 0;
        if (l > 0) {
            for (int k = 0; k <= l; ++k) sc += std::abs(A(i, k));
            if (sc == 0.0) {
                e[i] = A(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    A(i, k) /= sc;
                    h += A(i, k) * A(i, k);
                }
                double f = A(i, l);
                double g = (f >= 0 ? -std::sqrt(h) : std::sqrt(h));
                e[i] = sc * g;
                h -= f * g;
                A(i, l) = f - g;
                f = 0;
                for (int j = 0; j <= l; ++j) {
                    g = 0;
                    for (int k = 0; k <= j; ++k) g += A(j, k) * A(i, k);
                    for (int k = j + 1; k <= l; ++k) g += A(k, j) * A(i, k);
                    e[j] = g / h;
                    f += e[j] * A(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = A(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k <= j; ++k) A(j, k) -= f * e[k] + g * A(i, k);
                }
            }
        } else {
            e[i] = A(i, l);
        }
        d[i] = h;
    }
    for (int i = 0; i < n; ++i) d[i] = A(i, i);
}

/// QL with implicit shifts on a symmetric tridiagonal matrix; eigenvalues
/// land in d.
inline void tql_no_vectors(std::vector<double>& d, std::vector<double>& e) {
    const int n = static_cast<int>(d.size());
    if (n <= 1) return;
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0;

    // Absolute deflation floor: couplings this far below the matrix norm
    // perturb eigenvalues by less than roundoff already present in them.
    // Without it, graded matrices (noise blocks many orders below the norm)
    // never satisfy the relative test and QL cycles.
    double anorm = 0;
    for (int i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + std::abs(e[i]));
    const double floor = 1e-18 * anorm + 1e-300;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= floor + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 100) throw std::runtime_error("tridiagonal QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
                double s = 1, c = 1, p = 0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0;
            }
        } while (m != l);
    }
}

/// Eigenvalues of a Hermitian complex matrix via the 2n real symmetric
/// embedding; each eigenvalue of the embedding appears twice.
inline std::vector<double> embedded_tridiagonal_eigenvalues(const ComplexMatrix& m) {
    const int n = m.size();
    const int N = 2 * n;
    // Normalize the overall scale so severely graded matrices cannot drive
    // intermediate QL quantities into the underflow range.
    const double scale = m.max_abs();
    if (scale == 0.0) return std::vector<double>(n, 0.0);
    std::vector<double> a(static_cast<size_t>(N) * N);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx v = m(i, j) / scale;
            a[static_cast<size_t>(i) * N + j] = v.real();
            a[static_cast<size_t>(i) * N + (n + j)] = -v.imag();
            a[static_cast<size_t>(n + i) * N + j] = v.imag();
            a[static_cast<size_t>(n + i) * N + (n + j)] = v.real();
        }
    std::vector<double> d, e;
    tred_no_vectors(a, N, d, e);
    tql_no_vectors(d, e);
    std::sort(d.begin(), d.end());
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = scale * 0.5 * (d[2 * i] + d[2 * i + 1]);
    return ev;
}

} // namespace detail

/// Size threshold below which the cyclic Jacobi solver is used.
constexpr int kJacobiSizeLimit = 256;

/// All eigenvalues of a Hermitian complex matrix, sorted ascending.
/// Hermiticity is the caller's responsibility.
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m) {
    std::vector<double> ev = m.size() <= kJacobiSizeLimit
                                 ? detail::jacobi_eigenvalues(m)
                                 : detail::embedded_tridiagonal_eigenvalues(m);
    std::sort(ev.begin(), ev.end());
    return ev;
}

using MatVec = std::function<std::vector<cplx>(const std::vector<cplx>&)>;

struct ExtremeEigenvalues {
    double min = 0;
    double max = 0;
};

/// Extreme eigenvalues of a Hermitian operator given by its matvec, by
/// Lanczos with full reorthogonalization and a deterministic start vector.
inline ExtremeEigenvalues lanczos_extremes(const MatVec& apply, int n, int max_iter = 150) {
    if (n <= 0) throw std::invalid_argument("lanczos needs positive dimension");
    const int m = std::min(n, max_iter);

    std::vector<std::vector<cplx>> basis;
    basis.reserve(m);
    // Deterministic pseudo-random start (splitmix64 bits).
    std::vector<cplx> v(n);
    uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next = [&]() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53 - 0.5;
    };
    for (auto& c : v) c = cplx(next(), next());
    auto nrm2 = [](const std::vector<cplx>& x) {
        double s = 0;
        for (const auto& c : x) s += std::norm(c);
        return std::sqrt(s);
    };
    double nv = nrm2(v);
    for (auto& c : v) c /= nv;

    std::vector<double> alpha, beta;
    std::vector<cplx> w;
    for (int k = 0; k < m; ++k) {
        basis.push_back(v);
        w = apply(v);
        cplx a{};
        for (int i = 0; i < n; ++i) a += std::conj(v[i]) * w[i];
        alpha.push_back(a.real());
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                cplx c{};
                for (int i = 0; i < n; ++i) c += std::conj(b[i]) * w[i];
                for (int i = 0; i < n; ++i) w[i] -= c * b[i];
            }
        const double b = nrm2(w);
        if (b < 1e-14 * (std::abs(alpha[0]) + 1)) break;
        beta.push_back(b);
        for (int i = 0; i < n; ++i) v[i] = w[i] / b;
    }

    std::vector<double> d = alpha;
    std::vector<double> e(d.size(), 0.0);
    for (size_t i = 1; i < d.size(); ++i) e[i] = beta[i - 1];
    detail::tql_no_vectors(d, e);
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    return {*lo, *hi};
}

inline ExtremeEigenvalues lanczos_extremes(const ComplexMatrix& m, int max_iter = 150) {
    return lanczos_extremes([&m](const std::vector<cplx>& x) { return m.apply(x); }, m.size(),
                            max_iter);
}

/// Spectral (operator) norm = largest singular value, via Lanczos on M*M.
inline double operator_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0;
    const ComplexMatrix mh = m.adjoint();
    auto apply = [&](const std::vector<cplx>& x) { return mh.apply(m.apply(x)); };
    const double lam = std::max(0.0, lanczos_extremes(apply, m.size()).max);
    return std::sqrt(lam);
}

} // namespace semilab
