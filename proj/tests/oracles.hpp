#pragma once

// Independent oracles for the test suite. Everything here is deliberately
// written from scratch (different algorithms, different discretizations)
// so agreement with the library is evidence, not tautology.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "semilab/kernel.hpp"
#include "semilab/profiles.hpp"

namespace oracles {

using semilab::cplx;

/// Thomas algorithm for a constant-coefficient tridiagonal system
/// (a, b, c) = (sub, diag, super), overwriting rhs with the solution.
inline void thomas_solve(double a, double b, double c, std::vector<double>& rhs) {
    const int n = static_cast<int>(rhs.size());
    std::vector<double> cp(n);
    cp[0] = c / b;
    rhs[0] /= b;
    for (int i = 1; i < n; ++i) {
        const double m = b - a * cp[i - 1];
        cp[i] = c / m;
        rhs[i] = (rhs[i] - a * rhs[i - 1]) / m;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
}

/// Crank-Nicolson solution of the diagonal-slice problem
///   dw/dt = 4 d^2w/du^2,  w(0, t) = 0,  w(u, 0) = w0(u)
/// on [0, u_max] with step du and time step dtau. Returns the interior
/// samples (u = du ... u_max - du).
class CrankNicolson {
public:
    CrankNicolson(std::function<double(double)> w0, double u_max, double du, double dtau)
        : du_(du), dtau_(dtau), t_(0) {
        const int total = static_cast<int>(std::lround(u_max / du)) + 1;
        n_ = total - 2; // interior nodes; both ends Dirichlet 0
        if (n_ < 3) throw std::invalid_argument("CrankNicolson: grid too small");
        w_.resize(n_);
        for (int i = 0; i < n_; ++i) w_[i] = w0((i + 1) * du);
    }

    void advance_to(double t) {
        const double r = 4.0 * dtau_ / (du_ * du_); // diffusion constant 4
        while (t_ < t - 1e-12) {
            // rhs = (I + r/2 L) w with L the Dirichlet Laplacian
            std::vector<double> rhs(n_);
            for (int i = 0; i < n_; ++i) {
                const double left = i > 0 ? w_[i - 1] : 0.0;
                const double right = i + 1 < n_ ? w_[i + 1] : 0.0;
                rhs[i] = w_[i] + 0.5 * r * (left - 2 * w_[i] + right);
            }
            thomas_solve(-0.5 * r, 1 + r, -0.5 * r, rhs);
            w_ = std::move(rhs);
            t_ += dtau_;
        }
    }

    /// trace = integral over x of omega(x,x) = (1/2) integral over u of w.
    double trace() const {
        double s = 0;
        for (double v : w_) s += v;
        return 0.5 * du_ * s; // endpoints are zero, so this is the trapezoid
    }

    double sample(double u) const {
        const int i = static_cast<int>(std::lround(u / du_)) - 1;
        if (i < 0 || i >= n_) return 0.0;
        return w_[i];
    }

private:
    double du_, dtau_, t_;
    int n_ = 0;
    std::vector<double> w_;
};

/// Independent quadrature trace (reverse summation order).
inline cplx trace_bf(const semilab::KernelOperator& w) {
    cplx s{};
    for (int i = w.grid.n - 1; i >= 0; --i) s += w.k(i, i) * w.grid.h;
    return s;
}

/// Independent pairing <f|w|g> by the naive triple loop.
inline cplx pairing_bf(const semilab::GridFunction& f, const semilab::KernelOperator& w,
                       const semilab::GridFunction& g) {
    cplx s{};
    for (int i = 0; i < w.grid.n; ++i)
        for (int j = 0; j < w.grid.n; ++j)
            s += std::conj(f.values[i]) * w.k(i, j) * g.values[j] * w.grid.h * w.grid.h;
    return s;
}

/// Independent Tr(omega X).
inline cplx trace_product_bf(const semilab::KernelOperator& w, const semilab::Observable& x) {
    cplx s{};
    for (int i = 0; i < w.grid.n; ++i)
        for (int j = 0; j < w.grid.n; ++j) s += w.grid.h * w.k(i, j) * x.m(j, i);
    return s;
}

/// Deterministic random complex matrix with entries in the unit square.
inline semilab::ComplexMatrix random_matrix(int n, uint64_t seed) {
    semilab::SplitMix64 rng(seed);
    semilab::ComplexMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    return m;
}

inline semilab::ComplexMatrix random_hermitian(int n, uint64_t seed) {
    semilab::SplitMix64 rng(seed);
    semilab::ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = rng.uniform(-1, 1);
        for (int j = i + 1; j < n; ++j) {
            m(i, j) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
            m(j, i) = std::conj(m(i, j));
        }
    }
    return m;
}

/// Analytic mode x e^{-x} and its derivatives.
inline double mode_xe(double x) { return x * std::exp(-x); }
inline double mode_xe_d1(double x) { return (1 - x) * std::exp(-x); }
inline double mode_xe_d2(double x) { return (x - 2) * std::exp(-x); }

/// Analytic mode x^2 e^{-x} and its derivatives.
inline double mode_x2e(double x) { return x * x * std::exp(-x); }
inline double mode_x2e_d1(double x) { return (2 * x - x * x) * std::exp(-x); }
inline double mode_x2e_d2(double x) { return (2 - 4 * x + x * x) * std::exp(-x); }

} // namespace oracles
