#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eig.hpp"
#include "grid.hpp"
#include "matrix.hpp"

namespace semilab {

/// Default tolerances; quadrature error O(h) dominates machine epsilon.
struct Tolerances {
    double psd_rel = 1e-8;   // min eigenvalue >= -psd_rel * trace_norm
    double herm_rel = 1e-10; // hermiticity defect <= herm_rel * max|k|
    double trace = 1e-6;     // |trace - 1| for density kernels
};

/// Trace-class operator on L2(R+) identified with the samples of its kernel:
/// k(i,j) = omega(x_i, x_j). As an operator on sample vectors it acts as h*k.
struct KernelOperator {
    Grid grid;
    ComplexMatrix k;

    KernelOperator() = default;
    KernelOperator(const Grid& g, ComplexMatrix m) : grid(g), k(std::move(m)) {
        if (k.size() != g.n) throw std::invalid_argument("kernel size does not match grid");
    }

    static KernelOperator zero(const Grid& g) { return KernelOperator(g, ComplexMatrix(g.n)); }

    /// omega(x,y) = psi(x) * conj(phi(y))
    static KernelOperator rank_one(const GridFunction& psi, const GridFunction& phi) {
        require_same_grid(psi.grid, phi.grid);
        ComplexMatrix m(psi.grid.n);
        for (int i = 0; i < psi.grid.n; ++i)
            for (int j = 0; j < psi.grid.n; ++j)
                m(i, j) = psi.values[i] * std::conj(phi.values[j]);
        return KernelOperator(psi.grid, std::move(m));
    }

    template <class F>
    static KernelOperator sample(const Grid& g, F&& f) {
        ComplexMatrix m(g.n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) m(i, j) = f(g.x(i), g.x(j));
        return KernelOperator(g, std::move(m));
    }

    KernelOperator adjoint() const { return KernelOperator(grid, k.adjoint()); }

    /// Hilbert-Schmidt norm of the operator h*k.
    double hs_norm() const { return grid.h * k.frobenius_norm(); }
};

/// Quadrature trace h * sum_i omega(x_i, x_i).
inline cplx trace(const KernelOperator& w) {
    cplx s{};
    for (int i = 0; i < w.grid.n; ++i) s += w.k(i, i);
    return w.grid.h * s;
}

/// <f| omega |g> = h^2 * sum_{ij} conj(f_i) k(i,j) g_j.
inline cplx pairing(const GridFunction& f, const KernelOperator& w, const GridFunction& g) {
    require_same_grid(f.grid, w.grid);
    require_same_grid(g.grid, w.grid);
    cplx s{};
    for (int i = 0; i < w.grid.n; ++i) {
        if (f.values[i] == cplx{}) continue;
        cplx row{};
        for (int j = 0; j < w.grid.n; ++j) row += w.k(i, j) * g.values[j];
        s += std::conj(f.values[i]) * row;
    }
    return w.grid.h * w.grid.h * s;
}

struct HermitianSpectrum {
    std::vector<double> eigenvalues; // of the operator h*k, ascending
    double trace_norm = 0;           // sum |lambda_i|
};

/// Full spectrum of a Hermitian kernel operator. Throws on non-Hermitian
/// input (defect above herm_rel * max|k|).
inline HermitianSpectrum hermitian_spectrum(const KernelOperator& w,
                                            const Tolerances& tol = {}) {
    const double defect = w.k.hermiticity_defect();
    if (defect > tol.herm_rel * std::max(w.k.max_abs(), 1e-300))
        throw std::invalid_argument("hermitian_spectrum: kernel is not Hermitian");
    ComplexMatrix m = w.k;
    // Symmetrize roundoff and scale by the quadrature weight.
    for (int i = 0; i < m.size(); ++i)
        for (int j = i; j < m.size(); ++j) {
            const cplx v = 0.5 * (m(i, j) + std::conj(m(j, i))) * w.grid.h;
            m(i, j) = v;
            m(j, i) = std::conj(v);
        }
    HermitianSpectrum sp;
    sp.eigenvalues = hermitian_eigenvalues(m);
    for (double ev : sp.eigenvalues) sp.trace_norm += std::abs(ev);
    return sp;
}

/// Smallest eigenvalue of the Hermitian part of h*k via Lanczos; cheap
/// enough for large evolved states where the full spectrum is not needed.
inline double min_eigenvalue_estimate(const KernelOperator& w, int max_iter = 150) {
    const int n = w.grid.n;
    const double h = w.grid.h;
    auto apply = [&](const std::vector<cplx>& x) {
        std::vector<cplx> y(n);
        for (int i = 0; i < n; ++i) {
            cplx s{};
            for (int j = 0; j < n; ++j)
                s += 0.5 * (w.k(i, j) + std::conj(w.k(j, i))) * x[j];
            y[i] = h * s;
        }
        return y;
    };
    return lanczos_extremes(apply, n, max_iter).min;
}

/// Rigorous bound ||omega||_1 <= sqrt(n) * ||omega||_HS.
inline double trace_norm_upper_bound(const KernelOperator& w) {
    return std::sqrt(static_cast<double>(w.grid.n)) * w.hs_norm();
}

/// Exact trace norm: sum of singular values of h*k. A full eigensolve of
/// k*k, so reserve for moderate n or one-off measurements.
inline double trace_norm(const KernelOperator& w) {
    ComplexMatrix a = w.k;
    a *= w.grid.h;
    const ComplexMatrix ata = a.adjoint().matmul(a);
    double s = 0;
    for (double ev : hermitian_eigenvalues(ata)) s += std::sqrt(std::max(0.0, ev));
    return s;
}

/// Bounded operator in the Heisenberg picture: a plain matrix acting on
/// sample vectors.
struct Observable {
    Grid grid;
    ComplexMatrix m;

    Observable() = default;
    Observable(const Grid& g, ComplexMatrix mat) : grid(g), m(std::move(mat)) {
        if (m.size() != g.n) throw std::invalid_argument("observable size does not match grid");
    }

    static Observable identity(const Grid& g) {
        return Observable(g, ComplexMatrix::identity(g.n));
    }

    double norm() const { return operator_norm(m); }
};

/// Tr(omega X) for the operator product (h*k) * m.
inline cplx trace_product(const KernelOperator& w, const Observable& x) {
    require_same_grid(w.grid, x.grid);
    cplx s{};
    for (int i = 0; i < w.grid.n; ++i)
        for (int j = 0; j < w.grid.n; ++j) s += w.k(i, j) * x.m(j, i);
    return w.grid.h * s;
}

/// Density operator: Hermitian, positive semidefinite, unit quadrature trace.
class DensityKernel {
public:
    DensityKernel() = default;

    /// Validates the defining invariants; caches the PSD certificate.
    static DensityKernel make(KernelOperator w, const Tolerances& tol = {}) {
        const double scale = std::max(w.k.max_abs(), 1e-300);
        if (w.k.hermiticity_defect() > tol.herm_rel * scale)
            throw std::invalid_argument("density kernel is not Hermitian");
        const cplx tr = trace(w);
        if (std::abs(tr - 1.0) > tol.trace)
            throw std::invalid_argument("density kernel trace is not 1");
        const double min_eig = min_eigenvalue_estimate(w);
        // Unit trace and PSD give trace_norm ~= 1.
        if (min_eig < -tol.psd_rel)
            throw std::invalid_argument("density kernel is not positive semidefinite");
        DensityKernel d;
        d.op_ = std::move(w);
        d.min_eig_ = min_eig;
        return d;
    }

    const KernelOperator& op() const { return op_; }
    const Grid& grid() const { return op_.grid; }
    double cached_min_eigenvalue() const { return min_eig_; }

private:
    KernelOperator op_;
    double min_eig_ = 0;
};

/// Discretized GKLS generator data: accretive K and the list of L_j.
struct GeneratorData {
    Grid grid;
    ComplexMatrix K;
    std::vector<ComplexMatrix> Ls;
};

struct DissipativityResult {
    double lhs = 0;              // sum_j ||L_j psi||^2
    double rhs = 0;              // 2 Re <psi | K psi>
    double conservative_gap = 0; // rhs - lhs
    bool dissipative = false;    // gap >= -tol
};

/// Checks the dissipativity inequality with quadrature norms.
inline DissipativityResult dissipativity_check(const GeneratorData& gen, const GridFunction& psi,
                                               double tol = 1e-9) {
    require_same_grid(gen.grid, psi.grid);
    DissipativityResult r;
    for (const auto& L : gen.Ls) {
        const auto lp = L.apply(psi.values);
        double s = 0;
        for (const auto& v : lp) s += std::norm(v);
        r.lhs += gen.grid.h * s;
    }
    const auto kp = gen.K.apply(psi.values);
    cplx ip{};
    for (int i = 0; i < gen.grid.n; ++i) ip += std::conj(psi.values[i]) * kp[i];
    r.rhs = 2 * gen.grid.h * ip.real();
    r.conservative_gap = r.rhs - r.lhs;
    r.dissipative = r.conservative_gap >= -tol;
    return r;
}

} // namespace semilab
