#pragma once

// The left-shift semigroup S_t[omega](x,y) = omega(x+t, y+t) on kernel
// samples, its generator and resolvent, and the explicit closed form of the
// trace-restoring rank-one perturbation.

#include <cmath>
#include <stdexcept>

#include "kernel.hpp"

namespace semilab {

struct ShiftModel {
    Grid grid;
    DensityKernel omega_reset;

    ShiftModel(const Grid& g, DensityKernel reset) : grid(g), omega_reset(std::move(reset)) {
        require_same_grid(grid, omega_reset.grid());
    }
};

/// Exact sample relocation by m = t/h whole steps, zero-padded past x_max.
inline KernelOperator shift_forward(const KernelOperator& w, double t) {
    const int m = w.grid.time_steps(t);
    const int n = w.grid.n;
    ComplexMatrix out(n);
    for (int i = 0; i + m < n; ++i)
        for (int j = 0; j + m < n; ++j) out(i, j) = w.k(i + m, j + m);
    return KernelOperator(w.grid, std::move(out));
}

/// Heisenberg picture: T_t[X] = W_t* X W_t (conjugation by the discrete
/// shift); dual to shift_forward in the discrete pairing.
inline Observable shift_backward_obs(const Observable& x, double t) {
    const int m = x.grid.time_steps(t);
    const int n = x.grid.n;
    ComplexMatrix out(n);
    for (int i = m; i < n; ++i)
        for (int j = m; j < n; ++j) out(i, j) = x.m(i - m, j - m);
    return Observable(x.grid, std::move(out));
}

struct ShiftGeneratorResult {
    KernelOperator sigma;       // d/dt omega(x+t, y+t) at t=0
    cplx boundary_value;        // omega(0,0)
    cplx conservativity_defect; // trace(sigma) + boundary_value
};

/// Forward difference along the (1,1) direction, zero extension past x_max;
/// with this stencil trace(sigma) = -omega(0,0) telescopes exactly.
inline ShiftGeneratorResult shift_generator(const KernelOperator& w) {
    const int n = w.grid.n;
    const double h = w.grid.h;
    ComplexMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx next = (i + 1 < n && j + 1 < n) ? w.k(i + 1, j + 1) : cplx{};
            out(i, j) = (next - w.k(i, j)) / h;
        }
    ShiftGeneratorResult r{KernelOperator(w.grid, std::move(out)), w.k(0, 0), 0};
    r.conservativity_defect = trace(r.sigma) + r.boundary_value;
    return r;
}

/// Discrete Laplace transform of shift_forward:
/// R_lambda[omega](x_i,x_j) = h * sum_m exp(-lambda m h) k(i+m, j+m),
/// evaluated by the backward geometric recursion along each diagonal.
inline KernelOperator shift_resolvent(const KernelOperator& w, double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("resolvent needs lambda > 0");
    const int n = w.grid.n;
    const double h = w.grid.h;
    const double decay = std::exp(-lambda * h);
    ComplexMatrix out(n);
    for (int d = -(n - 1); d < n; ++d) {
        const int i0 = d >= 0 ? d : 0;
        const int j0 = d >= 0 ? 0 : -d;
        const int len = n - std::abs(d);
        cplx acc{};
        for (int s = len - 1; s >= 0; --s) {
            acc = h * w.k(i0 + s, j0 + s) + decay * acc;
            out(i0 + s, j0 + s) = acc;
        }
    }
    return KernelOperator(w.grid, std::move(out));
}

/// Trace-preserving perturbed semigroup in closed form:
/// S_t[omega] = shift + Omega * (trace lost to the boundary).
inline KernelOperator arveson_closed_form(const ShiftModel& model, const KernelOperator& w,
                                          double t) {
    require_same_grid(model.grid, w.grid);
    KernelOperator out = shift_forward(w, t);
    const cplx deficit = trace(w) - trace(out);
    out.k.axpy(deficit, model.omega_reset.op().k);
    return out;
}

/// Dual closed form: T_t[X] = W_t* X W_t + (I - W_t* W_t) Tr(Omega X).
/// Unital by construction.
inline Observable heisenberg_closed_form(const ShiftModel& model, const Observable& x, double t) {
    require_same_grid(model.grid, x.grid);
    const int m = x.grid.time_steps(t);
    Observable out = shift_backward_obs(x, t);
    const cplx c = trace_product(model.omega_reset.op(), x);
    for (int i = 0; i < m && i < x.grid.n; ++i) out.m(i, i) += c;
    return out;
}

/// Generator data of the free shift semigroup with the reset perturbation's
/// L_j = |l_j> psi(0): K is the upwind first derivative, the single L uses a
/// unit-norm vector l with |l><l| <= Omega scale (rank-one reset).
inline GeneratorData shift_generator_data(const Grid& grid, const GridFunction& l_vector) {
    require_same_grid(grid, l_vector.grid);
    GeneratorData g;
    g.grid = grid;
    g.K = ComplexMatrix(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        g.K(i, i) = 1.0 / grid.h;
        if (i + 1 < grid.n) g.K(i, i + 1) = -1.0 / grid.h;
    }
    ComplexMatrix L(grid.n);
    for (int i = 0; i < grid.n; ++i) L(i, 0) = l_vector.values[i];
    g.Ls.push_back(std::move(L));
    return g;
}

} // namespace semilab
