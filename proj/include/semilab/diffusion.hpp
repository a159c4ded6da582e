#pragma once

// Quantum diffusion on R+ with absorption at 0: the absorbing-boundary
// propagator evaluated by the reflection (image) Poisson integral, the
// second directional derivative generator, the boundary-flux functional and
// a weak-form master-equation residual.

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "kernel.hpp"

namespace semilab {

struct DiffusionModel {
    Grid grid;
    DensityKernel omega_rebound;

    DiffusionModel(const Grid& g, DensityKernel rebound)
        : grid(g), omega_rebound(std::move(rebound)) {
        require_same_grid(grid, omega_rebound.grid());
    }
};

/// Rotated coordinates u = x+y, v = x-y; the quadrant is u >= |v|.
struct RotatedCoords {
    double u = 0;
    double v = 0;

    static RotatedCoords from_xy(double x, double y) { return {x + y, x - y}; }
    double x() const { return 0.5 * (u + v); }
    double y() const { return 0.5 * (u - v); }
    bool in_quadrant() const { return u >= std::abs(v); }
};

namespace detail {

inline bool is_hermitian_samples(const ComplexMatrix& k) {
    return k.hermiticity_defect() <= 1e-12 * std::max(k.max_abs(), 1e-300);
}

} // namespace detail

/// Largest sample magnitude on the boundary rows/columns (x=0 or y=0).
inline double boundary_max_abs(const KernelOperator& w) {
    double m = 0;
    for (int i = 0; i < w.grid.n; ++i)
        m = std::max({m, std::abs(w.k(0, i)), std::abs(w.k(i, 0))});
    return m;
}

/// Absorbing-boundary propagator: for each node, quadrature over xi >= 0 of
///   (1 / 2 sqrt(pi t)) * sum_{n=0,1} (-1)^n exp(-|min(x,y) - (-1)^n xi|^2 / 4t)
///     * omega0(xi + [x-y]_+, xi + [y-x]_+).
/// Diffusion acts along the (1,1) direction only, so each diagonal of the
/// kernel evolves independently; boundary rows come out of the quadrature.
inline KernelOperator diffusion_propagate(const KernelOperator& w0, double t) {
    if (!(t > 0)) throw std::invalid_argument("diffusion_propagate needs t > 0");
    if (!w0.k.all_finite()) throw std::invalid_argument("diffusion_propagate: non-finite input");
    const int n = w0.grid.n;
    const double h = w0.grid.h;

    const double bmax = boundary_max_abs(w0);
    if (bmax > 1e-6 * std::max(w0.k.max_abs(), 1e-300))
        std::cerr << "diffusion_propagate: initial kernel does not vanish on the boundary "
                     "(max "
                  << bmax << "); propagation fidelity degrades\n";

    // Gaussian table over integer node distances; entries below 1e-15
    // (distance beyond 8*sqrt(4t)) are dropped.
    const int window = static_cast<int>(std::ceil(8.0 * std::sqrt(4.0 * t) / h));
    std::vector<double> gauss(2 * n - 1, 0.0);
    for (int m = 0; m < 2 * n - 1 && m <= window; ++m)
        gauss[m] = std::exp(-(m * h) * (m * h) / (4.0 * t));
    const double weight = h / (2.0 * std::sqrt(M_PI * t));

    ComplexMatrix out(n);
    const bool hermitian = detail::is_hermitian_samples(w0.k);

    auto propagate_diagonal = [&](int d_i, int d_j) {
        // samples along the diagonal: w(s) = k(s + d_i, s + d_j)
        const int len = n - std::max(d_i, d_j);
        for (int a = 0; a < len; ++a) {
            cplx acc{};
            const int klo = std::max(0, a - window);
            const int khi = std::min(len - 1, a + window);
            for (int k = klo; k <= khi; ++k) {
                const double g = gauss[std::abs(a - k)] - (a + k < 2 * n - 1 ? gauss[a + k] : 0.0);
                if (g != 0.0) acc += g * w0.k(k + d_i, k + d_j);
            }
            out(a + d_i, a + d_j) = weight * acc;
        }
    };

    for (int d = 0; d < n; ++d) {
        propagate_diagonal(d, 0);
        if (d == 0) continue;
        if (hermitian) {
            for (int a = 0; a + d < n; ++a) out(a, a + d) = std::conj(out(a + d, a));
        } else {
            propagate_diagonal(0, d);
        }
    }
    return KernelOperator(w0.grid, std::move(out));
}

/// Second central difference along the (1,1) direction, one-sided
/// second-order stencils where the directional line leaves the grid.
inline KernelOperator diffusion_generator(const KernelOperator& w) {
    const int n = w.grid.n;
    const double h2 = w.grid.h * w.grid.h;
    ComplexMatrix out(n);
    auto at = [&](int i, int j) -> cplx { return w.k(i, j); };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int lo = std::min(i, j);
            const int hi = std::max(i, j);
            cplx num;
            if (lo >= 1 && hi <= n - 2) {
                num = at(i + 1, j + 1) - 2.0 * at(i, j) + at(i - 1, j - 1);
            } else if (lo == 0 && hi <= n - 4) {
                num = 2.0 * at(i, j) - 5.0 * at(i + 1, j + 1) + 4.0 * at(i + 2, j + 2) -
                      at(i + 3, j + 3);
            } else if (hi == n - 1 && lo >= 3) {
                num = 2.0 * at(i, j) - 5.0 * at(i - 1, j - 1) + 4.0 * at(i - 2, j - 2) -
                      at(i - 3, j - 3);
            } else {
                num = 0; // diagonal too short for a second-order stencil
            }
            out(i, j) = num / h2;
        }
    return KernelOperator(w.grid, std::move(out));
}

enum class FluxStencil { second_order, first_order };

/// Boundary escape-rate functional d/dx omega(x,x) at x=0.
inline cplx boundary_flux(const KernelOperator& w, FluxStencil stencil = FluxStencil::second_order) {
    const double h = w.grid.h;
    if (stencil == FluxStencil::first_order) return (w.k(1, 1) - w.k(0, 0)) / h;
    return (-3.0 * w.k(0, 0) + 4.0 * w.k(1, 1) - w.k(2, 2)) / (2.0 * h);
}

namespace detail {

/// Difference-stencil derivative of a grid function: centered interior,
/// one-sided second order at the ends.
inline GridFunction fd_derivative(const GridFunction& f) {
    const int n = f.grid.n;
    const double h = f.grid.h;
    std::vector<cplx> d(n);
    for (int i = 1; i < n - 1; ++i) d[i] = (f.values[i + 1] - f.values[i - 1]) / (2 * h);
    d[0] = (-3.0 * f.values[0] + 4.0 * f.values[1] - f.values[2]) / (2 * h);
    d[n - 1] = (3.0 * f.values[n - 1] - 4.0 * f.values[n - 2] + f.values[n - 3]) / (2 * h);
    return GridFunction(f.grid, std::move(d));
}

inline GridFunction fd_second_derivative(const GridFunction& f) {
    const int n = f.grid.n;
    const double h2 = f.grid.h * f.grid.h;
    std::vector<cplx> d(n);
    for (int i = 1; i < n - 1; ++i)
        d[i] = (f.values[i + 1] - 2.0 * f.values[i] + f.values[i - 1]) / h2;
    d[0] = (2.0 * f.values[0] - 5.0 * f.values[1] + 4.0 * f.values[2] - f.values[3]) / h2;
    d[n - 1] =
        (2.0 * f.values[n - 1] - 5.0 * f.values[n - 2] + 4.0 * f.values[n - 3] - f.values[n - 4]) /
        h2;
    return GridFunction(f.grid, std::move(d));
}

} // namespace detail

/// Weak-form master-equation residual at time t:
/// | d/dt <f|omega_t|g>  -  (2<f'|omega_t|g'> + <f''|omega_t|g> + <f|omega_t|g''>) |
/// with a centered time difference of step dt.
inline double mme_residual(const KernelOperator& w0, const GridFunction& f, const GridFunction& g,
                           double t, double dt) {
    require_same_grid(w0.grid, f.grid);
    require_same_grid(w0.grid, g.grid);
    const double fscale = std::sqrt(f.norm_sq() * g.norm_sq());
    if (std::abs(f.values[0]) > 1e-12 * std::max(fscale, 1e-300) ||
        std::abs(g.values[0]) > 1e-12 * std::max(fscale, 1e-300))
        throw std::invalid_argument("mme_residual: f and g must vanish at the boundary node");
    if (!(dt > 0) || !(t - dt > 0)) throw std::invalid_argument("mme_residual: need 0 < dt < t");

    const KernelOperator w_minus = diffusion_propagate(w0, t - dt);
    const KernelOperator w_t = diffusion_propagate(w0, t);
    const KernelOperator w_plus = diffusion_propagate(w0, t + dt);

    const cplx lhs = (pairing(f, w_plus, g) - pairing(f, w_minus, g)) / (2.0 * dt);
    const GridFunction fp = detail::fd_derivative(f);
    const GridFunction gp = detail::fd_derivative(g);
    const GridFunction fpp = detail::fd_second_derivative(f);
    const GridFunction gpp = detail::fd_second_derivative(g);
    const cplx rhs =
        2.0 * pairing(fp, w_t, gp) + pairing(fpp, w_t, g) + pairing(f, w_t, gpp);
    return std::abs(lhs - rhs);
}

/// Discretized generator data of the free diffusion: L = sqrt(2) d/dx,
/// K = -d^2/dx^2 with a Dirichlet boundary row.
inline GeneratorData diffusion_generator_data(const Grid& grid) {
    GeneratorData g;
    g.grid = grid;
    const int n = grid.n;
    const double h = grid.h;
    g.K = ComplexMatrix(n);
    for (int i = 0; i < n; ++i) {
        g.K(i, i) = 2.0 / (h * h);
        if (i + 1 < n) g.K(i, i + 1) = -1.0 / (h * h);
        if (i - 1 >= 0) g.K(i, i - 1) = -1.0 / (h * h);
    }
    ComplexMatrix L(n);
    const double c = std::sqrt(2.0) / h;
    for (int i = 0; i + 1 < n; ++i) {
        L(i, i) = -c;
        L(i, i + 1) = c;
    }
    g.Ls.push_back(std::move(L));
    return g;
}

} // namespace semilab
