#pragma once

// Named state profiles, deterministic RNG, and the seeded batch of
// boundary-vanishing positive kernels used by the flux probes.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernel.hpp"

namespace semilab {

/// splitmix64: tiny, deterministic, good enough for test-state generation.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

/// Named mode profiles on the half line. All decay exponentially so the
/// truncation at x_max is negligible; x_exp and x2_exp vanish at x = 0.
inline GridFunction profile_function(const Grid& grid, const std::string& name, double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("profile_function: need alpha > 0");
    auto build = [&](auto&& f) {
        std::vector<cplx> v(grid.n);
        for (int i = 0; i < grid.n; ++i) v[i] = f(grid.x(i));
        return GridFunction(grid, std::move(v));
    };
    if (name == "exp") return build([&](double x) { return std::exp(-alpha * x); });
    if (name == "x_exp") return build([&](double x) { return x * std::exp(-alpha * x); });
    if (name == "x2_exp") return build([&](double x) { return x * x * std::exp(-alpha * x); });
    throw std::invalid_argument("profile_function: unknown profile '" + name + "'");
}

/// Rank-one density |psi><psi| normalized to unit quadrature trace.
inline DensityKernel density_rank_one(const GridFunction& psi, const Tolerances& tol = {}) {
    GridFunction p = psi;
    const double ns = p.norm_sq();
    if (!(ns > 0)) throw std::invalid_argument("density_rank_one: zero mode");
    const double c = 1.0 / std::sqrt(ns);
    for (auto& v : p.values) v *= c;
    return DensityKernel::make(KernelOperator::rank_one(p, p), tol);
}

/// Convex mixture sum_i w_i rho_i of density kernels, renormalized.
inline DensityKernel density_mixture(const std::vector<std::pair<double, DensityKernel>>& parts,
                                     const Tolerances& tol = {}) {
    if (parts.empty()) throw std::invalid_argument("density_mixture: empty mixture");
    const Grid& g = parts.front().second.grid();
    ComplexMatrix acc(g.n);
    double total = 0;
    for (const auto& [w, rho] : parts) {
        if (!(w > 0)) throw std::invalid_argument("density_mixture: weights must be positive");
        require_same_grid(g, rho.grid());
        acc.axpy(w, rho.op().k);
        total += w;
    }
    acc *= 1.0 / total;
    return DensityKernel::make(KernelOperator(g, std::move(acc)), tol);
}

/// The canonical reset state Omega(x,y) = c exp(-alpha(x+y)), c fixed by
/// unit quadrature trace. This is the rank-one exp profile.
inline DensityKernel exponential_reset(const Grid& grid, double alpha) {
    return density_rank_one(profile_function(grid, "exp", alpha));
}

/// Deterministic batch of unit-trace rank-one kernels vanishing at x = 0,
/// built from psi(x) = (x + s x^2) exp(-beta x) with |s| <= 0.3 and
/// psi(x) = sin(q x) exp(-beta x), alternating. For both families the
/// diagonal g(x) = |psi(x)|^2 has g'(0) = 0 and g'''(0) < 0, so every
/// difference-stencil evaluation of the boundary flux stays nonnegative up
/// to roundoff.
inline std::vector<KernelOperator> seeded_domain_batch(const Grid& grid, uint64_t seed,
                                                       int count) {
    if (count <= 0) throw std::invalid_argument("seeded_domain_batch: need count > 0");
    SplitMix64 rng(seed);
    std::vector<KernelOperator> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double beta = rng.uniform(1.0, 2.0);
        std::vector<cplx> v(grid.n);
        if (i % 2 == 0) {
            const double s = rng.uniform(-0.3, 0.3);
            for (int j = 0; j < grid.n; ++j) {
                const double x = grid.x(j);
                v[j] = (x + s * x * x) * std::exp(-beta * x);
            }
        } else {
            const double q = rng.uniform(0.5, 1.5);
            for (int j = 0; j < grid.n; ++j) {
                const double x = grid.x(j);
                v[j] = std::sin(q * x) * std::exp(-beta * x);
            }
        }
        GridFunction psi(grid, std::move(v));
        const double c = 1.0 / std::sqrt(psi.norm_sq());
        for (auto& e : psi.values) e *= c;
        out.push_back(KernelOperator::rank_one(psi, psi));
    }
    return out;
}

} // namespace semilab
