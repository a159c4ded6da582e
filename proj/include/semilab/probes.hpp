#pragma once

// Numerical witnesses for the structural results: domain-membership growth
// of t^-1 ||T_t[X] - X||, the Cauchy-Schwarz equality test behind the
// domain-algebra collapse, the flux-sign obstruction to a Kraus form, and
// the vanishing of the perturbation on boundary-vanishing rank-one states.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "engine.hpp"
#include "kernel.hpp"
#include "profiles.hpp"

namespace semilab {

enum class ProbeVerdict { bounded, divergent, inconclusive };

inline const char* to_string(ProbeVerdict v) {
    switch (v) {
        case ProbeVerdict::bounded: return "BOUNDED";
        case ProbeVerdict::divergent: return "DIVERGENT";
        default: return "INCONCLUSIVE";
    }
}

struct ProbeReport {
    std::string probe;
    std::string inputs;
    std::vector<double> scales;       // t or h or item index
    std::vector<double> measurements; // estimated bound M per scale
    double exponent = 0;              // least-squares growth exponent
    ProbeVerdict verdict = ProbeVerdict::inconclusive;
};

using DualEvolver = std::function<Observable(const Observable&, double)>;

/// Classifies sup_t t^-1 ||T_t[X] - X||: bounded quotients certify domain
/// membership, 1/t growth certifies exclusion. The exponent is the
/// least-squares slope of log M against log(1/t).
inline ProbeReport domain_membership_probe(const DualEvolver& evolve, const Observable& x,
                                           const std::vector<double>& t_list) {
    if (t_list.empty()) throw std::invalid_argument("domain_membership_probe: empty t_list");
    ProbeReport rep;
    rep.probe = "domain";
    rep.scales = t_list;
    const double xnorm = std::max(x.norm(), 1e-300);
    for (double t : t_list) {
        Observable diff = evolve(x, t);
        diff.m -= x.m;
        rep.measurements.push_back(operator_norm(diff.m) / t);
    }
    // fit only scales with a nonzero quotient
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i < t_list.size(); ++i) {
        if (rep.measurements[i] <= 1e-13 * xnorm) continue;
        const double lx = std::log(1.0 / t_list[i]);
        const double ly = std::log(rep.measurements[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++cnt;
    }
    if (cnt < 2) {
        rep.exponent = 0;
        rep.verdict = ProbeVerdict::bounded; // all quotients vanish
        return rep;
    }
    rep.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.verdict = rep.exponent <= 0.2 ? ProbeVerdict::bounded
                  : rep.exponent >= 0.8 ? ProbeVerdict::divergent
                                        : ProbeVerdict::inconclusive;
    return rep;
}

struct CsGapResult {
    double gap = 0;          // Tr(Omega X*X) - |Tr(Omega X)|^2
    double left_defect = 0;  // ||(X - Tr(Omega X) I) Omega||
    double right_defect = 0; // ||Omega (X - Tr(Omega X) I)||
};

/// Equality case of the noncommutative Cauchy-Schwarz inequality: gap = 0
/// iff X - Tr(Omega X) I annihilates Omega on both sides.
inline CsGapResult cs_gap(const Observable& x, const DensityKernel& omega) {
    require_same_grid(x.grid, omega.grid());
    CsGapResult r;
    const Observable xx(x.grid, x.m.adjoint().matmul(x.m));
    const cplx mean = trace_product(omega.op(), x);
    r.gap = (trace_product(omega.op(), xx) - cplx(std::norm(mean))).real();

    ComplexMatrix centered = x.m;
    for (int i = 0; i < x.grid.n; ++i) centered(i, i) -= mean;
    ComplexMatrix om = omega.op().k;
    om *= omega.grid().h; // the operator is h*k
    r.left_defect = operator_norm(centered.matmul(om));
    r.right_defect = operator_norm(om.matmul(centered));
    return r;
}

/// The flux functional is positive on boundary-vanishing PSD kernels (the
/// generator's domain) yet negative on the PSD witness exp(-(x+y)): no
/// Kraus-form generalization can represent the rebound perturbation.
inline ProbeReport kraus_obstruction_witness(const Grid& grid, uint64_t seed = 20240901,
                                             int batch = 50) {
    ProbeReport rep;
    rep.probe = "kraus-witness";
    rep.inputs = "seed=" + std::to_string(seed);
    double min_flux = 0;
    const auto kernels = seeded_domain_batch(grid, seed, batch);
    for (size_t i = 0; i < kernels.size(); ++i) {
        const double flux = boundary_flux(kernels[i]).real();
        rep.scales.push_back(static_cast<double>(i));
        rep.measurements.push_back(flux);
        min_flux = std::min(min_flux, flux);
    }
    const KernelOperator witness =
        KernelOperator::sample(grid, [](double x, double y) { return std::exp(-(x + y)); });
    const double witness_flux = boundary_flux(witness).real();
    rep.scales.push_back(-1.0);
    rep.measurements.push_back(witness_flux);
    rep.exponent = 0;
    rep.verdict = (min_flux >= -1e-6 && witness_flux < 0) ? ProbeVerdict::divergent
                                                          : ProbeVerdict::inconclusive;
    return rep;
}

/// ||Lambda[|psi><phi|]|| for boundary-vanishing psi, phi; certifies that
/// the perturbed and free generators agree on such rank-one states.
inline double zero_correction_check(const ModelSpec& spec, const GridFunction& psi,
                                    const GridFunction& phi) {
    require_same_grid(spec.grid(), psi.grid);
    require_same_grid(spec.grid(), phi.grid);
    const double scale =
        std::max(std::sqrt(psi.norm_sq() * phi.norm_sq()), 1e-300);
    if (std::abs(psi.values[0]) > 1e-12 * scale || std::abs(phi.values[0]) > 1e-12 * scale)
        throw std::invalid_argument("zero_correction_check: boundary values must vanish");
    const KernelOperator w = KernelOperator::rank_one(psi, phi);
    // Omega has unit trace norm, so ||Lambda[w]||_1 = |escape_rate(w)|.
    return std::abs(spec.escape_rate(w));
}

} // namespace semilab
