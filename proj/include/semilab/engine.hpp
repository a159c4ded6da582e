#pragma once

// Minimal trace-restoring perturbation of either free semigroup by Picard
// iteration of the Duhamel integral equation
//   S_t = S0_t + int_0^t S_{t-s}[ Lambda[S0_s[omega]] ] ds,
// Lambda[omega] = Omega * escape_rate(omega). Every correction is a scalar
// multiple of a free-propagated Omega, so the iteration is implemented both
// on full kernels (trusted path) and on the scalar coefficients of that
// expansion (fast path).

#include <cmath>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "diffusion.hpp"
#include "kernel.hpp"
#include "shift.hpp"

namespace semilab {

class ModelSpec {
public:
    explicit ModelSpec(ShiftModel m) : model_(std::move(m)) {}
    explicit ModelSpec(DiffusionModel m) : model_(std::move(m)) {}

    bool is_shift() const { return std::holds_alternative<ShiftModel>(model_); }

    const Grid& grid() const {
        return is_shift() ? std::get<ShiftModel>(model_).grid
                          : std::get<DiffusionModel>(model_).grid;
    }

    const DensityKernel& reset_state() const {
        return is_shift() ? std::get<ShiftModel>(model_).omega_reset
                          : std::get<DiffusionModel>(model_).omega_rebound;
    }

    const ShiftModel& shift_model() const { return std::get<ShiftModel>(model_); }
    const DiffusionModel& diffusion_model() const { return std::get<DiffusionModel>(model_); }

    KernelOperator free_propagate(const KernelOperator& w, double t) const {
        if (t == 0) return w;
        return is_shift() ? shift_forward(w, t) : diffusion_propagate(w, t);
    }

    /// omega(0,0) for the shift model, the boundary flux for diffusion.
    cplx escape_rate(const KernelOperator& w) const {
        return is_shift() ? w.k(0, 0) : boundary_flux(w);
    }

private:
    std::variant<ShiftModel, DiffusionModel> model_;
};

inline KernelOperator lambda_apply(const ModelSpec& spec, const KernelOperator& w) {
    require_same_grid(spec.grid(), w.grid);
    const cplx rate = spec.escape_rate(w);
    ComplexMatrix m = spec.reset_state().op().k;
    m *= rate;
    return KernelOperator(w.grid, std::move(m));
}

struct DuhamelOptions {
    bool fast_path = true;
    bool keep_states = true;
    bool compute_min_eig = true;
    /// Called once per lattice time with the reconstructed perturbed state.
    std::function<void(int, double, const KernelOperator&)> on_state;
};

struct DuhamelSolution {
    std::vector<double> times;
    std::vector<KernelOperator> states; // empty unless keep_states
    std::vector<double> traces;
    std::vector<double> free_traces; // of the unperturbed evolution
    std::vector<double> escape_rates;
    std::vector<double> min_eigs; // empty unless compute_min_eig
    std::vector<double> iteration_trace_profile; // trace at T per Picard iterate
    int iterations = 0;
    double final_increment = 0;
    bool converged = false;
};

/// Per-iteration trace at the final time; nondecreasing for PSD input.
inline const std::vector<double>& picard_trace_profile(const DuhamelSolution& s) {
    return s.iteration_trace_profile;
}

namespace detail {

/// Quadrature weights for int_0^{t_k} on the dt lattice. The shift model
/// uses the left rectangle rule so the discrete telescoping trace identity
/// is exact; diffusion uses composite trapezoid (second order).
inline double conv_weight(bool shift, int k, int i, double dt) {
    if (k == 0) return 0;
    if (shift) return i < k ? dt : 0.0;
    return (i == 0 || i == k) ? 0.5 * dt : dt;
}

} // namespace detail

inline DuhamelSolution duhamel_solve(const ModelSpec& spec, const KernelOperator& w0, double T,
                                     double dt, double tol, int max_iter,
                                     const DuhamelOptions& opt = {}) {
    require_same_grid(spec.grid(), w0.grid);
    if (!(dt > 0) || T < 0) throw std::invalid_argument("duhamel_solve: need dt > 0, T >= 0");
    if (!(tol > 0)) throw std::invalid_argument("duhamel_solve: need tol > 0");
    const double steps = T / dt;
    const int N = static_cast<int>(std::lround(steps));
    if (std::abs(steps - N) > 1e-9 * std::max(1.0, steps))
        throw std::invalid_argument("duhamel_solve: dt must divide T");
    const bool shift = spec.is_shift();
    if (shift) (void)spec.grid().time_steps(dt); // dt must be a grid multiple

    DuhamelSolution sol;
    sol.times.resize(N + 1);
    for (int k = 0; k <= N; ++k) sol.times[k] = k * dt;

    // Free families. Omega's is always stored (needed by every
    // reconstruction); omega0's is stored only when propagation is
    // expensive (diffusion), else recomputed on the fly.
    const KernelOperator& reset = spec.reset_state().op();
    std::vector<KernelOperator> g_family(N + 1);
    std::vector<KernelOperator> f_family;
    std::vector<cplx> p(N + 1), r(N + 1), tr_g(N + 1), tr_f(N + 1);
    const bool store_f = !shift;
    if (store_f) f_family.resize(N + 1);
    for (int k = 0; k <= N; ++k) {
        g_family[k] = spec.free_propagate(reset, sol.times[k]);
        p[k] = spec.escape_rate(g_family[k]);
        tr_g[k] = trace(g_family[k]);
        KernelOperator f = spec.free_propagate(w0, sol.times[k]);
        r[k] = spec.escape_rate(f);
        tr_f[k] = trace(f);
        if (store_f) f_family[k] = std::move(f);
    }
    auto free_state = [&](int k) {
        return store_f ? f_family[k] : spec.free_propagate(w0, sol.times[k]);
    };

    // Coefficient arrays of the expansion in free-propagated Omega states:
    //   S_t_k[Omega]  = G_k + sum_j C[k][j] G_j
    //   S_t_k[omega0] = F_k + sum_j B[k][j] G_j
    using Coeffs = std::vector<std::vector<cplx>>;
    Coeffs C(N + 1), B(N + 1);
    for (int k = 0; k <= N; ++k) {
        C[k].assign(k + 1, cplx{});
        B[k].assign(k + 1, cplx{});
    }

    double increment = 0;
    int it = 0;
    {
        const double tr0 = (tr_f[N] + [&] {
                               cplx s{};
                               for (int j = 0; j <= N; ++j) s += B[N][j] * tr_g[j];
                               return s;
                           }()).real();
        sol.iteration_trace_profile.push_back(tr0);
    }
    for (it = 1; it <= max_iter; ++it) {
        Coeffs Cn(N + 1), Bn(N + 1);
        for (int k = 0; k <= N; ++k) {
            Cn[k].assign(k + 1, cplx{});
            Bn[k].assign(k + 1, cplx{});
            for (int i = 0; i <= k; ++i) {
                const double w = detail::conv_weight(shift, k, i, dt);
                if (w == 0) continue;
                const int tau = k - i;
                Cn[k][tau] += w * p[i];
                Bn[k][tau] += w * r[i];
                for (int j = 0; j <= tau; ++j) {
                    Cn[k][j] += w * p[i] * C[tau][j];
                    Bn[k][j] += w * r[i] * C[tau][j];
                }
            }
        }
        increment = 0;
        for (int k = 0; k <= N; ++k) {
            double db = 0, dc = 0;
            for (int j = 0; j <= k; ++j) {
                db += std::abs(Bn[k][j] - B[k][j]);
                dc += std::abs(Cn[k][j] - C[k][j]);
            }
            increment = std::max({increment, db, dc});
        }
        C = std::move(Cn);
        B = std::move(Bn);
        cplx trT = tr_f[N];
        for (int j = 0; j <= N; ++j) trT += B[N][j] * tr_g[j];
        sol.iteration_trace_profile.push_back(trT.real());
        if (increment < tol) break;
    }
    sol.iterations = std::min(it, max_iter);
    sol.final_increment = increment;
    sol.converged = increment < tol;

    // Trusted path: repeat the iteration on full kernels and replace the
    // coefficient-based reconstruction. Intended for small grids.
    std::vector<KernelOperator> full_states;
    if (!opt.fast_path) {
        std::vector<KernelOperator> s_omega(N + 1), s_w(N + 1);
        for (int k = 0; k <= N; ++k) {
            s_omega[k] = g_family[k];
            s_w[k] = free_state(k);
        }
        sol.iteration_trace_profile.assign(1, trace(s_w[N]).real());
        for (it = 1; it <= max_iter; ++it) {
            std::vector<KernelOperator> so_n(N + 1), sw_n(N + 1);
            increment = 0;
            for (int k = 0; k <= N; ++k) {
                so_n[k] = g_family[k];
                sw_n[k] = free_state(k);
                for (int i = 0; i <= k; ++i) {
                    const double w = detail::conv_weight(shift, k, i, dt);
                    if (w == 0) continue;
                    so_n[k].k.axpy(w * p[i], s_omega[k - i].k);
                    sw_n[k].k.axpy(w * r[i], s_omega[k - i].k);
                }
                KernelOperator diff = sw_n[k];
                diff.k -= s_w[k].k;
                KernelOperator diff_o = so_n[k];
                diff_o.k -= s_omega[k].k;
                increment = std::max({increment, trace_norm_upper_bound(diff),
                                      trace_norm_upper_bound(diff_o)});
            }
            s_omega = std::move(so_n);
            s_w = std::move(sw_n);
            sol.iteration_trace_profile.push_back(trace(s_w[N]).real());
            if (increment < tol) break;
        }
        sol.iterations = std::min(it, max_iter);
        sol.final_increment = increment;
        sol.converged = increment < tol;
        full_states = std::move(s_w);
    }

    for (int k = 0; k <= N; ++k) {
        sol.free_traces.push_back(tr_f[k].real());
        KernelOperator state = opt.fast_path ? free_state(k) : std::move(full_states[k]);
        if (opt.fast_path)
            for (int j = 0; j <= k; ++j)
                if (B[k][j] != cplx{}) state.k.axpy(B[k][j], g_family[j].k);
        sol.traces.push_back(trace(state).real());
        sol.escape_rates.push_back(spec.escape_rate(state).real());
        if (opt.compute_min_eig) sol.min_eigs.push_back(min_eigenvalue_estimate(state));
        if (opt.on_state) opt.on_state(k, sol.times[k], state);
        if (opt.keep_states) sol.states.push_back(std::move(state));
    }
    return sol;
}

/// Dual (Heisenberg) perturbed evolution for the shift model with arbitrary
/// reset state, on the t = m*h lattice: solves the scalar renewal equation
/// for beta(t) = Tr(Omega T_t[X]) and assembles
///   T_t[X] = T0_t[X] + int_0^t beta(t-s) V_s ds,
/// V_s the boundary-evaluation observable of the escape functional.
inline Observable shift_dual_perturbed(const ShiftModel& model, const Observable& x, double t) {
    require_same_grid(model.grid, x.grid);
    const int m = model.grid.time_steps(t);
    const double h = model.grid.h;
    const ComplexMatrix& ok = model.omega_reset.op().k;

    std::vector<cplx> beta(m + 1);
    std::vector<cplx> g(m + 1);
    for (int k = 0; k <= m; ++k)
        g[k] = trace_product(model.omega_reset.op(), shift_backward_obs(x, k * h));
    const cplx denom = 1.0 - h * ok(0, 0);
    for (int k = 0; k <= m; ++k) {
        cplx acc = g[k];
        for (int j = 1; j < k; ++j) acc += h * ok(j, j) * beta[k - j];
        beta[k] = k == 0 ? g[0] : acc / denom;
    }

    Observable out = shift_backward_obs(x, t);
    for (int j = 0; j < m; ++j) out.m(j, j) += beta[m - j];
    return out;
}

} // namespace semilab
