#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "matrix.hpp"

namespace semilab {

/// Uniform discretization of the truncated half-line [0, x_max],
/// nodes x_i = i*h, i = 0..n-1.
struct Grid {
    double h = 0;
    int n = 0;

    Grid() = default;
    Grid(double step, int count) : h(step), n(count) {
        if (!(h > 0)) throw std::invalid_argument("grid step must be positive");
        if (n < 8) throw std::invalid_argument("grid needs at least 8 points");
    }

    static Grid from_extent(double step, double x_max) {
        int count = static_cast<int>(std::lround(x_max / step)) + 1;
        return Grid(step, count);
    }

    double x(int i) const { return i * h; }
    double x_max() const { return h * (n - 1); }

    bool operator==(const Grid& o) const { return h == o.h && n == o.n; }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    /// t must be a nonnegative integer multiple of h; returns the multiple.
    int time_steps(double t) const {
        if (t < 0) throw std::invalid_argument("time must be nonnegative");
        double m = t / h;
        int mi = static_cast<int>(std::lround(m));
        if (std::abs(m - mi) > 1e-9 * std::max(1.0, m))
            throw std::invalid_argument("time is not a grid multiple");
        return mi;
    }
};

inline void require_same_grid(const Grid& a, const Grid& b) {
    if (a != b) throw std::invalid_argument("grid mismatch");
}

/// Samples of a function on a Grid; norms are h-weighted (rectangle rule).
struct GridFunction {
    Grid grid;
    std::vector<cplx> values;

    GridFunction() = default;
    GridFunction(const Grid& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
        if (static_cast<int>(values.size()) != g.n)
            throw std::invalid_argument("grid function length mismatch");
    }

    static GridFunction zero(const Grid& g) { return GridFunction(g, std::vector<cplx>(g.n)); }

    template <class F>
    static GridFunction sample(const Grid& g, F&& f) {
        std::vector<cplx> v(g.n);
        for (int i = 0; i < g.n; ++i) v[i] = f(g.x(i));
        return GridFunction(g, std::move(v));
    }

    double norm_sq() const {
        double s = 0;
        for (const auto& v : values) s += std::norm(v);
        return grid.h * s;
    }
    double norm() const { return std::sqrt(norm_sq()); }

    /// Scale so the quadrature norm equals 1.
    GridFunction& normalize() {
        double nrm = norm();
        if (nrm == 0) throw std::invalid_argument("cannot normalize the zero function");
        for (auto& v : values) v /= nrm;
        return *this;
    }
};

/// h-weighted inner product <f|g> = h * sum conj(f_i) g_i.
inline cplx inner(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f.grid, g.grid);
    cplx s{};
    for (int i = 0; i < f.grid.n; ++i) s += std::conj(f.values[i]) * g.values[i];
    return f.grid.h * s;
}

} // namespace semilab
