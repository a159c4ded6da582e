#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace semilab {

using cplx = std::complex<double>;

/// Dense square complex matrix, row-major.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n) {}

    int size() const { return n_; }

    cplx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    const cplx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }

    static ComplexMatrix identity(int n) {
        ComplexMatrix m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix m(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                m(j, i) = std::conj((*this)(i, j));
        return m;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        check_same(o);
        for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        check_same(o);
        for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    ComplexMatrix& operator*=(cplx c) {
        for (auto& v : a_) v *= c;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(cplx c, ComplexMatrix a) { return a *= c; }

    /// this += c * o
    void axpy(cplx c, const ComplexMatrix& o) {
        check_same(o);
        for (size_t k = 0; k < a_.size(); ++k) a_[k] += c * o.a_[k];
    }

    ComplexMatrix matmul(const ComplexMatrix& o) const {
        check_same(o);
        ComplexMatrix r(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                const cplx aik = (*this)(i, k);
                if (aik == cplx{}) continue;
                const cplx* brow = &o.a_[static_cast<size_t>(k) * n_];
                cplx* rrow = &r.a_[static_cast<size_t>(i) * n_];
                for (int j = 0; j < n_; ++j) rrow[j] += aik * brow[j];
            }
        return r;
    }

    /// y = A x
    std::vector<cplx> apply(const std::vector<cplx>& x) const {
        if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("matrix/vector size mismatch");
        std::vector<cplx> y(n_);
        for (int i = 0; i < n_; ++i) {
            cplx s{};
            const cplx* row = &a_[static_cast<size_t>(i) * n_];
            for (int j = 0; j < n_; ++j) s += row[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    double frobenius_norm() const {
        double s = 0;
        for (const auto& v : a_) s += std::norm(v);
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0;
        for (const auto& v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max_{i,j} |a(i,j) - conj(a(j,i))|
    double hermiticity_defect() const {
        double m = 0;
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j)
                m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return m;
    }

    bool all_finite() const {
        for (const auto& v : a_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

private:
    void check_same(const ComplexMatrix& o) const {
        if (o.n_ != n_) throw std::invalid_argument("matrix size mismatch");
    }

    int n_ = 0;
    std::vector<cplx> a_;
};

} // namespace semilab
