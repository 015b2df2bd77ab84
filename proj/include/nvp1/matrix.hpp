// Dense complex matrices for small spin Hamiltonians (dims 2..9).
//
// Everything in this library runs on matrices no larger than 9x9, so the
// implementation favours clarity and determinism over asymptotic speed:
// plain row-major storage, straightforward O(n^3) products, no expression
// templates. All energies carried by these matrices are linear frequencies
// in MHz (h = 1); time is microseconds; magnetic field is mT.

#pragma once

#include <algorithm>
#include <complex>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvp1 {

using cplx = std::complex<double>;

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix zero(std::size_t n) { return Matrix(n, n); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }

    Matrix& operator*=(cplx s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, cplx s) { return a *= s; }
    friend Matrix operator*(cplx s, Matrix a) { return a *= s; }
    friend Matrix operator*(Matrix a, double s) { return a *= cplx{s, 0.0}; }
    friend Matrix operator*(double s, Matrix a) { return a *= cplx{s, 0.0}; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: shape mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const cplx aik = a(i, k);
                if (aik == cplx{0.0, 0.0}) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    Matrix adjoint() const {
        Matrix c(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) c(j, i) = std::conj((*this)(i, j));
        return c;
    }

    cplx trace() const {
        cplx t{0.0, 0.0};
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const auto& v : data_) s += std::norm(v);
        return std::sqrt(s);
    }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    void require_same_shape(const Matrix& o) const {
        if (!same_shape(o)) throw std::invalid_argument("matrix op: shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

// Tensor (Kronecker) product with the first factor's index varying slowest:
// (A ⊗ B)[i*nb + k][j*nb + l] = A[i][j] * B[k][l]. This fixes the product-basis
// ordering used throughout: |first factor, second factor⟩ with the first index
// outermost.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cplx aij = a(i, j);
            if (aij == cplx{0.0, 0.0}) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    c(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return c;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

// Largest entry-wise deviation from H = H†. Zero for exactly Hermitian input.
inline double hermiticity_defect(const Matrix& h) {
    if (h.rows() != h.cols()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = i; j < h.cols(); ++j)
            worst = std::max(worst, std::abs(h(i, j) - std::conj(h(j, i))));
    return worst;
}

// Operators produced by this library must be Hermitian to 1e-12 * ||H||
// (relative to the Frobenius norm, with an absolute floor for zero matrices).
inline bool is_hermitian(const Matrix& h, double rel_tol = 1e-12) {
    const double scale = std::max(h.frobenius_norm(), 1.0);
    return hermiticity_defect(h) <= rel_tol * scale;
}

inline void require_hermitian(const Matrix& h, const std::string& what) {
    if (!is_hermitian(h)) throw std::invalid_argument(what + ": matrix is not Hermitian");
}

// ⟨A⟩ = tr(rho * A), real part (observables here are Hermitian).
inline double expectation(const Matrix& rho, const Matrix& op) {
    return (rho * op).trace().real();
}

}  // namespace nvp1
