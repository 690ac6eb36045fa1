// linalg.hpp - dense complex helpers: hermitian spectra, matrix roots,
// supports, norms and the row-major vectorization used throughout.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"

namespace qprep {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Tolerances {
    double structural = 1e-10;       // hermiticity, trace, unitarity
    double faithful = 1e-12;         // min eigenvalue relative to the largest
    double eigen_cluster = 1e-9;     // |lambda - 1| counted as a fixed point
    double kraus_drop = 1e-14;       // ancilla eigenvalues dropped from the Kraus family
    double stationarity = 1e-9;      // product-state stationarity gate (trace norm)
};

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(what) + ": matrix must be square");
    }
}

inline Eigen::SelfAdjointEigenSolver<Matrix> hermitian_eigen(const Matrix& h) {
    require_square(h, "hermitian_eigen");
    return Eigen::SelfAdjointEigenSolver<Matrix>(hermitian_part(h));
}

inline double min_eigenvalue(const Matrix& h) {
    if (h.size() == 0) return 0.0;
    return hermitian_eigen(h).eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& h) {
    if (h.size() == 0) return 0.0;
    return hermitian_eigen(h).eigenvalues().maxCoeff();
}

// f applied to the spectrum of the hermitian part of h.
template <class F>
Matrix hermitian_function(const Matrix& h, F&& f) {
    auto es = hermitian_eigen(h);
    RealVector ev = es.eigenvalues().unaryExpr(f);
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

// Square root of a PSD matrix; small negative eigenvalues are clamped.
inline Matrix psd_sqrt(const Matrix& h) {
    return hermitian_function(h, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

inline Matrix psd_inverse_sqrt(const Matrix& h) {
    return hermitian_function(h, [](double x) {
        if (x <= 0.0) throw PreconditionViolated("psd_inverse_sqrt: matrix is singular");
        return 1.0 / std::sqrt(x);
    });
}

// Projection onto the eigenvectors of h with eigenvalue > rel_tol * max eigenvalue.
inline Matrix support_projection(const Matrix& h, double rel_tol = 1e-12) {
    auto es = hermitian_eigen(h);
    const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    const double cut = rel_tol * top;
    Matrix p = Matrix::Zero(h.rows(), h.cols());
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
        if (es.eigenvalues()(k) > cut && top > 0.0) {
            p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
        }
    }
    return p;
}

inline int support_rank(const Matrix& h, double rel_tol = 1e-12) {
    auto ev = hermitian_eigen(h).eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    return static_cast<int>((ev.array() > rel_tol * top).count() * (top > 0.0));
}

inline double trace_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + m.cwiseAbs().maxCoeff())) {
        return hermitian_eigen(m).eigenvalues().cwiseAbs().sum();
    }
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

inline double operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

inline double hs_norm(const Matrix& m) { return m.norm(); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Row-major vectorization: vec(X)[i*cols + j] = X(i, j).
// With this convention vec(A X B) = (A kron B^T) vec(X).
inline Vector vec(const Matrix& x) {
    Vector v(x.size());
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
    return v;
}

inline Matrix unvec(const Vector& v, Index rows) {
    const Index cols = v.size() / rows;
    if (rows * cols != v.size()) throw DimensionMismatch("unvec: length is not a multiple of rows");
    Matrix x(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) x(i, j) = v(i * cols + j);
    return x;
}

inline double von_neumann_entropy(const Matrix& rho) {
    double s = 0.0;
    const RealVector ev = hermitian_eigen(rho).eigenvalues();
    for (double p : ev) {
        if (p > 1e-15) s -= p * std::log(p);
    }
    return s;
}

inline Matrix matrix_unit(Index n, Index i, Index j) {
    Matrix e = Matrix::Zero(n, n);
    e(i, j) = 1.0;
    return e;
}

inline bool all_finite(const Matrix& m) {
    return m.array().isFinite().all();
}

}  // namespace qprep
