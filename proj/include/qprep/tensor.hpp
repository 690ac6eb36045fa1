// tensor.hpp - operators with declared tensor factors, partial traces,
// factor reordering and the state metrics used by every other module.
//
// Convention: factor 0 is the system and is the most significant digit of
// the row-major basis index; chain slots 1..n follow in order.
#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace qprep {

struct FactorDims {
    std::vector<int> dims;

    FactorDims() = default;
    FactorDims(std::initializer_list<int> d) : dims(d) { check(); }
    explicit FactorDims(std::vector<int> d) : dims(std::move(d)) { check(); }

    void check() const {
        for (int d : dims)
            if (d < 1) throw DimensionMismatch("factor dimension must be >= 1");
    }
    Index total() const {
        Index t = 1;
        for (int d : dims) t *= d;
        return t;
    }
    std::size_t count() const { return dims.size(); }
    int operator[](std::size_t k) const { return dims[k]; }
    bool operator==(const FactorDims&) const = default;

    static FactorDims chain(int system_dim, int ancilla_dim, int slots) {
        std::vector<int> d{system_dim};
        d.insert(d.end(), static_cast<std::size_t>(slots), ancilla_dim);
        return FactorDims(std::move(d));
    }
    static FactorDims slots(int ancilla_dim, int n) {
        return FactorDims(std::vector<int>(static_cast<std::size_t>(n), ancilla_dim));
    }
};

inline FactorDims concat(const FactorDims& a, const FactorDims& b) {
    std::vector<int> d = a.dims;
    d.insert(d.end(), b.dims.begin(), b.dims.end());
    return FactorDims(std::move(d));
}

struct ComplexOperator {
    Matrix matrix;
    FactorDims dims;

    ComplexOperator() = default;
    ComplexOperator(Matrix m, FactorDims d) : matrix(std::move(m)), dims(std::move(d)) {
        if (matrix.rows() != matrix.cols() || matrix.rows() != dims.total())
            throw DimensionMismatch("operator side " + std::to_string(matrix.rows()) +
                                    " does not match factor product " +
                                    std::to_string(dims.total()));
        if (!all_finite(matrix)) throw InvalidInput("operator has non-finite entries");
    }
    // Single-factor operator.
    explicit ComplexOperator(Matrix m) : ComplexOperator(m, FactorDims{static_cast<int>(m.rows())}) {}

    Index side() const { return matrix.rows(); }
};

struct DensityState {
    Matrix matrix;
    FactorDims dims;
    double tol = 1e-10;

    DensityState() = default;
    DensityState(Matrix m, FactorDims d, double tol_ = 1e-10)
        : matrix(std::move(m)), dims(std::move(d)), tol(tol_) {
        validate();
    }
    explicit DensityState(Matrix m, double tol_ = 1e-10)
        : DensityState(m, FactorDims{static_cast<int>(m.rows())}, tol_) {}

    void validate() const {
        if (matrix.rows() != matrix.cols() || matrix.rows() != dims.total())
            throw DimensionMismatch("density side does not match factor product");
        if (!all_finite(matrix)) throw InvalidInput("density has non-finite entries");
        const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
        if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
            throw InvalidInput("density is not hermitian");
        if (std::abs(matrix.trace() - cplx(1.0)) > tol * std::max<double>(1.0, matrix.rows()))
            throw InvalidInput("density trace differs from 1");
        const double lo = min_eigenvalue(matrix);
        if (lo < -tol) throw InvalidInput("density has eigenvalue " + std::to_string(lo));
    }

    Index side() const { return matrix.rows(); }
    ComplexOperator as_operator() const { return ComplexOperator(matrix, dims); }

    // Hermitian symmetrized and renormalized; used after channel applications.
    static DensityState from_unnormalized(const Matrix& m, FactorDims d, double tol_ = 1e-8) {
        Matrix h = hermitian_part(m);
        const cplx t = h.trace();
        if (std::abs(t) < 1e-300) throw InvalidInput("cannot normalize zero matrix");
        return DensityState(h / t.real(), std::move(d), tol_);
    }
    static DensityState pure(const Vector& xi, FactorDims d) {
        const double nrm = xi.norm();
        if (nrm < 1e-300) throw InvalidInput("zero vector");
        Vector x = xi / nrm;
        return DensityState(x * x.adjoint(), std::move(d));
    }
    static DensityState pure(const Vector& xi) {
        return pure(xi, FactorDims{static_cast<int>(xi.size())});
    }
    static DensityState basis(int dim, int k) {
        Vector e = Vector::Zero(dim);
        e(k) = 1.0;
        return pure(e);
    }
    static DensityState maximally_mixed(FactorDims d) {
        const Index n = d.total();
        return DensityState(Matrix::Identity(n, n) / static_cast<double>(n), std::move(d));
    }
    static DensityState diagonal(const RealVector& p) {
        return DensityState(p.cast<cplx>().asDiagonal().toDenseMatrix(),
                            FactorDims{static_cast<int>(p.size())});
    }
};

inline ComplexOperator identity_operator(const FactorDims& d) {
    return ComplexOperator(Matrix::Identity(d.total(), d.total()), d);
}

inline ComplexOperator tensor_product(const ComplexOperator& a, const ComplexOperator& b) {
    return ComplexOperator(kron(a.matrix, b.matrix), concat(a.dims, b.dims));
}

inline DensityState tensor_product(const DensityState& a, const DensityState& b) {
    return DensityState(kron(a.matrix, b.matrix), concat(a.dims, b.dims),
                        std::max(a.tol, b.tol));
}

// n-fold product of the same single-slot density.
inline Matrix tensor_power(const Matrix& m, int n) {
    Matrix out = Matrix::Identity(1, 1);
    for (int k = 0; k < n; ++k) out = kron(out, m);
    return out;
}

namespace detail {

// Digits of a row-major index with respect to dims.
inline std::vector<int> digits(Index idx, const std::vector<int>& dims) {
    std::vector<int> out(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        out[k] = static_cast<int>(idx % dims[k]);
        idx /= dims[k];
    }
    return out;
}

inline Index compose(const std::vector<int>& digs, const std::vector<int>& dims) {
    Index idx = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + digs[k];
    return idx;
}

}  // namespace detail

// Traces out every factor not listed in keep; kept factors retain their order.
inline Matrix partial_trace(const Matrix& z, const FactorDims& dims, const std::set<int>& keep) {
    if (z.rows() != dims.total() || z.cols() != dims.total())
        throw DimensionMismatch("partial_trace: operator does not match dims");
    for (int k : keep)
        if (k < 0 || k >= static_cast<int>(dims.count()))
            throw DimensionMismatch("partial_trace: factor index " + std::to_string(k) +
                                    " out of range");
    std::vector<int> kdims, tdims;
    for (std::size_t k = 0; k < dims.count(); ++k)
        (keep.count(static_cast<int>(k)) ? kdims : tdims).push_back(dims[k]);
    Index kt = 1, tt = 1;
    for (int d : kdims) kt *= d;
    for (int d : tdims) tt *= d;

    // rows_by_trace[t][k] = full index with traced digits t and kept digits k
    std::vector<std::vector<Index>> rows_by_trace(tt, std::vector<Index>(kt));
    for (Index full = 0; full < dims.total(); ++full) {
        auto dg = detail::digits(full, dims.dims);
        Index ki = 0, ti = 0;
        for (std::size_t k = 0; k < dims.count(); ++k) {
            if (keep.count(static_cast<int>(k)))
                ki = ki * dims[k] + dg[k];
            else
                ti = ti * dims[k] + dg[k];
        }
        rows_by_trace[ti][ki] = full;
    }
    Matrix out = Matrix::Zero(kt, kt);
    for (Index t = 0; t < tt; ++t) out += z(rows_by_trace[t], rows_by_trace[t]);
    return out;
}

inline ComplexOperator partial_trace(const ComplexOperator& z, const std::set<int>& keep) {
    std::vector<int> kd;
    for (int k : keep) {
        if (k < 0 || k >= static_cast<int>(z.dims.count()))
            throw DimensionMismatch("partial_trace: factor index out of range");
        kd.push_back(z.dims[static_cast<std::size_t>(k)]);
    }
    if (kd.empty()) kd.push_back(1);
    return ComplexOperator(partial_trace(z.matrix, z.dims, keep), FactorDims(kd));
}

inline DensityState partial_trace(const DensityState& z, const std::set<int>& keep) {
    auto r = partial_trace(z.as_operator(), keep);
    return DensityState(hermitian_part(r.matrix), r.dims, std::max(z.tol, 1e-9));
}

// Index map for a factor permutation: new factor k is old factor perm[k].
inline std::vector<Index> permutation_indices(const FactorDims& dims, const std::vector<int>& perm) {
    if (perm.size() != dims.count()) throw DimensionMismatch("permutation length mismatch");
    std::vector<int> seen(perm.size(), 0);
    for (int p : perm) {
        if (p < 0 || p >= static_cast<int>(perm.size()) || seen[p]++)
            throw DimensionMismatch("invalid factor permutation");
    }
    std::vector<int> ndims(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) ndims[k] = dims[perm[k]];
    std::vector<Index> map(dims.total());
    std::vector<int> old(perm.size());
    for (Index nidx = 0; nidx < dims.total(); ++nidx) {
        auto dg = detail::digits(nidx, ndims);
        for (std::size_t k = 0; k < perm.size(); ++k) old[perm[k]] = dg[k];
        map[nidx] = detail::compose(old, dims.dims);
    }
    return map;
}

inline ComplexOperator permute_factors(const ComplexOperator& z, const std::vector<int>& perm) {
    auto map = permutation_indices(z.dims, perm);
    std::vector<int> nd(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) nd[k] = z.dims[perm[k]];
    return ComplexOperator(z.matrix(map, map), FactorDims(nd));
}

// Keeps factor 0 and reverses factors 1..n.
inline std::vector<int> chain_reversal(std::size_t factors) {
    std::vector<int> perm(factors);
    if (factors == 0) return perm;
    perm[0] = 0;
    for (std::size_t k = 1; k < factors; ++k) perm[k] = static_cast<int>(factors - k);
    return perm;
}

inline ComplexOperator reverse_chain_order(const ComplexOperator& z) {
    if (z.dims.count() < 3) throw DimensionMismatch("reverse_chain_order: needs >= 2 chain factors");
    for (std::size_t k = 2; k < z.dims.count(); ++k)
        if (z.dims[k] != z.dims[1]) throw DimensionMismatch("reverse_chain_order: unequal chain dims");
    return permute_factors(z, chain_reversal(z.dims.count()));
}

// Reverses every factor of an operator that lives on chain slots only.
inline Matrix reverse_slots(const Matrix& c, int ancilla_dim, int slots) {
    FactorDims d = FactorDims::slots(ancilla_dim, slots);
    std::vector<int> perm(static_cast<std::size_t>(slots));
    for (int k = 0; k < slots; ++k) perm[k] = slots - 1 - k;
    auto map = permutation_indices(d, perm);
    return c(map, map);
}

inline double weighted_norm(const Matrix& a, const Matrix& rho) {
    if (a.rows() != rho.rows() || a.cols() != rho.cols())
        throw DimensionMismatch("weighted_norm: dimension mismatch");
    return std::sqrt(std::max(0.0, (rho * a.adjoint() * a).trace().real()));
}

inline double weighted_norm(const ComplexOperator& a, const DensityState& w) {
    if (a.side() != w.side()) throw DimensionMismatch("weighted_norm: dimension mismatch");
    return weighted_norm(a.matrix, w.matrix);
}

inline double trace_distance(const Matrix& s, const Matrix& r) { return 0.5 * trace_norm(s - r); }

inline double fidelity(const Matrix& s, const Matrix& r) {
    // (sum of singular values of sqrt(s) sqrt(r))^2; rounding-level eigenvalues are zeroed
    auto clean_sqrt = [](const Matrix& h) {
        auto es = hermitian_eigen(h);
        const double cut = 1e-14 * std::max(es.eigenvalues().maxCoeff(), 0.0);
        RealVector ev = es.eigenvalues().unaryExpr([cut](double x) { return x > cut ? std::sqrt(x) : 0.0; });
        return Matrix(es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint());
    };
    Eigen::BDCSVD<Matrix> svd(clean_sqrt(s) * clean_sqrt(r));
    const double f = svd.singularValues().sum();
    return std::min(1.0, f * f);
}

enum class DistanceMode { trace, fidelity };

inline double state_distance(const DensityState& s, const DensityState& r, DistanceMode mode) {
    if (s.side() != r.side()) throw DimensionMismatch("state_distance: dimension mismatch");
    if (mode == DistanceMode::trace) return std::clamp(trace_distance(s.matrix, r.matrix), 0.0, 1.0);
    return std::clamp(fidelity(s.matrix, r.matrix), 0.0, 1.0);
}

}  // namespace qprep
