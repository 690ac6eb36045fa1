// gns.hpp - GNS space of a faithful state realized on Hilbert-Schmidt
// space, the isometry v extending J, the dual extended transition operator
// Z', the adjoint channel T+ and the restriction of Z' to the commutant.
#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "stationary.hpp"
#include "transition.hpp"

namespace qprep {

struct GnsSpace {
    Matrix rho;
    Matrix rho_half;
    Matrix rho_half_inv;
    Vector omega;  // vec(rho^{1/2})
    int N = 0;

    Index dim() const { return static_cast<Index>(N) * N; }
    // a -> vec(a rho^{1/2})
    Vector embed(const Matrix& a) const { return vec(a * rho_half); }
    Matrix extract(const Vector& xi) const { return unvec(xi, N) * rho_half_inv; }
    // vec(a X) = (a kron 1) vec(X)
    Matrix left(const Matrix& a) const { return kron(a, Matrix::Identity(N, N)); }
    // vec(X c) = (1 kron c^T) vec(X)
    Matrix right(const Matrix& c) const { return kron(Matrix::Identity(N, N), c.transpose()); }
    Matrix p_omega() const { return omega * omega.adjoint(); }
};

inline GnsSpace build_gns(const DensityState& phi, double faithful_tol = 1e-12) {
    const double lo = min_eigenvalue(phi.matrix), hi = max_eigenvalue(phi.matrix);
    if (!(lo > faithful_tol * hi))
        throw PreconditionViolated("build_gns: state is not faithful (min eigenvalue " + std::to_string(lo) + ")");
    GnsSpace g;
    g.N = static_cast<int>(phi.side());
    g.rho = hermitian_part(phi.matrix);
    g.rho_half = psd_sqrt(g.rho);
    g.rho_half_inv = psd_inverse_sqrt(g.rho);
    g.omega = vec(g.rho_half);
    return g;
}

namespace detail {

// Map from row-major index of an (N d)x(N d) matrix, entry ((i,k),(j,l)),
// to (i*N + j) * d^2 + (k*d + l). Cached per (N, d).
inline const std::vector<Index>& reorder_permutation(int N, int d) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::vector<Index>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(N, d);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const Index side = static_cast<Index>(N) * d;
    std::vector<Index> perm(static_cast<std::size_t>(side * side));
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < d; ++k)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < d; ++l) {
                    const Index src = (static_cast<Index>(i) * d + k) * side + (static_cast<Index>(j) * d + l);
                    perm[src] = (static_cast<Index>(i) * N + j) * d * d + (static_cast<Index>(k) * d + l);
                }
    return cache.emplace(key, std::move(perm)).first->second;
}

}  // namespace detail

struct ExtendedTransition {
    Matrix v;  // (N^2 d^2) x N^2
    GnsSpace gns;
    Matrix p_omega;
    int N = 0;
    int d = 0;
    double product_defect = 0.0;  // ||u(phi kron psi)u* - phi kron psi||_1
    std::vector<Matrix> kraus;    // K_beta, Z'(x) = sum K* x K

    Matrix apply(const Matrix& x) const {
        Matrix out = Matrix::Zero(gns.dim(), gns.dim());
        for (const auto& k : kraus) out.noalias() += k.adjoint() * x * k;
        return out;
    }
    Matrix apply_pre(const Matrix& rho) const {
        Matrix out = Matrix::Zero(gns.dim(), gns.dim());
        for (const auto& k : kraus) out.noalias() += k * rho * k.adjoint();
        return out;
    }
    KrausChannel channel() const { return KrausChannel(kraus, static_cast<int>(gns.dim())); }
    double isometry_defect() const {
        return (v.adjoint() * v - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
    }
    // |<Omega, Z'(x) Omega> - <Omega, x Omega>| over matrix units, via the predual
    double omega_stationarity_defect() const { return trace_norm(apply_pre(p_omega) - p_omega); }
};

inline ExtendedTransition build_extended(const CouplingModel& m, double stat_tol = 1e-9) {
    const int N = m.N(), d = m.d();
    if (!m.psi_faithful())
        throw PreconditionViolated("build_extended: psi is not faithful (min eigenvalue " +
                                   std::to_string(m.psi_min_eig()) + ")");
    ExtendedTransition et;
    et.gns = build_gns(m.phi, m.tol.faithful);
    et.N = N;
    et.d = d;
    const Matrix w = m.w();
    const Matrix prod = kron(m.phi.matrix, m.psi.matrix);
    et.product_defect = trace_norm(w * prod * w.adjoint() - prod);
    if (et.product_defect > stat_tol)
        throw PreconditionViolated("build_extended: phi kron psi is not stationary for the coupling (defect " +
                                   std::to_string(et.product_defect) + ")");
    const Matrix R = kron(et.gns.rho_half, psd_sqrt(m.psi.matrix));
    const auto& perm = detail::reorder_permutation(N, d);
    const Index n2 = et.gns.dim();
    et.v = Matrix::Zero(n2 * d * d, n2);
    const Matrix one_d = Matrix::Identity(d, d);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            // basis vector E_ab of HS(H) corresponds to E_ab rho^{-1/2}
            Matrix op = matrix_unit(N, a, b) * et.gns.rho_half_inv;
            Matrix z = w.adjoint() * kron(op, one_d) * w * R;
            Vector zv = vec(z);
            Vector col(zv.size());
            for (Index t = 0; t < zv.size(); ++t) col(perm[static_cast<std::size_t>(t)]) = zv(t);
            et.v.col(static_cast<Index>(a) * N + b) = col;
        }
    et.p_omega = et.gns.p_omega();
    const int dd = d * d;
    for (int beta = 0; beta < dd; ++beta) {
        Matrix k(n2, n2);
        for (Index alpha = 0; alpha < n2; ++alpha) k.row(alpha) = et.v.row(alpha * dd + beta);
        et.kraus.push_back(std::move(k));
    }
    return et;
}

inline Matrix apply_Zprime(const ExtendedTransition& et, const Matrix& x) {
    if (x.rows() != et.gns.dim() || x.cols() != et.gns.dim())
        throw DimensionMismatch("apply_Zprime: operator must be N^2 x N^2");
    return et.apply(x);
}

// Z'(x) = v*(x kron 1)v evaluated literally; used to cross-check the Kraus form.
inline Matrix apply_Zprime_sandwich(const ExtendedTransition& et, const Matrix& x) {
    return et.v.adjoint() * kron(x, Matrix::Identity(et.d * et.d, et.d * et.d)) * et.v;
}

// T+(a) = T_*(a rho) rho^{-1} = sum_j M_j a (rho M_j* rho^{-1})
struct AdjointMap {
    std::vector<Matrix> left;
    std::vector<Matrix> right;
    int dim = 0;
    double stationarity_residual = 0.0;

    Matrix apply(const Matrix& a) const {
        Matrix out = Matrix::Zero(dim, dim);
        for (std::size_t j = 0; j < left.size(); ++j) out.noalias() += left[j] * a * right[j];
        return out;
    }
};

inline AdjointMap adjoint_channel(const KrausChannel& ch, const DensityState& phi, double stat_tol = 1e-9,
                                  double faithful_tol = 1e-12) {
    if (phi.side() != ch.dim) throw DimensionMismatch("adjoint_channel: dimension mismatch");
    const double lo = min_eigenvalue(phi.matrix);
    if (!(lo > faithful_tol * max_eigenvalue(phi.matrix)))
        throw PreconditionViolated("adjoint_channel: phi is not faithful");
    AdjointMap t;
    t.dim = ch.dim;
    t.stationarity_residual = trace_norm(ch.apply_pre(phi.matrix) - phi.matrix);
    if (t.stationarity_residual > stat_tol)
        throw PreconditionViolated("adjoint_channel: phi is not stationary (residual " +
                                   std::to_string(t.stationarity_residual) + ")");
    const Matrix rho = phi.matrix;
    const Matrix rinv = rho.inverse();
    for (const auto& k : ch.kraus_ops) {
        t.left.push_back(k);
        t.right.push_back(rho * k.adjoint() * rinv);
    }
    return t;
}

// Z' restricted to operators 1 kron y on HS(H) = C^N kron C^N, which form
// the commutant of the left multiplications.
struct CommutantMap {
    const ExtendedTransition* et = nullptr;
    double invariance_defect = 0.0;  // max over matrix units y

    Matrix lift(const Matrix& y) const { return kron(Matrix::Identity(et->N, et->N), y); }
    // y' with Z'(1 kron y) = 1 kron y' (projected)
    Matrix apply(const Matrix& y) const {
        const int N = et->N;
        Matrix z = et->apply(lift(y));
        return partial_trace(z, FactorDims{N, N}, {1}) / static_cast<double>(N);
    }
    double defect(const Matrix& y) const { return (et->apply(lift(y)) - lift(apply(y))).norm(); }
    KrausChannel channel() const {
        return kraus_from_map([this](const Matrix& y) { return apply(y); }, et->N);
    }
};

inline CommutantMap commutant_dual(const ExtendedTransition& et, double tol = 1e-10) {
    CommutantMap c;
    c.et = &et;
    for (int i = 0; i < et.N; ++i)
        for (int j = 0; j < et.N; ++j) c.invariance_defect = std::max(c.invariance_defect, c.defect(matrix_unit(et.N, i, j)));
    if (c.invariance_defect > tol)
        throw PreconditionViolated("commutant_dual: Z' does not preserve the commutant (defect " +
                                   std::to_string(c.invariance_defect) + ")");
    return c;
}

}  // namespace qprep
