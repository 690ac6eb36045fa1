// stationary.hpp - stationary states, irreducibility, harmonic projections,
// orthogonal stationary states and absorbing vector states of a channel.
#pragma once

#include <Eigen/Eigenvalues>

#include <optional>
#include <string>
#include <vector>

#include "transition.hpp"

namespace qprep {

struct StationaryOptions {
    double cluster_tol = 1e-9;
    double faithful_tol = 1e-12;
    long long dense_limit = 4096;  // max superoperator side for the dense route
    long long iterative_max_steps = 1LL << 22;
};

struct StationaryReport {
    int fixed_space_dim = 0;
    std::vector<DensityState> stationary_densities;
    std::optional<int> faithful_index;
    std::vector<double> residuals;
    std::vector<int> support_ranks;
    std::vector<cplx> eigenvalues;  // full spectrum of T_* (dense route only)
    std::string route;              // "dense" or "iterative"
};

// Cesaro average of T_*^k(seed). When the orbit itself converges the limit
// is returned directly; otherwise averages over the windows [2^(j-1), 2^j)
// are compared until two successive windows agree.
inline Matrix cesaro_average(const KrausChannel& ch, const Matrix& seed, double tol = 1e-10,
                             long long max_steps = 1LL << 22) {
    const double scale = std::sqrt(static_cast<double>(ch.dim));  // trace norm <= sqrt(N) * Frobenius
    Matrix x = seed, window = Matrix::Zero(ch.dim, ch.dim), prev_avg = seed;
    long long window_start = 1;
    for (long long k = 1; k <= max_steps; ++k) {
        Matrix nx = ch.apply_pre(x);
        if (scale * (nx - x).norm() < 1e-3 * tol) return hermitian_part(nx);
        x = std::move(nx);
        window += x;
        if (k == 2 * window_start - 1) {
            Matrix avg = window / static_cast<double>(window_start);
            if (window_start >= 64 && scale * (avg - prev_avg).norm() < tol) return hermitian_part(avg);
            prev_avg = avg;
            window.setZero();
            window_start = k + 1;
        }
    }
    return hermitian_part(prev_avg);
}

namespace detail {

inline bool adds_rank(std::vector<Vector>& basis, const Vector& v, double tol = 1e-8) {
    Vector r = v;
    for (const auto& b : basis) r -= b.dot(r) * b;  // b normalized
    const double nr = r.norm();
    if (nr <= tol * std::max(1.0, v.norm())) return false;
    basis.push_back(r / nr);
    return true;
}

inline void push_state(StationaryReport& rep, std::vector<Vector>& basis, const Matrix& h, int N) {
    const double tr = h.trace().real();
    if (tr <= 1e-12) return;
    Matrix rho = hermitian_part(h / tr);
    if (!adds_rank(basis, vec(rho))) return;
    // clamp rounding noise before validation
    auto es = hermitian_eigen(rho);
    RealVector ev = es.eigenvalues().cwiseMax(0.0);
    rho = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    rho /= rho.trace().real();
    rep.stationary_densities.emplace_back(hermitian_part(rho), FactorDims{N}, 1e-8);
}

inline std::pair<Matrix, Matrix> split_positive(const Matrix& h) {
    auto es = hermitian_eigen(h);
    RealVector pos = es.eigenvalues().cwiseMax(0.0);
    RealVector neg = (-es.eigenvalues()).cwiseMax(0.0);
    return {es.eigenvectors() * pos.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint(),
            es.eigenvectors() * neg.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint()};
}

inline void finish_report(const KrausChannel& ch, StationaryReport& rep, double faithful_tol) {
    for (const auto& s : rep.stationary_densities) {
        rep.residuals.push_back(trace_norm(ch.apply_pre(s.matrix) - s.matrix));
        rep.support_ranks.push_back(support_rank(s.matrix, faithful_tol));
    }
    for (std::size_t k = 0; k < rep.stationary_densities.size(); ++k) {
        const auto& m = rep.stationary_densities[k].matrix;
        if (min_eigenvalue(m) > faithful_tol * max_eigenvalue(m)) {
            rep.faithful_index = static_cast<int>(k);
            break;
        }
    }
}

}  // namespace detail

inline StationaryReport stationary_states(const KrausChannel& ch, const StationaryOptions& opt = {}) {
    const int N = ch.dim;
    StationaryReport rep;
    const Index side = static_cast<Index>(N) * N;
    if (side <= opt.dense_limit) {
        rep.route = "dense";
        Matrix s = ch.preadjoint_superoperator();
        Eigen::ComplexEigenSolver<Matrix> ces(s, false);
        for (Index k = 0; k < side; ++k) {
            rep.eigenvalues.push_back(ces.eigenvalues()(k));
            if (std::abs(ces.eigenvalues()(k) - cplx(1.0)) < opt.cluster_tol) ++rep.fixed_space_dim;
        }
        std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), [](cplx a, cplx b) {
            if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
            if (a.real() != b.real()) return a.real() > b.real();
            return a.imag() > b.imag();
        });
        const int k = std::max(rep.fixed_space_dim, 1);
        Matrix a = s - Matrix::Identity(side, side);
        Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
        // smallest singular values sit at the end
        Matrix K = svd.matrixV().rightCols(k);
        Eigen::BDCSVD<Matrix> svdl(Matrix(a.adjoint()), Eigen::ComputeFullV);
        Matrix L = svdl.matrixV().rightCols(k);
        Matrix P = K * (L.adjoint() * K).inverse() * L.adjoint();

        std::vector<Vector> basis;
        Matrix mixed = Matrix::Identity(N, N) / static_cast<double>(N);
        detail::push_state(rep, basis, hermitian_part(unvec(P * vec(mixed), N)), N);
        for (Index c = 0; c < K.cols() && static_cast<int>(rep.stationary_densities.size()) < k; ++c) {
            Matrix x = unvec(K.col(c), N);
            for (const Matrix& h : {Matrix(hermitian_part(x)), Matrix(hermitian_part(cplx(0, -1) * x))}) {
                auto [pos, neg] = detail::split_positive(h);
                detail::push_state(rep, basis, pos, N);
                detail::push_state(rep, basis, neg, N);
            }
        }
        // Cesaro cross-check from matrix units when representatives are missing
        for (int i = 0; i < N && static_cast<int>(rep.stationary_densities.size()) < k; ++i) {
            detail::push_state(rep, basis, cesaro_average(ch, matrix_unit(N, i, i)), N);
        }
    } else {
        rep.route = "iterative";
        std::vector<Vector> basis;
        detail::push_state(rep, basis, cesaro_average(ch, Matrix::Identity(N, N) / double(N), 1e-10,
                                                      opt.iterative_max_steps), N);
        for (int i = 0; i < N; ++i)
            detail::push_state(rep, basis, cesaro_average(ch, matrix_unit(N, i, i), 1e-10, opt.iterative_max_steps), N);
        rep.fixed_space_dim = static_cast<int>(rep.stationary_densities.size());
    }
    detail::finish_report(ch, rep, opt.faithful_tol);
    return rep;
}

struct IrreducibilityCertificate {
    bool irreducible = false;
    int fixed_space_dim = 0;
    double stationary_min_eig_ratio = 0.0;  // min/max eigenvalue of the unique stationary state
};

inline IrreducibilityCertificate is_irreducible(const KrausChannel& ch, const StationaryOptions& opt = {}) {
    auto rep = stationary_states(ch, opt);
    IrreducibilityCertificate c;
    c.fixed_space_dim = rep.fixed_space_dim;
    if (!rep.stationary_densities.empty()) {
        const auto& m = rep.stationary_densities.front().matrix;
        c.stationary_min_eig_ratio = min_eigenvalue(m) / max_eigenvalue(m);
    }
    c.irreducible = rep.fixed_space_dim == 1 && c.stationary_min_eig_ratio > opt.faithful_tol;
    return c;
}

enum class Harmonic { superharmonic, subharmonic, harmonic, none };

inline const char* to_string(Harmonic h) {
    switch (h) {
        case Harmonic::superharmonic: return "superharmonic";
        case Harmonic::subharmonic: return "subharmonic";
        case Harmonic::harmonic: return "harmonic";
        default: return "none";
    }
}

struct HarmonicClass {
    Harmonic label = Harmonic::none;
    double defect = 0.0;  // min eigenvalue of T(p) - p
    double super_defect = 0.0;  // min eigenvalue of p - T(p)
};

inline void require_projection(const Matrix& p, double tol) {
    require_square(p, "projection");
    if ((p - p.adjoint()).cwiseAbs().maxCoeff() > tol || (p * p - p).cwiseAbs().maxCoeff() > tol)
        throw InvalidInput("operator is not a projection");
}

inline HarmonicClass classify_projection(const KrausChannel& ch, const Matrix& p, double tol = 1e-10) {
    if (p.rows() != ch.dim) throw DimensionMismatch("classify_projection: dimension mismatch");
    require_projection(p, tol);
    Matrix tp = hermitian_part(ch.apply(p));
    HarmonicClass h;
    h.defect = min_eigenvalue(tp - p);
    h.super_defect = min_eigenvalue(p - tp);
    const bool sub = h.defect >= -tol, sup = h.super_defect >= -tol;
    h.label = sub && sup ? Harmonic::harmonic : sub ? Harmonic::subharmonic : sup ? Harmonic::superharmonic : Harmonic::none;
    return h;
}

inline DensityState orthogonal_stationary(const KrausChannel& ch, const DensityState& phi, const DensityState& psi2,
                                          double stat_tol = 1e-9, double rel_tol = 1e-10) {
    for (const auto* s : {&phi, &psi2}) {
        if (s->side() != ch.dim) throw DimensionMismatch("orthogonal_stationary: dimension mismatch");
        const double r = trace_norm(ch.apply_pre(s->matrix) - s->matrix);
        if (r > stat_tol)
            throw PreconditionViolated("orthogonal_stationary: input not stationary (residual " + std::to_string(r) + ")");
    }
    Matrix mid = 0.5 * (phi.matrix + psi2.matrix);
    Matrix p = support_projection(mid, rel_tol);
    Matrix sphi = support_projection(phi.matrix, rel_tol);
    Matrix q = p - sphi;
    // eigen-gap evidence: weight of psi2 outside supp(phi)
    const double outside = (q * psi2.matrix * q).trace().real();
    if (outside <= rel_tol)
        throw PreconditionViolated("orthogonal_stationary: supp(psi2) is dominated by supp(phi); weight outside = " +
                                   std::to_string(outside));
    Matrix theta = q * mid * q;
    return DensityState(hermitian_part(theta / theta.trace().real()), FactorDims{ch.dim}, 1e-8);
}

struct AbsorbingReport {
    bool absorbing = false;
    bool vector_state_stationary = false;
    int fixed_space_dim = 0;
    std::vector<double> profile;  // ||T^n(p_xi) - 1||
    bool profile_monotone = true;
};

inline AbsorbingReport is_absorbing(const KrausChannel& ch, const Vector& xi, int steps = 50,
                                    const StationaryOptions& opt = {}) {
    if (std::abs(xi.norm() - 1.0) > 1e-10) throw InvalidInput("is_absorbing: xi must be a unit vector");
    if (xi.size() != ch.dim) throw DimensionMismatch("is_absorbing: dimension mismatch");
    AbsorbingReport r;
    Matrix p = xi * xi.adjoint();
    r.vector_state_stationary = trace_norm(ch.apply_pre(p) - p) <= 1e-10;
    r.fixed_space_dim = stationary_states(ch, opt).fixed_space_dim;
    r.absorbing = r.vector_state_stationary && r.fixed_space_dim == 1;
    Matrix x = p;
    const Matrix one = Matrix::Identity(ch.dim, ch.dim);
    for (int n = 0; n <= steps; ++n) {
        r.profile.push_back(operator_norm(x - one));
        Matrix nx = hermitian_part(ch.apply(x));
        if (min_eigenvalue(nx - x) < -1e-10) r.profile_monotone = false;
        x = nx;
    }
    return r;
}

}  // namespace qprep
