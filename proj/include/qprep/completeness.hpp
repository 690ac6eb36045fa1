// completeness.hpp - asymptotic completeness: direct and Z'-based defect
// profiles, spectral certification, injectivity (d1) and observability of
// the reversed coupling.
#pragma once

#include <optional>
#include <string>

#include "gns.hpp"
#include "random.hpp"

namespace qprep {

enum class AcVerdict { certified_complete, certified_incomplete, undecided };

inline const char* to_string(AcVerdict v) {
    switch (v) {
        case AcVerdict::certified_complete: return "certified_complete";
        case AcVerdict::certified_incomplete: return "certified_incomplete";
        default: return "undecided";
    }
}

// Q_n J_n(a) as a chain operator; n = 0 gives phi(a) on a one-dimensional chain.
inline Matrix qj_matrix(const CouplingModel& m, const Matrix& a, int n) {
    if (n == 0) {
        Matrix out(1, 1);
        out(0, 0) = (m.phi.matrix * a).trace();
        return out;
    }
    return q_expectation_matrix(m.phi.matrix, apply_Jn_matrix(m, a, n));
}

struct DirectDefect {
    double defect = 0.0;   // ||1 kron Q_nJ_n(a) - J_n(a)|| in phi kron psi_n
    double qj_norm = 0.0;  // ||Q_nJ_n(a)|| in psi_n
    double a_norm = 0.0;   // ||a|| in phi
};

inline DirectDefect ac_defect_direct(const CouplingModel& m, const ComplexOperator& a, int n) {
    require_system_operator(m, a.matrix);
    if (n < 1) throw InvalidInput("ac_defect_direct: n must be >= 1");
    m.guard(n);
    const Matrix jn = apply_Jn_matrix(m, a.matrix, n);
    const Matrix qj = q_expectation_matrix(m.phi.matrix, jn);
    const Matrix psin = psi_power(m, n);
    DirectDefect r;
    r.defect = weighted_norm(Matrix(kron(Matrix::Identity(m.N(), m.N()), qj) - jn), kron(m.phi.matrix, psin));
    r.qj_norm = weighted_norm(qj, psin);
    r.a_norm = weighted_norm(a.matrix, m.phi.matrix);
    return r;
}

// Matrix units plus `random_count` random hermitian operators, each scaled to unit phi-norm.
inline std::vector<Matrix> default_test_set(const DensityState& phi, std::uint64_t seed, int random_count = 10) {
    const Index N = phi.side();
    std::vector<Matrix> out;
    auto push = [&](const Matrix& a) {
        const double nrm = weighted_norm(a, phi.matrix);
        if (nrm > 1e-14) out.push_back(a / nrm);
    };
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < N; ++j) push(matrix_unit(N, i, j));
    Rng rng(seed);
    for (int k = 0; k < random_count; ++k) push(random_hermitian(rng, N));
    return out;
}

struct AcCertificate {
    AcVerdict verdict = AcVerdict::undecided;
    std::string route;  // dense | iterative
    double omega_defect = 0.0;
    int fixed_space_dim = -1;  // -1 when not computed
    double gap = 0.0;          // dense: smallest nonzero singular value of Z' - 1; iterative: 1 - contraction ratio
    int kernel_dim = 0;        // kernel of sum_{k <= N^2} Z'^k(p_Omega)
    std::optional<Matrix> witness;  // system operator a with Q_nJ_n(a) = 0 for all n, or a second fixed point
    std::string witness_kind;
    std::string message;
};

struct CertifyOptions {
    long long dense_entries = 17'000'000;  // (N^2)^2 squared entries of the Z' superoperator
    double kernel_tol = 1e-9;
    double fixed_tol = 1e-9;
    int power_iterations = 20000;
    int stable_window = 100;
    double contraction_margin = 1e-6;
};

namespace detail {

// Sum of Z'^k(p_Omega), k = 0..n, accumulated alongside the iterates.
inline std::vector<Matrix> zprime_partial_sums(const ExtendedTransition& et, int n) {
    std::vector<Matrix> sums;
    Matrix x = et.p_omega;
    Matrix s = x;
    sums.push_back(s);
    for (int k = 1; k <= n; ++k) {
        x = et.apply(x);
        s += x;
        sums.push_back(s);
    }
    return sums;
}

inline std::pair<int, Matrix> psd_kernel(const Matrix& s, double tol) {
    auto es = hermitian_eigen(s);
    const double top = std::max(es.eigenvalues().maxCoeff(), 1.0);
    int dim = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) <= tol * top) ++dim;
    return {dim, es.eigenvectors().leftCols(dim)};
}

}  // namespace detail

inline AcCertificate certify_ac(const ExtendedTransition& et, const CertifyOptions& opt = {}) {
    AcCertificate c;
    const Index n2 = et.gns.dim();
    c.omega_defect = et.omega_stationarity_defect();

    const int depth = static_cast<int>(n2);
    const Matrix sum = detail::zprime_partial_sums(et, depth).back();
    auto [kdim, kvecs] = detail::psd_kernel(sum, opt.kernel_tol);
    c.kernel_dim = kdim;
    if (kdim > 0) {
        c.witness = et.gns.extract(kvecs.col(0));
        c.witness_kind = "kernel";
    }

    const long long side = static_cast<long long>(n2) * n2;
    if (side * side <= opt.dense_entries) {
        c.route = "dense";
        const Matrix h = et.channel().heisenberg_superoperator() - Matrix::Identity(side, side);
        const RealVector sv = Eigen::BDCSVD<Matrix>(h).singularValues();
        int fixed = 0;
        for (Index i = 0; i < sv.size(); ++i)
            if (sv(i) < opt.fixed_tol) ++fixed;
        c.fixed_space_dim = fixed;
        c.gap = fixed < sv.size() ? sv(sv.size() - 1 - fixed) : 0.0;
        const bool stationary = c.omega_defect < opt.fixed_tol;
        if (stationary && fixed == 1) {
            c.verdict = AcVerdict::certified_complete;
            c.message = "omega is stationary and the fixed-point space of Z' is trivial";
        } else {
            c.verdict = AcVerdict::certified_incomplete;
            c.message = stationary ? "Z' has " + std::to_string(fixed) + " independent fixed points"
                                   : "omega is not stationary for Z'";
            if (!c.witness && fixed > 1) {
                // a fixed point orthogonal to the identity
                Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeFullV);
                const Matrix& v = svd.matrixV();
                const Vector one = vec(Matrix::Identity(n2, n2));
                for (Index i = sv.size() - fixed; i < sv.size(); ++i) {
                    Vector f = v.col(i) - one * (one.dot(v.col(i)) / one.squaredNorm());
                    if (f.norm() > 1e-6) {
                        c.witness = unvec(f / f.norm(), n2);
                        c.witness_kind = "fixed_point";
                        break;
                    }
                }
            }
        }
        return c;
    }

    c.route = "iterative";
    if (kdim > 0) {
        c.verdict = AcVerdict::certified_incomplete;
        c.message = "sum of Z'^k(p_Omega) has a kernel";
        return c;
    }
    // power iteration on {x : <Omega, x Omega> = 0}, which Z' leaves invariant
    Rng rng(0x5eed);
    Matrix x = random_hermitian(rng, n2);
    auto deflate = [&](Matrix& y) {
        const cplx w = et.gns.omega.dot(y * et.gns.omega);
        y -= w * Matrix::Identity(n2, n2);
        y /= y.norm();
    };
    deflate(x);
    double prev = -1.0;
    int stable = 0;
    for (int it = 0; it < opt.power_iterations; ++it) {
        Matrix y = et.apply(x);
        const double ratio = y.norm();
        if (ratio < 1e-10) {  // generic start annihilated
            c.gap = 1.0;
            stable = opt.stable_window;
            break;
        }
        deflate(y);
        x = std::move(y);
        if (prev > 0 && std::abs(ratio - prev) < 1e-12 * std::max(1.0, ratio)) ++stable;
        else stable = 0;
        prev = ratio;
        c.gap = 1.0 - ratio;
        if (stable >= opt.stable_window) break;
    }
    if (stable >= opt.stable_window && c.gap > opt.contraction_margin && c.omega_defect < opt.fixed_tol) {
        c.verdict = AcVerdict::certified_complete;
        c.message = "Z' contracts the complement of the identity";
    } else {
        c.verdict = AcVerdict::undecided;
        c.message = "spectral gap not resolved by power iteration";
    }
    return c;
}

inline AcCertificate certify_ac(const CouplingModel& m, const CertifyOptions& opt = {}) {
    return certify_ac(build_extended(m), opt);
}

struct AcProfile {
    std::vector<int> n_values;
    std::vector<std::vector<double>> defect_per_basis;  // [n][a]
    std::vector<double> max_defect;
    std::vector<double> min_eig_sum;
    std::vector<double> distance_to_identity;  // ||Z'^n(p_Omega) - 1|| (operator norm)
    std::vector<double> isometry_defect;       // max_a | ||Q_nJ_n(a)|| / ||a|| - 1 |
    AcCertificate certificate;

    bool monotone(double slack = 1e-10) const {
        for (std::size_t k = 1; k < defect_per_basis.size(); ++k)
            for (std::size_t a = 0; a < defect_per_basis[k].size(); ++a)
                if (defect_per_basis[k][a] > defect_per_basis[k - 1][a] + slack) return false;
        return true;
    }
    std::optional<int> first_below(double threshold) const {
        for (std::size_t k = 0; k < max_defect.size(); ++k)
            if (max_defect[k] < threshold) return n_values[k];
        return std::nullopt;
    }
};

inline AcProfile ac_profile(const ExtendedTransition& et, int n_max, const std::vector<Matrix>& test_set,
                            bool certify = true, const CertifyOptions& opt = {}) {
    if (n_max < 1) throw InvalidInput("ac_profile: n_max must be >= 1");
    const Index n2 = et.gns.dim();
    std::vector<Vector> vecs;
    std::vector<double> norms;
    for (const auto& a : test_set) {
        if (a.rows() != et.N || a.cols() != et.N) throw DimensionMismatch("ac_profile: test operator size");
        vecs.push_back(et.gns.embed(a));
        norms.push_back(vecs.back().squaredNorm());
    }
    AcProfile p;
    Matrix x = et.p_omega;
    Matrix sum = x;
    const Matrix one = Matrix::Identity(n2, n2);
    for (int n = 1; n <= n_max; ++n) {
        x = hermitian_part(et.apply(x));
        sum += x;
        p.n_values.push_back(n);
        std::vector<double> row;
        double worst = 0.0, iso = 0.0;
        for (std::size_t k = 0; k < vecs.size(); ++k) {
            const double q = vecs[k].dot(x * vecs[k]).real();
            const double def = norms[k] - q;
            row.push_back(def);
            worst = std::max(worst, def / norms[k]);
            iso = std::max(iso, std::abs(std::sqrt(std::max(q, 0.0) / norms[k]) - 1.0));
        }
        p.defect_per_basis.push_back(std::move(row));
        p.max_defect.push_back(worst);
        p.isometry_defect.push_back(iso);
        p.min_eig_sum.push_back(min_eigenvalue(sum));
        p.distance_to_identity.push_back(operator_norm(x - one));
    }
    if (certify) p.certificate = certify_ac(et, opt);
    return p;
}

struct D1Report {
    bool irreducible = false;
    std::vector<double> min_eig;   // min eigenvalue of sum_{k=0}^n Z'^k(p_Omega), n = 0..n_max
    std::vector<int> kernel_dims;  // same sums
    std::optional<int> first_positive;
    bool injective = false;  // decided at depth max(n_max, N^2)
    std::vector<int> direct_kernel_dims;  // stacked (Q_kJ_k)_{k <= n}, n = 0..min(n_max, direct_max)
    bool result = false;
};

// Kernel dimension of a -> (Q_kJ_k(a))_{k=0..n} computed directly on the chain.
inline std::vector<int> direct_kernel_dims(const CouplingModel& m, int n_max, double tol = 1e-9) {
    const int N = m.N();
    std::vector<int> out;
    Matrix stacked(0, N * N);
    for (int n = 0; n <= n_max; ++n) {
        const Index rows = static_cast<Index>(std::llround(std::pow(m.d(), 2 * n)));
        Matrix block(rows, N * N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) block.col(i * N + j) = vec(qj_matrix(m, matrix_unit(N, i, j), n));
        Matrix next(stacked.rows() + rows, N * N);
        next << stacked, block;
        stacked = std::move(next);
        Eigen::BDCSVD<Matrix> svd(stacked);
        const RealVector sv = svd.singularValues();
        const double top = sv.size() ? std::max(sv(0), 1e-300) : 1.0;
        int rank = 0;
        for (Index k = 0; k < sv.size(); ++k)
            if (sv(k) > tol * top) ++rank;
        out.push_back(N * N - rank);
    }
    return out;
}

inline D1Report d1_check(const CouplingModel& m, int n_max, int direct_max = 3, double tol = 1e-9) {
    if (n_max < 0) throw InvalidInput("d1_check: n_max must be >= 0");
    D1Report r;
    r.irreducible = is_irreducible(transition_channel(m)).irreducible;
    auto et = build_extended(m);
    const int depth = std::max(n_max, static_cast<int>(et.gns.dim()));
    auto sums = detail::zprime_partial_sums(et, depth);
    for (int n = 0; n <= depth; ++n) {
        auto [kdim, _] = detail::psd_kernel(sums[n], tol);
        if (n <= n_max) {
            r.min_eig.push_back(min_eigenvalue(sums[n]));
            r.kernel_dims.push_back(kdim);
        }
        if (kdim == 0 && n <= n_max && !r.first_positive) r.first_positive = n;
        if (n == depth) r.injective = kdim == 0;
    }
    int dmax = std::min(n_max, direct_max);
    while (dmax > 0 && m.chain_dim(dmax) > m.max_chain_dim) --dmax;
    r.direct_kernel_dims = direct_kernel_dims(m, dmax, tol);
    r.result = r.irreducible && r.injective;
    return r;
}

struct ObservabilityReport {
    std::vector<int> n_values;
    std::vector<int> ranks;
    std::vector<RealVector> singular_values;
    std::optional<int> full_rank_at;
    int full_rank = 0;  // N^2
};

// Chain marginal of the reverse-evolved sigma kron psi_n, for every matrix unit sigma = E_ij.
// out[i*N + j] = Tr_sys[U^r (E_ij kron psi_n) U^r*]
inline std::vector<Matrix> observability_images(const CouplingModel& m, int n) {
    const CouplingModel r = m.reversed();
    const int N = m.N();
    r.guard(n);
    const Matrix ur = chain_unitary(r, n).matrix;
    const Matrix root = psd_sqrt(psi_power(m, n));
    const Index D = root.rows();
    // column block i of U^r (1 kron psi_n^{1/2})
    std::vector<Matrix> cols(N);
    for (int i = 0; i < N; ++i) cols[i] = ur.middleCols(i * D, D) * root;
    std::vector<Matrix> out(static_cast<std::size_t>(N) * N, Matrix::Zero(D, D));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            Matrix& o = out[static_cast<std::size_t>(i) * N + j];
            for (int s = 0; s < N; ++s) o.noalias() += cols[i].middleRows(s * D, D) * cols[j].middleRows(s * D, D).adjoint();
        }
    return out;
}

// Image of an arbitrary system operator X under the observability map at depth n.
inline Matrix observability_apply(const CouplingModel& m, const Matrix& x, int n) {
    const auto imgs = observability_images(m, n);
    const int N = m.N();
    Matrix out = Matrix::Zero(imgs[0].rows(), imgs[0].cols());
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) out += x(i, j) * imgs[static_cast<std::size_t>(i) * N + j];
    return out;
}

// sup over ||c||_{psi_n} = 1 of |Tr(X c)|
inline double observed_norm(const CouplingModel& m, const Matrix& x_chain, int n) {
    return (psd_inverse_sqrt(psi_power(m, n)) * x_chain).norm();
}

inline ObservabilityReport observability_check(const CouplingModel& m, int n_max, double rel_tol = 1e-6) {
    if (n_max < 1) throw InvalidInput("observability_check: n_max must be >= 1");
    m.guard(n_max);
    const int N = m.N();
    ObservabilityReport rep;
    rep.full_rank = N * N;
    for (int n = 1; n <= n_max; ++n) {
        const auto imgs = observability_images(m, n);
        Matrix gram(N * N, N * N);
        for (int p = 0; p < N * N; ++p)
            for (int q = p; q < N * N; ++q) {
                const cplx g = (imgs[p].array().conjugate() * imgs[q].array()).sum();
                gram(p, q) = g;
                gram(q, p) = std::conj(g);
            }
        auto es = hermitian_eigen(gram);
        RealVector sv = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
        const double top = std::max(sv(0), 1e-300);
        int rank = 0;
        for (Index k = 0; k < sv.size(); ++k)
            if (sv(k) > rel_tol * top) ++rank;
        rep.n_values.push_back(n);
        rep.ranks.push_back(rank);
        rep.singular_values.push_back(sv);
        if (rank == N * N && !rep.full_rank_at) rep.full_rank_at = n;
    }
    return rep;
}

}  // namespace qprep
