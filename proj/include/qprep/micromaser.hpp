// micromaser.hpp - truncated micromaser couplings built from 2x2 doublet
// blocks, the resonant Jaynes-Cummings preset, geometric stationary pairs
// and the birth-death reduction on the diagonal.
//
// Basis: system level n (0..N-1), ancilla index 0 = excited, 1 = ground.
// Joint index |n, e> -> 2n + e. Doublet n couples |n-1, excited> and
// |n, ground>; the top vector |N-1, excited> is left fixed.
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "transition.hpp"

namespace qprep {

// [[alpha_plus, beta_plus], [beta, alpha]]
using DoubletBlock = std::array<cplx, 4>;

struct MicromaserParams {
    int N = 2;
    std::vector<DoubletBlock> blocks;  // doublets n = 1..N-1
    cplx alpha0 = 1.0;
    double lambda = 0.0;

    cplx alpha_plus(int n) const { return n >= N ? cplx(1.0) : blocks.at(n - 1)[0]; }
    cplx beta_plus(int n) const { return n >= N || n < 1 ? cplx(0.0) : blocks.at(n - 1)[1]; }
    cplx beta(int n) const { return n >= N || n < 1 ? cplx(0.0) : blocks.at(n - 1)[2]; }
    cplx alpha(int n) const { return n == 0 ? alpha0 : blocks.at(n - 1)[3]; }

    void validate(double tol = 1e-12) const {
        if (N < 2) throw InvalidInput("micromaser: N must be >= 2");
        if (static_cast<int>(blocks.size()) != N - 1)
            throw DimensionMismatch("micromaser: expected " + std::to_string(N - 1) + " doublet blocks");
        if (!(lambda >= 0.0 && lambda < 0.5)) throw InvalidInput("micromaser: lambda must lie in [0, 1/2)");
        if (std::abs(std::abs(alpha0) - 1.0) > tol) throw InvalidInput("micromaser: alpha0 must be unimodular");
        for (int n = 1; n < N; ++n) {
            const auto& b = blocks[n - 1];
            Matrix m(2, 2);
            m << b[0], b[1], b[2], b[3];
            const double defect = unitarity_defect(m);
            if (defect > tol)
                throw InvalidInput("micromaser: doublet " + std::to_string(n) + " is not unitary (defect " +
                                   std::to_string(defect) + ")");
        }
    }
};

inline DoubletBlock identity_block() { return {cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0)}; }

inline MicromaserParams jc_resonant(double omega0_T, int N, double lambda) {
    if (N < 2) throw InvalidInput("jc_resonant: N must be >= 2");
    MicromaserParams p;
    p.N = N;
    p.lambda = lambda;
    p.alpha0 = 1.0;
    const cplx mi(0.0, -1.0);
    for (int n = 1; n < N; ++n) {
        const double ang = std::sqrt(static_cast<double>(n)) * omega0_T / 2.0;
        p.blocks.push_back({cplx(std::cos(ang)), mi * std::sin(ang), mi * std::sin(ang), cplx(std::cos(ang))});
    }
    return p;
}

inline Matrix micromaser_unitary(const MicromaserParams& p) {
    const int N = p.N;
    Matrix u = Matrix::Zero(2 * N, 2 * N);
    u(1, 1) = p.alpha0;
    for (int n = 1; n < N; ++n) {
        const Index up = 2 * (n - 1), down = 2 * n + 1;
        const auto& b = p.blocks[n - 1];
        u(up, up) = b[0];
        u(up, down) = b[1];
        u(down, up) = b[2];
        u(down, down) = b[3];
    }
    u(2 * (N - 1), 2 * (N - 1)) = 1.0;
    return u;
}

// Truncated geometric weights nu(n) ~ (lambda / (1 - lambda))^n.
inline RealVector geometric_weights(int N, double lambda) {
    if (!(lambda >= 0.0 && lambda < 0.5)) throw InvalidInput("lambda must lie in [0, 1/2)");
    RealVector nu(N);
    const double r = lambda / (1.0 - lambda);
    double w = 1.0;
    for (int n = 0; n < N; ++n) {
        nu(n) = w;
        w *= r;
    }
    return nu / nu.sum();
}

inline std::pair<DensityState, DensityState> lambda_stationary(const MicromaserParams& p) {
    if (!(p.lambda >= 0.0 && p.lambda < 0.5)) throw InvalidInput("lambda must lie in [0, 1/2)");
    RealVector q(2);
    q << p.lambda, 1.0 - p.lambda;
    return {DensityState::diagonal(geometric_weights(p.N, p.lambda)), DensityState::diagonal(q)};
}

inline CouplingModel build_micromaser(const MicromaserParams& p) {
    p.validate();
    auto [phi, psi] = lambda_stationary(p);
    return make_model(micromaser_unitary(p), p.N, 2, phi, psi);
}

struct BirthDeathMatrix {
    Eigen::MatrixXd rows;
    double leakage = 0.0;  // largest off-diagonal entry of T(diagonal)
};

// Restriction of the transition channel to diagonal matrices:
// T(f)(n) = sum_m rows(n, m) f(m).
inline BirthDeathMatrix birth_death_reduction(const KrausChannel& ch, double leak_tol = 1e-12) {
    const int N = ch.dim;
    BirthDeathMatrix bd;
    bd.rows = Eigen::MatrixXd::Zero(N, N);
    for (int m = 0; m < N; ++m) {
        Matrix t = ch.apply(matrix_unit(N, m, m));
        for (int n = 0; n < N; ++n) {
            bd.rows(n, m) = t(n, n).real();
            for (int k = 0; k < N; ++k)
                if (k != n) bd.leakage = std::max(bd.leakage, std::abs(t(n, k)));
            bd.leakage = std::max(bd.leakage, std::abs(t(n, n).imag()));
        }
    }
    if (bd.leakage > leak_tol)
        throw PreconditionViolated("birth_death_reduction: diagonal leakage " + std::to_string(bd.leakage));
    return bd;
}

inline BirthDeathMatrix birth_death_reduction(const CouplingModel& m, double leak_tol = 1e-12) {
    return birth_death_reduction(transition_channel(m), leak_tol);
}

struct TrappedScan {
    std::vector<int> interior;  // levels 1..N-1 with |beta_n| < tol
    int boundary_artifact = 0;  // the truncation always traps level N
};

inline TrappedScan trapped_scan(const MicromaserParams& p, double tol = 1e-10) {
    TrappedScan s;
    for (int n = 1; n < p.N; ++n)
        if (std::abs(p.beta(n)) < tol) s.interior.push_back(n);
    s.boundary_artifact = p.N;
    return s;
}

// Stationary mass above level N of the untruncated geometric law.
inline double geometric_escape_bound(int N, double lambda) {
    const double r = lambda / (1.0 - lambda);
    return std::pow(r, N) / (1.0 - r);
}

}  // namespace qprep
