// models.hpp - preset couplings and seeded random product-stationary models
#pragma once

#include "random.hpp"
#include "transition.hpp"

namespace qprep {

inline Matrix swap_unitary(int d) {
    Matrix s = Matrix::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s(i * d + j, j * d + i) = 1.0;
    return s;
}

inline Matrix pauli_x() {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}
inline Matrix pauli_y() {
    Matrix y(2, 2);
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    return y;
}
inline Matrix pauli_z() {
    Matrix z(2, 2);
    z << 1, 0, 0, -1;
    return z;
}

// u = SWAP on C^d kron C^d; phi = psi.
inline CouplingModel swap_model(const DensityState& psi) {
    const int d = static_cast<int>(psi.side());
    return make_model(swap_unitary(d), d, d, psi, psi);
}

inline CouplingModel swap_model(int d) { return swap_model(DensityState::maximally_mixed(FactorDims{d})); }

inline CouplingModel identity_model(const DensityState& phi, const DensityState& psi) {
    const int N = static_cast<int>(phi.side()), d = static_cast<int>(psi.side());
    return make_model(Matrix::Identity(N * d, N * d), N, d, phi, psi);
}

inline CouplingModel identity_model(int N, int d) {
    return identity_model(DensityState::maximally_mixed(FactorDims{N}),
                          DensityState::maximally_mixed(FactorDims{d}));
}

// Qubit system and ancilla: u = CNOT(system -> ancilla) * SWAP, tracial states.
// Then J(diag a) = 1 kron diag a while J(sigma_x) = sigma_x kron sigma_x.
inline Matrix twisted_flip_unitary() {
    Matrix cnot = Matrix::Zero(4, 4);
    cnot(0, 0) = cnot(1, 1) = 1.0;
    cnot(2, 3) = cnot(3, 2) = 1.0;
    return cnot * swap_unitary(2);
}

inline CouplingModel twisted_flip_model() {
    return make_model(twisted_flip_unitary(), 2, 2, DensityState::maximally_mixed(FactorDims{2}),
                      DensityState::maximally_mixed(FactorDims{2}));
}

// Haar coupling with tracial reference states (always product-stationary).
inline CouplingModel random_tracial_model(Rng& rng, int N, int d) {
    return make_model(haar_unitary(rng, N * d), N, d, DensityState::maximally_mixed(FactorDims{N}),
                      DensityState::maximally_mixed(FactorDims{d}));
}

// Geometric spectra p_i ~ r^i, q_k ~ r^k. The product density is constant on
// the level sets i + k = const, so a unitary that is block diagonal on those
// sets commutes with it. Random local bases hide the structure.
inline CouplingModel random_geometric_model(Rng& rng, int N, int d, double r) {
    RealVector p(N), q(d);
    for (int i = 0; i < N; ++i) p(i) = std::pow(r, i);
    for (int k = 0; k < d; ++k) q(k) = std::pow(r, k);
    p /= p.sum();
    q /= q.sum();
    Matrix u = Matrix::Zero(N * d, N * d);
    for (int level = 0; level <= N + d - 2; ++level) {
        std::vector<Index> idx;
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < d; ++k)
                if (i + k == level) idx.push_back(i * d + k);
        Matrix block = haar_unitary(rng, static_cast<Index>(idx.size()));
        u(idx, idx) = block;
    }
    Matrix V = haar_unitary(rng, N), W = haar_unitary(rng, d);
    Matrix L = kron(V, W);
    Matrix phi = V * p.cast<cplx>().asDiagonal() * V.adjoint();
    Matrix psi = W * q.cast<cplx>().asDiagonal() * W.adjoint();
    return make_model(L * u * L.adjoint(), N, d, DensityState(hermitian_part(phi)),
                      DensityState(hermitian_part(psi)));
}

// Mixed corpus used by the structural checks: alternates the two families.
inline CouplingModel random_stationary_model(Rng& rng, int N, int d, int index) {
    if (index % 2 == 0) return random_tracial_model(rng, N, d);
    std::uniform_real_distribution<double> ur(0.3, 0.8);
    return random_geometric_model(rng, N, d, ur(rng));
}

// trace norm of u(phi kron psi)u* - phi kron psi
inline double product_stationarity_defect(const CouplingModel& m) {
    Matrix rho = kron(m.phi.matrix, m.psi.matrix);
    const Matrix u = m.u.matrix;
    return trace_norm(u * rho * u.adjoint() - rho);
}

}  // namespace qprep
