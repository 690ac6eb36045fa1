// transition.hpp - coupling models, the transitions J / J_n, the conditional
// expectations P and Q, the transition channel and state evolution under
// chain inputs.
#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace qprep {

enum class Direction { forward, reverse };

inline const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "reverse"; }

inline constexpr long long kDefaultChainCap = 4096;

struct CouplingModel {
    ComplexOperator u;  // dims [N, d]
    DensityState phi;   // system reference state
    DensityState psi;   // ancilla input state
    Direction direction = Direction::forward;
    long long max_chain_dim = kDefaultChainCap;
    Tolerances tol;

    int N() const { return u.dims[0]; }
    int d() const { return u.dims[1]; }

    // The unitary w with J(a) = w*(a kron 1)w.
    Matrix w() const { return direction == Direction::forward ? u.matrix : Matrix(u.matrix.adjoint()); }

    CouplingModel reversed() const {
        CouplingModel r = *this;
        r.direction = direction == Direction::forward ? Direction::reverse : Direction::forward;
        return r;
    }

    double phi_min_eig() const { return min_eigenvalue(phi.matrix); }
    double psi_min_eig() const { return min_eigenvalue(psi.matrix); }
    bool phi_faithful() const {
        return phi_min_eig() > tol.faithful * max_eigenvalue(phi.matrix);
    }
    bool psi_faithful() const {
        return psi_min_eig() > tol.faithful * max_eigenvalue(psi.matrix);
    }

    long long chain_dim(int slots) const {
        long long dim = N();
        for (int k = 0; k < slots; ++k) {
            dim *= d();
            if (dim > (1LL << 40)) break;
        }
        return dim;
    }
    void guard(int slots) const {
        const long long dim = chain_dim(slots);
        if (dim > max_chain_dim) throw ChainCapExceeded(dim, max_chain_dim);
    }
};

inline double unitarity_defect(const Matrix& u) {
    return (u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

inline CouplingModel make_model(const Matrix& u, int N, int d, const DensityState& phi,
                                const DensityState& psi, Direction dir = Direction::forward,
                                double unitary_tol = 1e-10) {
    if (N < 1 || d < 1) throw DimensionMismatch("make_model: dimensions must be positive");
    if (u.rows() != N * d || u.cols() != N * d)
        throw DimensionMismatch("make_model: unitary is not (N*d)x(N*d)");
    if (phi.side() != N) throw DimensionMismatch("make_model: phi is not on the system");
    if (psi.side() != d) throw DimensionMismatch("make_model: psi is not on the ancilla");
    const double defect = unitarity_defect(u);
    if (defect > unitary_tol)
        throw InvalidInput("make_model: ||u*u - 1|| = " + std::to_string(defect));
    CouplingModel m;
    m.u = ComplexOperator(u, FactorDims{N, d});
    m.phi = DensityState(phi.matrix, FactorDims{N}, phi.tol);
    m.psi = DensityState(psi.matrix, FactorDims{d}, psi.tol);
    m.direction = dir;
    return m;
}

// ---- slot-local action of the coupling on [N, d^n] -------------------------

// Row groups of the [system, slot j] subsystem; each group is ordered as the
// row-major index (s, c_j) so a (N*d)x(N*d) matrix acts on it directly.
inline std::vector<std::vector<Index>> slot_groups(int N, int d, int slots, int j) {
    if (j < 1 || j > slots) throw DimensionMismatch("slot index out of range");
    Index D = 1;
    for (int k = 0; k < slots; ++k) D *= d;
    Index stride = 1;
    for (int k = j; k < slots; ++k) stride *= d;
    std::vector<std::vector<Index>> groups;
    groups.reserve(static_cast<std::size_t>(D / d));
    for (Index c = 0; c < D; ++c) {
        if ((c / stride) % d != 0) continue;
        std::vector<Index> g;
        g.reserve(static_cast<std::size_t>(N * d));
        for (int s = 0; s < N; ++s)
            for (int cj = 0; cj < d; ++cj) g.push_back(s * D + cj * stride + c);
        groups.push_back(std::move(g));
    }
    return groups;
}

// X <- M_(j) X
inline void apply_left(Matrix& x, const Matrix& m, const std::vector<std::vector<Index>>& groups) {
    for (const auto& g : groups) {
        Matrix tmp = m * x(g, Eigen::all);
        x(g, Eigen::all) = tmp;
    }
}

// X <- X M_(j)
inline void apply_right(Matrix& x, const Matrix& m, const std::vector<std::vector<Index>>& groups) {
    for (const auto& g : groups) {
        Matrix tmp = x(Eigen::all, g) * m;
        x(Eigen::all, g) = tmp;
    }
}

// ---- transitions -----------------------------------------------------------

inline void require_system_operator(const CouplingModel& m, const Matrix& a) {
    if (a.rows() != m.N() || a.cols() != m.N())
        throw DimensionMismatch("operator is not on the system factor");
}

inline ComplexOperator apply_J(const CouplingModel& m, const ComplexOperator& a) {
    require_system_operator(m, a.matrix);
    const Matrix w = m.w();
    Matrix z = w.adjoint() * kron(a.matrix, Matrix::Identity(m.d(), m.d())) * w;
    return ComplexOperator(z, FactorDims{m.N(), m.d()});
}

inline ComplexOperator chain_unitary(const CouplingModel& m, int n) {
    if (n < 1) throw InvalidInput("chain_unitary: n must be >= 1");
    m.guard(n);
    const Index D = m.chain_dim(n);
    Matrix x = Matrix::Identity(D, D);
    const Matrix w = m.w();
    for (int j = 1; j <= n; ++j) apply_left(x, w, slot_groups(m.N(), m.d(), n, j));
    return ComplexOperator(x, FactorDims::chain(m.N(), m.d(), n));
}

// J_n(a) = U_n*(a kron 1)U_n evaluated slot by slot.
inline Matrix apply_Jn_matrix(const CouplingModel& m, const Matrix& a, int n) {
    require_system_operator(m, a);
    if (n < 0) throw InvalidInput("apply_Jn: n must be >= 0");
    if (n == 0) return a;
    m.guard(n);
    Index D = m.chain_dim(n) / m.N();
    Matrix x = kron(a, Matrix::Identity(D, D));
    const Matrix w = m.w();
    const Matrix wa = w.adjoint();
    for (int j = n; j >= 1; --j) {
        auto g = slot_groups(m.N(), m.d(), n, j);
        apply_right(x, w, g);
        apply_left(x, wa, g);
    }
    return x;
}

inline ComplexOperator apply_Jn(const CouplingModel& m, const ComplexOperator& a, int n) {
    if (n < 1) throw InvalidInput("apply_Jn: n must be >= 1");
    return ComplexOperator(apply_Jn_matrix(m, a.matrix, n), FactorDims::chain(m.N(), m.d(), n));
}

// Recursive route: J_n(a) = w_(1)* (J_{n-1}(a) with an identity slot inserted at slot 1) w_(1).
inline Matrix apply_Jn_recursive(const CouplingModel& m, const Matrix& a, int n) {
    require_system_operator(m, a);
    m.guard(n);
    const int N = m.N(), d = m.d();
    Matrix prev = a;
    const Matrix w = m.w();
    for (int k = 1; k <= n; ++k) {
        // prev lives on [N, d^(k-1)]; embed as [N, 1_d, d^(k-1)]
        const Index Dp = prev.rows() / N;
        Matrix big = Matrix::Zero(prev.rows() * d, prev.cols() * d);
        for (int s = 0; s < N; ++s)
            for (int t = 0; t < N; ++t)
                big.block(s * d * Dp, t * d * Dp, d * Dp, d * Dp) =
                    kron(Matrix::Identity(d, d), prev.block(s * Dp, t * Dp, Dp, Dp));
        auto g = slot_groups(N, d, k, 1);
        apply_right(big, w, g);
        apply_left(big, w.adjoint(), g);
        prev = std::move(big);
    }
    return prev;
}

// ---- conditional expectations ----------------------------------------------

inline int slots_of(const CouplingModel& m, const Matrix& z) {
    Index D = z.rows() / m.N();
    if (D * m.N() != z.rows() || z.rows() != z.cols())
        throw DimensionMismatch("operator is not on the system-chain space");
    int n = 0;
    while (D > 1) {
        if (D % m.d() != 0) throw DimensionMismatch("chain dimension is not a power of d");
        D /= m.d();
        ++n;
    }
    return n;
}

// Q_n(z) = Tr_sys[(rho_phi kron 1) z], an operator on the chain.
inline Matrix q_expectation_matrix(const Matrix& rho_phi, const Matrix& z) {
    const Index N = rho_phi.rows();
    const Index D = z.rows() / N;
    Matrix out = Matrix::Zero(D, D);
    for (Index s = 0; s < N; ++s)
        for (Index t = 0; t < N; ++t)
            if (rho_phi(t, s) != cplx(0.0)) out += rho_phi(t, s) * z.block(s * D, t * D, D, D);
    return out;
}

inline ComplexOperator q_expectation(const CouplingModel& m, const ComplexOperator& z) {
    const int n = slots_of(m, z.matrix);
    return ComplexOperator(q_expectation_matrix(m.phi.matrix, z.matrix),
                           n > 0 ? FactorDims::slots(m.d(), n) : FactorDims{1});
}

// Tr_chain[(1 kron chain_rho) z], an operator on the system.
inline Matrix chain_expectation_matrix(const Matrix& chain_rho, const Matrix& z, Index N) {
    const Index D = chain_rho.rows();
    if (z.rows() != N * D) throw DimensionMismatch("chain expectation: dimension mismatch");
    Matrix out(N, N);
    const Matrix rt = chain_rho.transpose();
    for (Index s = 0; s < N; ++s)
        for (Index t = 0; t < N; ++t) out(s, t) = (rt.array() * z.block(s * D, t * D, D, D).array()).sum();
    return out;
}

inline Matrix psi_power(const CouplingModel& m, int n) { return tensor_power(m.psi.matrix, n); }

inline ComplexOperator p_expectation(const CouplingModel& m, const ComplexOperator& z) {
    const int n = slots_of(m, z.matrix);
    return ComplexOperator(chain_expectation_matrix(psi_power(m, n), z.matrix, m.N()),
                           FactorDims{m.N()});
}

// ---- Kraus channels ----------------------------------------------------------

struct KrausChannel {
    std::vector<Matrix> kraus_ops;
    int dim = 0;

    KrausChannel() = default;
    KrausChannel(std::vector<Matrix> ops, int n) : kraus_ops(std::move(ops)), dim(n) {
        for (const auto& k : kraus_ops)
            if (k.rows() != dim || k.cols() != dim) throw DimensionMismatch("Kraus operator size");
    }

    // Heisenberg picture: T(x) = sum M* x M
    Matrix apply(const Matrix& x) const {
        Matrix out = Matrix::Zero(dim, dim);
        for (const auto& k : kraus_ops) out.noalias() += k.adjoint() * x * k;
        return out;
    }
    // Schroedinger picture: T_*(rho) = sum M rho M*
    Matrix apply_pre(const Matrix& rho) const {
        Matrix out = Matrix::Zero(dim, dim);
        for (const auto& k : kraus_ops) out.noalias() += k * rho * k.adjoint();
        return out;
    }
    Matrix apply_pow(Matrix x, int n) const {
        for (int k = 0; k < n; ++k) x = apply(x);
        return x;
    }
    // Row-major vec: vec(T_*(rho)) = S vec(rho), S = sum M kron conj(M).
    Matrix preadjoint_superoperator() const {
        Matrix s = Matrix::Zero(dim * dim, dim * dim);
        for (const auto& k : kraus_ops) s += kron(k, k.conjugate());
        return s;
    }
    Matrix heisenberg_superoperator() const {
        Matrix s = Matrix::Zero(dim * dim, dim * dim);
        for (const auto& k : kraus_ops) s += kron(k.adjoint(), k.transpose());
        return s;
    }
    double unitality_defect() const {
        Matrix s = Matrix::Zero(dim, dim);
        for (const auto& k : kraus_ops) s += k.adjoint() * k;
        return (s - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
    }
    // max |Tr T_*(E_ij) - delta_ij| over matrix units
    double trace_preservation_defect() const {
        double worst = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                const cplx t = apply_pre(matrix_unit(dim, i, j)).trace();
                worst = std::max(worst, std::abs(t - cplx(i == j ? 1.0 : 0.0)));
            }
        return worst;
    }
};

inline KrausChannel transition_channel(const CouplingModel& m, double drop = 1e-14) {
    auto es = hermitian_eigen(m.psi.matrix);
    if (es.eigenvalues().minCoeff() < -m.psi.tol) throw InvalidInput("transition_channel: psi is not PSD");
    const int N = m.N(), d = m.d();
    const Matrix w = m.w();
    std::vector<Matrix> ops;
    for (int k = 0; k < d; ++k) {
        const double lam = es.eigenvalues()(k);
        if (lam < drop) continue;
        // (1 kron |e_k>) : columns of w combined with e_k
        Matrix we(N * d, N);
        for (int s = 0; s < N; ++s) {
            Vector col = Vector::Zero(N * d);
            for (int c = 0; c < d; ++c) col += es.eigenvectors()(c, k) * w.col(s * d + c);
            we.col(s) = col;
        }
        for (int l = 0; l < d; ++l) {
            Matrix mk(N, N);
            for (int r = 0; r < N; ++r) mk.row(r) = we.row(r * d + l);
            ops.push_back(std::sqrt(lam) * mk);
        }
    }
    return KrausChannel(std::move(ops), N);
}

// Kraus family of a completely positive Heisenberg map given as a function.
template <class F>
KrausChannel kraus_from_map(F&& heis, int n, double drop = 1e-13) {
    Matrix choi = Matrix::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Matrix img = heis(matrix_unit(n, i, j));
            choi.block(i * n, j * n, n, n) = img;
        }
    auto es = hermitian_eigen(choi);
    const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    if (es.eigenvalues().minCoeff() < -1e-9 * top)
        throw PreconditionViolated("kraus_from_map: map is not completely positive");
    std::vector<Matrix> ops;
    for (int k = 0; k < n * n; ++k) {
        const double lam = es.eigenvalues()(k);
        if (lam <= drop * top) continue;
        Vector v = std::sqrt(lam) * es.eigenvectors().col(k);
        Matrix kstar(n, n);
        for (int i = 0; i < n; ++i) kstar.col(i) = v.segment(i * n, n);
        ops.push_back(kstar.adjoint());
    }
    return KrausChannel(std::move(ops), n);
}

// ---- chain inputs and evolution ---------------------------------------------

// A chain state given as a product of blocks; each block is a density on
// one or more consecutive slots (possibly entangled inside the block).
struct ChainInput {
    int ancilla_dim = 0;
    std::vector<Matrix> blocks;
    std::vector<int> block_slots;

    ChainInput() = default;
    explicit ChainInput(int d) : ancilla_dim(d) {}

    int total_slots() const {
        int s = 0;
        for (int b : block_slots) s += b;
        return s;
    }
    void append(const Matrix& rho, int slots) {
        Index side = 1;
        for (int k = 0; k < slots; ++k) side *= ancilla_dim;
        if (rho.rows() != side || rho.cols() != side)
            throw DimensionMismatch("chain block does not match slot count");
        blocks.push_back(rho);
        block_slots.push_back(slots);
    }
    void append(const ChainInput& other) {
        if (other.ancilla_dim != ancilla_dim && !other.blocks.empty())
            throw DimensionMismatch("chain inputs use different ancilla dimensions");
        for (std::size_t k = 0; k < other.blocks.size(); ++k) append(other.blocks[k], other.block_slots[k]);
    }
    Matrix dense() const {
        Matrix out = Matrix::Identity(1, 1);
        for (const auto& b : blocks) out = kron(out, b);
        return out;
    }
    DensityState density() const {
        return DensityState(dense(), FactorDims::slots(ancilla_dim, total_slots()), 1e-8);
    }

    static ChainInput single(const Matrix& rho, int d, int slots) {
        ChainInput c(d);
        c.append(rho, slots);
        return c;
    }
    static ChainInput product(const Matrix& rho1, int d, int n) {
        ChainInput c(d);
        for (int k = 0; k < n; ++k) c.append(rho1, 1);
        return c;
    }
};

// R with R R* = h for PSD h, dropping negligible eigenvalues.
inline Matrix low_rank_root(const Matrix& h) {
    auto es = hermitian_eigen(h);
    const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    std::vector<Index> keep;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-15 * top) keep.push_back(i);
    Matrix r(h.rows(), static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        r.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(es.eigenvalues()(keep[c]));
    return r;
}

// Tr_chain[U_k (rho kron theta) U_k*] for a single block of k slots.
inline Matrix evolve_block(const CouplingModel& m, const Matrix& rho, const Matrix& theta, int k) {
    const Matrix w = m.w();
    if (k == 1) {
        Matrix x = w * kron(rho, theta) * w.adjoint();
        return partial_trace(x, FactorDims{m.N(), m.d()}, {0});
    }
    m.guard(k);
    // rho kron theta = Y Y* with Y = A kron B; only U_k Y is needed.
    Matrix y = kron(low_rank_root(rho), low_rank_root(theta));
    for (int j = 1; j <= k; ++j) apply_left(y, w, slot_groups(m.N(), m.d(), k, j));
    const Index D = theta.rows();
    Matrix out(m.N(), m.N());
    for (int s = 0; s < m.N(); ++s)
        for (int t = 0; t < m.N(); ++t)
            out(s, t) = (y.middleRows(s * D, D).array() * y.middleRows(t * D, D).conjugate().array()).sum();
    return out;
}

inline Matrix evolve_matrix(const CouplingModel& m, const Matrix& rho, const ChainInput& theta) {
    if (theta.ancilla_dim != m.d() && !theta.blocks.empty())
        throw DimensionMismatch("evolve_state: chain ancilla dimension mismatch");
    Matrix r = rho;
    for (std::size_t b = 0; b < theta.blocks.size(); ++b)
        r = hermitian_part(evolve_block(m, r, theta.blocks[b], theta.block_slots[b]));
    return r;
}

inline DensityState evolve_state(const CouplingModel& m, const DensityState& sigma, const ChainInput& theta) {
    if (sigma.side() != m.N()) throw DimensionMismatch("evolve_state: sigma is not on the system");
    return DensityState(evolve_matrix(m, sigma.matrix, theta), FactorDims{m.N()}, 1e-8);
}

inline DensityState evolve_state(const CouplingModel& m, const DensityState& sigma, const DensityState& theta) {
    int n = 0;
    Index side = theta.side();
    while (side > 1) {
        if (side % m.d()) throw DimensionMismatch("evolve_state: theta is not on chain slots");
        side /= m.d();
        ++n;
    }
    return evolve_state(m, sigma, ChainInput::single(theta.matrix, m.d(), n));
}

}  // namespace qprep
