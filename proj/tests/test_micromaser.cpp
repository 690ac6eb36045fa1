#include <gtest/gtest.h>

#include "qprep/micromaser.hpp"
#include "qprep/random.hpp"
#include "qprep/stationary.hpp"

using namespace qprep;

namespace {

// Independent construction of u from the operator block form
// u = [[a+, s* b+], [b s, a]] with respect to the ancilla (excited, ground).
Matrix block_form_unitary(const MicromaserParams& p) {
    const int N = p.N;
    Matrix ap = Matrix::Zero(N, N), a = Matrix::Zero(N, N), b = Matrix::Zero(N, N), bp = Matrix::Zero(N, N),
           s = Matrix::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        ap(n, n) = n + 1 < N ? p.blocks[n][0] : cplx(1.0);
        a(n, n) = n == 0 ? p.alpha0 : p.blocks[n - 1][3];
        b(n, n) = n == 0 ? cplx(0.0) : p.blocks[n - 1][2];
        bp(n, n) = n == 0 ? cplx(0.0) : p.blocks[n - 1][1];
        if (n + 1 < N) s(n + 1, n) = 1.0;
    }
    Matrix u = Matrix::Zero(2 * N, 2 * N);
    Matrix blocks[2][2] = {{ap, s.adjoint() * bp}, {b * s, a}};
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c)
            for (int e = 0; e < 2; ++e)
                for (int f = 0; f < 2; ++f) u(2 * r + e, 2 * c + f) = blocks[e][f](r, c);
    return u;
}

MicromaserParams random_params(Rng& rng, int N, double lambda) {
    MicromaserParams p;
    p.N = N;
    p.lambda = lambda;
    std::uniform_real_distribution<double> ph(0, 2 * std::numbers::pi);
    p.alpha0 = std::polar(1.0, ph(rng));
    for (int n = 1; n < N; ++n) {
        Matrix h = haar_unitary(rng, 2);
        p.blocks.push_back({h(0, 0), h(0, 1), h(1, 0), h(1, 1)});
    }
    return p;
}

}  // namespace

TEST(Micromaser, IdentityBlocks) {
    MicromaserParams p;
    p.N = 4;
    p.lambda = 0.2;
    p.blocks.assign(3, identity_block());
    EXPECT_LT((micromaser_unitary(p) - Matrix::Identity(8, 8)).norm(), 1e-15);
    auto scan = trapped_scan(p);
    EXPECT_EQ(scan.interior, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(scan.boundary_artifact, 4);
}

TEST(Micromaser, MatchesBlockOperatorForm) {
    Rng rng(50);
    for (int t = 0; t < 5; ++t) {
        auto p = random_params(rng, 5, 0.3);
        EXPECT_LT((micromaser_unitary(p) - block_form_unitary(p)).norm(), 1e-14);
        EXPECT_LT(unitarity_defect(micromaser_unitary(p)), 1e-12);
    }
}

TEST(Micromaser, FirstDoubletRelation) {
    Rng rng(51);
    auto p = random_params(rng, 4, 0.2);
    Matrix u = micromaser_unitary(p);
    Vector in = Vector::Zero(8);
    in(0) = 1;  // delta_0 kron excited
    Vector expect = Vector::Zero(8);
    expect(0) = p.blocks[0][0];
    expect(3) = p.blocks[0][2];  // delta_1 kron ground
    EXPECT_LT((u * in - expect).norm(), 1e-15);
}

TEST(Micromaser, StationaryProductCommutes) {
    auto m = build_micromaser(jc_resonant(std::numbers::pi / 3, 6, 1.0 / 3));
    Matrix rho = kron(m.phi.matrix, m.psi.matrix);
    EXPECT_LT((m.u.matrix * rho - rho * m.u.matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(JcResonant, Presets) {
    auto p0 = jc_resonant(0.0, 5, 0.2);
    for (const auto& b : p0.blocks) {
        EXPECT_EQ(b[0], cplx(1.0));
        EXPECT_EQ(b[2], cplx(0.0));
    }
    auto p2 = jc_resonant(2 * std::numbers::pi, 5, 0.2);
    EXPECT_LT(std::abs(p2.beta(1)), 1e-15);
    // sqrt(4) * pi also vanishes
    EXPECT_EQ(trapped_scan(p2).interior, (std::vector<int>{1, 4}));
    for (int n = 1; n < 5; ++n)
        EXPECT_NEAR(std::abs(p2.beta(n)), std::abs(std::sin(std::sqrt(n) * std::numbers::pi)), 1e-15);
    EXPECT_TRUE(trapped_scan(jc_resonant(std::numbers::pi / 3, 8, 0.2)).interior.empty());
}

// exp(-i H) for the doublet restriction H = (w/2) sqrt(n) [[0,1],[1,0]] of the
// resonant interaction, computed from the eigendecomposition of H.
TEST(JcResonant, MatchesExponentiatedHamiltonian) {
    Rng rng(52);
    std::uniform_real_distribution<double> uw(0.1, 10.0);
    for (int t = 0; t < 5; ++t) {
        const double w = uw(rng);
        auto p = jc_resonant(w, 6, 0.2);
        for (int n = 1; n < 6; ++n) {
            Matrix h(2, 2);
            h << 0, 1, 1, 0;
            h *= w / 2 * std::sqrt(n);
            Eigen::SelfAdjointEigenSolver<Matrix> es(h);
            Vector ph(2);
            for (int k = 0; k < 2; ++k) ph(k) = std::exp(cplx(0, -es.eigenvalues()(k)));
            Matrix ex = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
            const auto& b = p.blocks[n - 1];
            EXPECT_NEAR(std::abs(b[0]), std::abs(ex(0, 0)), 1e-12);
            EXPECT_NEAR(std::abs(b[1]), std::abs(ex(0, 1)), 1e-12);
            EXPECT_NEAR(std::abs(b[2]), std::abs(ex(1, 0)), 1e-12);
            EXPECT_NEAR(std::abs(b[3]), std::abs(ex(1, 1)), 1e-12);
            EXPECT_LT((ex - Matrix([&] {
                           Matrix m(2, 2);
                           m << b[0], b[1], b[2], b[3];
                           return m;
                       }())).norm(),
                      1e-12);
        }
    }
}

TEST(Micromaser, ChannelMatchesOperatorFormula) {
    Rng rng(53);
    auto p = random_params(rng, 5, 0.3);
    auto ch = transition_channel(build_micromaser(p));
    const int N = p.N;
    Matrix ap = Matrix::Zero(N, N), a = Matrix::Zero(N, N), b = Matrix::Zero(N, N), bp = Matrix::Zero(N, N),
           s = Matrix::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        ap(n, n) = p.alpha_plus(n + 1);
        a(n, n) = p.alpha(n);
        b(n, n) = p.beta(n);
        bp(n, n) = p.beta_plus(n);
        if (n + 1 < N) s(n + 1, n) = 1.0;
    }
    const double l = p.lambda;
    for (int t = 0; t < 5; ++t) {
        Matrix x = ginibre(rng, N, N);
        Matrix ref = l * (ap.adjoint() * x * ap + s.adjoint() * b.adjoint() * x * b * s) +
                     (1 - l) * (bp.adjoint() * s * x * s.adjoint() * bp + a.adjoint() * x * a);
        EXPECT_LT((ch.apply(x) - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(BirthDeath, ClosedForms) {
    for (double l : {0.1, 1.0 / 3, 0.45}) {
        auto p = jc_resonant(std::numbers::pi / 3, 6, l);
        auto bd = birth_death_reduction(build_micromaser(p));
        const auto& R = bd.rows;
        auto A = [&](int n) { return std::norm(p.alpha_plus(n)); };
        auto B = [&](int n) { return std::norm(p.beta(n)); };
        EXPECT_NEAR(R(0, 0), (1 - l) + l * A(1), 1e-12);
        EXPECT_NEAR(R(0, 1), l * B(1), 1e-12);
        for (int n = 1; n < 6; ++n) {
            EXPECT_NEAR(R(n, n - 1), (1 - l) * B(n), 1e-12);
            EXPECT_NEAR(R(n, n), (1 - l) * std::norm(p.alpha(n)) + l * (n + 1 < 6 ? A(n + 1) : 1.0), 1e-12);
            if (n + 1 < 6) EXPECT_NEAR(R(n, n + 1), l * B(n + 1), 1e-12);
        }
        for (int n = 0; n < 6; ++n) {
            EXPECT_NEAR(R.row(n).sum(), 1.0, 1e-12);
            for (int m = 0; m < 6; ++m)
                if (std::abs(n - m) > 1) EXPECT_EQ(R(n, m), 0.0);
        }
        RealVector nu = geometric_weights(6, l);
        EXPECT_LT((R.transpose() * nu - nu).lpNorm<1>(), 1e-12);
        // detailed balance across each doublet
        for (int n = 0; n + 1 < 6; ++n) EXPECT_NEAR(l * B(n + 1) * nu(n), (1 - l) * B(n + 1) * nu(n + 1), 1e-14);
    }
}

TEST(BirthDeath, PureDeath) {
    auto p = jc_resonant(std::numbers::pi / 3, 5, 0.0);
    auto R = birth_death_reduction(build_micromaser(p)).rows;
    EXPECT_NEAR(R(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(R(1, 0), std::norm(p.beta(1)), 1e-14);
    EXPECT_NEAR(R(1, 1), std::norm(p.alpha(1)), 1e-14);
    for (int n = 0; n < 5; ++n)
        for (int m = n + 1; m < 5; ++m) EXPECT_EQ(R(n, m), 0.0);
}

TEST(BirthDeath, ReverseModelSameReduction) {
    Rng rng(54);
    auto m = build_micromaser(random_params(rng, 6, 0.25));
    auto f = birth_death_reduction(m).rows;
    auto r = birth_death_reduction(m.reversed()).rows;
    EXPECT_LT((f - r).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BirthDeath, LeakageRejected) {
    Rng rng(55);
    auto m = make_model(haar_unitary(rng, 8), 4, 2, DensityState::maximally_mixed(FactorDims{4}),
                        DensityState::maximally_mixed(FactorDims{2}));
    EXPECT_THROW(birth_death_reduction(m), PreconditionViolated);
}

TEST(LambdaStationary, Weights) {
    auto p = jc_resonant(1.0, 6, 0.0);
    auto [phi0, psi0] = lambda_stationary(p);
    EXPECT_NEAR(phi0.matrix(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(psi0.matrix(1, 1).real(), 1.0, 1e-15);
    p.lambda = 1.0 / 3;
    auto [phi, psi] = lambda_stationary(p);
    for (int n = 0; n + 1 < 6; ++n) EXPECT_NEAR(phi.matrix(n + 1, n + 1).real() / phi.matrix(n, n).real(), 0.5, 1e-14);
    EXPECT_NEAR(psi.matrix(0, 0).real(), 1.0 / 3, 1e-15);
    p.lambda = 0.5;
    EXPECT_THROW(lambda_stationary(p), InvalidInput);
}

TEST(LambdaStationary, ProductStationaryExact) {
    Rng rng(56);
    auto m = build_micromaser(random_params(rng, 6, 0.3));
    Matrix rho = kron(m.phi.matrix, m.psi.matrix);
    EXPECT_LT(trace_norm(m.u.matrix * rho * m.u.matrix.adjoint() - rho), 1e-12);
}

TEST(Micromaser, EscapeMassBound) {
    for (double l : {0.1, 1.0 / 3, 0.45}) {
        RealVector big = geometric_weights(30, l);
        for (int N : {4, 8, 12}) {
            const double mass = big.tail(30 - N).sum();
            EXPECT_LE(mass, geometric_escape_bound(N, l) + 1e-15);
        }
    }
}

TEST(Micromaser, IrreducibilityMatchesTrapScan) {
    for (double w : {std::numbers::pi / 3, 2 * std::numbers::pi, 1.3}) {
        auto p = jc_resonant(w, 6, 1.0 / 3);
        bool trapped = !trapped_scan(p).interior.empty();
        EXPECT_EQ(is_irreducible(transition_channel(build_micromaser(p))).irreducible, !trapped);
    }
}

TEST(Micromaser, RejectsBadParams) {
    auto p = jc_resonant(1.0, 4, 0.2);
    p.blocks[1][0] = 2.0;
    EXPECT_THROW(build_micromaser(p), InvalidInput);
    p = jc_resonant(1.0, 4, 0.2);
    p.blocks.pop_back();
    EXPECT_THROW(build_micromaser(p), DimensionMismatch);
}
