#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qprep/random.hpp"
#include "qprep/tensor.hpp"

using namespace qprep;

TEST(TensorProduct, IdentityAndDiagonal) {
    auto a = identity_operator(FactorDims{2});
    auto b = identity_operator(FactorDims{3});
    auto ab = tensor_product(a, b);
    EXPECT_TRUE(ab.matrix.isApprox(Matrix::Identity(6, 6)));
    EXPECT_EQ(ab.dims, (FactorDims{2, 3}));

    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1;
    p1(1, 1) = 1;
    auto d = tensor_product(ComplexOperator(p0), ComplexOperator(p1));
    Matrix expect = Matrix::Zero(4, 4);
    expect(1, 1) = 1;
    EXPECT_EQ(d.matrix, expect);
}

TEST(TensorProduct, BasisBookkeeping) {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    auto xx = tensor_product(ComplexOperator(x), ComplexOperator(x));
    // |0,0> -> row index 0, |1,1> -> column index 3
    EXPECT_EQ(xx.matrix(0, 3), cplx(1.0));
}

TEST(TensorProduct, MatchesElementFormula) {
    Rng rng(1);
    Matrix a = ginibre(rng, 3, 3), b = ginibre(rng, 2, 2);
    EXPECT_LT((kron(a, b) - oracle::kron(a, b)).norm(), 1e-14);
}

TEST(TensorProduct, RejectsBadDims) {
    EXPECT_THROW(ComplexOperator(Matrix::Identity(4, 4), FactorDims{2, 3}), DimensionMismatch);
    EXPECT_THROW(FactorDims({2, 0}), DimensionMismatch);
}

TEST(PartialTrace, ProductSplit) {
    Rng rng(2);
    Matrix a = ginibre(rng, 3, 3);
    Matrix c = random_density(rng, 2);
    auto z = tensor_product(ComplexOperator(a), ComplexOperator(c));
    auto r = partial_trace(z, {0});
    EXPECT_LT((r.matrix - a).norm(), 1e-13);

    Matrix rho = random_density(rng, 3), rho2 = random_density(rng, 2);
    auto s = tensor_product(DensityState(rho), DensityState(rho2));
    EXPECT_LT((partial_trace(s, {1}).matrix - rho2).norm(), 1e-13);
}

TEST(PartialTrace, AgreesWithLoopOracle) {
    Rng rng(3);
    std::vector<int> dims{2, 3, 2};
    Matrix z = ginibre(rng, 12, 12);
    for (std::set<int> keep : {std::set<int>{0}, std::set<int>{1}, std::set<int>{0, 2}, std::set<int>{1, 2}}) {
        Matrix lib = partial_trace(z, FactorDims(dims), keep);
        Matrix ref = oracle::partial_trace(z, dims, keep);
        EXPECT_LT((lib - ref).norm(), 1e-12);
    }
    auto r = partial_trace(ComplexOperator(z, FactorDims(dims)), {0});
    EXPECT_LT(std::abs(r.matrix.trace() - z.trace()), 1e-12);
}

TEST(PartialTrace, PositivityPreserved) {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        Matrix z = random_density(rng, 8);
        Matrix r = partial_trace(z, FactorDims{2, 2, 2}, {1});
        EXPECT_GE(min_eigenvalue(r), -1e-12);
    }
}

TEST(PartialTrace, RangeChecked) {
    auto z = identity_operator(FactorDims{2, 2});
    EXPECT_THROW(partial_trace(z, {2}), DimensionMismatch);
}

TEST(RowMajor, ReshapeRoundTrip) {
    std::vector<int> dims{3, 2, 2};
    for (Index idx = 0; idx < 12; ++idx) {
        auto dg = oracle::digits(idx, dims);
        EXPECT_EQ(dg[0] * 4 + dg[1] * 2 + dg[2], idx);
    }
    Rng rng(5);
    Matrix x = ginibre(rng, 3, 4);
    EXPECT_EQ(unvec(vec(x), 3), x);
    EXPECT_EQ(vec(x)(1 * 4 + 2), x(1, 2));
}

TEST(ReverseChain, ProductAndInvolution) {
    Rng rng(6);
    Matrix a = ginibre(rng, 2, 2), c1 = ginibre(rng, 3, 3), c2 = ginibre(rng, 3, 3);
    ComplexOperator z(kron(kron(a, c1), c2), FactorDims{2, 3, 3});
    auto r = reverse_chain_order(z);
    EXPECT_LT((r.matrix - kron(kron(a, c2), c1)).norm(), 1e-13);

    auto one = identity_operator(FactorDims{2, 2, 2, 2});
    EXPECT_EQ(reverse_chain_order(one).matrix, one.matrix);

    ComplexOperator y(ginibre(rng, 16, 16), FactorDims{2, 2, 2, 2});
    EXPECT_LT((reverse_chain_order(reverse_chain_order(y)).matrix - y.matrix).norm(), 1e-14);
}

TEST(ReverseChain, StarAutomorphism) {
    Rng rng(7);
    FactorDims dims{2, 2, 2, 2};
    ComplexOperator x(ginibre(rng, 16, 16), dims), y(ginibre(rng, 16, 16), dims);
    ComplexOperator xy(x.matrix * y.matrix, dims);
    auto rx = reverse_chain_order(x), ry = reverse_chain_order(y);
    EXPECT_LT((reverse_chain_order(xy).matrix - rx.matrix * ry.matrix).norm(), 1e-12);
    ComplexOperator xs(x.matrix.adjoint(), dims);
    EXPECT_LT((reverse_chain_order(xs).matrix - rx.matrix.adjoint()).norm(), 1e-14);
}

TEST(ReverseChain, UnequalDimsRejected) {
    auto z = identity_operator(FactorDims{2, 2, 3});
    EXPECT_THROW(reverse_chain_order(z), DimensionMismatch);
}

TEST(WeightedNorm, BasicValues) {
    Rng rng(8);
    DensityState phi(random_density(rng, 3));
    EXPECT_NEAR(weighted_norm(identity_operator(FactorDims{3}), phi), 1.0, 1e-14);
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    EXPECT_NEAR(weighted_norm(ComplexOperator(x), DensityState::maximally_mixed(FactorDims{2})), 1.0, 1e-14);
}

TEST(WeightedNorm, VectorizationOracle) {
    Rng rng(9);
    Matrix rho = random_density(rng, 4);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    Matrix half = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cast<cplx>().asDiagonal() *
                  es.eigenvectors().adjoint();
    for (int t = 0; t < 10; ++t) {
        Matrix a = ginibre(rng, 4, 4);
        Matrix ah = a * half;
        double ref = std::sqrt(ah.squaredNorm());
        EXPECT_NEAR(weighted_norm(ComplexOperator(a), DensityState(rho)), ref, 1e-12);
    }
}

TEST(WeightedNorm, ParallelogramLaw) {
    Rng rng(10);
    DensityState phi(random_density(rng, 3));
    for (int t = 0; t < 10; ++t) {
        Matrix a = ginibre(rng, 3, 3), b = ginibre(rng, 3, 3);
        auto n = [&](const Matrix& m) { return std::pow(weighted_norm(ComplexOperator(m), phi), 2); };
        EXPECT_NEAR(n(a + b) + n(a - b), 2 * n(a) + 2 * n(b), 1e-10);
    }
}

TEST(StateDistance, Basics) {
    Rng rng(11);
    DensityState rho(random_density(rng, 3));
    EXPECT_NEAR(state_distance(rho, rho, DistanceMode::trace), 0.0, 1e-12);
    EXPECT_NEAR(state_distance(rho, rho, DistanceMode::fidelity), 1.0, 1e-10);
    auto e0 = DensityState::basis(3, 0), e1 = DensityState::basis(3, 1);
    EXPECT_NEAR(state_distance(e0, e1, DistanceMode::trace), 1.0, 1e-14);
}

TEST(StateDistance, PureFidelityReduction) {
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
        Vector xi = random_unit_vector(rng, 4);
        Matrix rho = random_density(rng, 4);
        double ref = (xi.adjoint() * rho * xi)(0, 0).real();
        EXPECT_NEAR(state_distance(DensityState::pure(xi), DensityState(rho), DistanceMode::fidelity), ref, 1e-10);
        EXPECT_NEAR(state_distance(DensityState(rho), DensityState::pure(xi), DistanceMode::fidelity), ref, 1e-10);
    }
}

TEST(StateDistance, TraceMatchesEigenOracle) {
    Rng rng(13);
    Matrix a = random_density(rng, 5), b = random_density(rng, 5);
    EXPECT_NEAR(trace_distance(a, b), oracle::trace_distance(a, b), 1e-12);
}

TEST(DensityState, Validation) {
    Matrix bad = Matrix::Identity(2, 2);
    EXPECT_THROW(DensityState{bad}, InvalidInput);
    Matrix neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    EXPECT_THROW(DensityState{neg}, InvalidInput);
}
