// random.hpp - seeded random matrices and states
#pragma once

#include <random>

#include "linalg.hpp"

namespace qprep {

using Rng = std::mt19937_64;

inline Matrix ginibre(Rng& rng, Index rows, Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
            const double re = g(rng);
            const double im = g(rng);
            m(i, j) = cplx(re, im) / std::sqrt(2.0);
        }
    return m;
}

// Haar unitary: QR of a Ginibre matrix with the diagonal phases of R removed.
inline Matrix haar_unitary(Rng& rng, Index n) {
    Matrix z = ginibre(rng, n, n);
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index k = 0; k < n; ++k) {
        const double a = std::abs(r(k, k));
        if (a > 0) q.col(k) *= r(k, k) / a;
    }
    return q;
}

inline Matrix random_hermitian(Rng& rng, Index n) { return hermitian_part(ginibre(rng, n, n)); }

// Hilbert-Schmidt random density of full rank (almost surely).
inline Matrix random_density(Rng& rng, Index n) {
    Matrix g = ginibre(rng, n, n);
    Matrix r = g * g.adjoint();
    return hermitian_part(r / r.trace().real());
}

inline Vector random_unit_vector(Rng& rng, Index n) {
    Vector v = ginibre(rng, n, 1).col(0);
    return v / v.norm();
}

inline Matrix random_pure(Rng& rng, Index n) {
    Vector v = random_unit_vector(rng, n);
    return v * v.adjoint();
}

}  // namespace qprep
