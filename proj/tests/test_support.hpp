#pragma once

#include <cstdint>
#include <vector>

#include "teralasso/factor_set.hpp"
#include "teralasso/rng.hpp"

namespace teralasso::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, CounterRng& rng)
{
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

inline Matrix random_symmetric(Eigen::Index n, CounterRng& rng)
{
    const Matrix a = random_matrix(n, n, rng);
    return 0.5 * (a + a.transpose());
}

/// Symmetric factors with a spread of eigenvalues in [lo, hi].
inline Matrix random_spd(Eigen::Index n, CounterRng& rng, double lo = 0.5, double hi = 2.0)
{
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    const Matrix q = qr.householderQ();
    Vector ev(n);
    for (Eigen::Index i = 0; i < n; ++i) ev[i] = rng.uniform(lo, hi);
    Matrix out = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (out + out.transpose());
}

inline FactorSet random_factors(const Dims& dims, std::uint64_t seed, bool positive = true)
{
    CounterRng rng(seed);
    std::vector<Matrix> f;
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const auto d = static_cast<Eigen::Index>(dims[k]);
        f.push_back(positive ? random_spd(d, rng, 0.3, 1.5) : random_symmetric(d, rng));
    }
    return FactorSet(dims, std::move(f));
}

inline Matrix sym(const Matrix& a)
{
    return 0.5 * (a + a.transpose());
}

} // namespace teralasso::testing
