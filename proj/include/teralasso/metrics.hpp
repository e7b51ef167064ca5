#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "teralasso/factor_set.hpp"

namespace teralasso {

inline constexpr double kDefaultSupportEps = 1e-8;

/// Off-diagonal support of each factor as sorted pairs (i < j).
struct EdgeSupport
{
    Dims dims;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges;

    std::size_t count() const;
};

EdgeSupport edge_support(const FactorSet& f, double eps = kDefaultSupportEps);

/// Edge classification counts pooled over all factors. The universe of factor k
/// is its d_k (d_k - 1) / 2 off-diagonal pairs.
struct Confusion
{
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    /// 1 when nothing was selected.
    double precision() const;
    /// 1 when there is nothing to find.
    double recall() const;
    /// 0 when any marginal of the confusion matrix is empty.
    double mcc() const;
};

Confusion classify_edges(const EdgeSupport& truth, const EdgeSupport& estimate);
double mcc(const EdgeSupport& truth, const EdgeSupport& estimate);

struct EstimationErrors
{
    double frob_full = 0.0;   ///< ||Omega_hat - Omega_0||_F
    double frob_rel = 0.0;    ///< frob_full / ||Omega_0||_F
    double spectral = 0.0;    ///< ||Omega_hat - Omega_0||_2
    std::vector<double> factor_offdiag; ///< ||offd(Psi_hat_k - Psi_0k)||_F
    double diag = 0.0;        ///< ||diag(Omega_hat - Omega_0)||_F
    double tau = 0.0;         ///< |tau_hat - tau_0|
};

EstimationErrors estimation_errors(const FactorSet& truth, const FactorSet& estimate);

/// n min_k m_k / log p.
double effective_sample_size(const Dims& dims, std::size_t n);

} // namespace teralasso
