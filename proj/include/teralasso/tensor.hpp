#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "teralasso/factor_set.hpp"

namespace teralasso {

/// n replicate tensors, each stored as p contiguous values with mode 0
/// slowest-varying: l = i_0 * (d_1 ... d_{K-1}) + ... + i_{K-1}.
class DataTensorSet
{
public:
    DataTensorSet(Dims dims, std::size_t n);
    DataTensorSet(Dims dims, std::size_t n, std::vector<double> values);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t replicates() const noexcept { return n_; }

    std::span<const double> replicate(std::size_t i) const;
    std::span<double> replicate(std::size_t i);
    std::span<const double> values() const noexcept { return values_; }

private:
    Dims dims_;
    std::size_t n_;
    std::vector<double> values_;
};

/// Mode-wise sufficient statistics: S_k = (1 / (n m_k)) sum_i X_(k) X_(k)^T and
/// trace_mean = tr(S_hat) / p.
struct GramSet
{
    Dims dims;
    std::size_t n = 0;
    std::vector<Matrix> s;
    double trace_mean = 0.0;
};

/// Mode-k unfolding (d_k x m_k). Columns enumerate the other modes in their
/// original order, slowest first.
Matrix matricize(std::span<const double> x, const Dims& dims, std::size_t k);

/// Inverse of matricize: writes the unfolding back into tensor layout.
std::vector<double> fold(const Matrix& unfolded, const Dims& dims, std::size_t k);

GramSet gram_factors(const DataTensorSet& data);

/// Factors S_k - ((K - 1) / K) (tr(S_k) / d_k) I, whose Kronecker sum is the
/// projection of the sample covariance onto the Kronecker-sum subspace.
FactorSet center_gram(const GramSet& g);

/// Applies I (x) M (x) I along mode k in place, with M of size d_k x d_k.
void apply_mode(std::span<double> x, const Dims& dims, std::size_t k, const Matrix& m);

/// n draws of N(0, Omega^{-1}) with Omega the Kronecker sum of `precision`.
/// Replicate i uses the stream derive_seed(seed, i), so the output does not
/// depend on `threads`.
DataTensorSet sample_ksum_gaussian(const FactorSet& precision, std::size_t n,
                                   std::uint64_t seed, unsigned threads = 1);

} // namespace teralasso
