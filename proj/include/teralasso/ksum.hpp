#pragma once

#include <cstddef>
#include <span>

#include "teralasso/factor_set.hpp"

namespace teralasso {

/// Size cap for every routine that materializes a p x p matrix. Defaults to
/// 4096 and can be overridden with the TERALASSO_DENSE_LIMIT environment variable.
std::size_t dense_limit();

/// Dense p x p Kronecker sum, sum_k I (x) Psi_k (x) I with mode 0 slowest.
Matrix kron_sum_dense(const FactorSet& f);
Matrix kron_sum_dense(const FactorSet& f, std::size_t limit);

SpectrumSet ksum_eigensystem(const FactorSet& f);

/// log det of the Kronecker sum from the factor spectra in O(pK).
/// Throws NotPositiveDefiniteError when any eigenvalue sum is <= 0.
double ksum_logdet(const SpectrumSet& s);

/// Frobenius projection of a dense p x p matrix onto the Kronecker-sum subspace.
FactorSet proj_ksum_dense(const Matrix& a, const Dims& dims);

/// Factors G_k with G_1 (+) ... (+) G_K = Proj(Omega^{-1}), computed from the
/// factor spectra in one compensated O(pK) sweep.
FactorSet proj_inverse_spectrum(const SpectrumSet& s);

IdentifiableForm identifiable_decompose(const FactorSet& f);

/// Trace inner product <A, B> of two Kronecker sums.
double ksum_inner(const FactorSet& a, const FactorSet& b);
double ksum_frobenius(const FactorSet& f);
double ksum_spectral_norm(const SpectrumSet& s);

/// sum_k rho_k * m_k * sum_{i != j} |Psi_k(i, j)|.
double offdiag_l1(const FactorSet& f, std::span<const double> rho);

} // namespace teralasso
