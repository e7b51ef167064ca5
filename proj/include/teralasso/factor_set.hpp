#pragma once

#include <vector>

#include <Eigen/Dense>

#include "teralasso/dims.hpp"

namespace teralasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// The K symmetric factors Psi_k of a Kronecker sum Psi_1 (+) ... (+) Psi_K.
///
/// This is the compressed representation of a p x p matrix in the Kronecker-sum
/// subspace; nothing of size p x p is ever stored. Factors are symmetrized on
/// construction after checking that the input is symmetric to 1e-12 relative.
class FactorSet
{
public:
    FactorSet(Dims dims, std::vector<Matrix> factors);

    static FactorSet identity(const Dims& dims, double scale = 1.0);
    static FactorSet zeros(const Dims& dims);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return factors_.size(); }
    const Matrix& operator[](std::size_t k) const { return factors_[k]; }
    const std::vector<Matrix>& factors() const noexcept { return factors_; }

    FactorSet& operator+=(const FactorSet& other);
    FactorSet& operator-=(const FactorSet& other);
    FactorSet& operator*=(double alpha);

    friend FactorSet operator+(FactorSet a, const FactorSet& b) { return a += b; }
    friend FactorSet operator-(FactorSet a, const FactorSet& b) { return a -= b; }
    friend FactorSet operator*(double alpha, FactorSet a) { return a *= alpha; }

private:
    struct Unchecked {};
    FactorSet(Dims dims, std::vector<Matrix> factors, Unchecked);

    friend FactorSet make_factor_set_unchecked(Dims, std::vector<Matrix>);

    Dims dims_;
    std::vector<Matrix> factors_;
};

/// Builds a FactorSet from factors that are symmetric by construction.
/// Only the size checks are performed.
FactorSet make_factor_set_unchecked(Dims dims, std::vector<Matrix> factors);

/// Identifiable parameterization: Omega = tau * I_p + (tilde_1 (+) ... (+) tilde_K)
/// with every tilde_k trace-zero.
struct IdentifiableForm
{
    Dims dims;
    double tau = 0.0;
    std::vector<Matrix> tilde;

    /// Factors (tau / K) * I + tilde_k.
    FactorSet to_factors() const;
};

/// Per-factor eigendecompositions Psi_k = U_k diag(lambda_k) U_k^T. The p
/// eigenvalues of the Kronecker sum are all sums lambda_1[i_1] + ... + lambda_K[i_K].
struct SpectrumSet
{
    Dims dims;
    std::vector<Vector> eigvals;
    std::vector<Matrix> eigvecs;

    /// Smallest eigenvalue of the Kronecker sum.
    double min_eigenvalue() const;
    /// Largest eigenvalue of the Kronecker sum.
    double max_eigenvalue() const;
    /// All p eigenvalues in linearization order (mode 0 slowest).
    Vector full_eigenvalues() const;
};

} // namespace teralasso
