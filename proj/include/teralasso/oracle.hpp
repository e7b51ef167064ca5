#pragma once

#include <cstddef>
#include <vector>

#include "teralasso/factor_set.hpp"
#include "teralasso/tensor.hpp"

/// Brute-force dense reference implementations for tests and self-checks.
/// Everything here works on explicit p x p matrices and is capped at small p.
namespace teralasso::oracle {

inline constexpr std::size_t kMaxOracleSize = 64;
inline constexpr std::size_t kMaxSolverSize = 36;

/// Explicit Kronecker product.
Matrix kron(const Matrix& a, const Matrix& b);

/// I_{left} (x) m (x) I_{right} for mode k, assembled with explicit Kronecker products.
Matrix embed(const Dims& dims, std::size_t k, const Matrix& m);

/// (1/n) sum_i x_i x_i^T over the raw replicate vectors.
Matrix sample_covariance(const DataTensorSet& data);

struct DenseProblem
{
    Dims dims;
    Matrix s;
    std::vector<double> rho;
};

/// Orthonormal basis of the symmetric Kronecker-sum subspace: I_p / sqrt(p), then
/// for every mode the off-diagonal directions (E_ij + E_ji) / sqrt(2 m_k) and the
/// trace-zero diagonal (Helmert) directions diag(h) / sqrt(m_k), embedded along the mode.
class KsumBasis
{
public:
    enum class Kind { identity, offdiag, diag };

    struct Element
    {
        Kind kind;
        std::size_t mode = 0;
        std::size_t i = 0;
        std::size_t j = 0;
    };

    explicit KsumBasis(const Dims& dims);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return elements_.size(); }
    const Element& element(std::size_t b) const { return elements_[b]; }
    /// Basis element b as a dense p x p matrix.
    Matrix matrix(std::size_t b) const;

    /// Coefficients <A, B_b> for every basis element.
    Vector coefficients(const Matrix& a) const;
    Matrix assemble(const Vector& coef) const;
    FactorSet to_factors(const Vector& coef) const;

private:
    Dims dims_;
    std::vector<Element> elements_;
    Matrix vecs_;                 // size() x p^2, row b = vec(B_b)
};

/// Projection through the explicit orthonormal basis.
FactorSet basis_projection(const Matrix& a, const Dims& dims);

/// -log det(Omega) + tr(S Omega) + penalty, with factors read off the basis
/// coordinates. Throws when Omega is not PD or not in the subspace.
double dense_objective(const Matrix& omega, const DenseProblem& problem);

/// One proximal-gradient step computed densely: projects Omega - zeta (S - Omega^{-1})
/// onto the basis and soft-thresholds the off-diagonal coordinates.
Matrix dense_prox_step(const Matrix& omega, const DenseProblem& problem, double zeta);

/// First-order optimality residual in the same per-entry units as the solver.
double dense_kkt_residual(const Matrix& omega, const DenseProblem& problem);

struct DenseSolution
{
    Matrix omega;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
};

/// Projected proximal gradient on the dense matrix, starting from I. Each step
/// starts at 0.5 lambda_min(Omega_t)^2 and is halved until the iterate is PD
/// and the quadratic majorization holds.
DenseSolution dense_solver(const DenseProblem& problem, std::size_t max_iter = 100000,
                           double tol = 1e-8);

/// Rearrangement R_k: column i * m_k + j is vec(A(i, j | k)) (column-major),
/// where [A(i, j | k)]_{rs} = tr((E_ij (x) e_r e_s^T) A) with the complement
/// indices ordered as in the linearization.
Matrix rearrange_rk(const Matrix& a, const Dims& dims, std::size_t k);

} // namespace teralasso::oracle
