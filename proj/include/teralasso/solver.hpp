#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "teralasso/factor_set.hpp"
#include "teralasso/tensor.hpp"

namespace teralasso {

enum class Termination { objective_tol, kkt_tol, max_iter };

std::string_view to_string(Termination t) noexcept;
Termination termination_from_string(std::string_view s);

/// How the first trial stepsize of each line search is chosen.
enum class StepRule {
    barzilai_borwein, ///< BB step from the previous iterate pair
    fixed,            ///< always start from zeta0
};

struct SolverConfig
{
    double rho_bar = 0.0;
    std::optional<std::vector<double>> rho_override;
    double backtrack_c = 0.5;
    double zeta0 = 1e-2;
    std::size_t max_iter = 1000;
    std::size_t max_backtracks = 40;
    double tol_obj = 1e-9;
    double tol_kkt = 1e-6;
    /// The objective-change test is only applied from this iteration on.
    std::size_t min_iter = 3;
    StepRule step_rule = StepRule::barzilai_borwein;

    void validate() const;
};

/// rho_k = rho_bar * sqrt(log p / (n m_k)) (natural log), or the override.
std::vector<double> penalty_weights(const SolverConfig& cfg, const Dims& dims, std::size_t n);

struct ObjectiveValue
{
    double smooth = 0.0;
    double penalty = 0.0;
    double total = 0.0;
};

/// sum_k m_k <S_k, Psi_k> = <S_hat, Omega>.
double trace_term(const FactorSet& f, const GramSet& g);
/// -log|Omega| + <S_hat, Omega> from a precomputed spectrum.
double smooth_objective(const FactorSet& f, const SpectrumSet& s, const GramSet& g);
ObjectiveValue objective(const FactorSet& f, const GramSet& g, std::span<const double> rho);

/// Soft-thresholds the off-diagonal entries; the diagonal is left untouched.
Matrix shrink_offdiag(const Matrix& m, double thresh);

/// Factors S~_k - G_k whose Kronecker sum is Proj(S_hat - Omega^{-1}).
FactorSet subspace_gradient(const SpectrumSet& s, const FactorSet& centered_gram);
FactorSet subspace_gradient(const FactorSet& f, const GramSet& g);

/// f(base) + <candidate - base, grad> + ||candidate - base||_F^2 / (2 zeta).
double quad_model(const FactorSet& candidate, const FactorSet& base, const FactorSet& grad,
                  double zeta, double f_base);
double quad_model(const FactorSet& candidate, const FactorSet& base, const FactorSet& grad,
                  double zeta, const GramSet& g);

/// shrink_offdiag(Psi_k - zeta * grad_k, zeta * rho_k) for every factor.
FactorSet ista_step(const FactorSet& factors, const FactorSet& grad, std::span<const double> rho,
                    double zeta);

/// An accepted iterate together with everything derived from it.
struct SolverState
{
    FactorSet factors;
    SpectrumSet spectrum;
    FactorSet gradient;
    double smooth = 0.0;
};

SolverState make_state(FactorSet factors, const FactorSet& centered_gram, const GramSet& g);

struct LineSearchResult
{
    SolverState next;
    double zeta = 0.0;
    std::size_t backtracks = 0;
    bool safe_step = false;
};

/// Backtracks zeta = c^j * zeta_start until the candidate is positive definite
/// and satisfies f(candidate) <= Q(candidate, base). After cfg.max_backtracks
/// failures it restarts from the safe step zeta = lambda_min(Omega_t)^2 and keeps
/// backtracking from there; throws NotPositiveDefiniteError if that also fails.
LineSearchResult line_search(const SolverState& state, const GramSet& g,
                             const FactorSet& centered_gram, std::span<const double> rho,
                             double zeta_start, const SolverConfig& cfg);

/// ||dOmega||^2 / <dOmega, dGrad>; returns `fallback` when the curvature is not
/// positive or the ratio is not finite.
double bb_stepsize(const FactorSet& d_omega, const FactorSet& d_grad, double fallback);

/// Largest violation of the first-order optimality conditions, measured per
/// factor entry. Diagonal conditions are evaluated on the identifiable form of
/// the gradient, so the result does not depend on how the trace is split.
double kkt_residual(const FactorSet& f, const FactorSet& grad, std::span<const double> rho);
double kkt_residual(const FactorSet& f, const GramSet& g, std::span<const double> rho);

struct ContractionBound
{
    double rate = 0.0; ///< 1 - 2 / (1 + b^2 / a^2)
    double step = 0.0; ///< 2 / (a^-2 + b^-2)
};

/// Optimal worst-case contraction for iterates with a I <= Omega_t <= b I.
ContractionBound contraction_bound(double a, double b);

struct SolverReport
{
    std::vector<double> rho;
    /// Total objective; entry 0 is the initial point, entry t the t-th iterate.
    std::vector<double> objective;
    std::vector<double> stepsize;
    std::vector<std::size_t> backtracks;
    std::vector<double> eig_min;
    std::vector<double> eig_max;
    std::size_t safe_steps = 0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    Termination termination = Termination::max_iter;
};

struct IterationRecord
{
    std::size_t iteration;
    const FactorSet& factors;
    double objective;
    double zeta;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

struct SolveResult
{
    FactorSet factors;
    SolverReport report;
};

/// TG-ISTA: proximal gradient descent restricted to the Kronecker-sum subspace.
/// Starts from Omega = I (factors I / K) unless `init` is given.
SolveResult solve(const GramSet& g, const SolverConfig& cfg,
                  const std::optional<FactorSet>& init = std::nullopt,
                  const IterationObserver& observer = {});

} // namespace teralasso
