#include "teralasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "teralasso/errors.hpp"
#include "teralasso/ksum.hpp"

namespace teralasso {

namespace {

// Relative slack on the sufficient-decrease test; covers rounding in log det.
constexpr double kDescentSlack = 1e-14;
// Halvings allowed after the safe step before giving up.
constexpr std::size_t kSafeBacktracks = 60;

void check_rho(std::span<const double> rho, const Dims& dims)
{
    if (rho.size() != dims.order())
        throw DimensionError("expected " + std::to_string(dims.order())
                             + " penalty weights, got " + std::to_string(rho.size()));
    for (double r : rho)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw ValidationError("penalty weights must be finite and >= 0");
}

} // namespace

std::string_view to_string(Termination t) noexcept
{
    switch (t) {
    case Termination::objective_tol: return "objective-tol";
    case Termination::kkt_tol: return "kkt-tol";
    case Termination::max_iter: return "max-iter";
    }
    return "max-iter";
}

Termination termination_from_string(std::string_view s)
{
    if (s == "objective-tol") return Termination::objective_tol;
    if (s == "kkt-tol") return Termination::kkt_tol;
    if (s == "max-iter") return Termination::max_iter;
    throw ValidationError("unknown termination reason '" + std::string(s) + "'");
}

void SolverConfig::validate() const
{
    if (!(rho_bar >= 0.0) || !std::isfinite(rho_bar))
        throw ValidationError("rho_bar must be finite and >= 0");
    if (!(backtrack_c > 0.0 && backtrack_c < 1.0))
        throw ValidationError("backtrack_c must lie in (0, 1)");
    if (!(zeta0 > 0.0) || !std::isfinite(zeta0)) throw ValidationError("zeta0 must be > 0");
    if (!(tol_obj > 0.0) || !(tol_kkt > 0.0)) throw ValidationError("tolerances must be > 0");
    if (rho_override)
        for (double r : *rho_override)
            if (!(r >= 0.0) || !std::isfinite(r))
                throw ValidationError("rho_override entries must be finite and >= 0");
}

std::vector<double> penalty_weights(const SolverConfig& cfg, const Dims& dims, std::size_t n)
{
    if (cfg.rho_override) {
        check_rho(*cfg.rho_override, dims);
        return *cfg.rho_override;
    }
    if (n == 0) throw ValidationError("penalty_weights: n must be positive");
    const double logp = std::log(static_cast<double>(dims.total()));
    std::vector<double> rho(dims.order());
    for (std::size_t k = 0; k < dims.order(); ++k)
        rho[k] = cfg.rho_bar
                 * std::sqrt(logp / (static_cast<double>(n) * static_cast<double>(dims.complement(k))));
    return rho;
}

double trace_term(const FactorSet& f, const GramSet& g)
{
    require_same_dims(f.dims(), g.dims, "trace_term");
    double out = 0.0;
    for (std::size_t k = 0; k < f.order(); ++k)
        out += static_cast<double>(f.dims().complement(k)) * g.s[k].cwiseProduct(f[k]).sum();
    return out;
}

double smooth_objective(const FactorSet& f, const SpectrumSet& s, const GramSet& g)
{
    return -ksum_logdet(s) + trace_term(f, g);
}

ObjectiveValue objective(const FactorSet& f, const GramSet& g, std::span<const double> rho)
{
    ObjectiveValue out;
    out.smooth = smooth_objective(f, ksum_eigensystem(f), g);
    out.penalty = offdiag_l1(f, rho);
    out.total = out.smooth + out.penalty;
    return out;
}

Matrix shrink_offdiag(const Matrix& m, double thresh)
{
    if (!(thresh >= 0.0)) throw ValidationError("shrink_offdiag: threshold must be >= 0");
    Matrix out = m;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (i == j) continue;
            const double v = m(i, j);
            const double mag = std::max(std::abs(v) - thresh, 0.0);
            out(i, j) = mag == 0.0 ? 0.0 : std::copysign(mag, v);
        }
    return out;
}

FactorSet subspace_gradient(const SpectrumSet& s, const FactorSet& centered_gram)
{
    return centered_gram - proj_inverse_spectrum(s);
}

FactorSet subspace_gradient(const FactorSet& f, const GramSet& g)
{
    require_same_dims(f.dims(), g.dims, "subspace_gradient");
    return subspace_gradient(ksum_eigensystem(f), center_gram(g));
}

double quad_model(const FactorSet& candidate, const FactorSet& base, const FactorSet& grad,
                  double zeta, double f_base)
{
    if (!(zeta > 0.0)) throw ValidationError("quad_model: zeta must be > 0");
    const FactorSet delta = candidate - base;
    const double sq = ksum_inner(delta, delta);
    return f_base + ksum_inner(delta, grad) + sq / (2.0 * zeta);
}

double quad_model(const FactorSet& candidate, const FactorSet& base, const FactorSet& grad,
                  double zeta, const GramSet& g)
{
    return quad_model(candidate, base, grad, zeta, smooth_objective(base, ksum_eigensystem(base), g));
}

FactorSet ista_step(const FactorSet& factors, const FactorSet& grad, std::span<const double> rho,
                    double zeta)
{
    require_same_dims(factors.dims(), grad.dims(), "ista_step");
    check_rho(rho, factors.dims());
    if (!(zeta > 0.0)) throw ValidationError("ista_step: zeta must be > 0");
    std::vector<Matrix> out;
    out.reserve(factors.order());
    for (std::size_t k = 0; k < factors.order(); ++k)
        out.push_back(shrink_offdiag(factors[k] - zeta * grad[k], zeta * rho[k]));
    return make_factor_set_unchecked(factors.dims(), std::move(out));
}

SolverState make_state(FactorSet factors, const FactorSet& centered_gram, const GramSet& g)
{
    SpectrumSet spectrum = ksum_eigensystem(factors);
    FactorSet gradient = subspace_gradient(spectrum, centered_gram);
    const double smooth = smooth_objective(factors, spectrum, g);
    return SolverState{std::move(factors), std::move(spectrum), std::move(gradient), smooth};
}

LineSearchResult line_search(const SolverState& state, const GramSet& g,
                             const FactorSet& centered_gram, std::span<const double> rho,
                             double zeta_start, const SolverConfig& cfg)
{
    if (!(zeta_start > 0.0)) throw ValidationError("line_search: zeta_start must be > 0");
    const double slack = kDescentSlack * std::max(1.0, std::abs(state.smooth));
    double zeta = zeta_start;
    for (std::size_t j = 0; j < cfg.max_backtracks; ++j, zeta *= cfg.backtrack_c) {
        FactorSet candidate = ista_step(state.factors, state.gradient, rho, zeta);
        SpectrumSet spectrum = ksum_eigensystem(candidate);
        if (!(spectrum.min_eigenvalue() > 0.0)) continue;
        const double f_new = smooth_objective(candidate, spectrum, g);
        const double q = quad_model(candidate, state.factors, state.gradient, zeta, state.smooth);
        if (std::isfinite(f_new) && f_new <= q + slack) {
            FactorSet gradient = subspace_gradient(spectrum, centered_gram);
            return {SolverState{std::move(candidate), std::move(spectrum), std::move(gradient), f_new},
                    zeta, j, false};
        }
    }

    // Safe step zeta = lambda_min(Omega_t)^2. It is only guaranteed to stay positive
    // definite near the optimum, so keep shrinking from there if it does not.
    const double lmin = state.spectrum.min_eigenvalue();
    zeta = lmin * lmin;
    double last_min = 0.0;
    for (std::size_t j = 0; j <= kSafeBacktracks; ++j, zeta *= 0.5) {
        FactorSet candidate = ista_step(state.factors, state.gradient, rho, zeta);
        SpectrumSet spectrum = ksum_eigensystem(candidate);
        last_min = spectrum.min_eigenvalue();
        if (!(last_min > 0.0)) continue;
        const double f_new = smooth_objective(candidate, spectrum, g);
        if (!std::isfinite(f_new)) continue;
        const double q = quad_model(candidate, state.factors, state.gradient, zeta, state.smooth);
        if (f_new > q + slack) continue;
        FactorSet gradient = subspace_gradient(spectrum, centered_gram);
        return {SolverState{std::move(candidate), std::move(spectrum), std::move(gradient), f_new}, zeta,
                cfg.max_backtracks + j, true};
    }
    throw NotPositiveDefiniteError(last_min);
}

double bb_stepsize(const FactorSet& d_omega, const FactorSet& d_grad, double fallback)
{
    const double num = ksum_inner(d_omega, d_omega);
    const double den = ksum_inner(d_omega, d_grad);
    if (!(den > 0.0)) return fallback;
    const double step = num / den;
    if (!std::isfinite(step) || !(step > 0.0)) return fallback;
    return step;
}

double kkt_residual(const FactorSet& f, const FactorSet& grad, std::span<const double> rho)
{
    require_same_dims(f.dims(), grad.dims(), "kkt_residual");
    check_rho(rho, f.dims());
    const IdentifiableForm id = identifiable_decompose(grad);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.order(); ++k) {
        const Matrix& psi = f[k];
        const Matrix& gk = grad[k];
        for (Eigen::Index j = 0; j < psi.cols(); ++j)
            for (Eigen::Index i = 0; i < psi.rows(); ++i) {
                double r;
                if (i == j)
                    r = std::abs(id.tilde[k](i, i) + id.tau);
                else if (psi(i, j) != 0.0)
                    r = std::abs(gk(i, j) + std::copysign(rho[k], psi(i, j)));
                else
                    r = std::max(0.0, std::abs(gk(i, j)) - rho[k]);
                worst = std::max(worst, r);
            }
    }
    return worst;
}

double kkt_residual(const FactorSet& f, const GramSet& g, std::span<const double> rho)
{
    return kkt_residual(f, subspace_gradient(f, g), rho);
}

ContractionBound contraction_bound(double a, double b)
{
    if (!(a > 0.0) || !(b >= a) || !std::isfinite(b))
        throw ValidationError("contraction_bound: requires 0 < a <= b");
    const double ratio = (b * b) / (a * a);
    return {1.0 - 2.0 / (1.0 + ratio), 2.0 / (1.0 / (a * a) + 1.0 / (b * b))};
}

SolveResult solve(const GramSet& g, const SolverConfig& cfg, const std::optional<FactorSet>& init,
                  const IterationObserver& observer)
{
    cfg.validate();
    const Dims& dims = g.dims;
    if (g.s.size() != dims.order()) throw DimensionError("solve: GramSet has the wrong number of factors");
    const std::vector<double> rho = penalty_weights(cfg, dims, g.n);
    const FactorSet centered = center_gram(g);

    FactorSet start = init ? *init : FactorSet::identity(dims, 1.0 / static_cast<double>(dims.order()));
    require_same_dims(start.dims(), dims, "solve: initial factors");
    SolverState state = make_state(std::move(start), centered, g);
    if (!(state.spectrum.min_eigenvalue() > 0.0))
        throw NotPositiveDefiniteError(state.spectrum.min_eigenvalue());

    SolverReport report;
    report.rho = rho;
    double total = state.smooth + offdiag_l1(state.factors, rho);
    if (!std::isfinite(total)) throw Error("solve: non-finite objective at the initial point");
    report.objective.push_back(total);
    report.eig_min.push_back(state.spectrum.min_eigenvalue());
    report.eig_max.push_back(state.spectrum.max_eigenvalue());
    report.kkt_residual = kkt_residual(state.factors, state.gradient, rho);

    if (report.kkt_residual <= cfg.tol_kkt) {
        report.termination = Termination::kkt_tol;
        return {std::move(state.factors), std::move(report)};
    }

    double zeta_start = cfg.zeta0;
    report.termination = Termination::max_iter;
    for (std::size_t t = 1; t <= cfg.max_iter; ++t) {
        LineSearchResult ls = line_search(state, g, centered, rho, zeta_start, cfg);
        const double next_total = ls.next.smooth + offdiag_l1(ls.next.factors, rho);
        if (!std::isfinite(next_total))
            throw Error("solve: non-finite objective at iteration " + std::to_string(t));

        report.objective.push_back(next_total);
        report.stepsize.push_back(ls.zeta);
        report.backtracks.push_back(ls.backtracks);
        report.eig_min.push_back(ls.next.spectrum.min_eigenvalue());
        report.eig_max.push_back(ls.next.spectrum.max_eigenvalue());
        if (ls.safe_step) ++report.safe_steps;
        report.iterations = t;
        report.kkt_residual = kkt_residual(ls.next.factors, ls.next.gradient, rho);

        if (cfg.step_rule == StepRule::barzilai_borwein)
            zeta_start = bb_stepsize(ls.next.factors - state.factors, ls.next.gradient - state.gradient,
                                     ls.zeta);
        else
            zeta_start = cfg.zeta0;

        const double change = std::abs(total - next_total);
        total = next_total;
        state = std::move(ls.next);
        if (observer) observer(IterationRecord{t, state.factors, total, report.stepsize.back()});

        if (report.kkt_residual <= cfg.tol_kkt) {
            report.termination = Termination::kkt_tol;
            break;
        }
        if (t >= cfg.min_iter && change <= cfg.tol_obj * std::max(1.0, std::abs(total))) {
            report.termination = Termination::objective_tol;
            break;
        }
    }
    return {std::move(state.factors), std::move(report)};
}

} // namespace teralasso
