#include "teralasso/experiments.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "teralasso/errors.hpp"
#include "teralasso/generators.hpp"
#include "teralasso/ksum.hpp"
#include "teralasso/parallel.hpp"
#include "teralasso/rng.hpp"
#include "teralasso/tensor.hpp"

namespace teralasso {

namespace {

enum StreamTag : std::uint64_t { kTruthStream = 1, kDataStream = 2, kValidationStream = 3 };

std::uint64_t stream_seed(std::uint64_t seed, StreamTag tag, std::size_t dims_idx,
                          std::size_t n_idx, std::size_t trial)
{
    std::uint64_t s = derive_seed(seed, tag);
    s = derive_seed(s, dims_idx);
    s = derive_seed(s, n_idx);
    return derive_seed(s, trial);
}

// A failed solve is kept as a NaN point so the rest of the sweep still reports.
struct PointResult
{
    bool failed = false;
    double frob_rel = 0.0;
    double spectral_rel = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double mcc = 0.0;
    double heldout = 0.0;
};

using Setting = std::vector<double>; // rho_bar per mode

struct UnitKey
{
    std::size_t dims_idx;
    std::size_t n_idx;
    std::size_t trial;
};

std::vector<UnitKey> enumerate_units(const ExperimentSpec& spec)
{
    std::vector<UnitKey> out;
    for (std::size_t d = 0; d < spec.dims.size(); ++d)
        for (std::size_t n = 0; n < spec.n.size(); ++n)
            for (std::size_t t = 0; t < spec.trials; ++t) out.push_back({d, n, t});
    return out;
}

std::size_t unit_index(const ExperimentSpec& spec, std::size_t d, std::size_t n, std::size_t t)
{
    return (d * spec.n.size() + n) * spec.trials + t;
}

// One trial of one (dims, n) cell, evaluated at every penalty setting. Settings
// are solved in order, each warm-started from the previous solution.
std::vector<PointResult> run_unit(const ExperimentSpec& spec, const UnitKey& key,
                                  const std::vector<Setting>& settings, bool holdout)
{
    const Dims& dims = spec.dims[key.dims_idx];
    const std::size_t n = spec.n[key.n_idx];
    // The truth depends only on (dims, trial) so every n sees the same model.
    const FactorSet truth =
        generate_truth(spec.model, dims, stream_seed(spec.seed, kTruthStream, key.dims_idx, 0, key.trial));
    const GramSet g = gram_factors(sample_ksum_gaussian(
        truth, n, stream_seed(spec.seed, kDataStream, key.dims_idx, key.n_idx, key.trial)));
    std::optional<GramSet> validation;
    if (holdout)
        validation = gram_factors(sample_ksum_gaussian(
            truth, n, stream_seed(spec.seed, kValidationStream, key.dims_idx, key.n_idx, key.trial)));

    const EdgeSupport true_support = edge_support(truth, spec.support_eps);
    const double truth_frob = ksum_frobenius(truth);
    const double truth_spectral = ksum_spectral_norm(ksum_eigensystem(truth));
    const double logp = std::log(static_cast<double>(dims.total()));

    std::vector<PointResult> out;
    out.reserve(settings.size());
    std::optional<FactorSet> warm;
    for (const Setting& setting : settings) {
        SolverConfig cfg = spec.solver;
        std::vector<double> rho(dims.order());
        for (std::size_t k = 0; k < dims.order(); ++k)
            rho[k] = setting[k]
                     * std::sqrt(logp / (static_cast<double>(n) * static_cast<double>(dims.complement(k))));
        cfg.rho_override = rho;
        std::optional<SolveResult> solved;
        try {
            solved = solve(g, cfg, warm);
        } catch (const Error&) {
            constexpr double nan = std::numeric_limits<double>::quiet_NaN();
            out.push_back({true, nan, nan, nan, nan, nan, nan});
            continue;
        }
        SolveResult& res = *solved;

        PointResult pr;
        const EstimationErrors err = estimation_errors(truth, res.factors);
        pr.frob_rel = err.frob_full / truth_frob;
        pr.spectral_rel = err.spectral / truth_spectral;
        const Confusion c = classify_edges(true_support, edge_support(res.factors, spec.support_eps));
        pr.precision = c.precision();
        pr.recall = c.recall();
        pr.mcc = c.mcc();
        if (validation)
            pr.heldout = smooth_objective(res.factors, ksum_eigensystem(res.factors), *validation);
        out.push_back(pr);
        warm = std::move(res.factors);
    }
    return out;
}

std::vector<std::vector<PointResult>> run_units(const ExperimentSpec& spec,
                                                const std::vector<Setting>& settings, bool holdout)
{
    const auto units = enumerate_units(spec);
    std::vector<std::vector<PointResult>> results(units.size());
    parallel_for(units.size(), spec.threads,
                 [&](std::size_t u) { results[u] = run_unit(spec, units[u], settings, holdout); });
    return results;
}

std::vector<Setting> equal_settings(const ExperimentSpec& spec, std::size_t order)
{
    std::vector<Setting> out;
    for (double r : spec.rho_bar) out.emplace_back(order, r);
    return out;
}

std::size_t max_order(const ExperimentSpec& spec)
{
    std::size_t out = 0;
    for (const auto& d : spec.dims) out = std::max(out, d.order());
    return out;
}

double mean(const std::vector<double>& v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double sq = 0.0;
    for (double x : v) sq += (x - m) * (x - m);
    return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

std::string dims_field(const Dims& dims)
{
    std::string out;
    for (std::size_t k = 0; k < dims.order(); ++k) {
        if (k) out += "x";
        out += std::to_string(dims[k]);
    }
    return out;
}

} // namespace

std::string_view to_string(ModelKind kind) noexcept
{
    switch (kind) {
    case ModelKind::er: return "er";
    case ModelKind::grid: return "grid";
    case ModelKind::ar1: return "ar1";
    }
    return "er";
}

ModelKind model_kind_from_string(std::string_view s)
{
    if (s == "er") return ModelKind::er;
    if (s == "grid") return ModelKind::grid;
    if (s == "ar1") return ModelKind::ar1;
    throw ValidationError("unknown model kind '" + std::string(s) + "' (expected er, grid or ar1)");
}

std::string_view to_string(RhoSelection s) noexcept
{
    return s == RhoSelection::oracle ? "oracle" : "holdout";
}

RhoSelection rho_selection_from_string(std::string_view s)
{
    if (s == "holdout") return RhoSelection::holdout;
    if (s == "oracle") return RhoSelection::oracle;
    throw ValidationError("unknown rho selection '" + std::string(s) + "'");
}

std::string_view to_string(TuningMode m) noexcept
{
    return m == TuningMode::grid2d ? "grid2d" : "equal";
}

TuningMode tuning_mode_from_string(std::string_view s)
{
    if (s == "equal") return TuningMode::equal;
    if (s == "grid2d") return TuningMode::grid2d;
    throw ValidationError("unknown tuning mode '" + std::string(s) + "'");
}

std::size_t ModelSpec::edges_for(std::size_t mode, std::size_t d) const
{
    if (edges.empty()) return d / 2;
    if (edges.size() == 1) return edges[0];
    if (mode >= edges.size())
        throw ValidationError("model: no edge count given for mode " + std::to_string(mode));
    return edges[mode];
}

FactorSet generate_truth(const ModelSpec& model, const Dims& dims, std::uint64_t seed)
{
    std::vector<Matrix> factors;
    factors.reserve(dims.order());
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const std::size_t d = dims[k];
        const std::uint64_t s = derive_seed(seed, k);
        switch (model.kind) {
        case ModelKind::er: factors.push_back(er_factor(d, model.edges_for(k, d), s)); break;
        case ModelKind::grid: factors.push_back(grid_factor(d, model.edges_for(k, d), s)); break;
        case ModelKind::ar1: factors.push_back(ar1_factor(d, model.ar_coeff)); break;
        }
    }
    return FactorSet(dims, std::move(factors));
}

void ExperimentSpec::validate() const
{
    if (dims.empty()) throw ValidationError("experiment: at least one dims entry is required");
    if (n.empty()) throw ValidationError("experiment: at least one n is required");
    if (rho_bar.empty()) throw ValidationError("experiment: the rho_bar grid is empty");
    if (trials == 0) throw ValidationError("experiment: trials must be positive");
    for (auto v : n)
        if (v == 0) throw ValidationError("experiment: n must be positive");
    for (double r : rho_bar)
        if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("experiment: rho_bar must be >= 0");
    if (!(support_eps >= 0.0)) throw ValidationError("experiment: support_eps must be >= 0");
    for (const auto& d : dims)
        for (std::size_t k = 0; k < d.order(); ++k)
            if (model.kind != ModelKind::ar1 && !model.edges.empty() && model.edges.size() != 1
                && model.edges.size() != d.order())
                throw ValidationError("experiment: edge counts do not match the number of modes");
    solver.validate();
}

std::vector<double> log_grid(double lo, double hi, std::size_t count)
{
    if (count == 0) return {};
    if (!(lo > 0.0) || !(hi >= lo)) throw ValidationError("log_grid: requires 0 < lo <= hi");
    if (count == 1) return {lo};
    std::vector<double> out(count);
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> default_rho_grid()
{
    return log_grid(1e-3, 1e1, 9);
}

std::vector<RateRow> run_rate_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const bool holdout = spec.selection == RhoSelection::holdout;
    const auto settings = equal_settings(spec, max_order(spec));
    const auto results = run_units(spec, settings, holdout);

    std::vector<RateRow> rows;
    for (std::size_t d = 0; d < spec.dims.size(); ++d)
        for (std::size_t n = 0; n < spec.n.size(); ++n) {
            std::vector<double> errs;
            std::vector<double> picked;
            std::size_t oracle_pick = 0;
            if (!holdout) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t s = 0; s < settings.size(); ++s) {
                    std::vector<double> trial_errs;
                    for (std::size_t t = 0; t < spec.trials; ++t) {
                        const auto& r = results[unit_index(spec, d, n, t)][s];
                        if (!r.failed) trial_errs.push_back(r.frob_rel);
                    }
                    const double acc = trial_errs.empty() ? std::numeric_limits<double>::infinity()
                                                          : mean(trial_errs);
                    if (acc < best) {
                        best = acc;
                        oracle_pick = s;
                    }
                }
            }
            std::size_t failed = 0;
            for (std::size_t t = 0; t < spec.trials; ++t) {
                const auto& r = results[unit_index(spec, d, n, t)];
                std::optional<std::size_t> pick;
                if (holdout) {
                    for (std::size_t s = 0; s < r.size(); ++s)
                        if (!r[s].failed && (!pick || r[s].heldout < r[*pick].heldout)) pick = s;
                } else if (!r[oracle_pick].failed) {
                    pick = oracle_pick;
                }
                if (!pick) {
                    ++failed;
                    continue;
                }
                errs.push_back(r[*pick].frob_rel);
                picked.push_back(spec.rho_bar[*pick]);
            }
            rows.push_back({spec.dims[d], spec.n[n], effective_sample_size(spec.dims[d], spec.n[n]),
                            mean(picked), mean(errs), stddev(errs), spec.trials, failed});
        }
    return rows;
}

std::vector<SupportRow> run_support_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const auto settings = equal_settings(spec, max_order(spec));
    const auto results = run_units(spec, settings, false);

    std::vector<SupportRow> rows;
    for (std::size_t d = 0; d < spec.dims.size(); ++d)
        for (std::size_t n = 0; n < spec.n.size(); ++n)
            for (std::size_t s = 0; s < settings.size(); ++s) {
                std::vector<double> prec, rec, m;
                std::size_t failed = 0;
                for (std::size_t t = 0; t < spec.trials; ++t) {
                    const auto& r = results[unit_index(spec, d, n, t)][s];
                    if (r.failed) {
                        ++failed;
                        continue;
                    }
                    prec.push_back(r.precision);
                    rec.push_back(r.recall);
                    m.push_back(r.mcc);
                }
                rows.push_back({spec.dims[d], spec.n[n], spec.rho_bar[s], mean(prec), mean(rec), mean(m),
                                spec.trials, failed});
            }
    return rows;
}

std::vector<TuningRow> tuning_sweep(const ExperimentSpec& spec, TuningMode mode)
{
    spec.validate();
    const std::size_t order = max_order(spec);
    std::vector<Setting> settings;
    if (mode == TuningMode::equal) {
        settings = equal_settings(spec, order);
    } else {
        if (order < 2) throw ValidationError("tuning_sweep: grid2d needs at least two modes");
        for (double a : spec.rho_bar)
            for (double b : spec.rho_bar) {
                Setting s(order, a);
                s[1] = b;
                settings.push_back(std::move(s));
            }
    }
    const auto results = run_units(spec, settings, false);

    std::vector<TuningRow> rows;
    for (std::size_t d = 0; d < spec.dims.size(); ++d)
        for (std::size_t n = 0; n < spec.n.size(); ++n)
            for (std::size_t s = 0; s < settings.size(); ++s) {
                std::vector<double> m, f, sp;
                std::size_t failed = 0;
                for (std::size_t t = 0; t < spec.trials; ++t) {
                    const auto& r = results[unit_index(spec, d, n, t)][s];
                    if (r.failed) {
                        ++failed;
                        continue;
                    }
                    m.push_back(r.mcc);
                    f.push_back(r.frob_rel);
                    sp.push_back(r.spectral_rel);
                }
                Setting rb(settings[s].begin(),
                           settings[s].begin() + static_cast<std::ptrdiff_t>(spec.dims[d].order()));
                rows.push_back({spec.dims[d], spec.n[n], std::move(rb), mean(m), mean(f), mean(sp), spec.trials,
                                failed});
            }
    return rows;
}

double rate_slope(const std::vector<RateRow>& rows)
{
    if (rows.size() < 2) throw ValidationError("rate_slope: need at least two cells");
    std::vector<double> x, y;
    for (const auto& r : rows) {
        x.push_back(std::log(r.n_eff));
        y.push_back(std::log(r.frob_rel_mean));
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw ValidationError("rate_slope: all cells have the same N_eff");
    return sxy / sxx;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string to_csv(const std::vector<RateRow>& rows)
{
    std::ostringstream os;
    os << "dims,p,K,n,n_eff,rho_bar,frob_rel_mean,frob_rel_std,trials,failed\n";
    for (const auto& r : rows)
        os << dims_field(r.dims) << ',' << r.dims.total() << ',' << r.dims.order() << ',' << r.n << ','
           << format_double(r.n_eff) << ',' << format_double(r.rho_bar) << ','
           << format_double(r.frob_rel_mean) << ',' << format_double(r.frob_rel_std) << ',' << r.trials
           << ',' << r.failed << '\n';
    return os.str();
}

std::string to_csv(const std::vector<SupportRow>& rows)
{
    std::ostringstream os;
    os << "dims,p,K,n,rho_bar,precision,recall,mcc,trials,failed\n";
    for (const auto& r : rows)
        os << dims_field(r.dims) << ',' << r.dims.total() << ',' << r.dims.order() << ',' << r.n << ','
           << format_double(r.rho_bar) << ',' << format_double(r.precision) << ','
           << format_double(r.recall) << ',' << format_double(r.mcc) << ',' << r.trials << ','
           << r.failed << '\n';
    return os.str();
}

std::string to_csv(const std::vector<TuningRow>& rows)
{
    std::ostringstream os;
    os << "dims,p,K,n,rho_bar,mcc,frob_rel,spectral_rel,trials,failed\n";
    for (const auto& r : rows) {
        std::string rb;
        for (std::size_t k = 0; k < r.rho_bar.size(); ++k) {
            if (k) rb += ';';
            rb += format_double(r.rho_bar[k]);
        }
        os << dims_field(r.dims) << ',' << r.dims.total() << ',' << r.dims.order() << ',' << r.n << ','
           << rb << ',' << format_double(r.mcc) << ',' << format_double(r.frob_rel) << ','
           << format_double(r.spectral_rel) << ',' << r.trials << ',' << r.failed
           << '\n';
    }
    return os.str();
}

} // namespace teralasso
