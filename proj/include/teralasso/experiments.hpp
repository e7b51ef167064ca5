#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "teralasso/factor_set.hpp"
#include "teralasso/metrics.hpp"
#include "teralasso/solver.hpp"

namespace teralasso {

enum class ModelKind { er, grid, ar1 };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view s);

/// Random factor model. `edges` holds one count per mode, a single count used
/// for every mode, or nothing (d_k / 2 edges per mode). Ignored for ar1.
struct ModelSpec
{
    ModelKind kind = ModelKind::er;
    std::vector<std::size_t> edges;
    double ar_coeff = 0.5;

    std::size_t edges_for(std::size_t mode, std::size_t d) const;
};

/// Ground-truth factors; mode k is drawn from the stream derive_seed(seed, k).
FactorSet generate_truth(const ModelSpec& model, const Dims& dims, std::uint64_t seed);

/// How the rate experiment picks rho_bar in each trial.
enum class RhoSelection {
    holdout, ///< minimize the Gaussian negative log-likelihood of an independent validation sample
    oracle,  ///< minimize the mean relative Frobenius error against the truth
};

std::string_view to_string(RhoSelection s) noexcept;
RhoSelection rho_selection_from_string(std::string_view s);

struct ExperimentSpec
{
    ModelSpec model;
    std::vector<Dims> dims;
    std::vector<std::size_t> n;
    std::vector<double> rho_bar;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    double support_eps = kDefaultSupportEps;
    RhoSelection selection = RhoSelection::holdout;
    SolverConfig solver;
    unsigned threads = 1;

    void validate() const;
};

/// count points log-spaced over [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// The default rho_bar grid, 9 points from 1e-3 to 1e1.
std::vector<double> default_rho_grid();

struct RateRow
{
    Dims dims;
    std::size_t n;
    double n_eff;
    double rho_bar;       ///< mean selected rho_bar over trials
    double frob_rel_mean;
    double frob_rel_std;
    std::size_t trials;
    std::size_t failed; ///< trials where every solve failed; excluded from the means
};

struct SupportRow
{
    Dims dims;
    std::size_t n;
    double rho_bar;
    double precision;
    double recall;
    double mcc;
    std::size_t trials;
    std::size_t failed; ///< trials whose solve failed; excluded from the means
};

struct TuningRow
{
    Dims dims;
    std::size_t n;
    std::vector<double> rho_bar; ///< per mode
    double mcc;
    double frob_rel;
    double spectral_rel;
    std::size_t trials;
    std::size_t failed; ///< trials whose solve failed; excluded from the means
};

/// One row per (dims, n) cell, in spec order.
std::vector<RateRow> run_rate_experiment(const ExperimentSpec& spec);

/// One row per (dims, n, rho_bar) cell, in spec order.
std::vector<SupportRow> run_support_experiment(const ExperimentSpec& spec);

enum class TuningMode {
    equal,  ///< rho_bar shared by every mode
    grid2d, ///< independent rho_bar for mode 1, every other mode uses the mode-0 value
};

std::string_view to_string(TuningMode m) noexcept;
TuningMode tuning_mode_from_string(std::string_view s);

/// One row per (dims, n, rho_bar setting) cell, in spec order.
std::vector<TuningRow> tuning_sweep(const ExperimentSpec& spec, TuningMode mode = TuningMode::equal);

/// Least-squares slope of log(mean frob_rel) against log(N_eff).
double rate_slope(const std::vector<RateRow>& rows);

std::string to_csv(const std::vector<RateRow>& rows);
std::string to_csv(const std::vector<SupportRow>& rows);
std::string to_csv(const std::vector<TuningRow>& rows);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

} // namespace teralasso
