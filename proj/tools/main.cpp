#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfcheck.hpp"
#include "teralasso/errors.hpp"
#include "teralasso/experiments.hpp"
#include "teralasso/io.hpp"
#include "teralasso/ksum.hpp"
#include "teralasso/metrics.hpp"
#include "teralasso/parallel.hpp"
#include "teralasso/rng.hpp"
#include "teralasso/solver.hpp"
#include "teralasso/tensor.hpp"

namespace fs = std::filesystem;
using teralasso::io::json;

namespace teralasso::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIter = 2;
constexpr int kExitSelfcheck = 3;

struct CommonOptions
{
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = default_threads();
    std::string out = ".";
};

struct Overrides
{
    std::optional<double> rho_bar;
    std::vector<double> rho_grid;
    std::optional<std::size_t> max_iter;
    std::vector<std::string> dims;
    std::vector<std::size_t> n;
    std::optional<std::string> model;
    std::vector<std::size_t> edges;
    std::optional<double> ar_coeff;
    std::optional<std::size_t> trials;
    std::optional<std::string> input;
    std::optional<std::string> truth;
    std::optional<std::string> estimate;
    std::optional<std::string> kind;
    std::optional<std::string> tuning_mode;
    std::optional<std::string> selection;
    std::optional<double> support_eps;
};

Dims parse_dims(const std::string& text)
{
    std::vector<std::size_t> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ValidationError("--dims: cannot parse '" + text + "'");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    return Dims(std::move(sizes));
}

/// Reads --config: either a plain config object or a manifest written by a
/// previous run, in which case its "config" entry is used.
json load_config(const std::string& path, const std::string& command)
{
    if (path.empty()) return json::object();
    json j = io::read_json(path);
    if (!j.is_object()) throw ValidationError("--config: " + path + " is not a JSON object");
    if (j.contains("command") && j.contains("config")) {
        if (j.at("command") != command)
            throw ValidationError("--config: manifest was written by '" + j.at("command").get<std::string>()
                                  + "', not '" + command + "'");
        j = j.at("config");
    }
    return j;
}

void write_manifest(const fs::path& out, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs)
{
    io::write_json(out / "manifest.json", json{{"command", command}, {"config", config}, {"outputs", outputs}});
}

std::string required_path(const json& cfg, const char* key)
{
    const auto it = cfg.find(key);
    if (it == cfg.end() || !it->is_string() || it->get<std::string>().empty())
        throw ValidationError(std::string("missing required path '") + key + "'");
    return it->get<std::string>();
}

void apply_model_overrides(json& model, const Overrides& o)
{
    if (o.model) model["kind"] = *o.model;
    if (!o.edges.empty()) model["edges"] = o.edges;
    if (o.ar_coeff) model["ar_coeff"] = *o.ar_coeff;
}

int cmd_generate(const CommonOptions& common, const Overrides& o)
{
    json cfg = {{"dims", json::array({8, 8})}, {"n", 10}, {"seed", 0}, {"model", io::to_json(ModelSpec{})}};
    cfg.merge_patch(load_config(common.config, "generate"));
    if (!o.dims.empty()) {
        if (o.dims.size() != 1) throw ValidationError("generate: exactly one --dims is allowed");
        cfg["dims"] = io::dims_to_json(parse_dims(o.dims.front()));
    }
    if (!o.n.empty()) {
        if (o.n.size() != 1) throw ValidationError("generate: exactly one --n is allowed");
        cfg["n"] = o.n.front();
    }
    if (common.seed) cfg["seed"] = *common.seed;
    apply_model_overrides(cfg["model"], o);

    const Dims dims = io::dims_from_json(cfg.at("dims"));
    const auto n = cfg.at("n").get<std::size_t>();
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    const ModelSpec model = io::model_spec_from_json(cfg.at("model"));
    if (n == 0) throw ValidationError("generate: n must be positive");

    const json resolved = {{"dims", io::dims_to_json(dims)}, {"n", n}, {"seed", seed}, {"model", io::to_json(model)}};
    const FactorSet truth = generate_truth(model, dims, derive_seed(seed, 1));
    const DataTensorSet data = sample_ksum_gaussian(truth, n, derive_seed(seed, 2), common.threads);

    const fs::path out(common.out);
    fs::create_directories(out);
    io::write_factor_set(out / "truth.json", truth);
    io::write_ktns(out / "samples.ktns", data);
    write_manifest(out, "generate", resolved, {"truth.json", "samples.ktns"});
    std::cout << "p=" << dims.total() << " n=" << n << " seed=" << seed << "\n";
    return kExitOk;
}

int cmd_estimate(const CommonOptions& common, const Overrides& o)
{
    json cfg = {{"solver", io::to_json(SolverConfig{})}};
    cfg.merge_patch(load_config(common.config, "estimate"));
    if (o.input) cfg["input"] = *o.input;
    if (o.rho_bar) cfg["solver"]["rho_bar"] = *o.rho_bar;
    if (o.max_iter) cfg["solver"]["max_iter"] = *o.max_iter;

    const std::string input = required_path(cfg, "input");
    const SolverConfig solver = io::solver_config_from_json(cfg.at("solver"));
    solver.validate();
    const json resolved = {{"input", input}, {"solver", io::to_json(solver)}};

    const DataTensorSet data = io::read_ktns(input);
    const SolveResult result = solve(gram_factors(data), solver);

    const fs::path out(common.out);
    fs::create_directories(out);
    io::write_factor_set(out / "estimate.json", result.factors);
    io::write_json(out / "report.json", io::to_json(result.report));
    write_manifest(out, "estimate", resolved, {"estimate.json", "report.json"});

    const SolverReport& r = result.report;
    std::cout << "termination=" << to_string(r.termination) << " iterations=" << r.iterations
              << " objective=" << format_double(r.objective.back())
              << " kkt=" << format_double(r.kkt_residual) << "\n";
    return r.termination == Termination::max_iter ? kExitMaxIter : kExitOk;
}

int cmd_evaluate(const CommonOptions& common, const Overrides& o)
{
    json cfg = {{"support_eps", kDefaultSupportEps}};
    cfg.merge_patch(load_config(common.config, "evaluate"));
    if (o.truth) cfg["truth"] = *o.truth;
    if (o.estimate) cfg["estimate"] = *o.estimate;
    if (o.support_eps) cfg["support_eps"] = *o.support_eps;

    const std::string truth_path = required_path(cfg, "truth");
    const std::string estimate_path = required_path(cfg, "estimate");
    const auto eps = cfg.at("support_eps").get<double>();
    if (!(eps >= 0.0)) throw ValidationError("evaluate: support_eps must be >= 0");
    const json resolved = {{"truth", truth_path}, {"estimate", estimate_path}, {"support_eps", eps}};

    const FactorSet truth = io::read_factor_set(truth_path);
    const FactorSet estimate = io::read_factor_set(estimate_path);
    require_same_dims(truth.dims(), estimate.dims(), "evaluate");
    const Confusion c = classify_edges(edge_support(truth, eps), edge_support(estimate, eps));
    const EstimationErrors e = estimation_errors(truth, estimate);

    const json metrics = {{"mcc", c.mcc()},
                          {"precision", c.precision()},
                          {"recall", c.recall()},
                          {"tp", c.tp},
                          {"fp", c.fp},
                          {"tn", c.tn},
                          {"fn", c.fn},
                          {"frob", e.frob_full},
                          {"frob_rel", e.frob_rel},
                          {"spectral", e.spectral},
                          {"factor_offdiag", e.factor_offdiag},
                          {"diag", e.diag},
                          {"tau", e.tau}};
    std::string csv = "metric,value\n";
    for (const char* key : {"mcc", "precision", "recall", "frob", "frob_rel", "spectral", "diag", "tau"})
        csv += std::string(key) + "," + format_double(metrics.at(key).get<double>()) + "\n";
    for (std::size_t k = 0; k < e.factor_offdiag.size(); ++k)
        csv += "factor_offdiag_" + std::to_string(k) + "," + format_double(e.factor_offdiag[k]) + "\n";

    const fs::path out(common.out);
    fs::create_directories(out);
    io::write_json(out / "metrics.json", metrics);
    io::write_text(out / "metrics.csv", csv);
    write_manifest(out, "evaluate", resolved, {"metrics.json", "metrics.csv"});
    std::cout << csv;
    return kExitOk;
}

int cmd_sweep(const CommonOptions& common, const Overrides& o)
{
    ExperimentSpec defaults;
    defaults.dims = {Dims{8, 8}};
    defaults.n = {10};
    defaults.rho_bar = default_rho_grid();
    json cfg = io::to_json(defaults);
    cfg["kind"] = "rate";
    cfg["tuning_mode"] = std::string(to_string(TuningMode::equal));
    cfg.merge_patch(load_config(common.config, "sweep"));
    if (o.kind) cfg["kind"] = *o.kind;
    if (o.tuning_mode) cfg["tuning_mode"] = *o.tuning_mode;
    if (o.selection) cfg["selection"] = *o.selection;
    if (!o.dims.empty()) {
        json dims = json::array();
        for (const auto& d : o.dims) dims.push_back(io::dims_to_json(parse_dims(d)));
        cfg["dims"] = dims;
    }
    if (!o.n.empty()) cfg["n"] = o.n;
    if (!o.rho_grid.empty()) cfg["rho_bar"] = o.rho_grid;
    if (o.trials) cfg["trials"] = *o.trials;
    if (common.seed) cfg["seed"] = *common.seed;
    if (o.support_eps) cfg["support_eps"] = *o.support_eps;
    if (o.max_iter) cfg["solver"]["max_iter"] = *o.max_iter;
    apply_model_overrides(cfg["model"], o);

    ExperimentSpec spec = io::experiment_spec_from_json(cfg);
    spec.threads = common.threads;
    spec.validate();
    const std::string kind = cfg.at("kind").get<std::string>();
    const TuningMode mode = tuning_mode_from_string(cfg.at("tuning_mode").get<std::string>());

    json resolved = io::to_json(spec);
    resolved["kind"] = kind;
    if (kind == "tuning") resolved["tuning_mode"] = std::string(to_string(mode));

    std::string csv;
    if (kind == "rate") {
        const auto rows = run_rate_experiment(spec);
        csv = to_csv(rows);
        if (rows.size() >= 2) std::cout << "slope=" << format_double(rate_slope(rows)) << "\n";
    } else if (kind == "support") {
        csv = to_csv(run_support_experiment(spec));
    } else if (kind == "tuning") {
        csv = to_csv(tuning_sweep(spec, mode));
    } else {
        throw ValidationError("sweep: unknown kind '" + kind + "' (expected rate, support or tuning)");
    }

    const fs::path out(common.out);
    fs::create_directories(out);
    io::write_text(out / (kind + ".csv"), csv);
    write_manifest(out, "sweep", resolved, {kind + ".csv"});
    return kExitOk;
}

int cmd_selfcheck(const CommonOptions& common)
{
    const auto results = run_selfcheck(common.seed.value_or(0));
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        if (!r.passed) ++failed;
    }
    if (failed == 0) {
        std::cout << "selfcheck: all " << results.size() << " checks passed\n";
        return kExitOk;
    }
    std::cout << "selfcheck: " << failed << " of " << results.size() << " checks failed:";
    for (const auto& r : results)
        if (!r.passed) std::cout << " " << r.name;
    std::cout << "\n";
    return kExitSelfcheck;
}

void add_common(CLI::App* sub, CommonOptions& common, bool with_out = true)
{
    sub->add_option("--config", common.config, "JSON config file or a manifest from a previous run");
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--threads", common.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    if (with_out) sub->add_option("--out", common.out, "Output directory");
}

void add_model(CLI::App* sub, Overrides& o)
{
    sub->add_option("--model", o.model, "Factor model: er, grid or ar1");
    sub->add_option("--edges", o.edges, "Edges per mode, one value or one per mode")->delimiter(',');
    sub->add_option("--ar-coeff", o.ar_coeff, "AR(1) coefficient");
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"Sparse Kronecker-sum precision estimation for tensor data"};
    app.require_subcommand(1);
    CommonOptions common;
    Overrides o;

    auto* generate = app.add_subcommand("generate", "Draw ground-truth factors and Gaussian samples");
    add_common(generate, common);
    generate->add_option("--dims", o.dims, "Mode sizes, e.g. 8,8")->expected(1);
    generate->add_option("--n", o.n, "Number of replicates")->expected(1);
    add_model(generate, o);

    auto* estimate = app.add_subcommand("estimate", "Fit the sparse Kronecker-sum precision");
    add_common(estimate, common);
    estimate->add_option("--input", o.input, "Samples (.ktns)");
    estimate->add_option("--rho-bar", o.rho_bar, "Penalty scale");
    estimate->add_option("--max-iter", o.max_iter, "Iteration cap");

    auto* evaluate = app.add_subcommand("evaluate", "Compare an estimate with the truth");
    add_common(evaluate, common);
    evaluate->add_option("--truth", o.truth, "Truth factors (JSON)");
    evaluate->add_option("--estimate", o.estimate, "Estimated factors (JSON)");
    evaluate->add_option("--support-eps", o.support_eps, "Edge threshold");

    auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo experiment grid");
    add_common(sweep, common);
    sweep->add_option("--kind", o.kind, "rate, support or tuning");
    sweep->add_option("--tuning-mode", o.tuning_mode, "equal or grid2d");
    sweep->add_option("--selection", o.selection, "rho_bar selection for rate sweeps: holdout or oracle");
    sweep->add_option("--dims", o.dims, "Mode sizes, e.g. 16,16; repeat for several shapes")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sweep->add_option("--n", o.n, "Sample sizes, comma separated")->delimiter(',');
    sweep->add_option("--rho-bar", o.rho_grid, "rho_bar grid, comma separated")->delimiter(',');
    sweep->add_option("--trials", o.trials, "Trials per cell");
    sweep->add_option("--max-iter", o.max_iter, "Iteration cap per solve");
    sweep->add_option("--support-eps", o.support_eps, "Edge threshold");
    add_model(sweep, o);

    auto* selfcheck = app.add_subcommand("selfcheck", "Cross-check the fast kernels against dense references");
    selfcheck->add_option("--seed", common.seed, "Random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (generate->parsed()) return cmd_generate(common, o);
        if (estimate->parsed()) return cmd_estimate(common, o);
        if (evaluate->parsed()) return cmd_evaluate(common, o);
        if (sweep->parsed()) return cmd_sweep(common, o);
        return cmd_selfcheck(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

} // namespace teralasso::cli

int main(int argc, char** argv)
{
    return teralasso::cli::run(argc, argv);
}
