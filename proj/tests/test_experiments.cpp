#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "teralasso/errors.hpp"
#include "teralasso/experiments.hpp"
#include "teralasso/ksum.hpp"

using namespace teralasso;

namespace {

ExperimentSpec small_spec(ModelKind kind)
{
    ExperimentSpec spec;
    spec.model.kind = kind;
    spec.dims = {Dims{4, 4}};
    spec.n = {5};
    spec.rho_bar = {0.1};
    spec.trials = 2;
    spec.seed = 3;
    return spec;
}

std::size_t count_lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_CASE("model spec edge counts")
{
    ModelSpec m;
    CHECK(m.edges_for(0, 9) == 4);
    m.edges = {3};
    CHECK(m.edges_for(1, 9) == 3);
    m.edges = {3, 5};
    CHECK(m.edges_for(1, 9) == 5);
    CHECK_THROWS_AS(m.edges_for(2, 9), ValidationError);
}

TEST_CASE("generate_truth")
{
    ModelSpec ar;
    ar.kind = ModelKind::ar1;
    ar.ar_coeff = 0.0;
    const FactorSet id = generate_truth(ar, Dims{3, 4}, 1);
    CHECK(id[0] == Matrix::Identity(3, 3));
    CHECK(id[1] == Matrix::Identity(4, 4));

    ModelSpec er;
    er.edges = {2, 3};
    const FactorSet f = generate_truth(er, Dims{5, 6}, 9);
    CHECK(ksum_frobenius(f - generate_truth(er, Dims{5, 6}, 9)) == 0.0);
    CHECK(ksum_eigensystem(f).min_eigenvalue() > 0.0);

    ModelSpec grid;
    grid.kind = ModelKind::grid;
    grid.edges = {4};
    CHECK_NOTHROW(generate_truth(grid, Dims{9, 16}, 2));
    CHECK(model_kind_from_string(to_string(ModelKind::grid)) == ModelKind::grid);
    CHECK_THROWS_AS(model_kind_from_string("tree"), ValidationError);
}

TEST_CASE("log grid")
{
    const auto g = log_grid(1e-3, 1e1, 9);
    REQUIRE(g.size() == 9);
    CHECK(g.front() == 1e-3);
    CHECK(g.back() == 1e1);
    CHECK(g[4] == doctest::Approx(0.1));
    CHECK(log_grid(2.0, 5.0, 1) == std::vector<double>{2.0});
    CHECK(default_rho_grid() == g);
}

TEST_CASE("experiment spec validation")
{
    ExperimentSpec spec = small_spec(ModelKind::er);
    CHECK_NOTHROW(spec.validate());
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = small_spec(ModelKind::er);
    spec.rho_bar.clear();
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = small_spec(ModelKind::er);
    spec.n = {0};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = small_spec(ModelKind::er);
    spec.model.edges = {1, 2, 3};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("rate experiment is consistent at large n")
{
    ExperimentSpec spec = small_spec(ModelKind::er);
    spec.n = {10000};
    spec.rho_bar = {1e-3};
    spec.trials = 1;
    const auto rows = run_rate_experiment(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].frob_rel_mean < 0.1);
    CHECK(rows[0].failed == 0);
}

TEST_CASE("rate experiment cells with equal N_eff give similar errors")
{
    ExperimentSpec spec;
    spec.model.kind = ModelKind::ar1;
    spec.dims = {Dims{4, 4}, Dims{2, 8}};
    spec.n = {10, 20};
    spec.rho_bar = default_rho_grid();
    spec.trials = 10;
    spec.seed = 5;
    spec.selection = RhoSelection::oracle;
    const auto rows = run_rate_experiment(spec);
    REQUIRE(rows.size() == 4);
    // (4x4, n = 10) and (2x8, n = 20) share N_eff
    CHECK(rows[0].n_eff == doctest::Approx(rows[3].n_eff));
    const double ratio = rows[0].frob_rel_mean / rows[3].frob_rel_mean;
    CHECK(ratio < 1.5);
    CHECK(ratio > 1.0 / 1.5);
}

TEST_CASE("rate experiment error decreases with n")
{
    ExperimentSpec spec;
    spec.model.kind = ModelKind::ar1;
    spec.dims = {Dims{6, 6}};
    spec.n = {2, 8, 32, 128};
    spec.rho_bar = default_rho_grid();
    spec.trials = 5;
    spec.seed = 6;
    const auto rows = run_rate_experiment(spec);
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].frob_rel_mean <= rows[i - 1].frob_rel_mean + rows[i - 1].frob_rel_std);
    const double slope = rate_slope(rows);
    CHECK(slope < 0.0);
    CHECK_THROWS_AS(rate_slope({rows[0]}), ValidationError);
}

TEST_CASE("support experiment extremes")
{
    ExperimentSpec spec = small_spec(ModelKind::er);
    spec.dims = {Dims{8, 8}};
    spec.rho_bar = {0.0, 1e4};
    spec.n = {20};
    spec.support_eps = 1e-12;
    const auto rows = run_support_experiment(spec);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].recall == 1.0);
    CHECK(rows[1].recall == 0.0);
    CHECK(rows[1].precision == 1.0);
    CHECK(rows[1].mcc == 0.0);
}

TEST_CASE("support recovery is good in an easy regime")
{
    ExperimentSpec spec;
    spec.model.kind = ModelKind::er;
    spec.model.edges = {16};
    spec.dims = {Dims{32, 32}};
    spec.n = {100};
    spec.rho_bar = log_grid(1e-1, 1e1, 5);
    spec.trials = 2;
    spec.seed = 8;
    const auto rows = run_support_experiment(spec);
    double best = -1.0;
    for (const auto& r : rows) best = std::max(best, r.mcc);
    CHECK(best >= 0.9);
}

TEST_CASE("tuning sweep shapes")
{
    ExperimentSpec spec = small_spec(ModelKind::er);
    CHECK(tuning_sweep(spec).size() == 1);
    spec.rho_bar = {0.1, 1.0, 3.0};
    CHECK(tuning_sweep(spec).size() == 3);
    const auto rows = tuning_sweep(spec, TuningMode::grid2d);
    REQUIRE(rows.size() == 9);
    CHECK(rows[1].rho_bar == std::vector<double>{0.1, 1.0});
    CHECK(count_lines(to_csv(rows)) == 10);
    spec.dims = {Dims{16}};
    CHECK_THROWS_AS(tuning_sweep(spec, TuningMode::grid2d), ValidationError);
}

TEST_CASE("equal penalties are near the best of the 2-D sweep")
{
    ExperimentSpec spec;
    spec.model.kind = ModelKind::er;
    spec.model.edges = {8};
    spec.dims = {Dims{16, 16}};
    spec.n = {10};
    spec.rho_bar = log_grid(0.1, 10.0, 7);
    spec.trials = 2;
    spec.seed = 10;
    const auto eq = tuning_sweep(spec);
    const auto two = tuning_sweep(spec, TuningMode::grid2d);
    const auto best_eq = std::max_element(eq.begin(), eq.end(), [](auto& a, auto& b) { return a.mcc < b.mcc; });
    const auto best_two = std::max_element(two.begin(), two.end(), [](auto& a, auto& b) { return a.mcc < b.mcc; });
    const auto index = [&](double r) {
        return std::find(spec.rho_bar.begin(), spec.rho_bar.end(), r) - spec.rho_bar.begin();
    };
    const auto i = index(best_eq->rho_bar[0]);
    CHECK(std::abs(i - index(best_two->rho_bar[0])) <= 1);
    CHECK(std::abs(i - index(best_two->rho_bar[1])) <= 1);
}

TEST_CASE("experiments do not depend on the thread count")
{
    ExperimentSpec spec = small_spec(ModelKind::er);
    spec.n = {3, 6};
    spec.rho_bar = {0.1, 1.0};
    spec.trials = 3;
    const std::string one = to_csv(run_support_experiment(spec));
    spec.threads = 4;
    CHECK(to_csv(run_support_experiment(spec)) == one);
    spec.threads = 1;
    const std::string rate = to_csv(run_rate_experiment(spec));
    spec.threads = 3;
    CHECK(to_csv(run_rate_experiment(spec)) == rate);
}

TEST_CASE("csv output")
{
    ExperimentSpec spec = small_spec(ModelKind::ar1);
    const std::string csv = to_csv(run_rate_experiment(spec));
    CHECK(count_lines(csv) == 2);
    CHECK(csv.rfind("dims,p,K,n,n_eff,rho_bar,frob_rel_mean,frob_rel_std,trials,failed\n4x4,16,2,5,", 0) == 0);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(format_double(3.0) == "3");
}
