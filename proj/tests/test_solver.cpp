#include <doctest.h>

#include <cmath>
#include <vector>

#include "teralasso/errors.hpp"
#include "teralasso/generators.hpp"
#include "teralasso/ksum.hpp"
#include "teralasso/oracle.hpp"
#include "teralasso/solver.hpp"
#include "teralasso/tensor.hpp"
#include "test_support.hpp"

using namespace teralasso;
using teralasso::testing::random_factors;

namespace {

struct Problem
{
    DataTensorSet data;
    GramSet gram;
    Matrix s;
};

Problem make_problem(const Dims& dims, std::size_t n, std::uint64_t seed)
{
    std::vector<Matrix> truth;
    for (std::size_t k = 0; k < dims.order(); ++k) truth.push_back(er_factor(dims[k], dims[k] / 2, derive_seed(seed, k)));
    DataTensorSet data = sample_ksum_gaussian(FactorSet(dims, std::move(truth)), n, derive_seed(seed, 99));
    GramSet gram = gram_factors(data);
    Matrix s = dims.total() <= oracle::kMaxOracleSize ? oracle::sample_covariance(data) : Matrix();
    return {std::move(data), std::move(gram), std::move(s)};
}

GramSet identity_gram(const Dims& dims)
{
    GramSet g{dims, 1, {}, 1.0};
    for (std::size_t k = 0; k < dims.order(); ++k)
        g.s.push_back(Matrix::Identity(static_cast<Eigen::Index>(dims[k]), static_cast<Eigen::Index>(dims[k])));
    return g;
}

SolverConfig tight(double rho_bar)
{
    SolverConfig cfg;
    cfg.rho_bar = rho_bar;
    cfg.tol_obj = 1e-15;
    cfg.tol_kkt = 1e-9;
    cfg.max_iter = 5000;
    return cfg;
}

} // namespace

TEST_CASE("penalty weights follow the tuning rule")
{
    SolverConfig cfg;
    cfg.rho_bar = 2.0;
    const Dims dims{4, 8};
    const auto rho = penalty_weights(cfg, dims, 10);
    CHECK(rho[0] == doctest::Approx(2.0 * std::sqrt(std::log(32.0) / (10.0 * 8.0))));
    CHECK(rho[1] == doctest::Approx(2.0 * std::sqrt(std::log(32.0) / (10.0 * 4.0))));
    cfg.rho_override = std::vector<double>{0.1, 0.2};
    CHECK(penalty_weights(cfg, dims, 10) == std::vector<double>{0.1, 0.2});
    cfg.rho_override = std::vector<double>{0.1};
    CHECK_THROWS_AS(penalty_weights(cfg, dims, 10), DimensionError);
}

TEST_CASE("config validation")
{
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.backtrack_c = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.zeta0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.rho_bar = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.tol_kkt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("objective small cases")
{
    const Dims dims{2, 2};
    const GramSet g = identity_gram(dims);
    const std::vector<double> zero{0.0, 0.0};
    const FactorSet id = FactorSet::identity(dims);
    const ObjectiveValue v = objective(id, g, zero);
    CHECK(v.total == doctest::Approx(8.0 - 4.0 * std::log(2.0)));
    CHECK(v.penalty == 0.0);
    CHECK(v.total == v.smooth);

    oracle::DenseProblem dp{dims, Matrix::Identity(4, 4), {0.0, 0.0}};
    CHECK(oracle::dense_objective(Matrix::Identity(4, 4), dp) == doctest::Approx(4.0));
    CHECK(oracle::dense_objective(2.0 * Matrix::Identity(4, 4), dp) == doctest::Approx(-4.0 * std::log(2.0) + 8.0));
    CHECK_THROWS_AS(objective(FactorSet::identity(dims, -1.0), g, zero), NotPositiveDefiniteError);
}

TEST_CASE("objective matches the dense evaluation")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dims dims = seed % 2 ? Dims{4, 4} : Dims{2, 3, 2};
        const Problem pr = make_problem(dims, 3, seed);
        const FactorSet f = random_factors(dims, 10 + seed);
        const std::vector<double> rho(dims.order(), 0.05 * static_cast<double>(seed));
        const oracle::DenseProblem dp{dims, pr.s, rho};
        CHECK(std::abs(objective(f, pr.gram, rho).total - oracle::dense_objective(kron_sum_dense(f), dp)) < 1e-8);
    }
}

TEST_CASE("shrink_offdiag")
{
    const Matrix m{{1, 0.3}, {-0.8, 2}};
    CHECK(shrink_offdiag(m, 0.0) == m);
    CHECK(shrink_offdiag(m, 0.5).isApprox(Matrix{{1, 0}, {-0.3, 2}}));
    const Matrix d = shrink_offdiag(m, 0.8);
    CHECK(d == Matrix(m.diagonal().asDiagonal()));
    CHECK_THROWS_AS(shrink_offdiag(m, -1.0), ValidationError);
}

TEST_CASE("subspace gradient equals the dense projected gradient")
{
    const Dims dims{2, 2};
    GramSet g = identity_gram(dims);
    for (auto& s : g.s) s *= 0.5;
    g.trace_mean = 0.5;
    const FactorSet grad = subspace_gradient(FactorSet::identity(dims), g);
    const Matrix dense = 0.5 * Matrix::Identity(4, 4) - 0.5 * Matrix::Identity(4, 4);
    CHECK((kron_sum_dense(grad) - kron_sum_dense(proj_ksum_dense(dense, dims))).norm() < 1e-10);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dims d = seed % 2 ? Dims{3, 5} : Dims{2, 3, 3};
        const Problem pr = make_problem(d, 4, 20 + seed);
        const FactorSet f = random_factors(d, 30 + seed);
        const Matrix omega = kron_sum_dense(f);
        const Matrix expect = kron_sum_dense(proj_ksum_dense(pr.s - omega.inverse(), d));
        CHECK((kron_sum_dense(subspace_gradient(f, pr.gram)) - expect).norm() < 1e-10);
    }
}

TEST_CASE("gradient matches central finite differences")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dims dims = seed % 2 ? Dims{4, 4} : Dims{2, 3, 3};
        const Problem pr = make_problem(dims, 5, 40 + seed);
        const FactorSet f = random_factors(dims, 50 + seed);
        const FactorSet grad = subspace_gradient(f, pr.gram);
        const std::vector<double> zero(dims.order(), 0.0);
        for (std::uint64_t dir = 0; dir < 10; ++dir) {
            FactorSet v = random_factors(dims, 1000 * seed + dir, false);
            v *= 1.0 / ksum_frobenius(v);
            const double h = 1e-5;
            const double fp = objective(f + h * v, pr.gram, zero).smooth;
            const double fm = objective(f - h * v, pr.gram, zero).smooth;
            const double fd = (fp - fm) / (2 * h);
            const double an = ksum_inner(grad, v);
            CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("quad_model")
{
    const Problem pr = make_problem(Dims{3, 4}, 3, 7);
    const FactorSet base = random_factors(pr.gram.dims, 8);
    const FactorSet cand = random_factors(pr.gram.dims, 9);
    const FactorSet grad = subspace_gradient(base, pr.gram);
    const double f0 = objective(base, pr.gram, std::vector<double>{0, 0}).smooth;
    CHECK(quad_model(base, base, grad, 0.1, pr.gram) == doctest::Approx(f0));
    CHECK(quad_model(cand, base, grad, 1e300, f0) == doctest::Approx(f0 + ksum_inner(cand - base, grad)));

    const Matrix db = kron_sum_dense(base);
    const Matrix dc = kron_sum_dense(cand);
    const Matrix dg = pr.s - db.inverse();
    const double zeta = 0.3;
    const double dense = f0 + (dc - db).cwiseProduct(dg).sum() + (dc - db).squaredNorm() / (2 * zeta);
    CHECK(std::abs(quad_model(cand, base, grad, zeta, pr.gram) - dense) < 1e-9);
    CHECK_THROWS_AS(quad_model(cand, base, grad, 0.0, f0), ValidationError);
}

TEST_CASE("ista_step")
{
    const Dims dims{3, 4};
    const FactorSet f = random_factors(dims, 1);
    const std::vector<double> zero{0.0, 0.0};
    const FactorSet same = ista_step(f, FactorSet::zeros(dims), zero, 0.5);
    CHECK(ksum_frobenius(same - f) == 0.0);

    const FactorSet g = random_factors(dims, 2, false);
    const std::vector<double> huge{1e6, 1e6};
    const FactorSet diag_only = ista_step(f, g, huge, 0.5);
    for (std::size_t k = 0; k < 2; ++k) {
        Matrix off = diag_only[k];
        off.diagonal().setZero();
        CHECK(off.norm() == 0.0);
        CHECK(diag_only[k].diagonal().isApprox((f[k] - 0.5 * g[k]).diagonal()));
    }

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dims d = seed % 2 ? Dims{3, 4} : Dims{2, 2, 3};
        const Problem pr = make_problem(d, 4, 60 + seed);
        const FactorSet x = random_factors(d, 70 + seed);
        const std::vector<double> rho(d.order(), 0.02 * static_cast<double>(seed + 1));
        const double zeta = 0.05;
        const FactorSet fast = ista_step(x, subspace_gradient(x, pr.gram), rho, zeta);
        const Matrix slow = oracle::dense_prox_step(kron_sum_dense(x), {d, pr.s, rho}, zeta);
        CHECK((kron_sum_dense(fast) - slow).norm() < 1e-9);
    }
}

TEST_CASE("line search")
{
    const Dims dims{2, 2};
    const GramSet g = identity_gram(dims);
    const FactorSet centered = center_gram(g);
    SolverConfig cfg;
    const std::vector<double> zero{0.0, 0.0};
    const SolverState at_opt = make_state(FactorSet::identity(dims, 0.5), centered, g);
    const LineSearchResult stay = line_search(at_opt, g, centered, zero, 1.0, cfg);
    CHECK(stay.backtracks == 0);
    CHECK(ksum_frobenius(stay.next.factors - at_opt.factors) < 1e-15);

    const SolverState id = make_state(FactorSet::identity(dims), centered, g);
    const double lmin = id.spectrum.min_eigenvalue();
    CHECK(lmin * lmin == doctest::Approx(4.0));

    const Problem pr = make_problem(Dims{4, 4}, 3, 5);
    const FactorSet c2 = center_gram(pr.gram);
    const std::vector<double> rho{0.1, 0.1};
    const SolverState st = make_state(FactorSet::identity(pr.gram.dims, 0.5), c2, pr.gram);
    const LineSearchResult big = line_search(st, pr.gram, c2, rho, 1e6, cfg);
    CHECK(big.next.spectrum.min_eigenvalue() > 0.0);
    CHECK(big.next.smooth <= quad_model(big.next.factors, st.factors, st.gradient, big.zeta, st.smooth) + 1e-12);
    CHECK(big.zeta == doctest::Approx(1e6 * std::pow(0.5, static_cast<double>(big.backtracks))));

    SolverConfig few = cfg;
    few.max_backtracks = 0;
    const LineSearchResult safe = line_search(st, pr.gram, c2, rho, 1e6, few);
    CHECK(safe.safe_step);
    const double safe_zeta = std::pow(st.spectrum.min_eigenvalue(), 2);
    const double halvings = std::log2(safe_zeta / safe.zeta);
    CHECK(halvings == doctest::Approx(std::round(halvings)));
    CHECK(safe.next.smooth <= quad_model(safe.next.factors, st.factors, st.gradient, safe.zeta, st.smooth) + 1e-12);
    CHECK(safe.next.spectrum.min_eigenvalue() > 0.0);
}

TEST_CASE("Barzilai-Borwein step")
{
    const Dims dims{3, 4};
    const FactorSet d = random_factors(dims, 3, false);
    CHECK(bb_stepsize(d, d, 7.0) == doctest::Approx(1.0));
    CHECK(bb_stepsize(d, 2.0 * d, 7.0) == doctest::Approx(0.5));
    CHECK(bb_stepsize(d, -1.0 * d, 7.0) == 7.0);
    CHECK(bb_stepsize(FactorSet::zeros(dims), d, 7.0) == 7.0);
    const FactorSet e = random_factors(dims, 4, false);
    const Matrix dd = kron_sum_dense(d);
    const Matrix de = kron_sum_dense(e);
    const double dense = dd.squaredNorm() / dd.cwiseProduct(de).sum();
    if (dense > 0) CHECK(std::abs(bb_stepsize(d, e, 7.0) - dense) < 1e-9 * dense);
}

TEST_CASE("contraction_bound")
{
    const ContractionBound eq = contraction_bound(2.0, 2.0);
    CHECK(eq.rate == 0.0);
    CHECK(eq.step == doctest::Approx(4.0));
    const ContractionBound a = contraction_bound(1.0, 2.0);
    CHECK(a.rate == doctest::Approx(0.6));
    CHECK(a.step == doctest::Approx(1.6));
    CHECK(contraction_bound(1.0, 3.0).rate == doctest::Approx(0.8));
    CHECK_THROWS_AS(contraction_bound(2.0, 1.0), ValidationError);
    CHECK_THROWS_AS(contraction_bound(0.0, 1.0), ValidationError);
}

TEST_CASE("termination names round-trip")
{
    for (Termination t : {Termination::objective_tol, Termination::kkt_tol, Termination::max_iter})
        CHECK(termination_from_string(to_string(t)) == t);
    CHECK_THROWS_AS(termination_from_string("done"), ValidationError);
}

TEST_CASE("solve recovers the identity when the sample covariance is the identity")
{
    const Dims dims{3, 4};
    const SolveResult r = solve(identity_gram(dims), tight(0.0));
    CHECK((kron_sum_dense(r.factors) - Matrix::Identity(12, 12)).norm() < 1e-6);
    CHECK(r.report.termination != Termination::max_iter);
    CHECK(kkt_residual(FactorSet::identity(dims, 0.5), identity_gram(dims), std::vector<double>{0, 0}) == 0.0);
}

TEST_CASE("solve agrees with the dense solver")
{
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Dims dims = seed % 2 ? Dims{4, 4} : Dims{2, 3, 2};
        const Problem pr = make_problem(dims, 4, 80 + seed);
        const SolveResult r = solve(pr.gram, tight(seed < 3 ? 0.0 : 0.3));
        const oracle::DenseProblem dp{dims, pr.s, r.report.rho};
        const oracle::DenseSolution ds = oracle::dense_solver(dp);
        REQUIRE(ds.converged);
        const double ours = objective(r.factors, pr.gram, r.report.rho).total;
        CHECK(ours <= oracle::dense_objective(ds.omega, dp) + 1e-6);
        CHECK(r.report.kkt_residual < 1e-6);
        CHECK(std::abs(oracle::dense_kkt_residual(kron_sum_dense(r.factors), dp) - r.report.kkt_residual) < 1e-8);
        CHECK((kron_sum_dense(r.factors) - ds.omega).norm() < 1e-5);
    }
}

TEST_CASE("dense solver sanity")
{
    const Dims dims{2, 3};
    const oracle::DenseProblem id{dims, Matrix::Identity(6, 6), {0.0, 0.0}};
    const oracle::DenseSolution a = oracle::dense_solver(id);
    CHECK(a.converged);
    CHECK((a.omega - Matrix::Identity(6, 6)).norm() < 1e-8);

    const Problem pr = make_problem(dims, 3, 4);
    const oracle::DenseProblem heavy{dims, pr.s, {100.0, 100.0}};
    const oracle::DenseSolution b = oracle::dense_solver(heavy);
    CHECK(b.converged);
    const FactorSet f = oracle::KsumBasis(dims).to_factors(oracle::KsumBasis(dims).coefficients(b.omega));
    for (std::size_t k = 0; k < 2; ++k) {
        Matrix off = f[k];
        off.diagonal().setZero();
        CHECK(off.norm() < 1e-12);
    }
    const oracle::KsumBasis basis(dims);
    CHECK((basis.assemble(basis.coefficients(b.omega)) - b.omega).norm() < 1e-8);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(b.omega, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues()[0] > 0.0);
    CHECK_THROWS_AS(oracle::dense_solver({Dims{6, 7}, Matrix::Identity(42, 42), {0.0, 0.0}}), SizeLimitError);
}

TEST_CASE("solver trajectory properties")
{
    const Problem pr = make_problem(Dims{5, 6}, 3, 11);
    SolverConfig cfg = tight(0.5);
    const SolveResult r = solve(pr.gram, cfg);
    const auto& obj = r.report.objective;
    REQUIRE(obj.size() == r.report.iterations + 1);
    for (std::size_t t = 1; t < obj.size(); ++t) CHECK(obj[t] <= obj[t - 1] + 1e-12 * std::abs(obj[t - 1]));
    for (double e : r.report.eig_min) CHECK(e > 0.0);
    CHECK(r.report.kkt_residual < 1e-6);

    // uniqueness in Omega from a different start
    const SolveResult r2 = solve(pr.gram, cfg, FactorSet::identity(pr.gram.dims, 1.0));
    CHECK(ksum_frobenius(r.factors - r2.factors) < 1e-5);

    // restarting at the optimum stops almost immediately
    SolverConfig loose;
    loose.rho_bar = 0.5;
    const SolveResult again = solve(pr.gram, loose, r.factors);
    CHECK(again.report.iterations <= 2);
    CHECK(again.report.termination != Termination::max_iter);
}

TEST_CASE("the optimum can sit below 1 / (sum ||S_k|| + d_k rho_k)")
{
    // The claimed iterate floor is not a valid lower bound: here even the optimum
    // violates it, while small fixed steps still keep every iterate PD.
    const Problem pr = make_problem(Dims{4, 5}, 2, 12);
    SolverConfig cfg;
    cfg.rho_bar = 0.3;
    const std::vector<double> rho = penalty_weights(cfg, pr.gram.dims, pr.gram.n);
    double denom = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(pr.gram.s[k], Eigen::EigenvaluesOnly);
        denom += eig.eigenvalues().maxCoeff() + static_cast<double>(pr.gram.dims[k]) * rho[k];
    }
    const double floor = 1.0 / denom;
    const oracle::DenseSolution ds = oracle::dense_solver({pr.gram.dims, pr.s, rho});
    REQUIRE(ds.converged);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(ds.omega, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues()[0] < floor);

    cfg.step_rule = StepRule::fixed;
    cfg.zeta0 = floor * floor;
    cfg.max_iter = 200;
    const SolveResult r = solve(pr.gram, cfg);
    CHECK(r.report.safe_steps == 0);
    for (std::size_t t = 0; t < r.report.eig_min.size(); ++t) {
        CHECK(r.report.eig_min[t] > 0.0);
        if (t > 0) CHECK(r.report.objective[t] <= r.report.objective[t - 1] + 1e-12 * std::abs(r.report.objective[t - 1]));
    }
}

TEST_CASE("KKT residual flags perturbed solutions")
{
    const Problem pr = make_problem(Dims{4, 4}, 5, 13);
    const SolveResult r = solve(pr.gram, tight(0.0));
    CHECK(r.report.kkt_residual < 1e-6);
    std::vector<Matrix> f = r.factors.factors();
    f[0](0, 1) += 0.1;
    f[0](1, 0) += 0.1;
    const FactorSet bumped(pr.gram.dims, f);
    CHECK(kkt_residual(bumped, pr.gram, r.report.rho) >= 0.01);
    CHECK(ksum_frobenius(subspace_gradient(r.factors, pr.gram)) < 1e-6);
}

TEST_CASE("max_iter termination")
{
    const Problem pr = make_problem(Dims{4, 4}, 5, 14);
    SolverConfig cfg;
    cfg.max_iter = 1;
    const SolveResult r = solve(pr.gram, cfg);
    CHECK(r.report.iterations == 1);
    CHECK(r.report.termination == Termination::max_iter);
}
