#include "selfcheck.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "teralasso/generators.hpp"
#include "teralasso/ksum.hpp"
#include "teralasso/oracle.hpp"
#include "teralasso/rng.hpp"
#include "teralasso/solver.hpp"
#include "teralasso/tensor.hpp"

namespace teralasso::cli {

namespace {

const std::vector<Dims>& check_dims()
{
    static const std::vector<Dims> all{Dims{3, 4}, Dims{2, 3, 3}, Dims{6, 6}, Dims{2, 2, 2, 3}};
    return all;
}

Matrix random_symmetric(Eigen::Index n, CounterRng& rng)
{
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) a(i, j) = rng.normal();
    return 0.5 * (a + a.transpose());
}

// Diagonally dominant factors keep every Kronecker sum comfortably PD.
FactorSet random_pd_factors(const Dims& dims, CounterRng& rng)
{
    std::vector<Matrix> f;
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const auto d = static_cast<Eigen::Index>(dims[k]);
        Matrix m = 0.2 * random_symmetric(d, rng);
        m.diagonal().array() += 1.0 + 0.2 * static_cast<double>(d);
        f.push_back(std::move(m));
    }
    return FactorSet(dims, std::move(f));
}

DataTensorSet random_data(const Dims& dims, std::size_t n, CounterRng& rng)
{
    std::vector<double> v(n * dims.total());
    for (double& x : v) x = rng.normal();
    return DataTensorSet(dims, n, std::move(v));
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

CheckResult bounded(std::string name, double value, double tol)
{
    return {std::move(name), value <= tol, "max error " + fmt(value) + " (tolerance " + fmt(tol) + ")"};
}

CheckResult check_projection(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const Matrix a = random_symmetric(static_cast<Eigen::Index>(dims.total()), rng);
        const Matrix fast = kron_sum_dense(proj_ksum_dense(a, dims));
        const Matrix slow = kron_sum_dense(oracle::basis_projection(a, dims));
        worst = std::max(worst, (fast - slow).norm());
    }
    return bounded("projection", worst, 1e-10);
}

CheckResult check_inverse_projection(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const FactorSet f = random_pd_factors(dims, rng);
        const Matrix fast = kron_sum_dense(proj_inverse_spectrum(ksum_eigensystem(f)));
        const Matrix slow = kron_sum_dense(oracle::basis_projection(kron_sum_dense(f).inverse(), dims));
        worst = std::max(worst, (fast - slow).norm());
    }
    return bounded("inverse-projection", worst, 1e-9);
}

CheckResult check_gradient(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const GramSet g = gram_factors(random_data(dims, 4, rng));
        const FactorSet f = random_pd_factors(dims, rng);
        const FactorSet grad = subspace_gradient(f, g);
        const std::vector<double> zero(dims.order(), 0.0);
        for (std::size_t dir = 0; dir < 5; ++dir) {
            std::vector<Matrix> v;
            for (std::size_t k = 0; k < dims.order(); ++k)
                v.push_back(random_symmetric(static_cast<Eigen::Index>(dims[k]), rng));
            FactorSet d(dims, std::move(v));
            d *= 1.0 / ksum_frobenius(d);
            const double h = 1e-5;
            const double fd = (objective(f + h * d, g, zero).smooth - objective(f - h * d, g, zero).smooth) / (2 * h);
            const double an = ksum_inner(grad, d);
            worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
        }
    }
    return bounded("gradient", worst, 1e-5);
}

CheckResult check_objective(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const DataTensorSet data = random_data(dims, 3, rng);
        const FactorSet f = random_pd_factors(dims, rng);
        const std::vector<double> rho(dims.order(), 0.1 * static_cast<double>(i));
        const double fast = objective(f, gram_factors(data), rho).total;
        const double slow = oracle::dense_objective(kron_sum_dense(f), {dims, oracle::sample_covariance(data), rho});
        worst = std::max(worst, std::abs(fast - slow));
    }
    return bounded("objective", worst, 1e-8);
}

CheckResult check_gram_identity(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const DataTensorSet data = random_data(dims, 1 + i % 3, rng);
        const GramSet g = gram_factors(data);
        std::vector<Matrix> a;
        double lhs = 0.0;
        for (std::size_t k = 0; k < dims.order(); ++k) {
            a.push_back(random_symmetric(static_cast<Eigen::Index>(dims[k]), rng));
            lhs += static_cast<double>(dims.complement(k)) * g.s[k].cwiseProduct(a.back()).sum();
        }
        const double rhs = oracle::sample_covariance(data).cwiseProduct(kron_sum_dense(FactorSet(dims, a))).sum();
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return bounded("gram-identity", worst, 1e-9);
}

CheckResult check_centered_gram(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const DataTensorSet data = random_data(dims, 2, rng);
        const Matrix fast = kron_sum_dense(center_gram(gram_factors(data)));
        const Matrix slow = kron_sum_dense(oracle::basis_projection(oracle::sample_covariance(data), dims));
        worst = std::max(worst, (fast - slow).norm());
    }
    return bounded("centered-gram", worst, 1e-10);
}

CheckResult check_logdet(std::uint64_t seed)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Dims& dims = check_dims()[i % check_dims().size()];
        const FactorSet f = random_pd_factors(dims, rng);
        Eigen::LLT<Matrix> llt(kron_sum_dense(f));
        const double dense = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        worst = std::max(worst, std::abs(ksum_logdet(ksum_eigensystem(f)) - dense));
    }
    return bounded("logdet", worst, 1e-9);
}

CheckResult check_sampler(std::uint64_t seed)
{
    CounterRng rng(seed);
    const Dims dims{4, 4};
    const FactorSet f = random_pd_factors(dims, rng);
    const DataTensorSet data = sample_ksum_gaussian(f, 20000, derive_seed(seed, 1));
    const Matrix truth = kron_sum_dense(f).inverse();
    const double rel = (oracle::sample_covariance(data) - truth).norm() / truth.norm();
    return bounded("sampler-moments", rel, 0.05);
}

CheckResult check_solver(std::uint64_t seed)
{
    const Dims dims{3, 4};
    std::vector<Matrix> truth;
    for (std::size_t k = 0; k < 2; ++k) truth.push_back(er_factor(dims[k], 2, derive_seed(seed, k)));
    const DataTensorSet data = sample_ksum_gaussian(FactorSet(dims, truth), 6, derive_seed(seed, 7));
    SolverConfig cfg;
    cfg.rho_bar = 0.2;
    cfg.tol_obj = 1e-14;
    cfg.tol_kkt = 1e-9;
    cfg.max_iter = 5000;
    const GramSet g = gram_factors(data);
    const SolveResult r = solve(g, cfg);
    const oracle::DenseProblem problem{dims, oracle::sample_covariance(data), r.report.rho};
    const oracle::DenseSolution ref = oracle::dense_solver(problem);
    const double gap = objective(r.factors, g, r.report.rho).total - oracle::dense_objective(ref.omega, problem);
    CheckResult out = bounded("solver-optimum", std::max(gap, 0.0), 1e-6);
    if (!ref.converged) {
        out.passed = false;
        out.detail += "; dense reference did not converge";
    }
    return out;
}

} // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed)
{
    const std::vector<std::pair<const char*, std::function<CheckResult(std::uint64_t)>>> checks{
        {"projection", check_projection},       {"inverse-projection", check_inverse_projection},
        {"centered-gram", check_centered_gram}, {"gradient", check_gradient},
        {"objective", check_objective},         {"gram-identity", check_gram_identity},
        {"logdet", check_logdet},               {"sampler-moments", check_sampler},
        {"solver-optimum", check_solver},
    };
    std::vector<CheckResult> out;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto& [name, fn] = checks[i];
        try {
            out.push_back(fn(derive_seed(seed, i)));
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    }
    return out;
}

} // namespace teralasso::cli
