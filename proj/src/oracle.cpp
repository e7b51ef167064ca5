#include "teralasso/oracle.hpp"

#include <cmath>
#include <string>

#include "teralasso/errors.hpp"

namespace teralasso::oracle {

namespace {

void check_size(std::size_t p, std::size_t cap, const char* what)
{
    if (p > cap)
        throw SizeLimitError(std::string(what) + ": p = " + std::to_string(p) + " exceeds the oracle cap "
                             + std::to_string(cap));
}

Eigen::Map<const Vector> as_vec(const Matrix& a)
{
    return Eigen::Map<const Vector>(a.data(), a.size());
}

double soft(double v, double t)
{
    const double mag = std::max(std::abs(v) - t, 0.0);
    return mag == 0.0 ? 0.0 : std::copysign(mag, v);
}

double off_threshold(const Dims& dims, std::size_t k, double rho)
{
    return rho * std::sqrt(2.0 * static_cast<double>(dims.complement(k)));
}

Matrix dense_inverse(const Matrix& omega)
{
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(omega, Eigen::EigenvaluesOnly);
        throw NotPositiveDefiniteError(eig.eigenvalues().minCoeff());
    }
    return llt.solve(Matrix::Identity(omega.rows(), omega.cols()));
}

} // namespace

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix embed(const Dims& dims, std::size_t k, const Matrix& m)
{
    const auto left = static_cast<Eigen::Index>(dims.left(k));
    const auto right = static_cast<Eigen::Index>(dims.right(k));
    return kron(kron(Matrix::Identity(left, left), m), Matrix::Identity(right, right));
}

Matrix sample_covariance(const DataTensorSet& data)
{
    const auto p = static_cast<Eigen::Index>(data.dims().total());
    check_size(data.dims().total(), kMaxOracleSize, "sample_covariance");
    Matrix s = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < data.replicates(); ++i) {
        const auto x = data.replicate(i);
        const Eigen::Map<const Vector> v(x.data(), p);
        s += v * v.transpose();
    }
    return s / static_cast<double>(data.replicates());
}

KsumBasis::KsumBasis(const Dims& dims) : dims_(dims)
{
    check_size(dims.total(), kMaxOracleSize, "KsumBasis");
    elements_.push_back({Kind::identity, 0, 0, 0});
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const std::size_t d = dims[k];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) elements_.push_back({Kind::offdiag, k, i, j});
        for (std::size_t j = 1; j < d; ++j) elements_.push_back({Kind::diag, k, j, 0});
    }
    const auto p = static_cast<Eigen::Index>(dims.total());
    vecs_.resize(static_cast<Eigen::Index>(elements_.size()), p * p);
    for (std::size_t b = 0; b < elements_.size(); ++b) {
        const Matrix m = matrix(b);
        vecs_.row(static_cast<Eigen::Index>(b)) = as_vec(m).transpose();
    }
}

Matrix KsumBasis::matrix(std::size_t b) const
{
    const Element& e = elements_[b];
    const auto p = static_cast<Eigen::Index>(dims_.total());
    if (e.kind == Kind::identity) return Matrix::Identity(p, p) / std::sqrt(static_cast<double>(p));
    const auto d = static_cast<Eigen::Index>(dims_[e.mode]);
    const double mk = static_cast<double>(dims_.complement(e.mode));
    Matrix local = Matrix::Zero(d, d);
    if (e.kind == Kind::offdiag) {
        local(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = 1.0;
        local(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = 1.0;
        local /= std::sqrt(2.0 * mk);
    } else {
        // Helmert direction j: (1, ..., 1, -j, 0, ...) / sqrt(j (j + 1)) with j leading ones
        const auto j = static_cast<Eigen::Index>(e.i);
        const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
        for (Eigen::Index t = 0; t < j; ++t) local(t, t) = 1.0 / norm;
        local(j, j) = -static_cast<double>(j) / norm;
        local /= std::sqrt(mk);
    }
    return embed(dims_, e.mode, local);
}

Vector KsumBasis::coefficients(const Matrix& a) const
{
    const auto p = static_cast<Eigen::Index>(dims_.total());
    if (a.rows() != p || a.cols() != p) throw DimensionError("KsumBasis: matrix size does not match dims");
    return vecs_ * as_vec(a);
}

Matrix KsumBasis::assemble(const Vector& coef) const
{
    const auto p = static_cast<Eigen::Index>(dims_.total());
    const Vector flat = vecs_.transpose() * coef;
    return Eigen::Map<const Matrix>(flat.data(), p, p);
}

FactorSet KsumBasis::to_factors(const Vector& coef) const
{
    const std::size_t order = dims_.order();
    std::vector<Matrix> factors;
    for (std::size_t k = 0; k < order; ++k) {
        const auto d = static_cast<Eigen::Index>(dims_[k]);
        factors.push_back(Matrix::Zero(d, d));
    }
    const double tau = coef[0] / std::sqrt(static_cast<double>(dims_.total()));
    for (std::size_t b = 1; b < elements_.size(); ++b) {
        const Element& e = elements_[b];
        const double mk = static_cast<double>(dims_.complement(e.mode));
        Matrix& f = factors[e.mode];
        const double c = coef[static_cast<Eigen::Index>(b)];
        if (e.kind == Kind::offdiag) {
            const double v = c / std::sqrt(2.0 * mk);
            f(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) += v;
            f(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) += v;
        } else {
            const auto j = static_cast<Eigen::Index>(e.i);
            const double scale = c / std::sqrt(mk) / std::sqrt(static_cast<double>(j * (j + 1)));
            for (Eigen::Index t = 0; t < j; ++t) f(t, t) += scale;
            f(j, j) -= static_cast<double>(j) * scale;
        }
    }
    for (auto& f : factors) f.diagonal().array() += tau / static_cast<double>(order);
    return FactorSet(dims_, std::move(factors));
}

FactorSet basis_projection(const Matrix& a, const Dims& dims)
{
    const KsumBasis basis(dims);
    return basis.to_factors(basis.coefficients(a));
}

double dense_objective(const Matrix& omega, const DenseProblem& problem)
{
    const KsumBasis basis(problem.dims);
    const Vector coef = basis.coefficients(omega);
    const double residual = (omega - basis.assemble(coef)).norm();
    if (residual > 1e-8 * std::max(1.0, omega.norm()))
        throw ValidationError("dense_objective: Omega is not a Kronecker sum (residual "
                              + std::to_string(residual) + ")");
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError(0.0);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    double penalty = 0.0;
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const auto& e = basis.element(b);
        if (e.kind != KsumBasis::Kind::offdiag) continue;
        penalty += off_threshold(problem.dims, e.mode, problem.rho[e.mode]) * std::abs(coef[static_cast<Eigen::Index>(b)]);
    }
    return -logdet + (problem.s.cwiseProduct(omega)).sum() + penalty;
}

Matrix dense_prox_step(const Matrix& omega, const DenseProblem& problem, double zeta)
{
    const KsumBasis basis(problem.dims);
    const Matrix grad = problem.s - dense_inverse(omega);
    Vector coef = basis.coefficients(omega - zeta * grad);
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const auto& e = basis.element(b);
        if (e.kind != KsumBasis::Kind::offdiag) continue;
        auto& c = coef[static_cast<Eigen::Index>(b)];
        c = soft(c, zeta * off_threshold(problem.dims, e.mode, problem.rho[e.mode]));
    }
    return basis.assemble(coef);
}

namespace {

double kkt_from(const KsumBasis& basis, const Vector& coef, const Matrix& grad, const DenseProblem& problem)
{
    const Dims& dims = problem.dims;
    const Vector gc = basis.coefficients(grad);
    double worst = 0.0;
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const auto& e = basis.element(b);
        if (e.kind != KsumBasis::Kind::offdiag) continue;
        const double scale = std::sqrt(2.0 * static_cast<double>(dims.complement(e.mode)));
        const double g = gc[static_cast<Eigen::Index>(b)] / scale;
        const double c = coef[static_cast<Eigen::Index>(b)];
        const double rho = problem.rho[e.mode];
        const double r = c != 0.0 ? std::abs(g + std::copysign(rho, c)) : std::max(0.0, std::abs(g) - rho);
        worst = std::max(worst, r);
    }
    // diagonal entry (k, i): <grad, I (x) E_ii (x) I> / m_k must vanish
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const auto d = static_cast<Eigen::Index>(dims[k]);
        for (Eigen::Index i = 0; i < d; ++i) {
            Matrix e = Matrix::Zero(d, d);
            e(i, i) = 1.0;
            const double r = std::abs(embed(dims, k, e).cwiseProduct(grad).sum())
                             / static_cast<double>(dims.complement(k));
            worst = std::max(worst, r);
        }
    }
    return worst;
}

} // namespace

double dense_kkt_residual(const Matrix& omega, const DenseProblem& problem)
{
    const KsumBasis basis(problem.dims);
    return kkt_from(basis, basis.coefficients(omega), problem.s - dense_inverse(omega), problem);
}

DenseSolution dense_solver(const DenseProblem& problem, std::size_t max_iter, double tol)
{
    check_size(problem.dims.total(), kMaxSolverSize, "dense_solver");
    const KsumBasis basis(problem.dims);
    const auto p = static_cast<Eigen::Index>(problem.dims.total());
    const auto smooth = [&](const Matrix& omega, double& out) {
        Eigen::LLT<Matrix> llt(omega);
        if (llt.info() != Eigen::Success) return false;
        out = -2.0 * llt.matrixLLT().diagonal().array().log().sum() + problem.s.cwiseProduct(omega).sum();
        return std::isfinite(out);
    };
    const auto prox = [&](Vector coef, double zeta) {
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const auto& e = basis.element(b);
            if (e.kind != KsumBasis::Kind::offdiag) continue;
            auto& c = coef[static_cast<Eigen::Index>(b)];
            c = soft(c, zeta * off_threshold(problem.dims, e.mode, problem.rho[e.mode]));
        }
        return coef;
    };

    Vector coef = basis.coefficients(Matrix::Identity(p, p));
    DenseSolution out;
    for (std::size_t it = 0;; ++it) {
        const Matrix omega = basis.assemble(coef);
        double f = 0.0;
        if (!smooth(omega, f)) throw NotPositiveDefiniteError(0.0);
        const Matrix grad = problem.s - dense_inverse(omega);
        const double kkt = kkt_from(basis, coef, grad, problem);
        if (kkt <= tol || it >= max_iter) {
            out.omega = omega;
            out.iterations = it;
            out.kkt_residual = kkt;
            out.converged = kkt <= tol;
            return out;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(omega, Eigen::EigenvaluesOnly);
        const double lmin = eig.eigenvalues().minCoeff();
        const Vector gc = basis.coefficients(grad);
        // 0.5 lambda_min^2, halved until the step is PD and majorized by the quadratic model
        double zeta = 0.5 * lmin * lmin;
        for (int j = 0;; ++j, zeta *= 0.5) {
            if (j > 200) throw Error("dense_solver: no acceptable step");
            const Vector next = prox(coef - zeta * gc, zeta);
            const Vector delta = next - coef;
            double f_next = 0.0;
            if (!smooth(basis.assemble(next), f_next)) continue;
            if (f_next <= f + delta.dot(gc) + delta.squaredNorm() / (2.0 * zeta) + 1e-14 * std::max(1.0, std::abs(f))) {
                coef = next;
                break;
            }
        }
    }
}

Matrix rearrange_rk(const Matrix& a, const Dims& dims, std::size_t k)
{
    check_size(dims.total(), kMaxOracleSize, "rearrange_rk");
    if (k >= dims.order()) throw ValidationError("rearrange_rk: mode out of range");
    const std::size_t d = dims[k];
    const std::size_t m = dims.complement(k);
    const std::size_t right = dims.right(k);
    const auto index = [&](std::size_t comp, std::size_t r) {
        const std::size_t outer = comp / right;
        const std::size_t inner = comp % right;
        return static_cast<Eigen::Index>(outer * d * right + r * right + inner);
    };
    Matrix out(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(m * m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const auto col = static_cast<Eigen::Index>(i * m + j);
            for (std::size_t s = 0; s < d; ++s)
                for (std::size_t r = 0; r < d; ++r)
                    out(static_cast<Eigen::Index>(r + s * d), col) = a(index(j, s), index(i, r));
        }
    return out;
}

} // namespace teralasso::oracle
