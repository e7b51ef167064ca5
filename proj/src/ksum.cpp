#include "teralasso/ksum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "teralasso/detail/neumaier.hpp"
#include "teralasso/detail/trace_share.hpp"
#include "teralasso/errors.hpp"

namespace teralasso {

namespace {

constexpr std::size_t kDefaultDenseLimit = 4096;

std::size_t read_dense_limit()
{
    if (const char* env = std::getenv("TERALASSO_DENSE_LIMIT")) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return kDefaultDenseLimit;
}

void check_dense(std::size_t p, std::size_t limit, const char* what)
{
    if (p > limit)
        throw SizeLimitError(std::string(what) + ": p = " + std::to_string(p)
                             + " exceeds the dense limit " + std::to_string(limit));
}

// Visits the p eigenvalue sums in linearization order. For every run of the
// last (fastest) mode, `row(outer_index, base)` is called where outer_index holds
// the indices of modes 0..K-2 and base is the sum of their eigenvalues.
template <class Row>
void sweep_outer(const SpectrumSet& s, Row&& row)
{
    const std::size_t order = s.dims.order();
    std::vector<std::size_t> idx(order, 0);
    // partial[k] = sum of eigvals[l][idx[l]] for l < k
    std::vector<double> partial(order, 0.0);
    const auto recompute = [&](std::size_t from) {
        for (std::size_t k = from; k + 1 < order; ++k)
            partial[k + 1] = partial[k] + s.eigvals[k][static_cast<Eigen::Index>(idx[k])];
    };
    recompute(0);
    const std::size_t outer = s.dims.total() / s.dims[order - 1];
    for (std::size_t r = 0; r < outer; ++r) {
        row(std::span<const std::size_t>(idx.data(), order - 1), partial[order - 1]);
        if (order < 2) break;
        // advance the odometer over modes 0..K-2
        std::size_t k = order - 2;
        while (true) {
            if (++idx[k] < s.dims[k]) break;
            idx[k] = 0;
            if (k == 0) break;
            --k;
        }
        recompute(k);
    }
}

} // namespace

std::size_t dense_limit()
{
    static const std::size_t limit = read_dense_limit();
    return limit;
}

Matrix kron_sum_dense(const FactorSet& f)
{
    return kron_sum_dense(f, dense_limit());
}

Matrix kron_sum_dense(const FactorSet& f, std::size_t limit)
{
    const Dims& dims = f.dims();
    const std::size_t p = dims.total();
    check_dense(p, limit, "kron_sum_dense");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const std::size_t d = dims[k];
        const std::size_t right = dims.right(k);
        const std::size_t left = dims.left(k);
        for (std::size_t a = 0; a < left; ++a)
            for (std::size_t c = 0; c < right; ++c) {
                const std::size_t base = a * d * right + c;
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        out(static_cast<Eigen::Index>(base + i * right),
                            static_cast<Eigen::Index>(base + j * right))
                            += f[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
    }
    return out;
}

SpectrumSet ksum_eigensystem(const FactorSet& f)
{
    SpectrumSet s{f.dims(), {}, {}};
    s.eigvals.reserve(f.order());
    s.eigvecs.reserve(f.order());
    for (std::size_t k = 0; k < f.order(); ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(f[k]);
        if (eig.info() != Eigen::Success)
            throw Error("ksum_eigensystem: eigensolver failed on factor " + std::to_string(k));
        const double err = (eig.eigenvectors() * eig.eigenvalues().asDiagonal()
                                * eig.eigenvectors().transpose()
                            - f[k])
                               .norm();
        if (err > 1e-10 * f[k].norm() + 1e-14)
            throw Error("ksum_eigensystem: reconstruction error " + std::to_string(err)
                        + " on factor " + std::to_string(k));
        s.eigvals.push_back(eig.eigenvalues());
        s.eigvecs.push_back(eig.eigenvectors());
    }
    return s;
}

double ksum_logdet(const SpectrumSet& s)
{
    const double lo = s.min_eigenvalue();
    if (!(lo > 0.0)) throw NotPositiveDefiniteError(lo);
    const Vector& last = s.eigvals.back();
    detail::NeumaierSum total;
    sweep_outer(s, [&](std::span<const std::size_t>, double base) {
        for (Eigen::Index i = 0; i < last.size(); ++i) total.add(std::log(base + last[i]));
    });
    return total.value();
}

FactorSet proj_ksum_dense(const Matrix& a, const Dims& dims)
{
    const std::size_t p = dims.total();
    check_dense(p, dense_limit(), "proj_ksum_dense");
    if (a.rows() != static_cast<Eigen::Index>(p) || a.cols() != static_cast<Eigen::Index>(p))
        throw DimensionError("proj_ksum_dense: matrix is " + std::to_string(a.rows()) + "x"
                             + std::to_string(a.cols()) + ", expected p = "
                             + std::to_string(p));
    const double shift = detail::trace_share(dims.order()) * a.trace() / static_cast<double>(p);
    std::vector<Matrix> factors;
    factors.reserve(dims.order());
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const std::size_t d = dims[k];
        const std::size_t right = dims.right(k);
        const std::size_t left = dims.left(k);
        const auto dd = static_cast<Eigen::Index>(d);
        Matrix avg = Matrix::Zero(dd, dd);
        for (std::size_t l = 0; l < left; ++l)
            for (std::size_t c = 0; c < right; ++c) {
                const std::size_t base = l * d * right + c;
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        avg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                            += a(static_cast<Eigen::Index>(base + i * right),
                                 static_cast<Eigen::Index>(base + j * right));
            }
        avg /= static_cast<double>(dims.complement(k));
        Matrix sym = 0.5 * (avg + avg.transpose());
        sym.diagonal().array() -= shift;
        factors.push_back(std::move(sym));
    }
    return make_factor_set_unchecked(dims, std::move(factors));
}

FactorSet proj_inverse_spectrum(const SpectrumSet& s)
{
    const double lo = s.min_eigenvalue();
    if (!(lo > 0.0)) throw NotPositiveDefiniteError(lo);
    const Dims& dims = s.dims;
    const std::size_t order = dims.order();
    const std::size_t last = order - 1;
    const Vector& last_vals = s.eigvals[last];

    std::vector<std::vector<detail::NeumaierSum>> acc(order);
    for (std::size_t k = 0; k < order; ++k) acc[k].resize(dims[k]);
    detail::NeumaierSum total;

    sweep_outer(s, [&](std::span<const std::size_t> outer, double base) {
        detail::NeumaierSum row;
        for (Eigen::Index i = 0; i < last_vals.size(); ++i) {
            const double r = 1.0 / (base + last_vals[i]);
            acc[last][static_cast<std::size_t>(i)].add(r);
            row.add(r);
        }
        for (std::size_t k = 0; k < outer.size(); ++k) acc[k][outer[k]].add(row);
        total.add(row);
    });

    const double shift =
        detail::trace_share(order) * total.value() / static_cast<double>(dims.total());
    std::vector<Matrix> factors;
    factors.reserve(order);
    for (std::size_t k = 0; k < order; ++k) {
        const double mk = static_cast<double>(dims.complement(k));
        Vector g(static_cast<Eigen::Index>(dims[k]));
        for (std::size_t i = 0; i < dims[k]; ++i)
            g[static_cast<Eigen::Index>(i)] = acc[k][i].value() / mk - shift;
        const Matrix& u = s.eigvecs[k];
        Matrix gk = u * g.asDiagonal() * u.transpose();
        gk = 0.5 * (gk + gk.transpose()).eval();
        factors.push_back(std::move(gk));
    }
    return make_factor_set_unchecked(dims, std::move(factors));
}

IdentifiableForm identifiable_decompose(const FactorSet& f)
{
    IdentifiableForm out{f.dims(), 0.0, {}};
    out.tilde.reserve(f.order());
    for (std::size_t k = 0; k < f.order(); ++k) {
        const double mean_diag = f[k].trace() / static_cast<double>(f.dims()[k]);
        out.tau += mean_diag;
        Matrix t = f[k];
        t.diagonal().array() -= mean_diag;
        out.tilde.push_back(std::move(t));
    }
    return out;
}

double ksum_inner(const FactorSet& a, const FactorSet& b)
{
    require_same_dims(a.dims(), b.dims(), "ksum_inner");
    const auto ia = identifiable_decompose(a);
    const auto ib = identifiable_decompose(b);
    double out = static_cast<double>(a.dims().total()) * ia.tau * ib.tau;
    for (std::size_t k = 0; k < a.order(); ++k)
        out += static_cast<double>(a.dims().complement(k))
               * ia.tilde[k].cwiseProduct(ib.tilde[k]).sum();
    return out;
}

double ksum_frobenius(const FactorSet& f)
{
    return std::sqrt(std::max(0.0, ksum_inner(f, f)));
}

double ksum_spectral_norm(const SpectrumSet& s)
{
    double hi = 0.0;
    double lo = 0.0;
    for (const auto& v : s.eigvals) {
        hi += v.maxCoeff();
        lo += v.minCoeff();
    }
    return std::max(hi, -lo);
}

double offdiag_l1(const FactorSet& f, std::span<const double> rho)
{
    if (rho.size() != f.order())
        throw DimensionError("offdiag_l1: expected " + std::to_string(f.order())
                             + " penalty weights, got " + std::to_string(rho.size()));
    double out = 0.0;
    for (std::size_t k = 0; k < f.order(); ++k) {
        if (!(rho[k] >= 0.0)) throw ValidationError("offdiag_l1: penalty weights must be >= 0");
        if (rho[k] == 0.0) continue;
        const Matrix& m = f[k];
        const double off = m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
        out += rho[k] * static_cast<double>(f.dims().complement(k)) * off;
    }
    return out;
}

} // namespace teralasso
