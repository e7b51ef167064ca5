#include "teralasso/tensor.hpp"

#include <cmath>
#include <string>

#include "teralasso/detail/trace_share.hpp"
#include "teralasso/errors.hpp"
#include "teralasso/ksum.hpp"
#include "teralasso/parallel.hpp"
#include "teralasso/rng.hpp"

namespace teralasso {

namespace {

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_mode(const Dims& dims, std::size_t k)
{
    if (k >= dims.order())
        throw ValidationError("mode index " + std::to_string(k) + " out of range for "
                              + std::to_string(dims.order()) + " modes");
}

void check_block(std::span<const double> x, const Dims& dims)
{
    if (x.size() != dims.total())
        throw DimensionError("tensor block has " + std::to_string(x.size())
                             + " values, expected " + std::to_string(dims.total()));
}

} // namespace

DataTensorSet::DataTensorSet(Dims dims, std::size_t n)
    : DataTensorSet(dims, n, std::vector<double>(dims.total() * n, 0.0))
{}

DataTensorSet::DataTensorSet(Dims dims, std::size_t n, std::vector<double> values)
    : dims_(std::move(dims)), n_(n), values_(std::move(values))
{
    if (n_ == 0) throw ValidationError("DataTensorSet: at least one replicate is required");
    if (values_.size() != n_ * dims_.total())
        throw DimensionError("DataTensorSet: expected " + std::to_string(n_ * dims_.total())
                             + " values, got " + std::to_string(values_.size()));
}

std::span<const double> DataTensorSet::replicate(std::size_t i) const
{
    if (i >= n_) throw ValidationError("replicate index " + std::to_string(i) + " out of range");
    return std::span<const double>(values_).subspan(i * dims_.total(), dims_.total());
}

std::span<double> DataTensorSet::replicate(std::size_t i)
{
    if (i >= n_) throw ValidationError("replicate index " + std::to_string(i) + " out of range");
    return std::span<double>(values_).subspan(i * dims_.total(), dims_.total());
}

Matrix matricize(std::span<const double> x, const Dims& dims, std::size_t k)
{
    check_mode(dims, k);
    check_block(x, dims);
    const auto d = static_cast<Eigen::Index>(dims[k]);
    const auto left = static_cast<Eigen::Index>(dims.left(k));
    const auto right = static_cast<Eigen::Index>(dims.right(k));
    Matrix out(d, left * right);
    for (Eigen::Index a = 0; a < left; ++a) {
        ConstRowMajorMap block(x.data() + a * d * right, d, right);
        out.middleCols(a * right, right) = block;
    }
    return out;
}

std::vector<double> fold(const Matrix& unfolded, const Dims& dims, std::size_t k)
{
    check_mode(dims, k);
    const auto d = static_cast<Eigen::Index>(dims[k]);
    const auto left = static_cast<Eigen::Index>(dims.left(k));
    const auto right = static_cast<Eigen::Index>(dims.right(k));
    if (unfolded.rows() != d || unfolded.cols() != left * right)
        throw DimensionError("fold: unfolding has the wrong shape");
    std::vector<double> out(dims.total());
    for (Eigen::Index a = 0; a < left; ++a) {
        RowMajorMap block(out.data() + a * d * right, d, right);
        block = unfolded.middleCols(a * right, right);
    }
    return out;
}

GramSet gram_factors(const DataTensorSet& data)
{
    const Dims& dims = data.dims();
    GramSet g{dims, data.replicates(), {}, 0.0};
    g.s.reserve(dims.order());
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const auto d = static_cast<Eigen::Index>(dims[k]);
        Matrix acc = Matrix::Zero(d, d);
        for (std::size_t i = 0; i < data.replicates(); ++i) {
            const Matrix xk = matricize(data.replicate(i), dims, k);
            acc.selfadjointView<Eigen::Lower>().rankUpdate(xk);
        }
        Matrix sk = acc.selfadjointView<Eigen::Lower>();
        sk /= static_cast<double>(data.replicates() * dims.complement(k));
        g.s.push_back(std::move(sk));
    }
    double sq = 0.0;
    for (double v : data.values()) sq += v * v;
    g.trace_mean = sq / static_cast<double>(data.replicates() * dims.total());
    return g;
}

FactorSet center_gram(const GramSet& g)
{
    const std::size_t order = g.dims.order();
    std::vector<Matrix> out;
    out.reserve(order);
    for (std::size_t k = 0; k < order; ++k) {
        Matrix m = g.s[k];
        m.diagonal().array() -=
            detail::trace_share(order) * m.trace() / static_cast<double>(g.dims[k]);
        out.push_back(std::move(m));
    }
    return FactorSet(g.dims, std::move(out));
}

void apply_mode(std::span<double> x, const Dims& dims, std::size_t k, const Matrix& m)
{
    check_mode(dims, k);
    if (x.size() != dims.total()) throw DimensionError("apply_mode: tensor block has the wrong size");
    const auto d = static_cast<Eigen::Index>(dims[k]);
    const auto left = static_cast<Eigen::Index>(dims.left(k));
    const auto right = static_cast<Eigen::Index>(dims.right(k));
    Matrix tmp(d, right);
    for (Eigen::Index a = 0; a < left; ++a) {
        RowMajorMap block(x.data() + a * d * right, d, right);
        tmp.noalias() = m * block;
        block = tmp;
    }
}

DataTensorSet sample_ksum_gaussian(const FactorSet& precision, std::size_t n,
                                   std::uint64_t seed, unsigned threads)
{
    const SpectrumSet spec = ksum_eigensystem(precision);
    const double lo = spec.min_eigenvalue();
    if (!(lo > 0.0)) throw NotPositiveDefiniteError(lo);
    const Dims& dims = precision.dims();
    const Vector inv_sqrt = spec.full_eigenvalues().array().rsqrt();
    DataTensorSet out(dims, n);
    parallel_for(n, threads, [&](std::size_t i) {
        CounterRng rng(derive_seed(seed, i));
        auto x = out.replicate(i);
        for (std::size_t l = 0; l < x.size(); ++l)
            x[l] = inv_sqrt[static_cast<Eigen::Index>(l)] * rng.normal();
        for (std::size_t k = 0; k < dims.order(); ++k) apply_mode(x, dims, k, spec.eigvecs[k]);
    });
    return out;
}

} // namespace teralasso
