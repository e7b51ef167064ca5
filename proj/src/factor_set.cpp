#include "teralasso/factor_set.hpp"

#include <algorithm>
#include <string>

#include "teralasso/errors.hpp"

namespace teralasso {

namespace {

void check_sizes(const Dims& dims, const std::vector<Matrix>& factors)
{
    if (factors.size() != dims.order())
        throw DimensionError("FactorSet: expected " + std::to_string(dims.order())
                             + " factors, got " + std::to_string(factors.size()));
    for (std::size_t k = 0; k < factors.size(); ++k) {
        const auto d = static_cast<Eigen::Index>(dims[k]);
        if (factors[k].rows() != d || factors[k].cols() != d)
            throw DimensionError("FactorSet: factor " + std::to_string(k) + " is "
                                 + std::to_string(factors[k].rows()) + "x"
                                 + std::to_string(factors[k].cols()) + ", expected "
                                 + std::to_string(d) + "x" + std::to_string(d));
        if (!factors[k].allFinite())
            throw ValidationError("FactorSet: factor " + std::to_string(k)
                                  + " has non-finite entries");
    }
}

} // namespace

FactorSet::FactorSet(Dims dims, std::vector<Matrix> factors)
    : dims_(std::move(dims)), factors_(std::move(factors))
{
    check_sizes(dims_, factors_);
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        auto& m = factors_[k];
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * scale)
            throw ValidationError("FactorSet: factor " + std::to_string(k)
                                  + " is not symmetric (max |M - M^T| = "
                                  + std::to_string(asym) + ")");
        m = 0.5 * (m + m.transpose()).eval();
    }
}

FactorSet::FactorSet(Dims dims, std::vector<Matrix> factors, Unchecked)
    : dims_(std::move(dims)), factors_(std::move(factors))
{
    check_sizes(dims_, factors_);
}

FactorSet make_factor_set_unchecked(Dims dims, std::vector<Matrix> factors)
{
    return FactorSet(std::move(dims), std::move(factors), FactorSet::Unchecked{});
}

FactorSet FactorSet::identity(const Dims& dims, double scale)
{
    std::vector<Matrix> f;
    f.reserve(dims.order());
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const auto d = static_cast<Eigen::Index>(dims[k]);
        f.push_back(scale * Matrix::Identity(d, d));
    }
    return FactorSet(dims, std::move(f), Unchecked{});
}

FactorSet FactorSet::zeros(const Dims& dims)
{
    return identity(dims, 0.0);
}

FactorSet& FactorSet::operator+=(const FactorSet& other)
{
    require_same_dims(dims_, other.dims_, "FactorSet +=");
    for (std::size_t k = 0; k < factors_.size(); ++k) factors_[k] += other.factors_[k];
    return *this;
}

FactorSet& FactorSet::operator-=(const FactorSet& other)
{
    require_same_dims(dims_, other.dims_, "FactorSet -=");
    for (std::size_t k = 0; k < factors_.size(); ++k) factors_[k] -= other.factors_[k];
    return *this;
}

FactorSet& FactorSet::operator*=(double alpha)
{
    for (auto& m : factors_) m *= alpha;
    return *this;
}

FactorSet IdentifiableForm::to_factors() const
{
    const double share = tau / static_cast<double>(tilde.size());
    std::vector<Matrix> f;
    f.reserve(tilde.size());
    for (const auto& t : tilde) {
        Matrix m = t;
        m.diagonal().array() += share;
        f.push_back(std::move(m));
    }
    return make_factor_set_unchecked(dims, std::move(f));
}

double SpectrumSet::min_eigenvalue() const
{
    double out = 0.0;
    for (const auto& v : eigvals) out += v.minCoeff();
    return out;
}

double SpectrumSet::max_eigenvalue() const
{
    double out = 0.0;
    for (const auto& v : eigvals) out += v.maxCoeff();
    return out;
}

Vector SpectrumSet::full_eigenvalues() const
{
    Vector out = Vector::Zero(static_cast<Eigen::Index>(dims.total()));
    for (std::size_t k = 0; k < dims.order(); ++k) {
        const std::size_t left = dims.left(k);
        const std::size_t d = dims[k];
        const std::size_t right = dims.right(k);
        Eigen::Index pos = 0;
        for (std::size_t a = 0; a < left; ++a)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t c = 0; c < right; ++c)
                    out[pos++] += eigvals[k][static_cast<Eigen::Index>(i)];
    }
    return out;
}

} // namespace teralasso
