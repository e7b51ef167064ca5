#include "teralasso/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "teralasso/errors.hpp"
#include "teralasso/ksum.hpp"

namespace teralasso {

std::size_t EdgeSupport::count() const
{
    std::size_t out = 0;
    for (const auto& e : edges) out += e.size();
    return out;
}

EdgeSupport edge_support(const FactorSet& f, double eps)
{
    EdgeSupport out{f.dims(), {}};
    out.edges.resize(f.order());
    for (std::size_t k = 0; k < f.order(); ++k) {
        const Matrix& m = f[k];
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = i + 1; j < m.cols(); ++j)
                if (std::abs(m(i, j)) > eps)
                    out.edges[k].emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    return out;
}

double Confusion::precision() const
{
    const auto selected = tp + fp;
    return selected == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(selected);
}

double Confusion::recall() const
{
    const auto positives = tp + fn;
    return positives == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(positives);
}

double Confusion::mcc() const
{
    const double tp_ = static_cast<double>(tp);
    const double tn_ = static_cast<double>(tn);
    const double fp_ = static_cast<double>(fp);
    const double fn_ = static_cast<double>(fn);
    const double denom = (tp_ + fp_) * (tp_ + fn_) * (tn_ + fp_) * (tn_ + fn_);
    if (denom == 0.0) return 0.0;
    return (tp_ * tn_ - fp_ * fn_) / std::sqrt(denom);
}

Confusion classify_edges(const EdgeSupport& truth, const EdgeSupport& estimate)
{
    require_same_dims(truth.dims, estimate.dims, "classify_edges");
    Confusion c;
    for (std::size_t k = 0; k < truth.edges.size(); ++k) {
        auto t = truth.edges[k];
        auto e = estimate.edges[k];
        std::sort(t.begin(), t.end());
        std::sort(e.begin(), e.end());
        std::vector<std::pair<std::size_t, std::size_t>> both;
        std::set_intersection(t.begin(), t.end(), e.begin(), e.end(), std::back_inserter(both));
        const std::uint64_t d = truth.dims[k];
        const std::uint64_t universe = d * (d - 1) / 2;
        c.tp += both.size();
        c.fp += e.size() - both.size();
        c.fn += t.size() - both.size();
        c.tn += universe - (t.size() + e.size() - both.size());
    }
    return c;
}

double mcc(const EdgeSupport& truth, const EdgeSupport& estimate)
{
    return classify_edges(truth, estimate).mcc();
}

EstimationErrors estimation_errors(const FactorSet& truth, const FactorSet& estimate)
{
    require_same_dims(truth.dims(), estimate.dims(), "estimation_errors");
    const FactorSet delta = estimate - truth;
    const IdentifiableForm id = identifiable_decompose(delta);

    EstimationErrors out;
    double sq = static_cast<double>(delta.dims().total()) * id.tau * id.tau;
    for (std::size_t k = 0; k < delta.order(); ++k)
        sq += static_cast<double>(delta.dims().complement(k)) * id.tilde[k].squaredNorm();
    out.frob_full = std::sqrt(sq);
    const double ref = ksum_frobenius(truth);
    out.frob_rel = ref > 0.0 ? out.frob_full / ref : out.frob_full;
    out.spectral = ksum_spectral_norm(ksum_eigensystem(delta));
    out.tau = std::abs(id.tau);

    std::vector<Matrix> diag_parts;
    for (std::size_t k = 0; k < delta.order(); ++k) {
        Matrix off = delta[k];
        off.diagonal().setZero();
        out.factor_offdiag.push_back(off.norm());
        diag_parts.push_back(delta[k].diagonal().asDiagonal());
    }
    out.diag = ksum_frobenius(make_factor_set_unchecked(delta.dims(), std::move(diag_parts)));
    return out;
}

double effective_sample_size(const Dims& dims, std::size_t n)
{
    return static_cast<double>(n) * static_cast<double>(dims.min_complement())
           / std::log(static_cast<double>(dims.total()));
}

} // namespace teralasso
