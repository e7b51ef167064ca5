#include "teralasso/generators.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "teralasso/errors.hpp"
#include "teralasso/rng.hpp"

namespace teralasso {

namespace {

constexpr double kBaseDiagonal = 0.25;
constexpr double kMinWeight = 0.2;
constexpr double kMaxWeight = 0.4;

std::size_t grid_side(std::size_t d)
{
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    if (side * side != d)
        throw ValidationError("grid factor: d = " + std::to_string(d) + " is not a perfect square");
    return side;
}

// Picks q of the candidate pairs without replacement (partial Fisher-Yates) and
// draws one weight per pick, in pick order.
std::vector<WeightedEdge> pick_edges(std::vector<std::pair<std::size_t, std::size_t>> pool,
                                     std::size_t q, std::uint64_t seed)
{
    if (q > pool.size())
        throw ValidationError("requested " + std::to_string(q) + " edges but only "
                              + std::to_string(pool.size()) + " are available");
    CounterRng rng(seed);
    std::vector<WeightedEdge> out;
    out.reserve(q);
    for (std::size_t t = 0; t < q; ++t) {
        const std::size_t pick = t + static_cast<std::size_t>(rng.below(pool.size() - t));
        std::swap(pool[t], pool[pick]);
        out.push_back({pool[t].first, pool[t].second, rng.uniform(kMinWeight, kMaxWeight)});
    }
    return out;
}

} // namespace

Matrix factor_from_edges(std::size_t d, const std::vector<WeightedEdge>& edges)
{
    const auto n = static_cast<Eigen::Index>(d);
    Matrix out = kBaseDiagonal * Matrix::Identity(n, n);
    for (const auto& e : edges) {
        if (e.i == e.j || e.i >= d || e.j >= d)
            throw ValidationError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j)
                                  + ") is invalid for d = " + std::to_string(d));
        const auto i = static_cast<Eigen::Index>(e.i);
        const auto j = static_cast<Eigen::Index>(e.j);
        out(i, j) -= e.weight;
        out(j, i) -= e.weight;
        out(i, i) += e.weight;
        out(j, j) += e.weight;
    }
    return out;
}

Matrix er_factor(std::size_t d, std::size_t q_edges, std::uint64_t seed)
{
    if (d == 0) throw ValidationError("er factor: d must be positive");
    std::vector<std::pair<std::size_t, std::size_t>> pool;
    pool.reserve(d * (d - 1) / 2);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) pool.emplace_back(i, j);
    return factor_from_edges(d, pick_edges(std::move(pool), q_edges, seed));
}

std::vector<std::pair<std::size_t, std::size_t>> grid_edges(std::size_t d)
{
    const std::size_t side = grid_side(d);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            const std::size_t node = r * side + c;
            if (c + 1 < side) out.emplace_back(node, node + 1);
            if (r + 1 < side) out.emplace_back(node, node + side);
        }
    return out;
}

Matrix grid_factor(std::size_t d, std::size_t q_edges, std::uint64_t seed)
{
    return factor_from_edges(d, pick_edges(grid_edges(d), q_edges, seed));
}

Matrix ar1_factor(std::size_t d, double coeff)
{
    if (d == 0) throw ValidationError("ar1 factor: d must be positive");
    if (!(std::abs(coeff) < 1.0)) throw ValidationError("ar1 factor: |coeff| must be < 1");
    const auto n = static_cast<Eigen::Index>(d);
    if (n == 1) return Matrix::Identity(1, 1);
    const double scale = 1.0 / (1.0 - coeff * coeff);
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool endpoint = (i == 0 || i == n - 1);
        out(i, i) = (endpoint ? 1.0 : 1.0 + coeff * coeff) * scale;
        if (i + 1 < n) {
            out(i, i + 1) = -coeff * scale;
            out(i + 1, i) = -coeff * scale;
        }
    }
    return out;
}

} // namespace teralasso
