#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "teralasso/factor_set.hpp"

namespace teralasso {

struct WeightedEdge
{
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 0.0;
};

/// Starts from 0.25 I and, for every edge, subtracts the weight from the two
/// off-diagonal entries and adds it to both diagonal entries.
Matrix factor_from_edges(std::size_t d, const std::vector<WeightedEdge>& edges);

/// Erdos-Renyi factor with q distinct random edges, weights ~ U[0.2, 0.4].
Matrix er_factor(std::size_t d, std::size_t q_edges, std::uint64_t seed);

/// Like er_factor, restricted to the 4-neighbour edges of a sqrt(d) x sqrt(d) grid.
Matrix grid_factor(std::size_t d, std::size_t q_edges, std::uint64_t seed);

/// Precision of a stationary unit-variance AR(1) process of length d.
Matrix ar1_factor(std::size_t d, double coeff);

/// Off-diagonal index pairs (i < j) of the sqrt(d) x sqrt(d) grid.
std::vector<std::pair<std::size_t, std::size_t>> grid_edges(std::size_t d);

} // namespace teralasso
