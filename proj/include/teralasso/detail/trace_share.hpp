#pragma once

#include <cstddef>

namespace teralasso::detail {

// Fraction (K - 1) / K of the common diagonal mass removed from each factor when
// a matrix is projected onto the Kronecker-sum subspace. The fault-injection build
// corrupts it so that the self-check battery has a negative control.
inline double trace_share(std::size_t order) noexcept
{
    const double k = static_cast<double>(order);
#ifdef TERALASSO_FAULT_INJECT_PROJECTION
    return k / (k + 1.0);
#else
    return (k - 1.0) / k;
#endif
}

} // namespace teralasso::detail
