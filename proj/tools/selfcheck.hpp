#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace teralasso::cli {

struct CheckResult
{
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Oracle cross-checks at p <= 36. Every check catches its own exceptions.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed);

} // namespace teralasso::cli
