#include "teralasso/dims.hpp"

#include <algorithm>
#include <limits>

#include "teralasso/errors.hpp"

namespace teralasso {

Dims::Dims(std::vector<std::size_t> sizes) : sizes_(std::move(sizes))
{
    if (sizes_.empty()) throw ValidationError("Dims: at least one mode is required");
    for (auto d : sizes_) {
        if (d == 0) throw ValidationError("Dims: mode sizes must be positive");
        if (total_ > std::numeric_limits<std::size_t>::max() / d)
            throw ValidationError("Dims: total size overflows");
        total_ *= d;
    }
}

std::size_t Dims::left(std::size_t k) const
{
    std::size_t out = 1;
    for (std::size_t l = 0; l < k; ++l) out *= sizes_[l];
    return out;
}

std::size_t Dims::right(std::size_t k) const
{
    std::size_t out = 1;
    for (std::size_t l = k + 1; l < sizes_.size(); ++l) out *= sizes_[l];
    return out;
}

std::size_t Dims::min_complement() const
{
    std::size_t out = complement(0);
    for (std::size_t k = 1; k < order(); ++k) out = std::min(out, complement(k));
    return out;
}

std::string Dims::to_string() const
{
    std::string out = "[";
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(sizes_[k]);
    }
    return out + "]";
}

void require_same_dims(const Dims& a, const Dims& b, const char* what)
{
    if (!(a == b))
        throw DimensionError(std::string(what) + ": dims " + a.to_string() + " vs "
                             + b.to_string());
}

} // namespace teralasso
