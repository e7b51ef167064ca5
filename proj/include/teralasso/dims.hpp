#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace teralasso {

/// Mode dimensions d_1..d_K of a tensor and the derived sizes p = prod d_k and
/// m_k = p / d_k. Modes are indexed from zero.
class Dims
{
public:
    explicit Dims(std::vector<std::size_t> sizes);
    Dims(std::initializer_list<std::size_t> sizes) : Dims(std::vector<std::size_t>(sizes)) {}

    std::size_t order() const noexcept { return sizes_.size(); }
    std::size_t operator[](std::size_t k) const { return sizes_[k]; }
    std::size_t total() const noexcept { return total_; }
    /// m_k: product of all mode sizes except mode k.
    std::size_t complement(std::size_t k) const { return total_ / sizes_[k]; }
    /// Product of the sizes of modes before k (slower-varying in the linearization).
    std::size_t left(std::size_t k) const;
    /// Product of the sizes of modes after k; also the stride of mode k.
    std::size_t right(std::size_t k) const;
    std::size_t min_complement() const;

    std::span<const std::size_t> sizes() const noexcept { return sizes_; }

    std::string to_string() const;

    friend bool operator==(const Dims&, const Dims&) = default;

private:
    std::vector<std::size_t> sizes_;
    std::size_t total_ = 1;
};

void require_same_dims(const Dims& a, const Dims& b, const char* what);

} // namespace teralasso
