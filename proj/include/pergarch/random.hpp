#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pergarch {

/**
 * @brief Seeded random stream with deterministic child derivation.
 *
 * A child stream is identified by its parent's key and a label (a name such as
 * "arrivals", or a replicate index). Child keys are computed with splitmix64
 * over the parent key and an FNV-1a hash of the label, so adding a new named
 * child never changes the draws of an existing one.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    [[nodiscard]] RandomStream child(std::string_view name) const;
    [[nodiscard]] RandomStream child(std::uint64_t index) const;

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    double normal(double mean, double stddev);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t key_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace pergarch
