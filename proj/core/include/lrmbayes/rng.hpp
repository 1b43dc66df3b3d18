#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace lrmbayes {

using Rng = std::mt19937_64;

/// Identifies a reproducible random stream. Equal specs give bit-identical draws.
struct RngSpec {
    std::string algorithm = "mt19937_64";
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    /// Independent stream for a sub-task (chain, bootstrap, replicate).
    RngSpec child(std::uint64_t index) const;
};

Rng make_rng(const RngSpec& spec);

} // namespace lrmbayes
