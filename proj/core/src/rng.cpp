#include "lrmbayes/rng.hpp"

#include "lrmbayes/error.hpp"

namespace lrmbayes {

namespace {

// splitmix64 finaliser, used to derive child stream ids
std::uint64_t mix(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

RngSpec RngSpec::child(std::uint64_t index) const
{
    RngSpec c = *this;
    c.stream = mix(stream ^ mix(index + 1));
    return c;
}

Rng make_rng(const RngSpec& spec)
{
    if (spec.algorithm != "mt19937_64") throw ConfigError("unsupported RNG algorithm '" + spec.algorithm + "'");
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(spec.stream), static_cast<std::uint32_t>(spec.stream >> 32)};
    return Rng(seq);
}

} // namespace lrmbayes
