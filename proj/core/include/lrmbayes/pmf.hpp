#pragma once

#include "lrmbayes/domain.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace lrmbayes {

/// Tally C_n(x) of observed states.
class EmpiricalCounts {
public:
    EmpiricalCounts() = default;

    std::int64_t count(const StatePoint& x) const;
    std::int64_t total() const { return total_; }
    std::size_t support_size() const { return counts_.size(); }
    const std::map<StatePoint, std::int64_t>& table() const { return counts_; }

    void add(const StatePoint& x, std::int64_t c = 1);

private:
    std::map<StatePoint, std::int64_t> counts_;
    std::int64_t total_ = 0;
};

/// Throws ConfigError on empty input.
EmpiricalCounts fit_empirical(std::span<const StatePoint> samples);

/// Unnormalised base mass q~(x) with normaliser Z. Stored in log space so
/// far-tail masses never underflow to zero.
class BasePmf {
public:
    enum class Kind { UniformFinite, CountMixture };

    /// q~ = 1 on every state of a finite domain.
    static BasePmf uniform_finite(const DomainSpec& domain);

    /// (1 - eps) Unif(box) + eps r with r a product of Poisson(tail_means).
    /// The box is {0..upper_j} per coordinate. Scaled by the box volume V so that, as with
    /// the finite uniform base, alpha adds roughly one pseudo-count per box cell; Z = V.
    static BasePmf count_mixture(std::vector<std::int64_t> upper, std::vector<double> tail_means,
                                 double epsilon = 0.01);

    /// Mixture whose box covers every observed value and whose tail means match the sample means.
    static BasePmf count_mixture_for(std::span<const StatePoint> samples, double epsilon = 0.01);

    Kind kind() const { return kind_; }
    double log_unnormalised(const StatePoint& x) const;
    double unnormalised(const StatePoint& x) const;
    double normaliser() const { return normaliser_; }
    double epsilon() const { return epsilon_; }

private:
    Kind kind_ = Kind::UniformFinite;
    DomainSpec domain_;
    std::vector<std::int64_t> upper_;
    std::vector<double> tail_means_;
    double epsilon_ = 0.0;
    double log_box_volume_ = 0.0;
    double normaliser_ = 1.0;
};

/// Laplace-smoothed estimate q_alpha(x) = (C_n(x) + alpha q~(x)) / (n + alpha Z).
class SmoothedPmf {
public:
    SmoothedPmf(EmpiricalCounts counts, double alpha, std::optional<BasePmf> base);

    double alpha() const { return alpha_; }
    const EmpiricalCounts& counts() const { return counts_; }
    const std::optional<BasePmf>& base() const { return base_; }

    double prob(const StatePoint& x) const;
    /// -infinity where the mass is zero.
    double log_prob(const StatePoint& x) const;

private:
    EmpiricalCounts counts_;
    double alpha_;
    std::optional<BasePmf> base_;
    double log_denominator_;
};

/// Throws ConfigError when alpha < 0 or alpha > 0 without a base.
SmoothedPmf smooth(EmpiricalCounts counts, double alpha, std::optional<BasePmf> base);

/// log q(x') / q(x); nullopt ("omitted") when alpha = 0 and either mass is zero.
/// Throws InvariantError when alpha > 0 and the base has no mass at x or x'.
std::optional<double> log_ratio(const SmoothedPmf& pmf, const StatePoint& x_prime, const StatePoint& x);

/// Canonical key for the multiset of up to four neighbour states. Missing
/// neighbours (free boundary) are encoded with the marker value `states`.
std::uint32_t canonical_neighbourhood(std::span<const std::int64_t> neighbour_states, std::int64_t states);

/// Neighbourhood key of a site in a lattice.
std::uint32_t neighbourhood_key(std::span<const std::int64_t> lattice, const LatticeGeometry& geometry,
                                std::size_t site, std::int64_t states);

/// Smoothed local conditionals q(s | nb) = (count(nb, s) + alpha) / (sum_s' count(nb, s') + alpha |S|).
class LocalConditionalTable {
public:
    LocalConditionalTable(std::int64_t states, double alpha);

    std::int64_t states() const { return states_; }
    double alpha() const { return alpha_; }
    std::size_t neighbourhoods() const { return counts_.size(); }

    void add(std::uint32_t key, std::int64_t state, std::int64_t c = 1);

    std::int64_t count(std::uint32_t key, std::int64_t state) const;
    double conditional(std::uint32_t key, std::int64_t state) const;
    /// log q(s' | nb) - log q(s | nb); nullopt when alpha = 0 and either count is zero.
    std::optional<double> log_ratio(std::uint32_t key, std::int64_t s_prime, std::int64_t s) const;

private:
    std::int64_t states_;
    double alpha_;
    std::unordered_map<std::uint32_t, std::vector<std::int64_t>> counts_;
};

/// Tallies (neighbourhood, site state) over every site of every lattice.
LocalConditionalTable fit_local_conditionals(std::span<const StatePoint> lattices, const LatticeGeometry& geometry,
                                             std::int64_t states, double alpha);

/// Same, restricted to the listed (lattice, site) units; used for bootstrap refits.
struct SiteRef {
    std::uint32_t lattice = 0;
    std::uint32_t site = 0;
};
LocalConditionalTable fit_local_conditionals(std::span<const StatePoint> lattices, const LatticeGeometry& geometry,
                                             std::int64_t states, double alpha, std::span<const SiteRef> units);

} // namespace lrmbayes
