#include "lrmbayes/pmf.hpp"

#include "lrmbayes/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace lrmbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b)
{
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_poisson(std::int64_t x, double mean)
{
    return static_cast<double>(x) * std::log(mean) - mean - std::lgamma(static_cast<double>(x) + 1.0);
}

} // namespace

std::int64_t EmpiricalCounts::count(const StatePoint& x) const
{
    auto it = counts_.find(x);
    return it == counts_.end() ? 0 : it->second;
}

void EmpiricalCounts::add(const StatePoint& x, std::int64_t c)
{
    if (c < 0) throw InvariantError("counts must be nonnegative");
    counts_[x] += c;
    total_ += c;
}

EmpiricalCounts fit_empirical(std::span<const StatePoint> samples)
{
    if (samples.empty()) throw ConfigError("cannot fit an empirical PMF to an empty sample");
    EmpiricalCounts counts;
    for (const auto& x : samples) counts.add(x);
    return counts;
}

BasePmf BasePmf::uniform_finite(const DomainSpec& domain)
{
    const auto card = domain.cardinality();
    if (!card) throw ConfigError("uniform base PMF needs a finite domain");
    BasePmf b;
    b.kind_ = Kind::UniformFinite;
    b.domain_ = domain;
    b.normaliser_ = static_cast<double>(*card);
    return b;
}

BasePmf BasePmf::count_mixture(std::vector<std::int64_t> upper, std::vector<double> tail_means, double epsilon)
{
    if (upper.empty() || upper.size() != tail_means.size())
        throw ConfigError("mixture base PMF needs one box bound and one tail mean per coordinate");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("mixture weight epsilon must lie in (0, 1)");
    BasePmf b;
    b.kind_ = Kind::CountMixture;
    b.domain_ = DomainSpec::counts(upper.size());
    b.epsilon_ = epsilon;
    b.log_box_volume_ = 0.0;
    for (std::size_t j = 0; j < upper.size(); ++j) {
        if (upper[j] < 0) throw ConfigError("box bounds must be nonnegative");
        if (!(tail_means[j] > 0.0)) throw ConfigError("tail means must be positive");
        b.log_box_volume_ += std::log(static_cast<double>(upper[j]) + 1.0);
    }
    b.upper_ = std::move(upper);
    b.tail_means_ = std::move(tail_means);
    b.normaliser_ = std::exp(b.log_box_volume_);
    return b;
}

BasePmf BasePmf::count_mixture_for(std::span<const StatePoint> samples, double epsilon)
{
    if (samples.empty()) throw ConfigError("cannot build a base PMF from an empty sample");
    const std::size_t d = samples.front().size();
    std::vector<std::int64_t> upper(d, 0);
    std::vector<double> means(d, 0.0);
    for (const auto& x : samples) {
        if (x.size() != d) throw ConfigError("samples have inconsistent dimension");
        for (std::size_t j = 0; j < d; ++j) {
            upper[j] = std::max(upper[j], x[j]);
            means[j] += static_cast<double>(x[j]);
        }
    }
    for (auto& m : means) m = std::max(m / static_cast<double>(samples.size()), 0.5);
    return count_mixture(std::move(upper), std::move(means), epsilon);
}

double BasePmf::log_unnormalised(const StatePoint& x) const
{
    if (!domain_.contains(x)) return kNegInf;
    if (kind_ == Kind::UniformFinite) return 0.0;

    bool in_box = true;
    double log_tail = std::log(epsilon_);
    for (std::size_t j = 0; j < x.size(); ++j) {
        in_box = in_box && x[j] <= upper_[j];
        log_tail += log_poisson(x[j], tail_means_[j]);
    }
    const double log_uniform = in_box ? std::log1p(-epsilon_) - log_box_volume_ : kNegInf;
    return log_box_volume_ + log_add_exp(log_uniform, log_tail);
}

double BasePmf::unnormalised(const StatePoint& x) const
{
    return std::exp(log_unnormalised(x));
}

SmoothedPmf::SmoothedPmf(EmpiricalCounts counts, double alpha, std::optional<BasePmf> base)
    : counts_(std::move(counts)), alpha_(alpha), base_(std::move(base))
{
    if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) throw ConfigError("smoothing alpha must be finite and >= 0");
    if (alpha_ > 0.0 && !base_) throw ConfigError("smoothing with alpha > 0 requires a base PMF");
    if (counts_.total() <= 0) throw ConfigError("smoothing needs at least one observation");
    const double z = base_ ? base_->normaliser() : 0.0;
    log_denominator_ = std::log(static_cast<double>(counts_.total()) + alpha_ * z);
}

double SmoothedPmf::log_prob(const StatePoint& x) const
{
    const auto c = counts_.count(x);
    double log_num = c > 0 ? std::log(static_cast<double>(c)) : kNegInf;
    if (alpha_ > 0.0) log_num = log_add_exp(log_num, std::log(alpha_) + base_->log_unnormalised(x));
    return log_num - log_denominator_;
}

double SmoothedPmf::prob(const StatePoint& x) const
{
    return std::exp(log_prob(x));
}

SmoothedPmf smooth(EmpiricalCounts counts, double alpha, std::optional<BasePmf> base)
{
    return SmoothedPmf(std::move(counts), alpha, std::move(base));
}

std::optional<double> log_ratio(const SmoothedPmf& pmf, const StatePoint& x_prime, const StatePoint& x)
{
    if (pmf.alpha() > 0.0) {
        const auto& base = *pmf.base();
        if (base.log_unnormalised(x) == kNegInf || base.log_unnormalised(x_prime) == kNegInf)
            throw InvariantError("base PMF has no mass at " + to_string(base.log_unnormalised(x) == kNegInf ? x : x_prime) +
                                 "; the smoothed estimate would not be positive there");
    }
    const double a = pmf.log_prob(x_prime);
    const double b = pmf.log_prob(x);
    if (a == kNegInf || b == kNegInf) return std::nullopt;
    return a - b;
}

std::uint32_t canonical_neighbourhood(std::span<const std::int64_t> neighbour_states, std::int64_t states)
{
    if (states < 2 || states > 255) throw ConfigError("neighbourhood keys support 2..255 states");
    if (neighbour_states.size() > 4) throw InvariantError("at most four neighbours on a square lattice");
    std::array<std::int64_t, 4> v{states, states, states, states};
    std::copy(neighbour_states.begin(), neighbour_states.end(), v.begin());
    std::sort(v.begin(), v.end());
    std::uint32_t key = 0;
    const auto base = static_cast<std::uint32_t>(states + 1);
    for (auto s : v) {
        if (s < 0 || s > states) throw InvariantError("neighbour state out of range");
        key = key * base + static_cast<std::uint32_t>(s);
    }
    return key;
}

std::uint32_t neighbourhood_key(std::span<const std::int64_t> lattice, const LatticeGeometry& geometry,
                                std::size_t site, std::int64_t states)
{
    std::array<std::size_t, 4> nb{};
    const std::size_t k = geometry.neighbours(site, nb);
    std::array<std::int64_t, 4> vals{};
    for (std::size_t i = 0; i < k; ++i) vals[i] = lattice[nb[i]];
    return canonical_neighbourhood(std::span<const std::int64_t>(vals.data(), k), states);
}

LocalConditionalTable::LocalConditionalTable(std::int64_t states, double alpha) : states_(states), alpha_(alpha)
{
    if (states_ < 2) throw ConfigError("local conditionals need at least two states");
    if (!(alpha_ >= 0.0)) throw ConfigError("smoothing alpha must be >= 0");
}

void LocalConditionalTable::add(std::uint32_t key, std::int64_t state, std::int64_t c)
{
    if (state < 0 || state >= states_) throw InvariantError("site state out of range");
    auto& row = counts_[key];
    if (row.empty()) row.assign(static_cast<std::size_t>(states_) + 1, 0); // last slot holds the row total
    row[static_cast<std::size_t>(state)] += c;
    row.back() += c;
}

std::int64_t LocalConditionalTable::count(std::uint32_t key, std::int64_t state) const
{
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second[static_cast<std::size_t>(state)];
}

double LocalConditionalTable::conditional(std::uint32_t key, std::int64_t state) const
{
    auto it = counts_.find(key);
    const double c = it == counts_.end() ? 0.0 : static_cast<double>(it->second[static_cast<std::size_t>(state)]);
    const double total = it == counts_.end() ? 0.0 : static_cast<double>(it->second.back());
    const double denom = total + alpha_ * static_cast<double>(states_);
    if (denom <= 0.0) return 0.0;
    return (c + alpha_) / denom;
}

std::optional<double> LocalConditionalTable::log_ratio(std::uint32_t key, std::int64_t s_prime, std::int64_t s) const
{
    auto it = counts_.find(key);
    const double a = (it == counts_.end() ? 0.0 : static_cast<double>(it->second[static_cast<std::size_t>(s_prime)])) + alpha_;
    const double b = (it == counts_.end() ? 0.0 : static_cast<double>(it->second[static_cast<std::size_t>(s)])) + alpha_;
    if (a <= 0.0 || b <= 0.0) return std::nullopt;
    return std::log(a) - std::log(b);
}

LocalConditionalTable fit_local_conditionals(std::span<const StatePoint> lattices, const LatticeGeometry& geometry,
                                             std::int64_t states, double alpha)
{
    LocalConditionalTable table(states, alpha);
    for (const auto& lat : lattices) {
        if (lat.size() != geometry.sites()) throw ConfigError("lattice does not match the declared geometry");
        for (std::size_t site = 0; site < lat.size(); ++site)
            table.add(neighbourhood_key(lat, geometry, site, states), lat[site]);
    }
    return table;
}

LocalConditionalTable fit_local_conditionals(std::span<const StatePoint> lattices, const LatticeGeometry& geometry,
                                             std::int64_t states, double alpha, std::span<const SiteRef> units)
{
    LocalConditionalTable table(states, alpha);
    for (const auto& u : units) {
        const auto& lat = lattices[u.lattice];
        table.add(neighbourhood_key(lat, geometry, u.site, states), lat[u.site]);
    }
    return table;
}

} // namespace lrmbayes
