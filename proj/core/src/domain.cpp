#include "lrmbayes/domain.hpp"

#include "lrmbayes/error.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

namespace lrmbayes {

std::string to_string(const StatePoint& x)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ',';
        os << x[i];
    }
    os << ')';
    return os.str();
}

std::size_t StatePointHash::operator()(const StatePoint& x) const noexcept
{
    // FNV-1a over the coordinate values
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : x) {
        auto u = static_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (u >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    }
    return static_cast<std::size_t>(h);
}

std::size_t LatticeGeometry::neighbours(std::size_t site, std::array<std::size_t, 4>& out) const
{
    const std::size_t r = site / cols;
    const std::size_t c = site % cols;
    std::size_t k = 0;
    if (r > 0) out[k++] = site - cols;
    if (r + 1 < rows) out[k++] = site + cols;
    if (c > 0) out[k++] = site - 1;
    if (c + 1 < cols) out[k++] = site + 1;
    return k;
}

DomainSpec DomainSpec::finite(std::size_t dimension, std::int64_t states)
{
    if (dimension == 0) throw StructuralError("domain dimension must be positive");
    if (states < 2) throw StructuralError("finite coordinates need at least 2 states");
    DomainSpec d;
    d.coords_.assign(dimension, CoordinateSpec{CoordinateKind::Finite, states});
    return d;
}

DomainSpec DomainSpec::counts(std::size_t dimension)
{
    if (dimension == 0) throw StructuralError("domain dimension must be positive");
    DomainSpec d;
    d.coords_.assign(dimension, CoordinateSpec{CoordinateKind::Count, 0});
    return d;
}

DomainSpec DomainSpec::lattice(std::size_t rows, std::size_t cols, std::int64_t states)
{
    if (rows == 0 || cols == 0) throw StructuralError("lattice must have at least one site");
    DomainSpec d = finite(rows * cols, states);
    d.geometry_ = LatticeGeometry{rows, cols};
    return d;
}

DomainSpec DomainSpec::product(std::vector<CoordinateSpec> coords)
{
    if (coords.empty()) throw StructuralError("domain dimension must be positive");
    for (const auto& c : coords) {
        if (c.kind == CoordinateKind::Finite && c.states < 2)
            throw StructuralError("finite coordinates need at least 2 states");
    }
    DomainSpec d;
    d.coords_ = std::move(coords);
    return d;
}

bool DomainSpec::is_finite() const
{
    return std::all_of(coords_.begin(), coords_.end(),
                       [](const CoordinateSpec& c) { return c.kind == CoordinateKind::Finite; });
}

bool DomainSpec::contains(const StatePoint& x) const
{
    if (x.size() != coords_.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0) return false;
        if (coords_[i].kind == CoordinateKind::Finite && x[i] >= coords_[i].states) return false;
    }
    return true;
}

std::optional<std::uint64_t> DomainSpec::cardinality() const
{
    if (!is_finite()) return std::nullopt;
    std::uint64_t total = 1;
    for (const auto& c : coords_) {
        const auto s = static_cast<std::uint64_t>(c.states);
        if (total > std::numeric_limits<std::uint64_t>::max() / s) return std::nullopt;
        total *= s;
    }
    return total;
}

std::uint64_t DomainSpec::index_of(const StatePoint& x) const
{
    if (!contains(x)) throw InvariantError("state " + to_string(x) + " is not in the domain");
    if (!cardinality()) throw StructuralError("index_of requires a finite domain of at most 2^64 states");
    std::uint64_t idx = 0;
    std::uint64_t radix = 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        idx += static_cast<std::uint64_t>(x[i]) * radix;
        radix *= static_cast<std::uint64_t>(coords_[i].states);
    }
    return idx;
}

StatePoint DomainSpec::state_at(std::uint64_t index) const
{
    const auto card = cardinality();
    if (!card || index >= *card) throw InvariantError("state index out of range");
    StatePoint x(coords_.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto s = static_cast<std::uint64_t>(coords_[i].states);
        x[i] = static_cast<std::int64_t>(index % s);
        index /= s;
    }
    return x;
}

StatePoint apply(const StatePoint& x, const Move& m)
{
    StatePoint y = x;
    y.at(m.coord) = m.value;
    return y;
}

namespace {

bool candidate_in_range(const CoordinateSpec& c, std::int64_t v)
{
    if (v < 0) return false;
    return c.kind == CoordinateKind::Count || v < c.states;
}

} // namespace

void MatchingSet::moves_into(const StatePoint& x, std::vector<Move>& out) const
{
    out.clear();
    if (x.size() != domain_.dimension())
        throw InvariantError("state " + to_string(x) + " has the wrong dimension for this matching set");
    if (kind_ == Kind::LatticeStateFlips) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const auto states = domain_.coordinate(j).states;
            for (std::int64_t s = 0; s < states; ++s) {
                if (s != x[j]) out.push_back(Move{j, s});
            }
        }
    } else {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const auto& c = domain_.coordinate(j);
            for (auto o : offsets_) {
                std::int64_t v = x[j] + o;
                if (policy_ == BoundaryPolicy::Wrap && c.kind == CoordinateKind::Finite) {
                    v = ((v % c.states) + c.states) % c.states;
                    if (v == x[j]) continue;
                }
                if (candidate_in_range(c, v)) out.push_back(Move{j, v});
            }
        }
    }
    if (out.empty())
        throw StructuralError("matching set is empty at x = " + to_string(x) + " (every candidate left the domain)");
}

std::vector<Move> MatchingSet::moves(const StatePoint& x) const
{
    std::vector<Move> out;
    moves_into(x, out);
    return out;
}

std::vector<StatePoint> MatchingSet::neighbours(const StatePoint& x) const
{
    std::vector<StatePoint> out;
    for (const auto& m : moves(x)) out.push_back(apply(x, m));
    return out;
}

std::size_t MatchingSet::max_size() const
{
    if (kind_ == Kind::LatticeStateFlips) {
        std::size_t total = 0;
        for (std::size_t j = 0; j < domain_.dimension(); ++j)
            total += static_cast<std::size_t>(domain_.coordinate(j).states - 1);
        return total;
    }
    return offsets_.size() * domain_.dimension();
}

MatchingSet build_offset_matching_set(std::vector<std::int64_t> offsets, const DomainSpec& domain,
                                      BoundaryPolicy policy)
{
    if (offsets.empty()) throw StructuralError("offset list must be nonempty");
    std::set<std::int64_t> seen;
    for (auto o : offsets) {
        if (o == 0) throw StructuralError("offsets must be nonzero");
        if (!seen.insert(o).second) throw StructuralError("offsets must be distinct");
    }

    // M(x) is empty exactly when every coordinate sits at a value from which all offsets leave
    // the domain; build that witness per coordinate.
    StatePoint witness(domain.dimension(), 0);
    bool empty_somewhere = domain.dimension() > 0;
    for (std::size_t j = 0; j < domain.dimension() && empty_somewhere; ++j) {
        const auto& c = domain.coordinate(j);
        if (c.kind == CoordinateKind::Count) {
            empty_somewhere = std::all_of(offsets.begin(), offsets.end(), [](std::int64_t o) { return o < 0; });
            continue;
        }
        if (policy == BoundaryPolicy::Wrap) {
            empty_somewhere = std::all_of(offsets.begin(), offsets.end(),
                                          [&](std::int64_t o) { return o % c.states == 0; });
            continue;
        }
        bool found = false;
        for (std::int64_t v = 0; v < c.states && !found; ++v) {
            found = std::none_of(offsets.begin(), offsets.end(),
                                 [&](std::int64_t o) { return v + o >= 0 && v + o < c.states; });
            if (found) witness[j] = v;
        }
        empty_somewhere = found;
    }
    if (empty_somewhere)
        throw StructuralError("matching set is empty at x = " + to_string(witness) +
                              " (every candidate left the domain)");

    MatchingSet m;
    m.kind_ = MatchingSet::Kind::CoordinateOffsets;
    m.domain_ = domain;
    m.offsets_ = std::move(offsets);
    m.policy_ = policy;
    return m;
}

MatchingSet build_lattice_flip_matching_set(const DomainSpec& domain)
{
    if (!domain.is_finite()) throw StructuralError("lattice flips need a finite domain");
    for (std::size_t j = 0; j < domain.dimension(); ++j) {
        if (domain.coordinate(j).states < 2) throw StructuralError("lattice flips need |S| >= 2");
    }
    MatchingSet m;
    m.kind_ = MatchingSet::Kind::LatticeStateFlips;
    m.domain_ = domain;
    return m;
}

ConnectivityReport check_graph_connected(const DomainSpec& domain, const MatchingSet& matching,
                                         std::uint64_t state_cap)
{
    ConnectivityReport report;
    if (!domain.is_finite()) {
        const auto& off = matching.offsets();
        const bool unit_step = matching.kind() == MatchingSet::Kind::CoordinateOffsets &&
                               std::any_of(off.begin(), off.end(), [](std::int64_t o) { return o == 1 || o == -1; });
        if (unit_step) {
            report.status = Connectivity::Connected;
            report.note = "certified analytically: unit offsets chain every coordinate";
        } else {
            report.status = Connectivity::Unverified;
            report.note = "count domain without a unit offset; connectivity not verified";
        }
        return report;
    }

    const auto card = domain.cardinality();
    if (!card || *card > state_cap)
        throw StructuralError("domain too large to verify exhaustively");

    const std::uint64_t n = *card;
    // Undirected adjacency: M may be asymmetric, so collect both directions.
    std::vector<std::vector<std::uint64_t>> adj(n);
    std::vector<Move> buf;
    for (std::uint64_t i = 0; i < n; ++i) {
        const StatePoint x = domain.state_at(i);
        try {
            matching.moves_into(x, buf);
        } catch (const StructuralError&) {
            buf.clear();
        }
        for (const auto& m : buf) {
            const auto j = domain.index_of(apply(x, m));
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }

    std::vector<char> seen(n, 0);
    std::deque<std::uint64_t> queue{0};
    seen[0] = 1;
    std::uint64_t reached = 1;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        for (auto v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                queue.push_back(v);
            }
        }
    }
    if (reached == n) {
        report.status = Connectivity::Connected;
        return report;
    }
    report.status = Connectivity::Disconnected;
    for (std::uint64_t i = 0; i < n; ++i) {
        if (!seen[i]) {
            report.witness = std::make_pair(domain.state_at(0), domain.state_at(i));
            break;
        }
    }
    return report;
}

} // namespace lrmbayes
