#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lrmbayes {

/// One observation: an integer coordinate vector.
using StatePoint = std::vector<std::int64_t>;

std::string to_string(const StatePoint& x);

struct StatePointHash {
    std::size_t operator()(const StatePoint& x) const noexcept;
};

enum class CoordinateKind { Finite, Count };

struct CoordinateSpec {
    CoordinateKind kind = CoordinateKind::Count;
    std::int64_t states = 0; ///< |S| for Finite coordinates; states are 0..states-1
};

/// Rectangular lattice with 4-nearest-neighbour structure and free boundary.
/// Sites are stored row-major.
struct LatticeGeometry {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t sites() const { return rows * cols; }

    /// Up to four neighbouring site indices (up, down, left, right order; absent ones skipped).
    std::size_t neighbours(std::size_t site, std::array<std::size_t, 4>& out) const;

    bool operator==(const LatticeGeometry&) const = default;
};

class DomainSpec {
public:
    static DomainSpec finite(std::size_t dimension, std::int64_t states);
    static DomainSpec counts(std::size_t dimension);
    static DomainSpec lattice(std::size_t rows, std::size_t cols, std::int64_t states);
    /// Heterogeneous product space.
    static DomainSpec product(std::vector<CoordinateSpec> coords);

    std::size_t dimension() const { return coords_.size(); }
    const CoordinateSpec& coordinate(std::size_t i) const { return coords_.at(i); }
    const std::optional<LatticeGeometry>& geometry() const { return geometry_; }

    bool is_finite() const;
    bool contains(const StatePoint& x) const;

    /// Number of states; nullopt for count domains or when it overflows 64 bits.
    std::optional<std::uint64_t> cardinality() const;

    /// Mixed-radix encoding of a finite state (first coordinate is least significant).
    std::uint64_t index_of(const StatePoint& x) const;
    StatePoint state_at(std::uint64_t index) const;

private:
    std::vector<CoordinateSpec> coords_;
    std::optional<LatticeGeometry> geometry_;
};

/// A single-coordinate change: x' equals x except x'[coord] == value.
struct Move {
    std::size_t coord = 0;
    std::int64_t value = 0;
};

StatePoint apply(const StatePoint& x, const Move& m);

enum class BoundaryPolicy {
    Drop, ///< out-of-domain candidates are removed; the normaliser uses the realised |M(x)|
    Wrap, ///< finite coordinates wrap modulo |S|
};

/// The set-valued map x -> M(x). Every in-scope construction only changes one
/// coordinate at a time, so neighbours are produced as Moves.
class MatchingSet {
public:
    enum class Kind { CoordinateOffsets, LatticeStateFlips };

    Kind kind() const { return kind_; }
    const DomainSpec& domain() const { return domain_; }
    const std::vector<std::int64_t>& offsets() const { return offsets_; }
    BoundaryPolicy policy() const { return policy_; }

    /// Neighbours of x. Throws StructuralError when every candidate is dropped.
    std::vector<Move> moves(const StatePoint& x) const;

    /// Same as moves() but appends to a caller-owned buffer (cleared first).
    void moves_into(const StatePoint& x, std::vector<Move>& out) const;

    std::vector<StatePoint> neighbours(const StatePoint& x) const;

    /// Upper bound on |M(x)| over the domain.
    std::size_t max_size() const;

private:
    friend MatchingSet build_offset_matching_set(std::vector<std::int64_t>, const DomainSpec&, BoundaryPolicy);
    friend MatchingSet build_lattice_flip_matching_set(const DomainSpec&);

    Kind kind_ = Kind::CoordinateOffsets;
    DomainSpec domain_;
    std::vector<std::int64_t> offsets_;
    BoundaryPolicy policy_ = BoundaryPolicy::Drop;
};

/// M(x) = { x + o e_j : o in offsets, j = 1..d } restricted to the domain.
MatchingSet build_offset_matching_set(std::vector<std::int64_t> offsets, const DomainSpec& domain,
                                      BoundaryPolicy policy = BoundaryPolicy::Drop);

/// M(x) = { x with site j set to s : j = 1..d, s != x_j }; |M(x)| = d(|S| - 1).
MatchingSet build_lattice_flip_matching_set(const DomainSpec& domain);

enum class Connectivity { Connected, Disconnected, Unverified };

struct ConnectivityReport {
    Connectivity status = Connectivity::Unverified;
    /// Two states in distinct components when Disconnected.
    std::optional<std::pair<StatePoint, StatePoint>> witness;
    std::string note;
};

/// Breadth-first search over the undirected graph induced by M. Count domains are
/// certified analytically when the offsets contain +1 or -1 and reported Unverified otherwise.
ConnectivityReport check_graph_connected(const DomainSpec& domain, const MatchingSet& matching,
                                         std::uint64_t state_cap = 1'000'000);

} // namespace lrmbayes
