#include "lrmbayes/domain.hpp"
#include "lrmbayes/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace lrmbayes;

TEST_SUITE("domain") {

TEST_CASE("finite index round trip over every state")
{
    const auto d = DomainSpec::finite(3, 4);
    REQUIRE(d.cardinality() == 64u);
    std::set<StatePoint> seen;
    for (std::uint64_t i = 0; i < 64; ++i) {
        const auto x = d.state_at(i);
        CHECK(d.contains(x));
        CHECK(d.index_of(x) == i);
        seen.insert(x);
    }
    CHECK(seen.size() == 64);
    CHECK(d.state_at(1) == StatePoint{1, 0, 0});
}

TEST_CASE("count domains are infinite and reject negatives")
{
    const auto d = DomainSpec::counts(2);
    CHECK_FALSE(d.cardinality().has_value());
    CHECK(d.contains({0, 7}));
    CHECK_FALSE(d.contains({-1, 0}));
    CHECK_FALSE(d.contains({1}));
}

TEST_CASE("offset matching set drops candidates that leave the domain")
{
    const auto M = build_offset_matching_set({-1, 1}, DomainSpec::counts(2));
    const auto at0 = M.neighbours({0, 0});
    CHECK(at0.size() == 2);
    CHECK(std::count(at0.begin(), at0.end(), StatePoint{1, 0}) == 1);
    CHECK(std::count(at0.begin(), at0.end(), StatePoint{0, 1}) == 1);
    CHECK(M.neighbours({3, 2}).size() == 4);
    CHECK(M.max_size() == 4);
}

TEST_CASE("an offset set that empties M somewhere is a structural error")
{
    CHECK_THROWS_AS(build_offset_matching_set({-1}, DomainSpec::counts(1)), StructuralError);
    CHECK_THROWS_AS(build_offset_matching_set({-2, -1}, DomainSpec::counts(3)), StructuralError);
    CHECK_NOTHROW(build_offset_matching_set({-1, 1}, DomainSpec::counts(1)));
}

TEST_CASE("wrap policy cycles finite coordinates")
{
    const auto M = build_offset_matching_set({1}, DomainSpec::finite(1, 5), BoundaryPolicy::Wrap);
    CHECK(M.neighbours({4}) == std::vector<StatePoint>{{0}});
    auto drop_at_top = [] {
        const auto D = build_offset_matching_set({1}, DomainSpec::finite(1, 5), BoundaryPolicy::Drop);
        return D.moves({4});
    };
    CHECK_THROWS_AS(drop_at_top(), StructuralError);
}

TEST_CASE("lattice flips give d(|S| - 1) neighbours")
{
    const auto dom = DomainSpec::lattice(2, 3, 4);
    const auto M = build_lattice_flip_matching_set(dom);
    const StatePoint x{0, 1, 2, 3, 0, 1};
    const auto nb = M.neighbours(x);
    CHECK(nb.size() == 6 * 3);
    for (const auto& y : nb) {
        std::size_t diff = 0;
        for (std::size_t i = 0; i < x.size(); ++i) diff += x[i] != y[i];
        CHECK(diff == 1);
    }
}

TEST_CASE("lattice neighbours: corner, edge, interior")
{
    const LatticeGeometry g{3, 4};
    std::array<std::size_t, 4> out{};
    CHECK(g.neighbours(0, out) == 2);
    CHECK(g.neighbours(1, out) == 3);
    CHECK(g.neighbours(5, out) == 4);
    CHECK(g.neighbours(11, out) == 2);
}

TEST_CASE("connectivity of offset graphs")
{
    const auto dom = DomainSpec::finite(1, 6);
    const auto even = build_offset_matching_set({-2, 2}, dom);
    const auto r = check_graph_connected(dom, even);
    CHECK(r.status == Connectivity::Disconnected);
    REQUIRE(r.witness.has_value());
    CHECK((r.witness->first[0] - r.witness->second[0]) % 2 != 0);

    const auto cyc = build_offset_matching_set({1}, dom, BoundaryPolicy::Wrap);
    CHECK(check_graph_connected(dom, cyc).status == Connectivity::Connected);
    // without wrapping the top state has no neighbour
    CHECK_THROWS_AS(check_graph_connected(dom, build_offset_matching_set({1}, dom)), StructuralError);
    const auto counts = DomainSpec::counts(2);
    CHECK(check_graph_connected(counts, build_offset_matching_set({-1, 1}, counts)).status == Connectivity::Connected);
    CHECK(check_graph_connected(counts, build_offset_matching_set({-2, 2}, counts)).status != Connectivity::Connected);
}

TEST_CASE("property: every move stays in the domain and changes one coordinate")
{
    std::mt19937_64 rng(5);
    const auto dom = DomainSpec::finite(4, 3);
    const auto M = build_offset_matching_set({-1, 1}, dom);
    std::uniform_int_distribution<std::int64_t> s(0, 2);
    for (int rep = 0; rep < 200; ++rep) {
        StatePoint x(4);
        for (auto& v : x) v = s(rng);
        for (const auto& m : M.moves(x)) {
            const auto y = lrmbayes::apply(x, m);
            CHECK(dom.contains(y));
            CHECK(y[m.coord] != x[m.coord]);
        }
    }
}

} // TEST_SUITE
