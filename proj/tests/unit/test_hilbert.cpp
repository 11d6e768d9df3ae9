#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "rydberg/hilbert.hpp"

using namespace rydberg;

namespace {

// every subset of 2^n checked against the blockade graph directly
std::vector<Bitstring> brute_force_basis(const RubyLattice& lat, double rb) {
    auto g = blockade_graph(lat, rb);
    int n = lat.n_sites();
    std::vector<Bitstring> out;
    for (std::uint64_t m = 0; m < (1ull << n); ++m) {
        Bitstring b(n);
        for (int i = 0; i < n; ++i)
            if ((m >> i) & 1) b.set(i);
        bool ok = true;
        for (auto [i, j] : g.edges)
            if (b.test(i) && b.test(j)) ok = false;
        if (ok) out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("bitstring order and operations") {
    Bitstring a = Bitstring::from_string("0110");
    Bitstring b = Bitstring::from_string("0011");
    CHECK(a.count() == 2);
    CHECK((a ^ b).to_string() == "0101");
    CHECK((a & b).to_string() == "0010");
    CHECK((a | b).to_string() == "0111");
    CHECK(a.count_and(b) == 1);
    CHECK(a.intersects(b));
    CHECK(Bitstring(4).none());

    // empty pattern is the minimum; site 0 decides before site 1
    CHECK(Bitstring(4) < a);
    CHECK(Bitstring::from_string("0010") < Bitstring::from_string("0100"));
    CHECK(Bitstring::from_string("0100") < Bitstring::from_string("1000"));
    CHECK_THROWS_AS(Bitstring::from_string("01x1"), std::invalid_argument);

    // crossing the 64-bit word boundary
    Bitstring wide(70);
    wide.set(0);
    wide.set(69);
    CHECK(wide.count() == 2);
    CHECK(wide.test(69));
    wide.flip(69);
    CHECK(wide.count() == 1);
}

TEST_CASE("small basis matches brute force") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    Basis b = enumerate_basis(lat, 2.4);
    CHECK(b.dim() == 12);
    CHECK(b.states() == brute_force_basis(lat, 2.4));

    // first state is the vacuum
    CHECK(b.state_of(0).none());
    CHECK_THROWS_AS(b.state_of(12), std::out_of_range);

    for (std::int64_t i = 0; i < b.dim(); ++i) CHECK(b.index_of(b.state_of(i)) == i);
    Bitstring blocked(6);
    blocked.set(0);
    blocked.set(1);  // same triangle
    CHECK(b.index_of(blocked) == -1);
}

TEST_CASE("basis dimensions on tori") {
    RubyLattice t22 = build_ruby_lattice(2, 2, Boundary::torus);
    CHECK(enumerate_basis(t22, 2.4).dim() == 2649);

    // per-triangle blockade only: 4 states per triangle
    CHECK(enumerate_basis(t22, 1.53).dim() == 65536);

    RubyLattice t32 = build_ruby_lattice(3, 2, Boundary::torus);
    Basis big = enumerate_basis(t32, 2.4);
    CHECK(big.dim() == 136193);
    CHECK(std::is_sorted(big.states().begin(), big.states().end()));
}

TEST_CASE("capacity cap throws with the running count") {
    RubyLattice lat = build_ruby_lattice(2, 2, Boundary::torus);
    try {
        enumerate_basis(lat, 2.4, 100);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.count_reached == 101);
        CHECK(e.limit == 100);
    }
}

TEST_CASE("dimer sector sizes and occupation") {
    RubyLattice t22 = build_ruby_lattice(2, 2, Boundary::torus);
    Basis b22 = enumerate_basis(t22, 2.4);
    auto sec22 = dimer_sector(b22, t22);
    REQUIRE(sec22.size() == 32);
    for (auto i : sec22) CHECK(b22.state_of(i).count() == 6);  // 12 vertices / 2

    RubyLattice t32 = build_ruby_lattice(3, 2, Boundary::torus);
    Basis b32 = enumerate_basis(t32, 2.4);
    auto sec32 = dimer_sector(b32, t32);
    REQUIRE(sec32.size() == 128);
    for (auto i : sec32) {
        const Bitstring& s = b32.state_of(i);
        CHECK(s.count() == 9);  // 18 vertices / 2
        for (std::size_t v = 0; v < t32.vertices.size(); ++v)
            CHECK(s.count_and(t32.star_mask(static_cast<int>(v))) == 1);
    }
}

TEST_CASE("strict rule is a refinement of bulk") {
    RubyLattice open = build_ruby_lattice(2, 3, Boundary::open);
    Basis b = enumerate_basis(open, 2.4);
    auto bulk = dimer_sector(b, open, VertexRule::bulk);
    auto strict = dimer_sector(b, open, VertexRule::strict);
    CHECK(std::includes(bulk.begin(), bulk.end(), strict.begin(), strict.end()));
    CHECK(!bulk.empty());
}
