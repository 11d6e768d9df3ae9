#pragma once

// Classical dimer combinatorics on the kagome link lattice: perfect-covering
// enumeration, loop moves between coverings, transition graphs, and
// topological sector labels on holed patches.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rydberg/bitset.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/hilbert.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/strings.hpp"

namespace rydberg {

struct DimerCovering {
    Bitstring bits;
};

// Boundary policy for lattices with incompletely coordinated vertices. A
// dimer must always serve at least one counted vertex (free-floating boundary
// dimers are not coverings); `interior` additionally keeps dimers off
// uncounted vertices entirely, which pins every monomer in place and makes
// transition graphs between any two coverings close up.
enum class RimPolicy { reach, interior };

namespace detail {

inline bool covering_site_allowed(const RubyLattice& lat, const std::vector<char>& counted,
                                  int s, RimPolicy rim) {
    const Site& st = lat.sites[static_cast<std::size_t>(s)];
    bool c0 = counted[static_cast<std::size_t>(st.v0)], c1 = counted[static_cast<std::size_t>(st.v1)];
    return rim == RimPolicy::interior ? (c0 && c1) : (c0 || c1);
}

inline std::vector<char> counted_vertices(const RubyLattice& lat, VertexRule rule) {
    std::vector<char> counted(lat.vertices.size(), 0);
    for (std::size_t v = 0; v < lat.vertices.size(); ++v)
        if (rule == VertexRule::strict || lat.vertices[v].full()) counted[v] = 1;
    return counted;
}

} // namespace detail

// Exactly one dimer per counted vertex, no vertex anywhere carries two, and
// every dimer sits on a site the rim policy allows. The bulk rule counts only
// fully coordinated vertices, so boundary vertices may be monomers; strict
// counts every vertex.
inline bool is_perfect_covering(const RubyLattice& lat, const Bitstring& bits,
                                VertexRule rule = VertexRule::bulk,
                                RimPolicy rim = RimPolicy::reach) {
    std::vector<char> counted = detail::counted_vertices(lat, rule);
    for (std::size_t v = 0; v < lat.vertices.size(); ++v) {
        int c = bits.count_and(lat.star_mask(static_cast<int>(v)));
        if (c > 1) return false;
        if (c != 1 && counted[v]) return false;
    }
    for (int s = 0; s < lat.n_sites(); ++s)
        if (bits.test(s) && !detail::covering_site_allowed(lat, counted, s, rim)) return false;
    return true;
}

// Complete, duplicate-free enumeration by backtracking over the lowest
// unsatisfied counted vertex; every allowed site touches a counted vertex, so
// the search decides all of them. The visitor sees each covering once, in a
// fixed order.
template <typename Visit>
inline void visit_perfect_coverings(const RubyLattice& lat, VertexRule rule, RimPolicy rim,
                                    Visit&& visit) {
    int n = lat.n_sites();
    std::vector<char> counted = detail::counted_vertices(lat, rule);
    std::vector<char> allowed(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s)
        allowed[static_cast<std::size_t>(s)] =
            detail::covering_site_allowed(lat, counted, s, rim) ? 1 : 0;
    std::vector<Bitstring> conflict;
    conflict.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        Bitstring m(n);
        const Site& st = lat.sites[static_cast<std::size_t>(s)];
        for (int v : {st.v0, st.v1})
            for (int t : lat.vertices[static_cast<std::size_t>(v)].sites) m.set(t);
        m.reset(s);
        conflict.push_back(m);
    }
    std::vector<int> order;
    for (std::size_t v = 0; v < lat.vertices.size(); ++v)
        if (counted[v]) order.push_back(static_cast<int>(v));

    Bitstring chosen(n), banned(n);
    std::function<void(std::size_t)> place = [&](std::size_t vi) {
        while (vi < order.size() && chosen.count_and(lat.star_mask(order[vi])) == 1) ++vi;
        if (vi == order.size()) {
            visit(const_cast<const Bitstring&>(chosen));
            return;
        }
        for (int s : lat.vertices[static_cast<std::size_t>(order[vi])].sites) {
            if (!allowed[static_cast<std::size_t>(s)] || banned.test(s) || chosen.test(s)) continue;
            Bitstring saved = banned;
            chosen.set(s);
            banned = banned | conflict[static_cast<std::size_t>(s)];
            place(vi + 1);
            chosen.reset(s);
            banned = saved;
        }
    };
    place(0);
}

inline std::vector<DimerCovering> enumerate_perfect_coverings(const RubyLattice& lat,
                                                              VertexRule rule = VertexRule::bulk,
                                                              std::int64_t cap = 10'000'000,
                                                              RimPolicy rim = RimPolicy::reach) {
    std::vector<DimerCovering> out;
    visit_perfect_coverings(lat, rule, rim, [&](const Bitstring& b) {
        if (static_cast<std::int64_t>(out.size()) >= cap)
            throw CapacityError("perfect covering enumeration exceeded the cap",
                                static_cast<std::int64_t>(out.size()) + 1, cap);
        out.push_back(DimerCovering{b});
    });
    return out;
}

// A closed X loop toggles one site per step; on coverings whose occupation
// alternates around the loop this is a valid dimer move, otherwise the loop
// does not apply.
inline std::optional<DimerCovering> apply_x_loop(const RubyLattice& lat, const DimerCovering& d,
                                                 const StringSpec& s,
                                                 VertexRule rule = VertexRule::bulk,
                                                 RimPolicy rim = RimPolicy::reach) {
    if (s.kind != StringKind::X || !s.closed)
        throw ConfigError("apply_x_loop: spec is not a closed X loop");
    Bitstring out = d.bits;
    for (const XStep& st : s.steps) out.flip(st.site);
    if (!is_perfect_covering(lat, out, rule, rim)) return std::nullopt;
    return DimerCovering{out};
}

// Superposition of two coverings with the shared dimers removed, decomposed
// into alternating chains. Chains close into cycles except where a monomer
// moved, which leaves an open path.
struct TransitionGraph {
    std::vector<std::vector<int>> cycles;
    std::vector<std::vector<int>> paths;
};

inline TransitionGraph transition_graph(const RubyLattice& lat, const DimerCovering& a,
                                        const DimerCovering& b) {
    if (a.bits.size() != lat.n_sites() || b.bits.size() != lat.n_sites())
        throw ConfigError("transition_graph: covering width does not match the lattice");
    for (std::size_t v = 0; v < lat.vertices.size(); ++v) {
        const Bitstring& star = lat.star_mask(static_cast<int>(v));
        if (a.bits.count_and(star) > 1 || b.bits.count_and(star) > 1)
            throw ConfigError("transition_graph: input has two dimers on one vertex");
    }
    Bitstring diff = a.bits ^ b.bits;
    // two diff sites can meet at a vertex; record them per vertex
    std::vector<std::array<int, 2>> at(lat.vertices.size(), {-1, -1});
    for (int s = 0; s < lat.n_sites(); ++s) {
        if (!diff.test(s)) continue;
        for (int v : {lat.sites[static_cast<std::size_t>(s)].v0,
                      lat.sites[static_cast<std::size_t>(s)].v1}) {
            auto& slot = at[static_cast<std::size_t>(v)];
            (slot[0] < 0 ? slot[0] : slot[1]) = s;
        }
    }
    auto partner = [&](int v, int s) {
        const auto& slot = at[static_cast<std::size_t>(v)];
        return slot[0] == s ? slot[1] : slot[0];
    };
    auto other_vertex = [&](int s, int v) {
        const Site& st = lat.sites[static_cast<std::size_t>(s)];
        return st.v0 == v ? st.v1 : st.v0;
    };
    TransitionGraph g;
    std::vector<char> seen(static_cast<std::size_t>(lat.n_sites()), 0);
    for (int s0 = 0; s0 < lat.n_sites(); ++s0) {
        if (!diff.test(s0) || seen[static_cast<std::size_t>(s0)]) continue;
        seen[static_cast<std::size_t>(s0)] = 1;
        std::vector<int> chain{s0};
        bool closed = false;
        // forward through v1, then (if open) backward through v0
        int cur = s0, v = lat.sites[static_cast<std::size_t>(s0)].v1;
        while (true) {
            int nxt = partner(v, cur);
            if (nxt < 0) break;
            if (nxt == s0) {
                closed = true;
                break;
            }
            seen[static_cast<std::size_t>(nxt)] = 1;
            chain.push_back(nxt);
            v = other_vertex(nxt, v);
            cur = nxt;
        }
        if (!closed) {
            cur = s0;
            v = lat.sites[static_cast<std::size_t>(s0)].v0;
            while (true) {
                int nxt = partner(v, cur);
                if (nxt < 0) break;
                seen[static_cast<std::size_t>(nxt)] = 1;
                chain.insert(chain.begin(), nxt);
                v = other_vertex(nxt, v);
                cur = nxt;
            }
        }
        for (std::size_t i = 0; i < chain.size(); ++i) {
            bool in_a = a.bits.test(chain[i]);
            bool alt = a.bits.test(chain[(i + 1) % chain.size()]);
            if (i + 1 < chain.size() || closed)
                if (in_a == alt)
                    throw std::logic_error("transition_graph: chain does not alternate");
        }
        if (closed && chain.size() % 2)
            throw std::logic_error("transition_graph: odd cycle");
        (closed ? g.cycles : g.paths).push_back(std::move(chain));
    }
    return g;
}

enum class SectorRelation { same, opposite };

namespace detail {

inline void require_hole_cut(const RubyLattice& lat, const StringSpec& cut) {
    if (!lat.hole) throw ConfigError("sector analysis requires a lattice with a hole");
    if (cut.kind != StringKind::Z || cut.closed)
        throw ConfigError("sector cut must be an open Z string");
    bool hole_end = cut.endpoint_faces[0] == kFaceHole || cut.endpoint_faces[1] == kFaceHole;
    bool outer_end = cut.endpoint_faces[0] == kFaceOuter || cut.endpoint_faces[1] == kFaceOuter;
    if (!hole_end || !outer_end)
        throw ConfigError("sector cut must join the hole to the outer boundary");
}

} // namespace detail

// Winding parity of the transition graph around the hole, read off as the
// number of symmetric-difference dimers crossing a fixed hole-to-boundary
// cut. Open transition paths would make the parity depend on the cut, so
// coverings that move monomers are rejected.
inline SectorRelation sector_relation(const RubyLattice& lat, const DimerCovering& a,
                                      const DimerCovering& b, const StringSpec& cut) {
    detail::require_hole_cut(lat, cut);
    if (a.bits.size() != lat.n_sites() || b.bits.size() != lat.n_sites())
        throw ConfigError("sector_relation: covering width does not match the lattice");
    Bitstring diff = a.bits ^ b.bits;
    for (std::size_t v = 0; v < lat.vertices.size(); ++v)
        if (diff.count_and(lat.star_mask(static_cast<int>(v))) % 2)
            throw ConfigError("sector_relation: coverings move a monomer; winding is undefined");
    Bitstring cut_mask(lat.n_sites());
    for (int s : cut.sites) cut_mask.set(s);
    return (diff.count_and(cut_mask) & 1) ? SectorRelation::opposite : SectorRelation::same;
}

// 2-coloring of the coverings relative to a reference. Every supplied cut
// must induce the same split, and the cut parity must be constant inside each
// sector and opposite between them; a violation is a hard failure.
inline std::vector<int> classify_sectors(const RubyLattice& lat,
                                         const std::vector<DimerCovering>& coverings,
                                         std::size_t reference,
                                         const std::vector<StringSpec>& cuts) {
    if (reference >= coverings.size())
        throw ConfigError("classify_sectors: reference index outside the covering list");
    if (cuts.empty()) throw ConfigError("classify_sectors: need at least one cut string");
    for (const auto& c : cuts) detail::require_hole_cut(lat, c);
    std::vector<int> labels(coverings.size(), 0);
    for (std::size_t i = 0; i < coverings.size(); ++i)
        labels[i] = sector_relation(lat, coverings[reference], coverings[i], cuts[0]) ==
                            SectorRelation::same
                        ? 0
                        : 1;
    for (const auto& cut : cuts) {
        Bitstring cut_mask(lat.n_sites());
        for (int s : cut.sites) cut_mask.set(s);
        int par[2] = {0, 0};  // 0 unseen, else +-1
        for (std::size_t i = 0; i < coverings.size(); ++i) {
            int p = (coverings[i].bits.count_and(cut_mask) & 1) ? -1 : 1;
            int& slot = par[labels[i]];
            if (slot == 0) slot = p;
            else if (slot != p)
                throw std::logic_error("classify_sectors: cut parity not constant inside sector " +
                                       std::to_string(labels[i]) + " for cut " + cut.label);
        }
        if (par[0] != 0 && par[0] == par[1])
            throw std::logic_error("classify_sectors: sectors share the same parity on cut " +
                                   cut.label);
    }
    return labels;
}

} // namespace rydberg
