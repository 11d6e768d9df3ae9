#pragma once

// String operators on the ruby lattice.
//
// Z strings are sets of atoms crossed by a dual-lattice curve; their operator
// is diag prod_i (1 - 2 n_i). X strings are walks on the triangle graph: a
// step passes through one triangle, entering at one corner vertex and leaving
// at another, and acts on the atom between those corners. Closed Z loops are
// recorded together with the kagome vertices they enclose, closed X loops
// with the hexagonal faces they enclose.

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rydberg/lattice.hpp"

namespace rydberg {

enum class StringKind { Z, X };

constexpr int kFaceNone = -1;
constexpr int kFaceHole = -2;
constexpr int kFaceOuter = -3;

struct XStep {
    int triangle = -1;
    int site = -1;
    int v_in = -1, v_out = -1;
};

struct StringSpec {
    StringKind kind = StringKind::Z;
    bool closed = true;
    std::string label;
    std::string template_name;
    std::vector<int> sites;          // Z: crossed atoms; X: step atoms in walk order
    std::vector<XStep> steps;        // X only
    std::vector<int> region;         // closed Z: enclosed vertices; closed X: enclosed hexagons
    std::array<int, 2> endpoint_verts{-1, -1};     // open X
    std::array<int, 2> endpoint_faces{kFaceNone, kFaceNone};  // open Z: hexagon id, kFaceHole or kFaceOuter
    std::string closure_label;       // open strings: label of the paired closed loop
    int min_layer = 0;

    int area() const { return closed ? static_cast<int>(region.size()) : 0; }
    int perimeter() const {
        return kind == StringKind::X ? static_cast<int>(steps.size()) : static_cast<int>(sites.size());
    }
};

// Template-space derivations. These work on cell-relative references so the
// combinatorics are independent of lattice size and wrapping; instantiation
// resolves them to concrete ids.
namespace stringgeo {

using cellref::HRef;
using cellref::SRef;
using cellref::TRef;
using cellref::VRef;

struct AbsXStep {
    TRef tri;
    int edge = 0;
    VRef v_in, v_out;
};

inline std::array<HRef, 2> faces_of_vertex(const VRef& v) { return cellref::vertex_hexes(v); }

inline std::vector<VRef> ring_union(const std::vector<HRef>& region) {
    std::vector<VRef> out;
    for (const auto& h : region)
        for (const auto& v : cellref::hex_ring_verts(h)) out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Atoms with exactly one endpoint in the vertex set, ordered by angle about
// the centroid so arcs can be cut out of the result.
inline std::vector<SRef> z_sites_from_verts(const std::vector<VRef>& verts) {
    std::set<VRef> vs(verts.begin(), verts.end());
    std::set<SRef> crossed;
    for (const auto& v : verts)
        for (const auto& s : cellref::vertex_sites(v)) {
            auto [a, b] = cellref::site_endpoints(s);
            if (vs.count(a) + vs.count(b) == 1) crossed.insert(s);
        }
    Vec2 centroid{0, 0};
    for (const auto& v : verts) centroid = centroid + cellref::vertex_pos(v);
    centroid = centroid * (1.0 / static_cast<double>(verts.size()));
    std::vector<SRef> out(crossed.begin(), crossed.end());
    std::stable_sort(out.begin(), out.end(), [&](const SRef& a, const SRef& b) {
        Vec2 pa = cellref::site_pos(a) - centroid;
        Vec2 pb = cellref::site_pos(b) - centroid;
        return std::atan2(pa.y, pa.x) < std::atan2(pb.y, pb.x);
    });
    return out;
}

// Boundary walk of a set of hexagonal faces. Returns steps in cyclic order;
// throws if the region boundary is not a single simple loop.
inline std::vector<AbsXStep> x_walk_from_hexes(const std::vector<HRef>& region) {
    std::set<HRef> rs(region.begin(), region.end());
    std::set<VRef> bverts;
    for (const auto& h : region)
        for (const auto& v : cellref::hex_ring_verts(h)) {
            auto fs = faces_of_vertex(v);
            if (static_cast<int>(rs.count(fs[0])) + static_cast<int>(rs.count(fs[1])) == 1)
                bverts.insert(v);
        }
    if (bverts.empty()) throw ConfigError("x_walk: region has no boundary");

    std::map<TRef, std::vector<VRef>> by_tri;
    for (const auto& v : bverts)
        for (const auto& t : cellref::vertex_tris(v)) by_tri[t].push_back(v);
    for (auto& [t, vs] : by_tri)
        if (vs.size() != 1 && vs.size() != 2)
            throw ConfigError("x_walk: region boundary is pinched");
    for (auto& [t, vs] : by_tri)
        if (vs.size() == 1) throw ConfigError("x_walk: region boundary is not closed");

    std::vector<AbsXStep> walk;
    VRef start = *bverts.begin();
    VRef cur = start;
    TRef cur_tri = cellref::vertex_tris(start)[0];
    do {
        auto tris = cellref::vertex_tris(cur);
        TRef next_tri = (tris[0] == cur_tri) ? tris[1] : tris[0];
        auto& pair = by_tri.at(next_tri);
        VRef next = (pair[0] == cur) ? pair[1] : pair[0];
        auto corners = cellref::tri_corners(next_tri);
        int edge = -1;
        for (int k = 0; k < 3; ++k) {
            const VRef& a = corners[k];
            const VRef& b = corners[(k + 1) % 3];
            if ((a == cur && b == next) || (a == next && b == cur)) edge = k;
        }
        if (edge < 0) throw ConfigError("x_walk: walk step has no shared edge");
        AbsXStep st;
        st.tri = next_tri;
        st.edge = edge;
        st.v_in = cur;
        st.v_out = next;
        walk.push_back(st);
        cur = next;
        cur_tri = next_tri;
    } while (!(cur == start));
    if (walk.size() != bverts.size()) throw ConfigError("x_walk: region boundary is disconnected");
    return walk;
}

// Shared ring vertex of two adjacent hexagons.
inline VRef shared_vertex(const HRef& a, const HRef& b) {
    auto ra = cellref::hex_ring_verts(a);
    auto rb = cellref::hex_ring_verts(b);
    for (const auto& va : ra)
        for (const auto& vb : rb)
            if (va == vb) return va;
    throw ConfigError("zpath: hexagons are not adjacent");
}

// Open dual path through a sequence of hexagonal faces. via_up[i] picks which
// of the two triangles at the shared vertex carries the i-th crossing.
inline std::vector<SRef> z_sites_from_hex_path(const std::vector<HRef>& hexes,
                                               const std::vector<bool>& via_up) {
    if (hexes.size() < 2) throw ConfigError("zpath: need at least two faces");
    if (via_up.size() != hexes.size() - 1) throw ConfigError("zpath: one via per hop");
    std::vector<SRef> out;
    for (std::size_t i = 0; i + 1 < hexes.size(); ++i) {
        VRef v = shared_vertex(hexes[i], hexes[i + 1]);
        auto tris = cellref::vertex_tris(v);
        TRef t = via_up[i] ? tris[0] : tris[1];
        int e_in = -1, e_out = -1;
        for (int k = 0; k < 3; ++k) {
            if (cellref::tri_hex(t, k) == hexes[i]) e_in = k;
            if (cellref::tri_hex(t, k) == hexes[i + 1]) e_out = k;
        }
        if (e_in < 0 || e_out < 0) throw ConfigError("zpath: chosen triangle does not border both faces");
        auto ss = cellref::tri_sites(t);
        out.push_back(ss[e_in]);
        out.push_back(ss[e_out]);
    }
    return out;
}

// The three faces merged into the hole when a triangle is removed.
inline std::array<HRef, 3> hole_faces(const HoleSpec& hole) {
    TRef t{hole.up, hole.row, hole.col};
    return {cellref::tri_hex(t, 0), cellref::tri_hex(t, 1), cellref::tri_hex(t, 2)};
}

} // namespace stringgeo

// Z string dual to an X string: the two other atoms of each crossed triangle,
// entry side first. Errors on Z input.
inline StringSpec dual_string(const RubyLattice& lat, const StringSpec& s) {
    if (s.kind != StringKind::X) throw ConfigError("dual_string: input must be an X string");
    StringSpec d;
    d.kind = StringKind::Z;
    d.closed = s.closed;
    d.label = s.label + ".dual";
    d.template_name = s.template_name;
    d.min_layer = s.min_layer;
    for (const auto& st : s.steps) {
        const Triangle& t = lat.triangles[st.triangle];
        int e = -1;
        for (int k = 0; k < 3; ++k)
            if (t.sites[k] == st.site) e = k;
        if (e < 0) throw ConfigError("dual_string: step site not on its triangle");
        auto other_at = [&](int v) {
            // the triangle edge containing corner v, other than edge e
            if (t.verts[e] == v) return t.sites[(e + 2) % 3];
            if (t.verts[(e + 1) % 3] == v) return t.sites[(e + 1) % 3];
            throw ConfigError("dual_string: step vertex not on its triangle");
        };
        d.sites.push_back(other_at(st.v_in));
        d.sites.push_back(other_at(st.v_out));
    }
    if (s.closed) {
        std::set<int> verts;
        for (int h : s.region)
            for (int v : lat.hexagons[h].ring_verts) verts.insert(v);
        d.region.assign(verts.begin(), verts.end());
    }
    return d;
}

// Apply an X string to an occupation pattern in place. Returns the sign
// (+1/-1) accumulated from empty <-> occupied toggles on step atoms. The
// pattern must respect the intra-triangle blockade.
inline int apply_x_string(const RubyLattice& lat, const std::vector<XStep>& steps, Bitstring& state) {
    int sign = 1;
    for (const auto& st : steps) {
        const Triangle& t = lat.triangles[st.triangle];
        int occ = -1;
        int n_occ = 0;
        for (int k = 0; k < 3; ++k)
            if (state.test(t.sites[k])) {
                occ = t.sites[k];
                ++n_occ;
            }
        if (n_occ > 1) throw std::invalid_argument("apply_x_string: pattern violates triangle blockade");
        if (n_occ == 0) {
            state.set(st.site);
            sign = -sign;
        } else if (occ == st.site) {
            state.reset(st.site);
            sign = -sign;
        } else {
            // move the occupied atom to the third edge
            int third = -1;
            for (int k = 0; k < 3; ++k)
                if (t.sites[k] != st.site && t.sites[k] != occ) third = t.sites[k];
            state.reset(occ);
            state.set(third);
        }
    }
    return sign;
}

// Convenience runtime constructions (refs taken from stored cell coordinates;
// on a torus, regions that straddle the wrap seam should instead go through
// the template path, which works in unwrapped offsets).

inline StringSpec z_loop_from_vertices(const RubyLattice& lat, const std::vector<int>& verts,
                                       const std::string& label = "z_loop") {
    std::vector<stringgeo::VRef> refs;
    for (int v : verts) {
        const auto& vi = lat.vertices[v];
        if (!vi.full()) throw ConfigError("z_loop_from_vertices: enclosed vertex lacks full coordination");
        refs.push_back({vi.type, vi.row, vi.col});
    }
    auto sref = stringgeo::z_sites_from_verts(refs);
    StringSpec s;
    s.kind = StringKind::Z;
    s.closed = true;
    s.label = label;
    s.region = verts;
    std::sort(s.region.begin(), s.region.end());
    for (const auto& r : sref) {
        int id = lat.site_id(r);
        if (id < 0) throw ConfigError("z_loop_from_vertices: crossed atom missing from lattice");
        s.sites.push_back(id);
    }
    return s;
}

inline StringSpec x_loop_from_hexagons(const RubyLattice& lat, const std::vector<int>& hexes,
                                       const std::string& label = "x_loop") {
    std::vector<stringgeo::HRef> refs;
    for (int h : hexes) refs.push_back({lat.hexagons[h].row, lat.hexagons[h].col});
    auto walk = stringgeo::x_walk_from_hexes(refs);
    StringSpec s;
    s.kind = StringKind::X;
    s.closed = true;
    s.label = label;
    s.region = hexes;
    std::sort(s.region.begin(), s.region.end());
    for (const auto& st : walk) {
        XStep rt;
        rt.triangle = lat.tri_id(st.tri);
        rt.site = lat.site_id(cellref::tri_sites(st.tri)[st.edge]);
        rt.v_in = lat.vertex_id(st.v_in);
        rt.v_out = lat.vertex_id(st.v_out);
        if (rt.triangle < 0 || rt.site < 0 || rt.v_in < 0 || rt.v_out < 0)
            throw ConfigError("x_loop_from_hexagons: walk leaves the lattice");
        if (!lat.vertices[rt.v_in].full() || !lat.vertices[rt.v_out].full())
            throw ConfigError("x_loop_from_hexagons: walk vertex lacks full coordination");
        s.steps.push_back(rt);
        s.sites.push_back(rt.site);
    }
    return s;
}

} // namespace rydberg
