#pragma once

// Ruby-lattice geometry for Rydberg arrays.
//
// Atoms sit on the links of a kagome lattice (equivalently, a ruby lattice
// with rho = sqrt(3)). Lengths are in units of the nearest-neighbour atom
// spacing a, so the kagome edge length is 2 and triangle centers are 2*sqrt(3)
// apart. Each unit cell holds one up and one down triangle, 6 atoms total.
//
// Cell (r, c) has origin c*A1 + r*A2 with A1 = (4, 0), A2 = (2, 2*sqrt(3)).
// Slots 0..2 are the up-triangle edges, 3..5 the down-triangle edges; edge k
// of a triangle connects its corners k and (k+1) mod 3. Site ids run
// row-major over cells, 6 per cell, minus any hole.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rydberg/bitset.hpp"
#include "rydberg/errors.hpp"

namespace rydberg {

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

enum class Boundary { open, torus };

inline const char* to_string(Boundary b) { return b == Boundary::open ? "open" : "torus"; }

// Cell of the removed triangle; up selects which of the cell's two triangles.
struct HoleSpec {
    int row = 0, col = 0;
    bool up = true;
};

inline HoleSpec central_hole(int rows, int cols) { return HoleSpec{rows / 2, cols / 2, true}; }

// Infinite-lattice incidence tables, expressed with cell-relative references.
// Everything else (lattice construction, loop templates, string walks) is
// derived from these.
namespace cellref {

constexpr double root3 = 1.7320508075688772;

struct VRef { int type = 0, r = 0, c = 0; };  // type: 0 = A, 1 = B, 2 = C
struct TRef { bool up = true; int r = 0, c = 0; };
struct HRef { int r = 0, c = 0; };
struct SRef { int r = 0, c = 0, slot = 0; };

inline bool operator==(const VRef& a, const VRef& b) { return a.type == b.type && a.r == b.r && a.c == b.c; }
inline bool operator<(const VRef& a, const VRef& b) {
    return std::tie(a.type, a.r, a.c) < std::tie(b.type, b.r, b.c);
}
inline bool operator==(const SRef& a, const SRef& b) { return a.r == b.r && a.c == b.c && a.slot == b.slot; }
inline bool operator<(const SRef& a, const SRef& b) {
    return std::tie(a.r, a.c, a.slot) < std::tie(b.r, b.c, b.slot);
}
inline bool operator==(const HRef& a, const HRef& b) { return a.r == b.r && a.c == b.c; }
inline bool operator<(const HRef& a, const HRef& b) { return std::tie(a.r, a.c) < std::tie(b.r, b.c); }
inline bool operator==(const TRef& a, const TRef& b) { return a.up == b.up && a.r == b.r && a.c == b.c; }
inline bool operator<(const TRef& a, const TRef& b) {
    return std::tie(a.r, a.c, a.up) < std::tie(b.r, b.c, b.up);
}

inline Vec2 cell_origin(int r, int c) {
    return {4.0 * c + 2.0 * r, 2.0 * root3 * r};
}

inline Vec2 vertex_pos(const VRef& v) {
    static const Vec2 off[3] = {{0, 0}, {2, 0}, {1, root3}};
    return cell_origin(v.r, v.c) + off[v.type];
}

inline Vec2 site_pos(const SRef& s) {
    static const Vec2 off[6] = {{1, 0},   {1.5, root3 / 2}, {0.5, root3 / 2},
                                {3, 0},   {3.5, -root3 / 2}, {2.5, -root3 / 2}};
    return cell_origin(s.r, s.c) + off[s.slot];
}

inline Vec2 hex_center(const HRef& h) {
    return cell_origin(h.r, h.c) + Vec2{3, root3};
}

inline TRef tri_of_site(const SRef& s) { return {s.slot < 3, s.r, s.c}; }

inline std::array<SRef, 3> tri_sites(const TRef& t) {
    int base = t.up ? 0 : 3;
    return {SRef{t.r, t.c, base}, SRef{t.r, t.c, base + 1}, SRef{t.r, t.c, base + 2}};
}

// Corners in edge order: edge k connects corners k and (k+1) mod 3.
inline std::array<VRef, 3> tri_corners(const TRef& t) {
    if (t.up) return {VRef{0, t.r, t.c}, VRef{1, t.r, t.c}, VRef{2, t.r, t.c}};
    return {VRef{1, t.r, t.c}, VRef{0, t.r, t.c + 1}, VRef{2, t.r - 1, t.c + 1}};
}

inline std::pair<VRef, VRef> site_endpoints(const SRef& s) {
    auto t = tri_of_site(s);
    auto co = tri_corners(t);
    int k = s.slot % 3;
    return {co[k], co[(k + 1) % 3]};
}

inline std::array<TRef, 2> vertex_tris(const VRef& v) {
    switch (v.type) {
        case 0: return {TRef{true, v.r, v.c}, TRef{false, v.r, v.c - 1}};
        case 1: return {TRef{true, v.r, v.c}, TRef{false, v.r, v.c}};
        default: return {TRef{true, v.r, v.c}, TRef{false, v.r + 1, v.c - 1}};
    }
}

inline std::array<SRef, 4> vertex_sites(const VRef& v) {
    switch (v.type) {
        case 0: return {SRef{v.r, v.c, 0}, SRef{v.r, v.c, 2}, SRef{v.r, v.c - 1, 3}, SRef{v.r, v.c - 1, 4}};
        case 1: return {SRef{v.r, v.c, 0}, SRef{v.r, v.c, 1}, SRef{v.r, v.c, 3}, SRef{v.r, v.c, 5}};
        default: return {SRef{v.r, v.c, 1}, SRef{v.r, v.c, 2}, SRef{v.r + 1, v.c - 1, 4}, SRef{v.r + 1, v.c - 1, 5}};
    }
}

// The two hexagonal faces meeting at a kagome vertex.
inline std::array<HRef, 2> vertex_hexes(const VRef& v) {
    switch (v.type) {
        case 0: return {HRef{v.r, v.c - 1}, HRef{v.r - 1, v.c}};
        case 1: return {HRef{v.r, v.c}, HRef{v.r - 1, v.c}};
        default: return {HRef{v.r, v.c}, HRef{v.r, v.c - 1}};
    }
}

inline std::array<VRef, 6> hex_ring_verts(const HRef& h) {
    return {VRef{2, h.r, h.c},     VRef{1, h.r, h.c},     VRef{0, h.r, h.c + 1},
            VRef{2, h.r, h.c + 1}, VRef{1, h.r + 1, h.c}, VRef{0, h.r + 1, h.c}};
}

// Ring triangle i sits between ring vertices i and i+1 (cyclic).
inline std::array<TRef, 6> hex_ring_tris(const HRef& h) {
    return {TRef{true, h.r, h.c},      TRef{false, h.r, h.c},     TRef{true, h.r, h.c + 1},
            TRef{false, h.r + 1, h.c}, TRef{true, h.r + 1, h.c},  TRef{false, h.r + 1, h.c - 1}};
}

inline std::array<SRef, 6> hex_ring_sites(const HRef& h) {
    return {SRef{h.r, h.c, 1},     SRef{h.r, h.c, 3},     SRef{h.r, h.c + 1, 2},
            SRef{h.r + 1, h.c, 5}, SRef{h.r + 1, h.c, 0}, SRef{h.r + 1, h.c - 1, 4}};
}

// Hexagon on the far side of edge k of a triangle.
inline HRef tri_hex(const TRef& t, int k) {
    if (t.up) {
        switch (k) {
            case 0: return {t.r - 1, t.c};
            case 1: return {t.r, t.c};
            default: return {t.r, t.c - 1};
        }
    }
    switch (k) {
        case 0: return {t.r, t.c};
        case 1: return {t.r - 1, t.c + 1};
        default: return {t.r - 1, t.c};
    }
}

inline HRef site_hex(const SRef& s) { return tri_hex(tri_of_site(s), s.slot % 3); }

} // namespace cellref

struct Site {
    Vec2 pos;
    int cell_row = 0, cell_col = 0, slot = 0;
    int triangle = -1;
    int v0 = -1, v1 = -1;  // endpoint kagome vertices
};

struct Triangle {
    std::array<int, 3> sites{-1, -1, -1};
    std::array<int, 3> verts{-1, -1, -1};  // corner i and i+1 bound edge i
    bool up = true;
    int cell_row = 0, cell_col = 0;
    int layer = 0;  // BFS distance from the outer boundary
};

struct VertexInfo {
    Vec2 pos;
    int type = 0, row = 0, col = 0;
    std::vector<int> tris;
    std::vector<int> sites;
    bool hole_adjacent = false;
    bool outer_boundary = false;
    bool full() const { return tris.size() == 2; }
};

struct Hexagon {
    std::array<int, 6> ring_sites{};
    std::array<int, 6> ring_verts{};
    std::array<int, 6> ring_tris{};
    int row = 0, col = 0;
    Vec2 center;
};

constexpr int kNoBoundaryLayer = 1 << 28;

class RubyLattice {
public:
    int rows = 0, cols = 0;
    Boundary boundary = Boundary::torus;
    std::optional<HoleSpec> hole;
    int bulk_depth = 3;

    std::vector<Site> sites;
    std::vector<Triangle> triangles;
    std::vector<VertexInfo> vertices;
    std::vector<Hexagon> hexagons;

    int n_sites() const { return static_cast<int>(sites.size()); }

    bool wrap(int& r, int& c) const {
        if (boundary == Boundary::torus) {
            r = ((r % rows) + rows) % rows;
            c = ((c % cols) + cols) % cols;
            return true;
        }
        return r >= 0 && r < rows && c >= 0 && c < cols;
    }

    int site_id(cellref::SRef s) const {
        if (!wrap(s.r, s.c)) return -1;
        return site_grid_[(static_cast<std::size_t>(s.r) * cols + s.c) * 6 + s.slot];
    }

    int tri_id(cellref::TRef t) const {
        if (!wrap(t.r, t.c)) return -1;
        return tri_grid_[(static_cast<std::size_t>(t.r) * cols + t.c) * 2 + (t.up ? 0 : 1)];
    }

    int vertex_id(cellref::VRef v) const {
        if (boundary == Boundary::torus) {
            v.r = ((v.r % rows) + rows) % rows;
            v.c = ((v.c % cols) + cols) % cols;
        }
        auto it = vertex_ids_.find(std::make_tuple(v.type, v.r, v.c));
        return it == vertex_ids_.end() ? -1 : it->second;
    }

    int hex_id(cellref::HRef h) const {
        if (boundary == Boundary::torus) {
            h.r = ((h.r % rows) + rows) % rows;
            h.c = ((h.c % cols) + cols) % cols;
        }
        auto it = hex_ids_.find(std::make_pair(h.r, h.c));
        return it == hex_ids_.end() ? -1 : it->second;
    }

    // Displacement from site j to site i, minimised over torus images.
    Vec2 displacement(int i, int j) const {
        Vec2 d = sites[i].pos - sites[j].pos;
        if (boundary != Boundary::torus) return d;
        Vec2 l1 = cellref::cell_origin(0, cols);
        Vec2 l2 = cellref::cell_origin(rows, 0);
        Vec2 best = d;
        for (int m = -2; m <= 2; ++m)
            for (int n = -2; n <= 2; ++n) {
                Vec2 cand = d + l1 * m + l2 * n;
                if (cand.norm() < best.norm()) best = cand;
            }
        return best;
    }

    double distance(int i, int j) const { return displacement(i, j).norm(); }

    Bitstring site_mask(const std::vector<int>& site_list) const {
        Bitstring m(n_sites());
        for (int s : site_list) m.set(s);
        return m;
    }

    // Star of a vertex: all incident sites as a mask.
    const Bitstring& star_mask(int v) const { return star_masks_[v]; }

    int removed_triangle_owner_cell() const { return hole ? hole->row * cols + hole->col : -1; }

    friend RubyLattice build_ruby_lattice(int rows, int cols, Boundary boundary,
                                          std::optional<HoleSpec> hole, int bulk_depth);

private:
    std::vector<int> site_grid_;  // (cell, slot) -> site id or -1
    std::vector<int> tri_grid_;   // (cell, up/down) -> triangle id or -1
    std::map<std::tuple<int, int, int>, int> vertex_ids_;
    std::map<std::pair<int, int>, int> hex_ids_;
    std::vector<Bitstring> star_masks_;
};

inline RubyLattice build_ruby_lattice(int rows, int cols, Boundary boundary,
                                      std::optional<HoleSpec> hole = std::nullopt,
                                      int bulk_depth = 3) {
    using namespace cellref;
    if (rows < 1 || cols < 1) throw ConfigError("lattice: rows and cols must be positive");
    if (bulk_depth < 0) throw ConfigError("lattice: bulk_depth must be nonnegative");
    if (hole) {
        if (hole->row < 0 || hole->row >= rows || hole->col < 0 || hole->col >= cols)
            throw ConfigError("lattice: hole cell outside patch");
    }

    RubyLattice lat;
    lat.rows = rows;
    lat.cols = cols;
    lat.boundary = boundary;
    lat.hole = hole;
    lat.bulk_depth = bulk_depth;
    lat.site_grid_.assign(static_cast<std::size_t>(rows) * cols * 6, -1);
    lat.tri_grid_.assign(static_cast<std::size_t>(rows) * cols * 2, -1);

    auto vertex_of = [&](VRef v) {
        if (boundary == Boundary::torus) {
            v.r = ((v.r % rows) + rows) % rows;
            v.c = ((v.c % cols) + cols) % cols;
        }
        auto key = std::make_tuple(v.type, v.r, v.c);
        auto it = lat.vertex_ids_.find(key);
        if (it != lat.vertex_ids_.end()) return it->second;
        int id = static_cast<int>(lat.vertices.size());
        lat.vertex_ids_.emplace(key, id);
        VertexInfo info;
        info.pos = vertex_pos(v);
        info.type = v.type;
        info.row = v.r;
        info.col = v.c;
        lat.vertices.push_back(std::move(info));
        return id;
    };

    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (int half = 0; half < 2; ++half) {
                bool up = half == 0;
                if (hole && hole->row == r && hole->col == c && hole->up == up) {
                    // Atoms removed; corners stay and are marked below.
                    continue;
                }
                TRef t{up, r, c};
                Triangle tri;
                tri.up = up;
                tri.cell_row = r;
                tri.cell_col = c;
                auto corners = tri_corners(t);
                for (int k = 0; k < 3; ++k) tri.verts[k] = vertex_of(corners[k]);
                int tri_id = static_cast<int>(lat.triangles.size());
                for (int k = 0; k < 3; ++k) {
                    SRef sref{r, c, (up ? 0 : 3) + k};
                    Site s;
                    s.pos = site_pos(sref);
                    s.cell_row = r;
                    s.cell_col = c;
                    s.slot = sref.slot;
                    s.triangle = tri_id;
                    s.v0 = tri.verts[k];
                    s.v1 = tri.verts[(k + 1) % 3];
                    int sid = static_cast<int>(lat.sites.size());
                    lat.site_grid_[(static_cast<std::size_t>(r) * cols + c) * 6 + sref.slot] = sid;
                    tri.sites[k] = sid;
                    lat.sites.push_back(std::move(s));
                }
                lat.tri_grid_[(static_cast<std::size_t>(r) * cols + c) * 2 + half] = tri_id;
                lat.triangles.push_back(std::move(tri));
            }

    for (std::size_t t = 0; t < lat.triangles.size(); ++t)
        for (int k = 0; k < 3; ++k) {
            auto& vi = lat.vertices[lat.triangles[t].verts[k]];
            vi.tris.push_back(static_cast<int>(t));
            vi.sites.push_back(lat.triangles[t].sites[k]);
            vi.sites.push_back(lat.triangles[t].sites[(k + 2) % 3]);
        }

    if (hole) {
        TRef t{hole->up, hole->row, hole->col};
        for (const auto& corner : tri_corners(t)) {
            int v = lat.vertex_id(corner);
            if (v >= 0) lat.vertices[v].hole_adjacent = true;
        }
    }

    for (auto& v : lat.vertices)
        v.outer_boundary = !v.full() && !v.hole_adjacent;

    // Hexagons exist where all six ring triangles do.
    for (int r = -1; r <= rows; ++r)
        for (int c = -1; c <= cols; ++c) {
            if (boundary == Boundary::torus && (r < 0 || r >= rows || c < 0 || c >= cols)) continue;
            HRef h{r, c};
            Hexagon hex;
            bool ok = true;
            auto tris = hex_ring_tris(h);
            auto verts = hex_ring_verts(h);
            auto ring = hex_ring_sites(h);
            for (int k = 0; k < 6 && ok; ++k) {
                hex.ring_tris[k] = lat.tri_id(tris[k]);
                hex.ring_verts[k] = lat.vertex_id(verts[k]);
                hex.ring_sites[k] = lat.site_id(ring[k]);
                ok = hex.ring_tris[k] >= 0 && hex.ring_verts[k] >= 0 && hex.ring_sites[k] >= 0;
            }
            if (!ok) continue;
            hex.row = r;
            hex.col = c;
            hex.center = hex_center(h);
            lat.hex_ids_.emplace(std::make_pair(r, c), static_cast<int>(lat.hexagons.size()));
            lat.hexagons.push_back(std::move(hex));
        }

    // Triangle layers: BFS from triangles touching the outer boundary.
    if (boundary == Boundary::torus && !hole) {
        for (auto& t : lat.triangles) t.layer = kNoBoundaryLayer;
    } else {
        // Layers measure distance from the outer patch edge; the hole does not
        // count as boundary (loops near it must survive bulk filtering). A
        // holed torus has no outer edge, so there the hole seeds the BFS.
        std::vector<int> frontier;
        for (auto& t : lat.triangles) t.layer = -1;
        bool has_outer = false;
        for (auto& v : lat.vertices) has_outer = has_outer || v.outer_boundary;
        for (std::size_t t = 0; t < lat.triangles.size(); ++t)
            for (int v : lat.triangles[t].verts) {
                bool seed = has_outer ? lat.vertices[v].outer_boundary : lat.vertices[v].hole_adjacent;
                if (seed && lat.triangles[t].layer < 0) {
                    lat.triangles[t].layer = 0;
                    frontier.push_back(static_cast<int>(t));
                }
            }
        std::size_t head = 0;
        while (head < frontier.size()) {
            int t = frontier[head++];
            for (int v : lat.triangles[t].verts)
                for (int u : lat.vertices[v].tris)
                    if (lat.triangles[u].layer < 0) {
                        lat.triangles[u].layer = lat.triangles[t].layer + 1;
                        frontier.push_back(u);
                    }
        }
        for (auto& t : lat.triangles)
            if (t.layer < 0) t.layer = kNoBoundaryLayer;
    }

    lat.star_masks_.reserve(lat.vertices.size());
    for (auto& v : lat.vertices) lat.star_masks_.push_back(lat.site_mask(v.sites));

    return lat;
}

struct BlockadeGraph {
    double rb = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> nbrs;
    std::vector<Bitstring> mask;
};

// Sites within rb of each other, with a relative tolerance of 1e-9 so shells
// landing exactly on rb are included.
inline BlockadeGraph blockade_graph(const RubyLattice& lat, double rb) {
    if (rb <= 0) throw ConfigError("blockade_graph: rb must be positive");
    BlockadeGraph g;
    g.rb = rb;
    int n = lat.n_sites();
    g.nbrs.resize(n);
    g.mask.assign(n, Bitstring(n));
    double cutoff = rb * (1.0 + 1e-9);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (lat.distance(i, j) <= cutoff) {
                g.edges.emplace_back(i, j);
                g.nbrs[i].push_back(j);
                g.nbrs[j].push_back(i);
                g.mask[i].set(j);
                g.mask[j].set(i);
            }
    return g;
}

struct Interaction {
    int i = 0, j = 0;
    double v = 0;       // in units of omega: (rb / d)^6
    bool hard = false;  // same triangle, treated as a constraint instead
};

inline std::vector<Interaction> interaction_list(const RubyLattice& lat, double rb, double r_trunc) {
    if (rb <= 0 || r_trunc <= 0) throw ConfigError("interaction_list: radii must be positive");
    std::vector<Interaction> out;
    double cutoff = r_trunc * (1.0 + 1e-9);
    int n = lat.n_sites();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = lat.distance(i, j);
            if (d > cutoff) continue;
            Interaction e;
            e.i = i;
            e.j = j;
            e.v = std::pow(rb / d, 6);
            e.hard = lat.sites[i].triangle == lat.sites[j].triangle;
            out.push_back(e);
        }
    return out;
}

} // namespace rydberg
