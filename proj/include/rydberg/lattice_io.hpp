#pragma once

// Versioned JSON export/import of the lattice geometry. The document carries
// the build parameters plus the full derived tables; import rebuilds from the
// parameters and cross-checks every table, so a tampered or stale file fails
// loudly instead of silently shifting site ids.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/version.hpp"

namespace rydberg {

// Sites whose star touches the hole rim.
inline std::vector<int> inner_boundary_sites(const RubyLattice& lat) {
    std::vector<int> out;
    for (int s = 0; s < lat.n_sites(); ++s) {
        const Site& st = lat.sites[static_cast<std::size_t>(s)];
        if (lat.vertices[static_cast<std::size_t>(st.v0)].hole_adjacent ||
            lat.vertices[static_cast<std::size_t>(st.v1)].hole_adjacent)
            out.push_back(s);
    }
    return out;
}

inline nlohmann::json lattice_to_json(const RubyLattice& lat, const std::string& config_hash = "") {
    nlohmann::json j;
    j["schema_version"] = lattice_schema_version;
    j["tool_version"] = std::string(version_string);
    if (!config_hash.empty()) j["config"] = config_hash;
    j["rows"] = lat.rows;
    j["cols"] = lat.cols;
    j["boundary"] = to_string(lat.boundary);
    if (lat.hole)
        j["hole"] = {{"row", lat.hole->row}, {"col", lat.hole->col}, {"up", lat.hole->up}};
    else
        j["hole"] = nullptr;
    j["bulk_depth"] = lat.bulk_depth;
    j["counts"] = {{"sites", lat.sites.size()},
                   {"triangles", lat.triangles.size()},
                   {"vertices", lat.vertices.size()},
                   {"hexagons", lat.hexagons.size()}};

    j["site_columns"] = {"x", "y", "cell_row", "cell_col", "slot", "triangle", "v0", "v1"};
    auto& sites = j["sites"] = nlohmann::json::array();
    for (const Site& s : lat.sites)
        sites.push_back({s.pos.x, s.pos.y, s.cell_row, s.cell_col, s.slot, s.triangle, s.v0, s.v1});

    j["triangle_columns"] = {"up", "cell_row", "cell_col", "layer", "sites", "verts"};
    auto& tris = j["triangles"] = nlohmann::json::array();
    for (const Triangle& t : lat.triangles)
        tris.push_back({t.up, t.cell_row, t.cell_col, t.layer,
                        {t.sites[0], t.sites[1], t.sites[2]},
                        {t.verts[0], t.verts[1], t.verts[2]}});

    j["vertex_columns"] = {"x",    "y",           "type",           "row",  "col",
                           "tris", "sites", "hole_adjacent", "outer_boundary"};
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (const VertexInfo& v : lat.vertices)
        verts.push_back(
            {v.pos.x, v.pos.y, v.type, v.row, v.col, v.tris, v.sites, v.hole_adjacent, v.outer_boundary});

    j["hexagon_columns"] = {"row", "col", "cx", "cy", "ring_sites", "ring_verts", "ring_tris"};
    auto& hexes = j["hexagons"] = nlohmann::json::array();
    for (const Hexagon& h : lat.hexagons) {
        nlohmann::json rs = nlohmann::json::array(), rv = nlohmann::json::array(),
                       rt = nlohmann::json::array();
        for (int k = 0; k < 6; ++k) {
            rs.push_back(h.ring_sites[static_cast<std::size_t>(k)]);
            rv.push_back(h.ring_verts[static_cast<std::size_t>(k)]);
            rt.push_back(h.ring_tris[static_cast<std::size_t>(k)]);
        }
        hexes.push_back({h.row, h.col, h.center.x, h.center.y, rs, rv, rt});
    }

    j["inner_boundary_sites"] = inner_boundary_sites(lat);
    return j;
}

inline void write_lattice(std::ostream& os, const RubyLattice& lat,
                          const std::string& config_hash = "") {
    os << lattice_to_json(lat, config_hash).dump(1) << "\n";
}

namespace detail {

inline void check_lattice_field(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("lattice file does not match its build parameters: " + what);
}

} // namespace detail

// Rebuild from the stored parameters and verify the stored tables agree.
inline RubyLattice lattice_from_json(const nlohmann::json& j) {
    int schema;
    try {
        schema = j.at("schema_version").get<int>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("lattice file: missing schema_version");
    }
    if (schema != lattice_schema_version)
        throw ConfigError("lattice file: schema_version " + std::to_string(schema) +
                          " unsupported (expected " + std::to_string(lattice_schema_version) + ")");
    RubyLattice lat;
    try {
        std::string b = j.at("boundary").get<std::string>();
        if (b != "open" && b != "torus") throw ConfigError("lattice file: bad boundary '" + b + "'");
        std::optional<HoleSpec> hole;
        if (!j.at("hole").is_null())
            hole = HoleSpec{j.at("hole").at("row").get<int>(), j.at("hole").at("col").get<int>(),
                            j.at("hole").at("up").get<bool>()};
        lat = build_ruby_lattice(j.at("rows").get<int>(), j.at("cols").get<int>(),
                                 b == "open" ? Boundary::open : Boundary::torus, hole,
                                 j.at("bulk_depth").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("lattice file: ") + e.what());
    }
    nlohmann::json expect = lattice_to_json(lat);
    for (const char* key : {"counts", "sites", "triangles", "vertices", "hexagons",
                            "inner_boundary_sites"}) {
        if (!j.contains(key)) throw ConfigError(std::string("lattice file: missing ") + key);
        detail::check_lattice_field(j.at(key) == expect.at(key), key);
    }
    return lat;
}

inline RubyLattice read_lattice(std::istream& is) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("lattice file: ") + e.what());
    }
    return lattice_from_json(j);
}

} // namespace rydberg
