#pragma once

// Loop templates are data, not code: small fixture files describe string
// shapes as regions or walks in cell-relative offsets, and enumeration stamps
// them across the lattice. See fixtures/loops/README.md for the format.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rydberg/strings.hpp"
#include "rydberg/version.hpp"

namespace rydberg {

struct BlockSpec {
    enum class Form { hexes, hexes_around_hole, verts, zpath, ray_east, ray_west, arc, sites };
    Form form = Form::hexes;
    std::vector<cellref::HRef> hexes;
    std::vector<bool> vias;          // zpath: one per hop, true = up triangle
    std::vector<cellref::VRef> verts;
    std::vector<cellref::SRef> sites;
    int arc_begin = 0, arc_end = 0;
    bool arc_half = false;
};

struct LoopTemplate {
    std::string name;
    StringKind kind = StringKind::Z;
    bool closed = true;
    bool anchor_hole = false;
    std::string closure;
    std::vector<BlockSpec> blocks;
};

struct TemplateSet {
    std::vector<LoopTemplate> templates;

    const LoopTemplate* find(const std::string& name) const {
        for (const auto& t : templates)
            if (t.name == name) return &t;
        return nullptr;
    }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
        if (tok[0] == '#') break;
        out.push_back(tok);
    }
    return out;
}

inline int parse_int(const std::string& tok, const std::string& where) {
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected integer, got '" + tok + "'");
    }
}

} // namespace detail

inline std::vector<LoopTemplate> parse_templates(std::istream& in, const std::string& source) {
    std::vector<LoopTemplate> out;
    LoopTemplate* cur = nullptr;
    BlockSpec* blk = nullptr;
    bool saw_format = false;
    std::string line;
    int lineno = 0;
    auto ctx = [&](const std::string& msg) {
        return ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = detail::tokenize(line);
        if (tok.empty()) continue;
        const std::string& key = tok[0];
        std::string where = source + ":" + std::to_string(lineno);
        if (key == "format") {
            if (tok.size() != 2 || detail::parse_int(tok[1], where) != template_format_version)
                throw ctx("unsupported template format version");
            saw_format = true;
            continue;
        }
        if (!saw_format) throw ctx("file must start with 'format 1'");
        if (key == "template") {
            if (tok.size() != 2) throw ctx("template needs a name");
            out.emplace_back();
            cur = &out.back();
            cur->name = tok[1];
            blk = nullptr;
            continue;
        }
        if (!cur) throw ctx("directive outside template");
        if (key == "kind") {
            if (tok.size() != 2 || (tok[1] != "Z" && tok[1] != "X")) throw ctx("kind must be Z or X");
            cur->kind = tok[1] == "Z" ? StringKind::Z : StringKind::X;
        } else if (key == "closed") {
            if (tok.size() != 2 || (tok[1] != "yes" && tok[1] != "no")) throw ctx("closed must be yes or no");
            cur->closed = tok[1] == "yes";
        } else if (key == "anchor") {
            if (tok.size() != 2 || (tok[1] != "cell" && tok[1] != "hole")) throw ctx("anchor must be cell or hole");
            cur->anchor_hole = tok[1] == "hole";
        } else if (key == "closure") {
            if (tok.size() != 2) throw ctx("closure needs a template name");
            cur->closure = tok[1];
        } else if (key == "block") {
            cur->blocks.emplace_back();
            blk = &cur->blocks.back();
        } else if (key == "end") {
            blk = nullptr;
        } else if (blk == nullptr) {
            throw ctx("unknown directive '" + key + "'");
        } else if (key == "hexes") {
            if (tok.size() == 2 && tok[1] == "around_hole") {
                blk->form = BlockSpec::Form::hexes_around_hole;
            } else {
                blk->form = BlockSpec::Form::hexes;
                if (tok.size() < 3 || (tok.size() - 1) % 2) throw ctx("hexes needs r c pairs");
                for (std::size_t i = 1; i + 1 < tok.size(); i += 2)
                    blk->hexes.push_back({detail::parse_int(tok[i], where), detail::parse_int(tok[i + 1], where)});
            }
        } else if (key == "verts") {
            blk->form = BlockSpec::Form::verts;
            if (tok.size() < 4 || (tok.size() - 1) % 3) throw ctx("verts needs type r c triples");
            for (std::size_t i = 1; i + 2 < tok.size(); i += 3) {
                int type;
                if (tok[i] == "A") type = 0;
                else if (tok[i] == "B") type = 1;
                else if (tok[i] == "C") type = 2;
                else throw ctx("vertex type must be A, B or C");
                blk->verts.push_back({type, detail::parse_int(tok[i + 1], where), detail::parse_int(tok[i + 2], where)});
            }
        } else if (key == "zpath") {
            blk->form = BlockSpec::Form::zpath;
            // r c (up|down r c)+
            if (tok.size() < 6) throw ctx("zpath needs at least two faces");
            std::size_t i = 1;
            blk->hexes.push_back({detail::parse_int(tok[i], where), detail::parse_int(tok[i + 1], where)});
            i += 2;
            while (i < tok.size()) {
                if (i + 2 >= tok.size()) throw ctx("zpath: trailing tokens");
                if (tok[i] == "up") blk->vias.push_back(true);
                else if (tok[i] == "down") blk->vias.push_back(false);
                else throw ctx("zpath: expected up or down");
                blk->hexes.push_back({detail::parse_int(tok[i + 1], where), detail::parse_int(tok[i + 2], where)});
                i += 3;
            }
        } else if (key == "ray") {
            if (tok.size() != 2 || (tok[1] != "east" && tok[1] != "west")) throw ctx("ray must be east or west");
            blk->form = tok[1] == "east" ? BlockSpec::Form::ray_east : BlockSpec::Form::ray_west;
        } else if (key == "arc") {
            blk->form = BlockSpec::Form::arc;
            if (tok.size() == 2 && tok[1] == "half") {
                blk->arc_half = true;
            } else if (tok.size() == 3) {
                blk->arc_begin = detail::parse_int(tok[1], where);
                blk->arc_end = detail::parse_int(tok[2], where);
            } else {
                throw ctx("arc needs 'half' or begin end");
            }
        } else if (key == "sites") {
            blk->form = BlockSpec::Form::sites;
            if (tok.size() < 4 || (tok.size() - 1) % 3) throw ctx("sites needs r c slot triples");
            for (std::size_t i = 1; i + 2 < tok.size(); i += 3) {
                int slot = detail::parse_int(tok[i + 2], where);
                if (slot < 0 || slot > 5) throw ctx("slot must be 0..5");
                blk->sites.push_back({detail::parse_int(tok[i], where), detail::parse_int(tok[i + 1], where), slot});
            }
        } else {
            throw ctx("unknown directive '" + key + "'");
        }
    }
    for (const auto& t : out) {
        if (t.blocks.empty()) throw ConfigError(source + ": template " + t.name + " has no blocks");
        if (!t.closed && t.closure.empty())
            for (const auto& b : t.blocks)
                if (b.form == BlockSpec::Form::arc)
                    throw ConfigError(source + ": template " + t.name + " has arcs but no closure");
    }
    return out;
}

inline TemplateSet load_template_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("template directory not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".loop") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    TemplateSet set;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw ConfigError("cannot read template file: " + f.string());
        auto ts = parse_templates(in, f.filename().string());
        for (auto& t : ts) {
            if (set.find(t.name)) throw ConfigError("duplicate template name: " + t.name);
            set.templates.push_back(std::move(t));
        }
    }
    return set;
}

struct LoopEnumOptions {
    int bulk_depth = -1;       // require min_layer >= this when >= 0
    bool include_open = true;
};

namespace detail {

struct AbstractInstance {
    bool valid = false;
    std::vector<cellref::SRef> sites;
    std::vector<stringgeo::AbsXStep> steps;
    std::vector<cellref::VRef> vregion;
    std::vector<cellref::HRef> hregion;
    bool hole_region = false;
    std::array<cellref::HRef, 2> endpoint_hexes{};
    bool has_endpoint_hexes = false;
    bool ray = false;
};

inline cellref::SRef shift(cellref::SRef s, int r, int c) { return {s.r + r, s.c + c, s.slot}; }
inline cellref::VRef shift(cellref::VRef v, int r, int c) { return {v.type, v.r + r, v.c + c}; }
inline cellref::HRef shift(cellref::HRef h, int r, int c) { return {h.r + r, h.c + c}; }

// Derivation in template space, before anchoring. Arcs are cut from the
// closure template's derived block.
inline AbstractInstance derive_block(const LoopTemplate& t, std::size_t bi, const TemplateSet& set,
                                     int depth = 0) {
    if (depth > 4) throw ConfigError("template " + t.name + ": closure chain too deep");
    const BlockSpec& b = t.blocks[bi];
    AbstractInstance a;
    switch (b.form) {
        case BlockSpec::Form::hexes:
            a.hregion = b.hexes;
            if (t.kind == StringKind::X) {
                a.steps = stringgeo::x_walk_from_hexes(b.hexes);
                for (const auto& st : a.steps) a.sites.push_back(cellref::tri_sites(st.tri)[st.edge]);
            } else {
                a.vregion = stringgeo::ring_union(b.hexes);
                a.sites = stringgeo::z_sites_from_verts(a.vregion);
            }
            break;
        case BlockSpec::Form::verts:
            if (t.kind != StringKind::Z) throw ConfigError("template " + t.name + ": verts blocks are Z only");
            a.vregion = b.verts;
            a.sites = stringgeo::z_sites_from_verts(b.verts);
            break;
        case BlockSpec::Form::zpath: {
            if (t.kind != StringKind::Z) throw ConfigError("template " + t.name + ": zpath blocks are Z only");
            a.sites = stringgeo::z_sites_from_hex_path(b.hexes, b.vias);
            a.endpoint_hexes = {b.hexes.front(), b.hexes.back()};
            a.has_endpoint_hexes = true;
            break;
        }
        case BlockSpec::Form::sites:
            a.sites = b.sites;
            break;
        case BlockSpec::Form::arc: {
            const LoopTemplate* closure = set.find(t.closure);
            if (!closure) throw ConfigError("template " + t.name + ": closure '" + t.closure + "' not found");
            if (closure->kind != t.kind || !closure->closed)
                throw ConfigError("template " + t.name + ": closure must be a closed loop of the same kind");
            if (bi >= closure->blocks.size())
                throw ConfigError("template " + t.name + ": closure has fewer blocks");
            AbstractInstance full = derive_block(*closure, bi, set, depth + 1);
            int n = t.kind == StringKind::X ? static_cast<int>(full.steps.size())
                                            : static_cast<int>(full.sites.size());
            int lo = b.arc_half ? 0 : b.arc_begin;
            int hi = b.arc_half ? (n + 1) / 2 : b.arc_end;
            if (lo < 0 || hi > n || lo >= hi)
                throw ConfigError("template " + t.name + ": arc span out of range");
            if (t.kind == StringKind::X) {
                a.steps.assign(full.steps.begin() + lo, full.steps.begin() + hi);
                for (const auto& st : a.steps) a.sites.push_back(cellref::tri_sites(st.tri)[st.edge]);
            } else {
                a.sites.assign(full.sites.begin() + lo, full.sites.begin() + hi);
            }
            break;
        }
        case BlockSpec::Form::hexes_around_hole:
        case BlockSpec::Form::ray_east:
        case BlockSpec::Form::ray_west:
            // resolved against the concrete hole at instantiation
            a.ray = b.form != BlockSpec::Form::hexes_around_hole;
            a.hole_region = b.form == BlockSpec::Form::hexes_around_hole;
            break;
    }
    a.valid = true;
    return a;
}

} // namespace detail

// Stamp every template across the lattice. Open strings carry the label of
// their closure instance so estimators can pair them.
inline std::vector<StringSpec> enumerate_loops(const RubyLattice& lat, const TemplateSet& set,
                                               const LoopEnumOptions& opts = {}) {
    using namespace cellref;
    std::vector<StringSpec> out;
    std::set<std::pair<std::string, std::vector<int>>> seen;

    for (const auto& tpl : set.templates) {
        if (!tpl.closed && !opts.include_open) continue;
        std::vector<detail::AbstractInstance> derived;
        for (std::size_t bi = 0; bi < tpl.blocks.size(); ++bi)
            derived.push_back(detail::derive_block(tpl, bi, set));

        std::vector<std::pair<int, int>> anchors;
        if (tpl.anchor_hole) {
            if (!lat.hole) continue;
            anchors.emplace_back(lat.hole->row, lat.hole->col);
        } else {
            for (int r = 0; r < lat.rows; ++r)
                for (int c = 0; c < lat.cols; ++c) anchors.emplace_back(r, c);
        }

        for (auto [ar, ac] : anchors) {
            for (std::size_t bi = 0; bi < tpl.blocks.size(); ++bi) {
                const auto& abs = derived[bi];
                const auto& blk = tpl.blocks[bi];
                StringSpec s;
                s.kind = tpl.kind;
                s.closed = tpl.closed;
                s.template_name = tpl.name;
                s.label = tpl.name + (tpl.anchor_hole ? "@hole" : "@r" + std::to_string(ar) + "c" + std::to_string(ac)) +
                          "#" + std::to_string(bi);
                if (!tpl.closure.empty())
                    s.closure_label = tpl.closure +
                                      (tpl.anchor_hole ? "@hole" : "@r" + std::to_string(ar) + "c" + std::to_string(ac)) +
                                      "#" + std::to_string(bi);

                bool ok = true;
                std::set<int> touched_tris;

                auto resolve_site = [&](SRef ref) {
                    int id = lat.site_id(detail::shift(ref, ar, ac));
                    if (id < 0) ok = false;
                    else touched_tris.insert(lat.sites[id].triangle);
                    return id;
                };
                auto resolve_vert_full = [&](VRef ref) {
                    int id = lat.vertex_id(detail::shift(ref, ar, ac));
                    if (id < 0 || !lat.vertices[id].full()) {
                        ok = false;
                        return -1;
                    }
                    for (int tr : lat.vertices[id].tris) touched_tris.insert(tr);
                    return id;
                };

                if (blk.form == BlockSpec::Form::hexes_around_hole ||
                    blk.form == BlockSpec::Form::ray_east || blk.form == BlockSpec::Form::ray_west) {
                    if (!lat.hole) continue;
                    if (blk.form == BlockSpec::Form::hexes_around_hole) {
                        auto faces = stringgeo::hole_faces(*lat.hole);
                        std::vector<HRef> region(faces.begin(), faces.end());
                        if (tpl.kind == StringKind::X) {
                            auto walk = stringgeo::x_walk_from_hexes(region);
                            for (const auto& st : walk) {
                                XStep rt;
                                rt.triangle = lat.tri_id(st.tri);
                                rt.site = lat.site_id(tri_sites(st.tri)[st.edge]);
                                rt.v_in = lat.vertex_id(st.v_in);
                                rt.v_out = lat.vertex_id(st.v_out);
                                if (rt.triangle < 0 || rt.site < 0 || rt.v_in < 0 || rt.v_out < 0 ||
                                    !lat.vertices[rt.v_in].full() || !lat.vertices[rt.v_out].full()) {
                                    ok = false;
                                    break;
                                }
                                touched_tris.insert(rt.triangle);
                                s.steps.push_back(rt);
                                s.sites.push_back(rt.site);
                            }
                        } else {
                            // the merged faces enclose broken stars, so no
                            // area-law Z loop exists there
                            ok = false;
                        }
                    } else {
                        // march across up-triangles from the hole to the outer face
                        bool east = blk.form == BlockSpec::Form::ray_east;
                        int R = lat.hole->up ? lat.hole->row : lat.hole->row - 1;
                        int C;
                        if (east) C = lat.hole->up ? lat.hole->col : lat.hole->col + 1;
                        else C = lat.hole->up ? lat.hole->col - 1 : lat.hole->col;
                        int guard = 4 * lat.cols + 8;
                        std::vector<SRef> ray;
                        while (true) {
                            int cc = east ? C + 1 : C;
                            if (lat.tri_id(TRef{true, R, cc}) < 0) break;
                            if (--guard < 0) {
                                ok = false;
                                break;
                            }
                            if (east) {
                                ray.push_back({R, cc, 2});
                                ray.push_back({R, cc, 1});
                                C = C + 1;
                            } else {
                                ray.push_back({R, cc, 1});
                                ray.push_back({R, cc, 2});
                                C = C - 1;
                            }
                        }
                        if (ray.empty()) ok = false;
                        if (ok)
                            for (const auto& ref : ray) {
                                int id = lat.site_id(ref);
                                if (id < 0) {
                                    ok = false;
                                    break;
                                }
                                touched_tris.insert(lat.sites[id].triangle);
                                s.sites.push_back(id);
                            }
                        s.endpoint_faces = {kFaceHole, kFaceOuter};
                    }
                } else {
                    for (const auto& ref : abs.sites) {
                        int id = resolve_site(ref);
                        if (!ok) break;
                        s.sites.push_back(id);
                    }
                    if (ok && tpl.kind == StringKind::X) {
                        for (std::size_t k = 0; k < abs.steps.size() && ok; ++k) {
                            const auto& st = abs.steps[k];
                            XStep rt;
                            rt.triangle = lat.tri_id(TRef{st.tri.up, st.tri.r + ar, st.tri.c + ac});
                            rt.site = s.sites[k];
                            rt.v_in = resolve_vert_full(st.v_in);
                            rt.v_out = resolve_vert_full(st.v_out);
                            if (rt.triangle < 0) ok = false;
                            if (!ok) break;
                            s.steps.push_back(rt);
                        }
                        for (const auto& h : abs.hregion) {
                            int id = lat.hex_id(detail::shift(h, ar, ac));
                            if (id < 0) {
                                ok = false;
                                break;
                            }
                            s.region.push_back(id);
                        }
                        if (ok && !tpl.closed && !s.steps.empty())
                            s.endpoint_verts = {s.steps.front().v_in, s.steps.back().v_out};
                    }
                    if (ok && tpl.kind == StringKind::Z) {
                        if (tpl.closed)
                            for (const auto& v : abs.vregion) {
                                int id = resolve_vert_full(v);
                                if (!ok) break;
                                s.region.push_back(id);
                            }
                        if (abs.has_endpoint_hexes) {
                            int h0 = lat.hex_id(detail::shift(abs.endpoint_hexes[0], ar, ac));
                            int h1 = lat.hex_id(detail::shift(abs.endpoint_hexes[1], ar, ac));
                            if (h0 < 0 || h1 < 0) ok = false;
                            s.endpoint_faces = {h0, h1};
                        }
                    }
                }

                if (!ok) continue;

                // reject wrap degeneracies and duplicated stamps
                std::vector<int> key_sites = s.sites;
                std::sort(key_sites.begin(), key_sites.end());
                if (std::adjacent_find(key_sites.begin(), key_sites.end()) != key_sites.end()) continue;
                std::vector<int> reg = s.region;
                std::sort(reg.begin(), reg.end());
                if (std::adjacent_find(reg.begin(), reg.end()) != reg.end()) continue;
                std::vector<int> step_tris;
                for (const auto& st : s.steps) step_tris.push_back(st.triangle);
                std::sort(step_tris.begin(), step_tris.end());
                if (std::adjacent_find(step_tris.begin(), step_tris.end()) != step_tris.end())
                    continue;
                std::vector<int> key = key_sites;
                key.push_back(s.closed ? 1 : 0);
                if (!seen.insert({tpl.name, key}).second) continue;

                s.min_layer = kNoBoundaryLayer;
                for (int tr : touched_tris) s.min_layer = std::min(s.min_layer, lat.triangles[tr].layer);
                if (opts.bulk_depth >= 0 && s.min_layer < opts.bulk_depth) continue;

                std::sort(s.region.begin(), s.region.end());
                out.push_back(std::move(s));
            }
        }
    }
    // An open string is only useful together with its closure (the paired
    // closed loop); drop instances whose closure was itself rejected.
    std::set<std::string> labels;
    for (const auto& s : out) labels.insert(s.label);
    std::erase_if(out, [&](const StringSpec& s) {
        return !s.closure_label.empty() && !labels.count(s.closure_label);
    });
    return out;
}

} // namespace rydberg
