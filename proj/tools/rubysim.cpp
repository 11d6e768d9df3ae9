// rubysim: ruby-lattice blockade models end to end. Builds lattices, runs
// preparation sweeps, estimates loop observables directly or through the
// measurement quench, calibrates the quench duration, and enumerates dimer
// coverings. Every output file embeds the tool version and the config hash,
// and a fixed (config, seed) pair reproduces every output byte for byte.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"

#include "rydberg/config.hpp"
#include "rydberg/dimer.hpp"
#include "rydberg/lattice_io.hpp"
#include "rydberg/measure.hpp"
#include "rydberg/templates.hpp"

namespace {

using namespace rydberg;

struct CliArgs {
    std::string config_path;
    std::vector<std::string> snapshot_files;

    // scalar config overrides; unset means "keep the file's value"
    std::optional<int> rows, cols, tau_steps, bulk_depth;
    std::optional<std::string> boundary, estimator, template_dir, output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> n_samples;
    std::optional<double> dt, tau, tau_max, omega_max, t_sweep;
    std::vector<double> endpoints;
    std::vector<std::string> loop_names;

    // dimer-enum only
    std::string rule = "bulk";
    std::string rim = "reach";
    std::int64_t cap = 10'000'000;
};

void add_config_options(CLI::App* cmd, CliArgs& a) {
    cmd->add_option("config", a.config_path, "run configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--output-dir", a.output_dir, "directory for output files");
    cmd->add_option("--rows", a.rows, "lattice rows");
    cmd->add_option("--cols", a.cols, "lattice cols");
    cmd->add_option("--boundary", a.boundary, "open or torus");
    cmd->add_option("--seed", a.seed, "sampling seed");
    cmd->add_option("--estimator", a.estimator, "exact or snapshots");
    cmd->add_option("--n-samples", a.n_samples, "snapshots per estimate");
    cmd->add_option("--template-dir", a.template_dir, "loop template directory");
    cmd->add_option("--loop", a.loop_names, "restrict to these loop templates");
    cmd->add_option("--obs-bulk-depth", a.bulk_depth, "min boundary distance for loops");
    cmd->add_option("--dt", a.dt, "sweep integrator step");
    cmd->add_option("--endpoint", a.endpoints, "replace the schedule endpoint list");
    cmd->add_option("--omega-max", a.omega_max, "sweep drive amplitude");
    cmd->add_option("--t-sweep", a.t_sweep, "detuning sweep duration");
    cmd->add_option("--tau", a.tau, "quench duration (negative = analytic revival)");
    cmd->add_option("--tau-max", a.tau_max, "calibration grid end");
    cmd->add_option("--tau-steps", a.tau_steps, "calibration grid size");
}

nlohmann::json read_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

RunConfig effective_config(const CliArgs& a) {
    nlohmann::json j = read_config_json(a.config_path);
    if (!j.contains("output_dir"))
        if (const char* env = std::getenv("RUBYSIM_OUTPUT_DIR")) j["output_dir"] = env;

    if (a.rows) j["lattice"]["rows"] = *a.rows;
    if (a.cols) j["lattice"]["cols"] = *a.cols;
    if (a.boundary) j["lattice"]["boundary"] = *a.boundary;
    if (a.seed) j["seed"] = *a.seed;
    if (a.output_dir) j["output_dir"] = *a.output_dir;
    if (a.estimator) j["observables"]["estimator"] = *a.estimator;
    if (a.n_samples) j["observables"]["n_samples"] = *a.n_samples;
    if (a.template_dir) j["observables"]["template_dir"] = *a.template_dir;
    if (!a.loop_names.empty()) j["observables"]["loops"] = a.loop_names;
    if (a.bulk_depth) j["observables"]["bulk_depth"] = *a.bulk_depth;
    if (a.dt) j["schedule"]["dt"] = *a.dt;
    if (!a.endpoints.empty()) j["schedule"]["endpoints"] = a.endpoints;
    if (a.omega_max) j["schedule"]["omega_max"] = *a.omega_max;
    if (a.t_sweep) j["schedule"]["t_sweep"] = *a.t_sweep;
    if (a.tau) j["quench"]["tau"] = *a.tau;
    if (a.tau_max) j["quench"]["tau_max"] = *a.tau_max;
    if (a.tau_steps) j["quench"]["tau_steps"] = *a.tau_steps;

    return parse_run_config(j);
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot open output file " + p.string());
    return os;
}

struct ModelSetup {
    std::shared_ptr<Basis> basis;
    HamiltonianTerms terms;
};

ModelSetup make_model(const RunConfig& cfg, const RubyLattice& lat) {
    auto basis = std::make_shared<Basis>(enumerate_basis(lat, cfg.model.rb_over_a));
    HamiltonianTerms terms = cfg.model.kind == ModelSpec::Kind::pxp
                                 ? build_pxp_terms(*basis)
                                 : build_vdw_terms(*basis, lat, cfg.model.rb_over_a,
                                                   cfg.model.r_trunc);
    return {std::move(basis), std::move(terms)};
}

// Catalogue restricted to the requested templates. Open strings drag their
// closure along so parity ratios stay well defined.
std::vector<StringSpec> catalogued_loops(const RunConfig& cfg, const RubyLattice& lat,
                                         const TemplateSet& set) {
    LoopEnumOptions opts;
    opts.bulk_depth = cfg.observables.bulk_depth;
    std::vector<StringSpec> loops = enumerate_loops(lat, set, opts);
    if (cfg.observables.loops.empty()) return loops;
    std::set<std::string> want;
    for (const auto& name : cfg.observables.loops) {
        const LoopTemplate* t = set.find(name);
        if (!t) throw ConfigError("unknown observable '" + name + "': no such loop template");
        want.insert(name);
        if (!t->closure.empty()) want.insert(t->closure);
    }
    std::erase_if(loops, [&](const StringSpec& s) { return !want.count(s.template_name); });
    return loops;
}

std::string observable_name(const StringSpec& s) {
    if (s.kind == StringKind::Z) return s.closed ? "z_loop" : "z_open";
    return s.closed ? "x_loop" : "x_open";
}

ObservableReport plain_row(const std::string& observable, const std::string& label,
                           double endpoint, double estimate) {
    ObservableReport r;
    r.observable = observable;
    r.label = label;
    r.endpoint = endpoint;
    r.estimate = estimate;
    return r;
}

// Family evaluation shared by the estimators: the per-family mean parity plus
// derived rows (perimeter/area roots for closed loops, the normalized
// open-string ratio for open ones, short-range connected correlators).
struct FamilyTable {
    std::map<std::string, std::vector<const StringSpec*>> families;
    std::map<std::string, const StringSpec*> by_label;

    FamilyTable() = default;
    // holds pointers into the loop vector, which must outlive the table
    explicit FamilyTable(std::vector<StringSpec>&&) = delete;
    explicit FamilyTable(const std::vector<StringSpec>& loops) {
        families = group_by_family(loops);
        for (auto& [key, insts] : families)
            std::sort(insts.begin(), insts.end(),
                      [](const StringSpec* a, const StringSpec* b) { return a->label < b->label; });
        for (const auto& s : loops) by_label[s.label] = &s;
    }

    const StringSpec* closure_of(const std::vector<const StringSpec*>& insts) const {
        const std::string& cl = insts.front()->closure_label;
        if (cl.empty()) return nullptr;
        auto it = by_label.find(cl);
        return it == by_label.end() ? nullptr : it->second;
    }
};

void append_family_rows(std::vector<ObservableReport>& rows, const FamilyTable& table,
                        const std::map<std::string, ObservableReport>& main_rows) {
    for (const auto& [key, insts] : table.families) {
        const ObservableReport& main = main_rows.at(key);
        rows.push_back(main);
        const StringSpec& rep = *insts.front();
        if (!rep.closed) {
            if (const StringSpec* cl = table.closure_of(insts)) {
                const ObservableReport& closed = main_rows.at(family_key(*cl));
                auto ratio = bffm(main.estimate, closed.estimate);
                ObservableReport r = plain_row(rep.kind == StringKind::Z ? "bffm_z" : "bffm_x",
                                               key, main.endpoint, ratio.value_or(0.0));
                r.defined = ratio.has_value();
                r.n_samples = main.n_samples;
                rows.push_back(std::move(r));
            }
        } else if (rep.area() > 0) {  // hole-encircling loops have no enclosed faces
            ScalingRow sc = scaling_row(rep, main.estimate);
            std::string prefix = rep.kind == StringKind::Z ? "z_root" : "x_root";
            rows.push_back(plain_row(prefix + "_area", key, main.endpoint, sc.per_area_root));
            rows.push_back(
                plain_row(prefix + "_perimeter", key, main.endpoint, sc.per_perimeter_root));
        }
    }
}

// ---------------------------------------------------------------- lattice --

int cmd_lattice(const CliArgs& a) {
    RunConfig cfg = effective_config(a);
    std::string hash = config_hash(cfg);
    RubyLattice lat = build_lattice(cfg);
    std::cout << lat.n_sites() << " sites, " << lat.triangles.size() << " triangles, "
              << lat.vertices.size() << " vertices, " << lat.hexagons.size() << " hexagons\n";
    auto path = out_path(cfg, "lattice.json");
    auto os = open_out(path);
    write_lattice(os, lat, hash);
    std::cout << "wrote " << path.string() << " (config " << hash << ")\n";
    return 0;
}

// ------------------------------------------------------------------ sweep --

int cmd_sweep(const CliArgs& a) {
    RunConfig cfg = effective_config(a);
    std::string hash = config_hash(cfg);
    RubyLattice lat = build_lattice(cfg);
    ModelSetup model = make_model(cfg, lat);
    std::vector<std::int64_t> sector = dimer_sector(*model.basis, lat);
    std::vector<int> all_sites(static_cast<std::size_t>(lat.n_sites()));
    for (int s = 0; s < lat.n_sites(); ++s) all_sites[static_cast<std::size_t>(s)] = s;

    auto results = run_sweep(model.basis, model.terms, cfg.schedule, cfg.endpoints, cfg.dt);
    char buf[128];
    for (std::size_t i = 0; i < results.size(); ++i) {
        const SweepResult& res = results[i];
        double weight = sector_weight(res.state, sector);
        double dens = mean_density(site_density(res.state), all_sites);
        std::snprintf(buf, sizeof buf, "endpoint %.17g: sector_weight=%.17g mean_density=%.17g",
                      res.endpoint, weight, dens);
        std::cout << buf << "\n";
        if (cfg.observables.estimator == "snapshots") {
            auto snaps = sample_snapshots(res.state, cfg.observables.n_samples,
                                          *cfg.seed + static_cast<std::uint64_t>(i), res.endpoint);
            auto path = out_path(cfg, "snapshots_" + std::to_string(i) + ".txt");
            auto os = open_out(path);
            write_snapshots(os, snaps, hash);
            std::cout << "wrote " << path.string() << " (" << snaps.size() << " snapshots, config "
                      << hash << ")\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------- measure --

void append_snapshot_block(std::vector<ObservableReport>& rows, const RunConfig& cfg,
                           const RubyLattice& lat, const FamilyTable& table,
                           const std::vector<Snapshot>& snaps, double endpoint) {
    int min_layer = std::max(cfg.observables.bulk_depth, 0);
    auto n = static_cast<std::int64_t>(snaps.size());

    std::int64_t in_sector = 0;
    for (const auto& sn : snaps)
        if (is_perfect_covering(lat, sn.bits)) ++in_sector;
    ObservableReport sw = plain_row("sector_weight", "dimer", endpoint,
                                    static_cast<double>(in_sector) / static_cast<double>(n));
    sw.n_samples = n;
    rows.push_back(std::move(sw));

    ObservableReport dens =
        plain_row("density", "bulk", endpoint,
                  mean_density(site_density(snaps, lat.n_sites()), bulk_sites(lat, min_layer)));
    dens.n_samples = n;
    rows.push_back(std::move(dens));

    VertexStats vs = vertex_stats(snaps, lat, min_layer);
    for (auto [name, value] : {std::pair<const char*, double>{"vertex_monomer", vs.monomer},
                               {"vertex_single", vs.single_dimer},
                               {"vertex_multi", vs.multi_dimer}}) {
        ObservableReport r = plain_row(name, "bulk", endpoint, value);
        r.n_samples = n;
        rows.push_back(std::move(r));
    }

    std::map<std::string, ObservableReport> main_rows;
    FamilyTable ztable;
    ztable.by_label = table.by_label;
    for (const auto& [key, insts] : table.families) {
        if (insts.front()->kind != StringKind::Z) continue;  // X needs a state, not bitstrings
        ztable.families[key] = insts;
        main_rows[key] =
            family_report_snaps(observable_name(*insts.front()), key, endpoint, snaps, insts);
    }
    append_family_rows(rows, ztable, main_rows);

    for (const auto& [key, insts] : ztable.families) {
        if (!insts.front()->closed) continue;
        if (insts.size() >= 2) {
            ObservableReport r =
                plain_row("g2_z", insts[0]->label + "|" + insts[1]->label, endpoint,
                          g2_z_snaps(snaps, *insts[0], *insts[1]));
            r.n_samples = n;
            rows.push_back(std::move(r));
        }
        if (insts.size() >= 3) {
            ObservableReport r = plain_row(
                "g3_z", insts[0]->label + "|" + insts[1]->label + "|" + insts[2]->label, endpoint,
                g3_z_snaps(snaps, *insts[0], *insts[1], *insts[2]));
            r.n_samples = n;
            rows.push_back(std::move(r));
        }
    }
}

void append_state_block(std::vector<ObservableReport>& rows, const RunConfig& cfg,
                        const RubyLattice& lat, const FamilyTable& table,
                        const std::vector<std::int64_t>& sector, const StateVector& state,
                        double endpoint, std::uint64_t snap_seed) {
    bool sampled = cfg.observables.estimator == "snapshots";
    int min_layer = std::max(cfg.observables.bulk_depth, 0);

    rows.push_back(plain_row("sector_weight", "dimer", endpoint, sector_weight(state, sector)));

    if (sampled) {
        auto snaps = sample_snapshots(state, cfg.observables.n_samples, snap_seed, endpoint);
        // Z-diagonal rows come from the samples; the X rows below still rotate
        // the exact state, sampling only the rotated-frame parities.
        std::vector<ObservableReport> block;
        append_snapshot_block(block, cfg, lat, table, snaps, endpoint);
        for (auto& r : block)
            if (r.observable != "sector_weight") rows.push_back(std::move(r));
    } else {
        rows.push_back(plain_row("density", "bulk", endpoint,
                                 mean_density(site_density(state), bulk_sites(lat, min_layer))));
        VertexStats vs = vertex_stats_exact(state, lat, min_layer);
        rows.push_back(plain_row("vertex_monomer", "bulk", endpoint, vs.monomer));
        rows.push_back(plain_row("vertex_single", "bulk", endpoint, vs.single_dimer));
        rows.push_back(plain_row("vertex_multi", "bulk", endpoint, vs.multi_dimer));

        std::map<std::string, ObservableReport> main_rows;
        FamilyTable ztable;
        ztable.by_label = table.by_label;
        for (const auto& [key, insts] : table.families) {
            if (insts.front()->kind != StringKind::Z) continue;
            ztable.families[key] = insts;
            main_rows[key] = family_report_exact(observable_name(*insts.front()), key, endpoint,
                                                 state, lat, insts);
        }
        append_family_rows(rows, ztable, main_rows);

        for (const auto& [key, insts] : ztable.families) {
            if (!insts.front()->closed) continue;
            if (insts.size() >= 2)
                rows.push_back(plain_row("g2_z", insts[0]->label + "|" + insts[1]->label, endpoint,
                                         g2_z_exact(state, *insts[0], *insts[1])));
            if (insts.size() >= 3)
                rows.push_back(plain_row(
                    "g3_z", insts[0]->label + "|" + insts[1]->label + "|" + insts[2]->label,
                    endpoint, g3_z_exact(state, *insts[0], *insts[1], *insts[2])));
        }
    }

    // X families go through the measurement rotation: quench once, then read
    // the dual Z strings in the rotated frame.
    bool any_x = false;
    for (const auto& [key, insts] : table.families)
        if (insts.front()->kind == StringKind::X) any_x = true;
    if (any_x) {
        StateVector rotated = apply_quench(state, lat, cfg.quench);
        std::vector<Snapshot> rot_snaps;
        if (sampled)
            rot_snaps = sample_snapshots(rotated, cfg.observables.n_samples,
                                         snap_seed + 0x9e3779b9u, endpoint);
        std::map<std::string, ObservableReport> main_rows;
        FamilyTable xtable;
        xtable.by_label = table.by_label;
        std::map<std::string, std::vector<StringSpec>> duals;
        for (const auto& [key, insts] : table.families) {
            if (insts.front()->kind != StringKind::X) continue;
            xtable.families[key] = insts;
            auto& dv = duals[key];
            for (const StringSpec* s : insts) dv.push_back(dual_string(lat, *s));
            std::vector<const StringSpec*> dptr;
            for (const auto& d : dv) dptr.push_back(&d);
            main_rows[key] =
                sampled
                    ? family_report_snaps(observable_name(*insts.front()), key, endpoint,
                                          rot_snaps, dptr)
                    : family_report_exact(observable_name(*insts.front()), key, endpoint, rotated,
                                          lat, dptr);
        }
        append_family_rows(rows, xtable, main_rows);
    }

    if (cfg.hole) {
        std::vector<StringSpec> logical;
        for (const auto& [label, spec] : table.by_label)
            if (label.find("@hole") != std::string::npos) logical.push_back(*spec);
        if (!logical.empty())
            for (auto& r : logical_reports(state, lat, logical, endpoint))
                rows.push_back(std::move(r));
    }
}

int cmd_measure(const CliArgs& a) {
    RunConfig cfg = effective_config(a);
    std::string hash = config_hash(cfg);
    RubyLattice lat = build_lattice(cfg);
    TemplateSet set = load_template_dir(cfg.observables.template_dir);
    std::vector<StringSpec> loops = catalogued_loops(cfg, lat, set);
    FamilyTable table(loops);

    std::vector<ObservableReport> rows;
    if (!a.snapshot_files.empty()) {
        std::map<double, std::vector<Snapshot>> by_endpoint;
        for (const auto& file : a.snapshot_files) {
            std::ifstream in(file);
            if (!in) throw ConfigError("cannot open snapshot file " + file);
            for (auto& sn : read_snapshots(in, lat.n_sites()))
                by_endpoint[sn.endpoint].push_back(std::move(sn));
        }
        if (by_endpoint.empty()) throw ConfigError("snapshot files contain no records");
        for (const auto& [endpoint, snaps] : by_endpoint)
            append_snapshot_block(rows, cfg, lat, table, snaps, endpoint);
    } else {
        ModelSetup model = make_model(cfg, lat);
        std::vector<std::int64_t> sector = dimer_sector(*model.basis, lat);
        auto results = run_sweep(model.basis, model.terms, cfg.schedule, cfg.endpoints, cfg.dt);
        for (std::size_t i = 0; i < results.size(); ++i)
            append_state_block(rows, cfg, lat, table, sector, results[i].state,
                               results[i].endpoint,
                               cfg.seed ? *cfg.seed + static_cast<std::uint64_t>(i) : 0);
    }

    auto csv_path = out_path(cfg, "report.csv");
    auto csv = open_out(csv_path);
    write_report_csv(csv, rows, hash);

    nlohmann::json jr;
    jr["tool_version"] = version_string;
    jr["config"] = hash;
    jr["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        jr["rows"].push_back({{"observable", r.observable},
                              {"label", r.label},
                              {"endpoint", r.endpoint},
                              {"estimate", r.estimate},
                              {"stderr", r.std_error},
                              {"n_samples", r.n_samples},
                              {"defined", r.defined}});
    auto json_path = out_path(cfg, "report.json");
    auto js = open_out(json_path);
    js << jr.dump(1) << "\n";

    std::cout << rows.size() << " report rows\n";
    std::cout << "wrote " << csv_path.string() << " (config " << hash << ")\n";
    std::cout << "wrote " << json_path.string() << " (config " << hash << ")\n";
    return 0;
}

// ------------------------------------------------------- quench-calibrate --

int cmd_quench_calibrate(const CliArgs& a) {
    RunConfig cfg = effective_config(a);
    std::string hash = config_hash(cfg);
    RubyLattice lat = build_lattice(cfg);
    TemplateSet set = load_template_dir(cfg.observables.template_dir);
    std::vector<StringSpec> loops = catalogued_loops(cfg, lat, set);
    FamilyTable table(loops);

    const std::vector<const StringSpec*>* family = nullptr;
    std::string family_name;
    for (const auto& [key, insts] : table.families)
        if (insts.front()->kind == StringKind::X && insts.front()->closed) {
            family = &insts;
            family_name = key;
            break;
        }
    if (!family)
        throw ConfigError("quench calibration needs a closed X loop family in the catalogue");
    std::vector<StringSpec> duals;
    for (const StringSpec* s : *family) duals.push_back(dual_string(lat, *s));

    ModelSetup model = make_model(cfg, lat);
    auto results =
        run_sweep(model.basis, model.terms, cfg.schedule, {cfg.endpoints.front()}, cfg.dt);

    // One waveform, sampled along the grid: optional linear rise to the hold
    // amplitude, then a square hold. Evolution proceeds node to node.
    auto reduced = std::make_shared<Basis>(enumerate_basis(lat, cfg.quench.rb_over_a));
    StateVector psi = embed_state(results.front().state, reduced);
    HamiltonianTerms qterms = build_pxp_terms(*reduced, cfg.quench.phase);
    double rise = std::max(cfg.quench.rise_time, 0.0);
    auto drive_at = [&](double s) {
        double omega = rise > 0 && s < rise ? cfg.quench.omega_q * s / rise : cfg.quench.omega_q;
        return qterms.at(omega, cfg.quench.delta_q);
    };

    int steps = cfg.tau_steps;
    double dtau = cfg.tau_max / static_cast<double>(steps - 1);
    std::vector<double> taus(static_cast<std::size_t>(steps)), curve;
    for (int k = 0; k < steps; ++k) taus[static_cast<std::size_t>(k)] = dtau * k;
    double step_dt = rise > 0 ? std::min(dtau, rise / 64) : dtau;
    for (int k = 0; k < steps; ++k) {
        if (k > 0)
            evolve_timedep(psi, drive_at, taus[static_cast<std::size_t>(k - 1)],
                           taus[static_cast<std::size_t>(k)], step_dt);
        double acc = 0;
        for (const auto& d : duals) acc += z_parity_exact(psi, d);
        curve.push_back(acc / static_cast<double>(duals.size()));
    }

    auto path = out_path(cfg, "calibration.csv");
    auto os = open_out(path);
    os << "# rubysim calibration v" << version_string << "\n";
    os << "# config " << hash << "\n";
    os << "# family " << family_name << "\n";
    os << "tau,parity\n";
    char buf[96];
    for (int k = 0; k < steps; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", taus[static_cast<std::size_t>(k)],
                      curve[static_cast<std::size_t>(k)]);
        os << buf << "\n";
    }

    std::size_t peak = revival_index(curve);
    char line[160];
    std::snprintf(line, sizeof line, "revival at tau=%.17g (grid index %zu of %d)", taus[peak],
                  peak, steps);
    std::cout << line << "\n";
    std::snprintf(line, sizeof line, "single-triangle analytic revival %.17g",
                  ideal_quench_time(cfg.quench.omega_q));
    std::cout << line << "\n";
    std::cout << "wrote " << path.string() << " (config " << hash << ")\n";
    return 0;
}

// ------------------------------------------------------------- dimer-enum --

int cmd_dimer_enum(const CliArgs& a) {
    RunConfig cfg = effective_config(a);
    std::string hash = config_hash(cfg);
    RubyLattice lat = build_lattice(cfg);
    VertexRule rule;
    if (a.rule == "bulk") rule = VertexRule::bulk;
    else if (a.rule == "strict") rule = VertexRule::strict;
    else throw ConfigError("--rule must be 'bulk' or 'strict', got '" + a.rule + "'");
    RimPolicy rim;
    if (a.rim == "reach") rim = RimPolicy::reach;
    else if (a.rim == "interior") rim = RimPolicy::interior;
    else throw ConfigError("--rim must be 'reach' or 'interior', got '" + a.rim + "'");

    auto coverings = enumerate_perfect_coverings(lat, rule, a.cap, rim);
    std::cout << coverings.size() << " coverings (rule=" << a.rule << " rim=" << a.rim << ")\n";

    std::vector<Snapshot> snaps;
    snaps.reserve(coverings.size());
    for (const auto& c : coverings) snaps.push_back(Snapshot{c.bits, 0.0, 0});
    auto path = out_path(cfg, "coverings.txt");
    auto os = open_out(path);
    write_snapshots(os, snaps, hash);
    std::cout << "wrote " << path.string() << " (config " << hash << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* t = std::getenv("RUBYSIM_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(t)));

    CLI::App app{"ruby-lattice blockade simulator"};
    app.require_subcommand(1);
    CliArgs args;

    CLI::App* lattice = app.add_subcommand("lattice", "build the lattice and write its tables");
    add_config_options(lattice, args);

    CLI::App* sweep = app.add_subcommand("sweep", "prepare states along the detuning sweep");
    add_config_options(sweep, args);

    CLI::App* measure = app.add_subcommand("measure", "evaluate loop observables into a report");
    add_config_options(measure, args);
    measure->add_option("snapshots", args.snapshot_files, "snapshot files to ingest")
        ->check(CLI::ExistingFile);

    CLI::App* calib = app.add_subcommand("quench-calibrate", "scan the quench duration grid");
    add_config_options(calib, args);

    CLI::App* dimer = app.add_subcommand("dimer-enum", "enumerate perfect dimer coverings");
    add_config_options(dimer, args);
    dimer->add_option("--rule", args.rule, "vertex rule: bulk or strict");
    dimer->add_option("--rim", args.rim, "rim policy: reach or interior");
    dimer->add_option("--cap", args.cap, "covering count cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (lattice->parsed()) return cmd_lattice(args);
        if (sweep->parsed()) return cmd_sweep(args);
        if (measure->parsed()) return cmd_measure(args);
        if (calib->parsed()) return cmd_quench_calibrate(args);
        if (dimer->parsed()) return cmd_dimer_enum(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
