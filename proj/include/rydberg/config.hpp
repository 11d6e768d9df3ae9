#pragma once

// Run configuration: one JSON document fixing lattice, model, schedule,
// quench, and observable settings. Every field has a default, so {} is a
// valid config; unknown keys are rejected to catch typos. The canonical
// serialization of the effective config (after any command-line overrides)
// is hashed into every output file.

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rydberg/dynamics.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/hamiltonian.hpp"
#include "rydberg/lattice.hpp"

namespace rydberg {

struct ModelSpec {
    enum class Kind { pxp, vdw };
    Kind kind = Kind::pxp;
    double rb_over_a = 2.4;
    double r_trunc = 9.0;  // vdw tail cutoff, in units of a
};

struct ObservablesSpec {
    std::string template_dir = "fixtures/loops";
    std::vector<std::string> loops;  // template names; empty = all catalogued
    std::string estimator = "exact";  // exact | snapshots
    std::int64_t n_samples = 100000;
    int bulk_depth = -1;  // min layer filter for loop enumeration; -1 = off
};

struct RunConfig {
    int rows = 3, cols = 2;
    Boundary boundary = Boundary::torus;
    std::optional<HoleSpec> hole;
    int bulk_depth = 3;

    ModelSpec model;

    SweepSchedule schedule;
    std::vector<double> endpoints{5.0};
    double dt = 0.05;

    QuenchSpec quench;
    double tau_max = 5.0;  // quench-calibrate grid
    int tau_steps = 100;

    ObservablesSpec observables;

    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
};

namespace detail {

inline void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                               const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : keys)
            if (item.key() == k) known = true;
        if (!known) throw ConfigError("config: unknown field '" + item.key() + "' in " + where);
    }
}

template <typename T>
inline void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: field '" + where + "." + key + "' has the wrong type");
    }
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using detail::read_field;
    using detail::require_known_keys;
    if (!j.is_object()) throw ConfigError("config: document must be a JSON object");
    require_known_keys(j, {"lattice", "model", "schedule", "quench", "observables", "seed",
                           "output_dir"},
                       "top level");
    RunConfig c;

    if (j.contains("lattice")) {
        const auto& l = j.at("lattice");
        require_known_keys(l, {"rows", "cols", "boundary", "hole", "bulk_depth"}, "lattice");
        read_field(l, "rows", c.rows, "lattice");
        read_field(l, "cols", c.cols, "lattice");
        if (l.contains("boundary")) {
            std::string b;
            read_field(l, "boundary", b, "lattice");
            if (b == "open") c.boundary = Boundary::open;
            else if (b == "torus") c.boundary = Boundary::torus;
            else throw ConfigError("config: lattice.boundary must be 'open' or 'torus', got '" + b + "'");
        }
        if (l.contains("hole") && !l.at("hole").is_null()) {
            const auto& h = l.at("hole");
            require_known_keys(h, {"row", "col", "up"}, "lattice.hole");
            HoleSpec hs;
            read_field(h, "row", hs.row, "lattice.hole");
            read_field(h, "col", hs.col, "lattice.hole");
            read_field(h, "up", hs.up, "lattice.hole");
            c.hole = hs;
        }
        read_field(l, "bulk_depth", c.bulk_depth, "lattice");
        if (c.rows < 1 || c.cols < 1) throw ConfigError("config: lattice.rows and lattice.cols must be positive");
        if (c.bulk_depth < 0) throw ConfigError("config: lattice.bulk_depth must be nonnegative");
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        require_known_keys(m, {"type", "rb_over_a", "r_trunc"}, "model");
        if (m.contains("type")) {
            std::string t;
            read_field(m, "type", t, "model");
            if (t == "pxp") c.model.kind = ModelSpec::Kind::pxp;
            else if (t == "vdw") c.model.kind = ModelSpec::Kind::vdw;
            else throw ConfigError("config: model.type must be 'pxp' or 'vdw', got '" + t + "'");
        }
        read_field(m, "rb_over_a", c.model.rb_over_a, "model");
        read_field(m, "r_trunc", c.model.r_trunc, "model");
        if (!(c.model.rb_over_a > 0)) throw ConfigError("config: model.rb_over_a must be positive");
        if (!(c.model.r_trunc > 0)) throw ConfigError("config: model.r_trunc must be positive");
    }

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        require_known_keys(s, {"omega_max", "delta_min", "delta_max", "t_ramp_on", "t_sweep",
                               "t_ramp_off", "endpoints", "dt"},
                           "schedule");
        read_field(s, "omega_max", c.schedule.omega_max, "schedule");
        read_field(s, "delta_min", c.schedule.delta_min, "schedule");
        read_field(s, "delta_max", c.schedule.delta_max, "schedule");
        read_field(s, "t_ramp_on", c.schedule.t_ramp_on, "schedule");
        read_field(s, "t_sweep", c.schedule.t_sweep, "schedule");
        read_field(s, "t_ramp_off", c.schedule.t_ramp_off, "schedule");
        read_field(s, "endpoints", c.endpoints, "schedule");
        read_field(s, "dt", c.dt, "schedule");
        if (c.schedule.omega_max < 0) throw ConfigError("config: schedule.omega_max must be nonnegative");
        if (!(c.schedule.t_sweep > 0)) throw ConfigError("config: schedule.t_sweep must be positive");
        if (c.schedule.t_ramp_on < 0 || c.schedule.t_ramp_off < 0)
            throw ConfigError("config: schedule ramp times must be nonnegative");
        if (!(c.dt > 0)) throw ConfigError("config: schedule.dt must be positive");
        if (c.endpoints.empty()) throw ConfigError("config: schedule.endpoints must not be empty");
    }

    if (j.contains("quench")) {
        const auto& q = j.at("quench");
        require_known_keys(q, {"omega", "delta", "phase", "tau", "rise_time", "rb_over_a",
                               "tau_max", "tau_steps"},
                           "quench");
        read_field(q, "omega", c.quench.omega_q, "quench");
        read_field(q, "delta", c.quench.delta_q, "quench");
        read_field(q, "phase", c.quench.phase, "quench");
        read_field(q, "tau", c.quench.tau, "quench");
        read_field(q, "rise_time", c.quench.rise_time, "quench");
        read_field(q, "rb_over_a", c.quench.rb_over_a, "quench");
        read_field(q, "tau_max", c.tau_max, "quench");
        read_field(q, "tau_steps", c.tau_steps, "quench");
        if (!(c.quench.omega_q > 0)) throw ConfigError("config: quench.omega must be positive");
        if (!(c.tau_max > 0)) throw ConfigError("config: quench.tau_max must be positive");
        if (c.tau_steps < 2) throw ConfigError("config: quench.tau_steps must be at least 2");
    }

    if (j.contains("observables")) {
        const auto& o = j.at("observables");
        require_known_keys(o, {"template_dir", "loops", "estimator", "n_samples", "bulk_depth"},
                           "observables");
        read_field(o, "template_dir", c.observables.template_dir, "observables");
        read_field(o, "loops", c.observables.loops, "observables");
        read_field(o, "estimator", c.observables.estimator, "observables");
        read_field(o, "n_samples", c.observables.n_samples, "observables");
        read_field(o, "bulk_depth", c.observables.bulk_depth, "observables");
        if (c.observables.estimator != "exact" && c.observables.estimator != "snapshots")
            throw ConfigError("config: observables.estimator must be 'exact' or 'snapshots'");
        if (c.observables.n_samples < 1)
            throw ConfigError("config: observables.n_samples must be positive");
    }

    if (j.contains("seed")) {
        std::uint64_t s = 0;
        read_field(j, "seed", s, "top level");
        c.seed = s;
    }
    read_field(j, "output_dir", c.output_dir, "top level");

    if (c.observables.estimator == "snapshots" && !c.seed)
        throw ConfigError("config: sampling runs require an explicit seed");
    return c;
}

inline RunConfig load_run_config(std::istream& is, const std::string& name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + name + ": " + e.what());
    }
    return parse_run_config(j);
}

// Canonical echo of the effective config. Keys are emitted sorted, so the
// dump is a stable hashing surface.
inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["lattice"] = {{"rows", c.rows},
                    {"cols", c.cols},
                    {"boundary", to_string(c.boundary)},
                    {"bulk_depth", c.bulk_depth}};
    if (c.hole)
        j["lattice"]["hole"] = {{"row", c.hole->row}, {"col", c.hole->col}, {"up", c.hole->up}};
    else
        j["lattice"]["hole"] = nullptr;
    j["model"] = {{"type", c.model.kind == ModelSpec::Kind::pxp ? "pxp" : "vdw"},
                  {"rb_over_a", c.model.rb_over_a},
                  {"r_trunc", c.model.r_trunc}};
    j["schedule"] = {{"omega_max", c.schedule.omega_max}, {"delta_min", c.schedule.delta_min},
                     {"delta_max", c.schedule.delta_max}, {"t_ramp_on", c.schedule.t_ramp_on},
                     {"t_sweep", c.schedule.t_sweep},     {"t_ramp_off", c.schedule.t_ramp_off},
                     {"endpoints", c.endpoints},          {"dt", c.dt}};
    j["quench"] = {{"omega", c.quench.omega_q},   {"delta", c.quench.delta_q},
                   {"phase", c.quench.phase},     {"tau", c.quench.tau},
                   {"rise_time", c.quench.rise_time}, {"rb_over_a", c.quench.rb_over_a},
                   {"tau_max", c.tau_max},        {"tau_steps", c.tau_steps}};
    j["observables"] = {{"template_dir", c.observables.template_dir},
                        {"loops", c.observables.loops},
                        {"estimator", c.observables.estimator},
                        {"n_samples", c.observables.n_samples},
                        {"bulk_depth", c.observables.bulk_depth}};
    if (c.seed) j["seed"] = *c.seed;
    // output_dir stays out: where results land is not part of what was run
    return j;
}

// FNV-1a over the canonical dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
    std::string s = to_json(c).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline RubyLattice build_lattice(const RunConfig& c) {
    return build_ruby_lattice(c.rows, c.cols, c.boundary, c.hole, c.bulk_depth);
}

} // namespace rydberg
