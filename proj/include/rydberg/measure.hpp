#pragma once

// Observables: projective snapshot sampling, exact and statistical string
// parities, the quench path for X strings, order parameters (BFFM,
// area/perimeter scaling), connected correlators, vertex statistics, logical
// string reports on holed lattices, and the snapshot/report file formats.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rydberg/bitset.hpp"
#include "rydberg/dynamics.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/hilbert.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/operators.hpp"
#include "rydberg/rng.hpp"
#include "rydberg/strings.hpp"
#include "rydberg/version.hpp"

namespace rydberg {

struct Snapshot {
    Bitstring bits;
    double endpoint = 0;  // detuning over drive the state was prepared at
    std::uint64_t seed = 0;
};

struct ObservableReport {
    std::string observable;
    std::string label;
    double endpoint = 0;
    double estimate = 0;
    double std_error = 0;        // standard error of the per-repetition mean
    std::int64_t n_samples = 0;  // 0 for exact evaluations
    std::int64_t n_loop_instances = 1;
    bool defined = true;  // false when a normalization underflowed
};

namespace detail {

inline std::pair<double, double> mean_sem(const std::vector<double>& xs) {
    if (xs.empty()) return {0, 0};
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0};
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

inline Bitstring site_set_mask(int n_sites, const std::vector<int>& sites) {
    Bitstring m(n_sites);
    for (int s : sites) {
        if (s < 0 || s >= n_sites) throw std::out_of_range("string references a site outside the lattice");
        m.set(s);
    }
    return m;
}

} // namespace detail

// i.i.d. projective readouts from |amplitude|^2 by inverse-CDF sampling. Draw
// k depends only on (seed, k), so subsets and orderings are reproducible.
inline std::vector<Snapshot> sample_snapshots(const StateVector& psi, std::int64_t n,
                                              std::uint64_t seed, double endpoint = 0) {
    if (psi.dim() == 0) throw std::invalid_argument("sample_snapshots: empty state");
    if (std::abs(psi.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("sample_snapshots: state is not normalized");
    std::vector<double> cdf(psi.amp.size());
    double acc = 0;
    for (std::size_t i = 0; i < psi.amp.size(); ++i) {
        acc += std::norm(psi.amp[i]);
        cdf[i] = acc;
    }
    CounterRng rng(seed, 0);
    std::vector<Snapshot> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
        double u = rng.uniform(static_cast<std::uint64_t>(k)) * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::int64_t idx = it == cdf.end() ? static_cast<std::int64_t>(cdf.size()) - 1
                                           : it - cdf.begin();
        out.push_back(Snapshot{psi.basis->state_of(idx), endpoint, seed});
    }
    return out;
}

inline int z_parity_snap(const Snapshot& snap, const StringSpec& s) {
    if (s.kind != StringKind::Z)
        throw std::invalid_argument("z_parity_snap: spec is not a Z string");
    int par = 1;
    for (int site : s.sites) {
        if (site < 0 || site >= snap.bits.size())
            throw std::out_of_range("z_parity_snap: site outside snapshot");
        if (snap.bits.test(site)) par = -par;
    }
    return par;
}

// <psi| prod_{i in S} (1 - 2 n_i) |psi>
inline double z_parity_exact(const StateVector& psi, const StringSpec& s) {
    if (s.kind != StringKind::Z)
        throw std::invalid_argument("z_parity_exact: spec is not a Z string");
    Bitstring mask = detail::site_set_mask(psi.basis->n_sites(), s.sites);
    double acc = 0;
    for (std::int64_t k = 0; k < psi.dim(); ++k) {
        double w = std::norm(psi.amp[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        acc += (psi.basis->state_of(k).count_and(mask) & 1) ? -w : w;
    }
    return acc;
}

// Product of two diagonal strings: sites crossed twice square away, so the
// product is the Z string over the symmetric difference.
inline double z_pair_exact(const StateVector& psi, const StringSpec& a, const StringSpec& b) {
    if (a.kind != StringKind::Z || b.kind != StringKind::Z)
        throw std::invalid_argument("z_pair_exact: specs must be Z strings");
    int n = psi.basis->n_sites();
    Bitstring mask = detail::site_set_mask(n, a.sites) ^ detail::site_set_mask(n, b.sites);
    double acc = 0;
    for (std::int64_t k = 0; k < psi.dim(); ++k) {
        double w = std::norm(psi.amp[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        acc += (psi.basis->state_of(k).count_and(mask) & 1) ? -w : w;
    }
    return acc;
}

// An X string is a signed permutation of the unconstrained product space;
// restricted to a constrained basis each column keeps at most one image.
struct XColumnMap {
    std::vector<std::int64_t> image;  // -1 where the image leaves the basis
    std::vector<int> sign;
};

inline XColumnMap x_column_map(const Basis& b, const RubyLattice& lat, const StringSpec& s) {
    if (s.kind != StringKind::X)
        throw std::invalid_argument("x_column_map: spec is not an X string");
    if (s.steps.empty()) throw ConfigError("x_column_map: X string has no steps");
    {
        std::vector<int> tris;
        for (const auto& st : s.steps) tris.push_back(st.triangle);
        std::sort(tris.begin(), tris.end());
        if (std::adjacent_find(tris.begin(), tris.end()) != tris.end())
            throw ConfigError("x_column_map: steps visit a triangle twice");
    }
    XColumnMap m;
    m.image.assign(static_cast<std::size_t>(b.dim()), -1);
    m.sign.assign(static_cast<std::size_t>(b.dim()), 1);
    for (std::int64_t k = 0; k < b.dim(); ++k) {
        Bitstring t = b.state_of(k);
        int sg = apply_x_string(lat, s.steps, t);
        m.image[static_cast<std::size_t>(k)] = b.index_of(t);
        m.sign[static_cast<std::size_t>(k)] = sg;
    }
    return m;
}

inline SparseOperator x_operator(const Basis& b, const RubyLattice& lat, const StringSpec& s) {
    XColumnMap m = x_column_map(b, lat, s);
    std::vector<std::int64_t> row_src(static_cast<std::size_t>(b.dim()), -1);
    for (std::int64_t c = 0; c < b.dim(); ++c) {
        std::int64_t r = m.image[static_cast<std::size_t>(c)];
        if (r >= 0) row_src[static_cast<std::size_t>(r)] = c;
    }
    return SparseBuilder::assemble(b.dim(), [&](std::int64_t r, auto&& emit) {
        std::int64_t c = row_src[static_cast<std::size_t>(r)];
        if (c >= 0) emit(c, cplx(m.sign[static_cast<std::size_t>(c)], 0));
    });
}

inline double x_parity_exact(const StateVector& psi, const RubyLattice& lat,
                             const StringSpec& s) {
    XColumnMap m = x_column_map(*psi.basis, lat, s);
    cplx acc = 0;
    for (std::int64_t c = 0; c < psi.dim(); ++c) {
        std::int64_t r = m.image[static_cast<std::size_t>(c)];
        if (r < 0) continue;
        acc += std::conj(psi.amp[static_cast<std::size_t>(r)]) *
               cplx(m.sign[static_cast<std::size_t>(c)], 0) * psi.amp[static_cast<std::size_t>(c)];
    }
    return std::real(acc);
}

struct SampleSpec {
    std::int64_t n = 0;  // 0 requests exact evaluation
    std::uint64_t seed = 0;
};

// Rotate into the measurement basis, then read the dual Z string. Exact mode
// equals x_parity_exact under the ideal quench.
inline ObservableReport x_parity_via_quench(const StateVector& psi, const RubyLattice& lat,
                                            const QuenchSpec& q, const StringSpec& s,
                                            const SampleSpec& est = {}, double endpoint = 0,
                                            const EvolveOptions& opt = {}) {
    StateVector rotated = apply_quench(psi, lat, q, opt);
    StringSpec dual = dual_string(lat, s);
    ObservableReport r;
    r.observable = "x_via_quench";
    r.label = s.label;
    r.endpoint = endpoint;
    if (est.n <= 0) {
        r.estimate = z_parity_exact(rotated, dual);
        return r;
    }
    auto snaps = sample_snapshots(rotated, est.n, est.seed, endpoint);
    std::vector<double> ps;
    ps.reserve(snaps.size());
    for (const auto& sn : snaps) ps.push_back(z_parity_snap(sn, dual));
    auto [mean, sem] = detail::mean_sem(ps);
    r.estimate = mean;
    r.std_error = sem;
    r.n_samples = est.n;
    return r;
}

// Open-string estimate normalized by the square root of its closed
// completion. Undefined when the closed estimate is inside the noise floor.
inline std::optional<double> bffm(double open_estimate, double closed_estimate,
                                  double eps = 1e-3) {
    if (std::abs(closed_estimate) < eps) return std::nullopt;
    return open_estimate / std::sqrt(std::abs(closed_estimate));
}

// Loop instances that may be averaged together: same template, same block.
inline std::string family_key(const StringSpec& s) {
    auto pos = s.label.rfind('#');
    return pos == std::string::npos ? s.template_name : s.template_name + s.label.substr(pos);
}

inline std::map<std::string, std::vector<const StringSpec*>> group_by_family(
    const std::vector<StringSpec>& loops) {
    std::map<std::string, std::vector<const StringSpec*>> out;
    for (const auto& s : loops) out[family_key(s)].push_back(&s);
    return out;
}

// Averaging convention for repeated measurements: equivalent loops are
// averaged within each repetition first; the standard error is taken over
// repetitions.
inline ObservableReport family_report_snaps(const std::string& observable,
                                            const std::string& family_label, double endpoint,
                                            const std::vector<Snapshot>& snaps,
                                            const std::vector<const StringSpec*>& loops) {
    if (snaps.empty()) throw ConfigError("family_report_snaps: empty snapshot set");
    if (loops.empty()) throw ConfigError("family_report_snaps: no loop instances");
    std::vector<double> per_rep;
    per_rep.reserve(snaps.size());
    for (const auto& sn : snaps) {
        double acc = 0;
        for (const StringSpec* l : loops) acc += z_parity_snap(sn, *l);
        per_rep.push_back(acc / static_cast<double>(loops.size()));
    }
    auto [mean, sem] = detail::mean_sem(per_rep);
    ObservableReport r;
    r.observable = observable;
    r.label = family_label;
    r.endpoint = endpoint;
    r.estimate = mean;
    r.std_error = sem;
    r.n_samples = static_cast<std::int64_t>(snaps.size());
    r.n_loop_instances = static_cast<std::int64_t>(loops.size());
    return r;
}

inline ObservableReport family_report_exact(const std::string& observable,
                                            const std::string& family_label, double endpoint,
                                            const StateVector& psi, const RubyLattice& lat,
                                            const std::vector<const StringSpec*>& loops) {
    if (loops.empty()) throw ConfigError("family_report_exact: no loop instances");
    double acc = 0;
    for (const StringSpec* l : loops)
        acc += l->kind == StringKind::Z ? z_parity_exact(psi, *l) : x_parity_exact(psi, lat, *l);
    ObservableReport r;
    r.observable = observable;
    r.label = family_label;
    r.endpoint = endpoint;
    r.estimate = acc / static_cast<double>(loops.size());
    r.n_loop_instances = static_cast<std::int64_t>(loops.size());
    return r;
}

// Vertices whose full star lies at least min_layer triangles deep.
inline std::vector<int> bulk_vertices(const RubyLattice& lat, int min_layer = 0) {
    std::vector<int> out;
    for (std::size_t v = 0; v < lat.vertices.size(); ++v) {
        const VertexInfo& vi = lat.vertices[v];
        if (!vi.full()) continue;
        int layer = kNoBoundaryLayer;
        for (int t : vi.tris) layer = std::min(layer, lat.triangles[static_cast<std::size_t>(t)].layer);
        if (layer >= min_layer) out.push_back(static_cast<int>(v));
    }
    return out;
}

inline std::vector<int> bulk_sites(const RubyLattice& lat, int min_layer = 0) {
    std::vector<int> out;
    for (int s = 0; s < lat.n_sites(); ++s)
        if (lat.triangles[static_cast<std::size_t>(lat.sites[static_cast<std::size_t>(s)].triangle)].layer >= min_layer)
            out.push_back(s);
    return out;
}

struct VertexStats {
    double monomer = 0;      // no touching dimer
    double single_dimer = 0; // exactly one
    double multi_dimer = 0;  // two or more
    std::int64_t n_vertices = 0;
};

inline VertexStats vertex_stats(const std::vector<Snapshot>& snaps, const RubyLattice& lat,
                                int min_layer = 0) {
    if (snaps.empty()) throw ConfigError("vertex_stats: empty snapshot set");
    std::vector<int> verts = bulk_vertices(lat, min_layer);
    VertexStats st;
    st.n_vertices = static_cast<std::int64_t>(verts.size());
    if (verts.empty()) return st;
    std::int64_t counts[3] = {0, 0, 0};
    for (const auto& sn : snaps)
        for (int v : verts) {
            int c = sn.bits.count_and(lat.star_mask(v));
            counts[c > 2 ? 2 : c] += 1;
        }
    double tot = static_cast<double>(snaps.size()) * static_cast<double>(verts.size());
    st.monomer = counts[0] / tot;
    st.single_dimer = counts[1] / tot;
    st.multi_dimer = counts[2] / tot;
    return st;
}

inline VertexStats vertex_stats_exact(const StateVector& psi, const RubyLattice& lat,
                                      int min_layer = 0) {
    std::vector<int> verts = bulk_vertices(lat, min_layer);
    VertexStats st;
    st.n_vertices = static_cast<std::int64_t>(verts.size());
    if (verts.empty()) return st;
    double counts[3] = {0, 0, 0};
    for (std::int64_t k = 0; k < psi.dim(); ++k) {
        double w = std::norm(psi.amp[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        const Bitstring& b = psi.basis->state_of(k);
        for (int v : verts) {
            int c = b.count_and(lat.star_mask(v));
            counts[c > 2 ? 2 : c] += w;
        }
    }
    double nv = static_cast<double>(verts.size());
    st.monomer = counts[0] / nv;
    st.single_dimer = counts[1] / nv;
    st.multi_dimer = counts[2] / nv;
    return st;
}

inline std::vector<double> site_density(const StateVector& psi) {
    std::vector<double> out(static_cast<std::size_t>(psi.basis->n_sites()), 0.0);
    for (std::int64_t k = 0; k < psi.dim(); ++k) {
        double w = std::norm(psi.amp[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        const Bitstring& b = psi.basis->state_of(k);
        for (int s = 0; s < psi.basis->n_sites(); ++s)
            if (b.test(s)) out[static_cast<std::size_t>(s)] += w;
    }
    return out;
}

inline std::vector<double> site_density(const std::vector<Snapshot>& snaps, int n_sites) {
    if (snaps.empty()) throw ConfigError("site_density: empty snapshot set");
    std::vector<double> out(static_cast<std::size_t>(n_sites), 0.0);
    for (const auto& sn : snaps)
        for (int s = 0; s < n_sites; ++s)
            if (sn.bits.test(s)) out[static_cast<std::size_t>(s)] += 1;
    for (auto& x : out) x /= static_cast<double>(snaps.size());
    return out;
}

inline double mean_density(const std::vector<double>& per_site, const std::vector<int>& sites) {
    if (sites.empty()) throw ConfigError("mean_density: empty site selection");
    double acc = 0;
    for (int s : sites) acc += per_site[static_cast<std::size_t>(s)];
    return acc / static_cast<double>(sites.size());
}

// Connected parity correlators of diagonal strings. The same functions serve
// the quench path: evaluate them on the rotated state with the dual strings.
inline double g2_z_exact(const StateVector& psi, const StringSpec& a, const StringSpec& b) {
    int n = psi.basis->n_sites();
    Bitstring ma = detail::site_set_mask(n, a.sites), mb = detail::site_set_mask(n, b.sites);
    double pa = 0, pb = 0, pab = 0;
    for (std::int64_t k = 0; k < psi.dim(); ++k) {
        double w = std::norm(psi.amp[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        const Bitstring& s = psi.basis->state_of(k);
        double xa = (s.count_and(ma) & 1) ? -1 : 1;
        double xb = (s.count_and(mb) & 1) ? -1 : 1;
        pa += w * xa;
        pb += w * xb;
        pab += w * xa * xb;
    }
    return pab - pa * pb;
}

inline double g3_z_exact(const StateVector& psi, const StringSpec& a, const StringSpec& b,
                         const StringSpec& c) {
    int n = psi.basis->n_sites();
    Bitstring ms[3] = {detail::site_set_mask(n, a.sites), detail::site_set_mask(n, b.sites),
                       detail::site_set_mask(n, c.sites)};
    double p[3] = {0, 0, 0}, pp[3] = {0, 0, 0}, pabc = 0;  // pp: ab, bc, ca
    for (std::int64_t k = 0; k < psi.dim(); ++k) {
        double w = std::norm(psi.amp[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        const Bitstring& s = psi.basis->state_of(k);
        double x[3];
        for (int i = 0; i < 3; ++i) x[i] = (s.count_and(ms[i]) & 1) ? -1 : 1;
        for (int i = 0; i < 3; ++i) {
            p[i] += w * x[i];
            pp[i] += w * x[i] * x[(i + 1) % 3];
        }
        pabc += w * x[0] * x[1] * x[2];
    }
    double g2[3];
    for (int i = 0; i < 3; ++i) g2[i] = pp[i] - p[i] * p[(i + 1) % 3];
    return pabc - g2[0] * p[2] - g2[1] * p[0] - g2[2] * p[1] - p[0] * p[1] * p[2];
}

inline double g2_z_snaps(const std::vector<Snapshot>& snaps, const StringSpec& a,
                         const StringSpec& b) {
    if (snaps.empty()) throw ConfigError("g2_z_snaps: empty snapshot set");
    double pa = 0, pb = 0, pab = 0;
    for (const auto& sn : snaps) {
        double xa = z_parity_snap(sn, a), xb = z_parity_snap(sn, b);
        pa += xa;
        pb += xb;
        pab += xa * xb;
    }
    double n = static_cast<double>(snaps.size());
    return pab / n - (pa / n) * (pb / n);
}

inline double g3_z_snaps(const std::vector<Snapshot>& snaps, const StringSpec& a,
                         const StringSpec& b, const StringSpec& c) {
    if (snaps.empty()) throw ConfigError("g3_z_snaps: empty snapshot set");
    const StringSpec* ss[3] = {&a, &b, &c};
    double p[3] = {0, 0, 0}, pp[3] = {0, 0, 0}, pabc = 0;
    for (const auto& sn : snaps) {
        double x[3];
        for (int i = 0; i < 3; ++i) x[i] = z_parity_snap(sn, *ss[i]);
        for (int i = 0; i < 3; ++i) {
            p[i] += x[i];
            pp[i] += x[i] * x[(i + 1) % 3];
        }
        pabc += x[0] * x[1] * x[2];
    }
    double n = static_cast<double>(snaps.size());
    pabc /= n;
    for (int i = 0; i < 3; ++i) {
        p[i] /= n;
        pp[i] /= n;
    }
    double g2[3];
    for (int i = 0; i < 3; ++i) g2[i] = pp[i] - p[i] * p[(i + 1) % 3];
    return pabc - g2[0] * p[2] - g2[1] * p[0] - g2[2] * p[1] - p[0] * p[1] * p[2];
}

struct ScalingRow {
    std::string label;
    double estimate = 0;
    int area = 0;
    int perimeter = 0;
    double per_area_root = 0;
    double per_perimeter_root = 0;
    bool zero = false;
};

inline ScalingRow scaling_row(const StringSpec& s, double estimate) {
    ScalingRow r;
    r.label = s.label;
    r.estimate = estimate;
    r.area = s.area();
    r.perimeter = s.perimeter();
    if (r.area <= 0 || r.perimeter <= 0)
        throw ConfigError("scaling_row: loop has nonpositive area or perimeter");
    r.zero = std::abs(estimate) < 1e-300;
    if (!r.zero) {
        r.per_area_root = std::pow(std::abs(estimate), 1.0 / r.area);
        r.per_perimeter_root = std::pow(std::abs(estimate), 1.0 / r.perimeter);
    }
    return r;
}

// Independent per-vertex flip model: each enclosed vertex flips the loop
// parity with probability p. Sample k is a pure function of (seed, k).
inline std::vector<int> simulate_defect_parities(int area, double p, std::int64_t n,
                                                 std::uint64_t seed, std::uint64_t stream = 1) {
    if (area < 0 || p < 0 || p > 1) throw ConfigError("simulate_defect_parities: bad parameters");
    CounterRng rng(seed, stream);
    std::vector<int> out(static_cast<std::size_t>(n), 1);
    for (std::int64_t k = 0; k < n; ++k) {
        int par = 1;
        for (int v = 0; v < area; ++v)
            if (rng.uniform(static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(area) +
                            static_cast<std::uint64_t>(v)) < p)
                par = -par;
        out[static_cast<std::size_t>(k)] = par;
    }
    return out;
}

// Revival peak of a parity-vs-time curve. The unquenched value can dominate
// the curve, so the argmax is taken only after the initial collapse: find the
// first local minimum, then the maximum of the remainder.
inline std::size_t revival_index(const std::vector<double>& curve) {
    if (curve.size() < 3) throw ConfigError("revival_index: need at least three samples");
    std::size_t dip = 0;  // no interior dip: the global argmax is the revival
    for (std::size_t i = 1; i + 1 < curve.size(); ++i)
        if (curve[i] <= curve[i - 1] && curve[i] <= curve[i + 1]) {
            dip = i;
            break;
        }
    std::size_t best = dip;
    for (std::size_t i = dip; i < curve.size(); ++i)
        if (curve[i] > curve[best]) best = i;
    return best;
}

inline double sector_weight(const StateVector& psi, const std::vector<std::int64_t>& sector) {
    double acc = 0;
    for (std::int64_t i : sector) acc += std::norm(psi.amp[static_cast<std::size_t>(i)]);
    return acc;
}

// Logical string reports on a holed lattice: hole-to-boundary Z strings, the
// hole-encircling X loop, and pairwise Z products.
inline std::vector<ObservableReport> logical_reports(const StateVector& psi,
                                                     const RubyLattice& lat,
                                                     const std::vector<StringSpec>& specs,
                                                     double endpoint = 0) {
    std::vector<const StringSpec*> zrays;
    std::vector<ObservableReport> out;
    for (const auto& s : specs) {
        if (s.kind == StringKind::Z && !s.closed) {
            bool hole_end = s.endpoint_faces[0] == kFaceHole || s.endpoint_faces[1] == kFaceHole;
            bool outer_end = s.endpoint_faces[0] == kFaceOuter || s.endpoint_faces[1] == kFaceOuter;
            if (!hole_end || !outer_end)
                throw ConfigError("logical_reports: Z string endpoints must join the hole to the outer boundary");
            ObservableReport r;
            r.observable = "z_logical";
            r.label = s.label;
            r.endpoint = endpoint;
            r.estimate = z_parity_exact(psi, s);
            out.push_back(std::move(r));
            zrays.push_back(&s);
        } else if (s.kind == StringKind::X && s.closed) {
            ObservableReport r;
            r.observable = "x_logical";
            r.label = s.label;
            r.endpoint = endpoint;
            r.estimate = x_parity_exact(psi, lat, s);
            out.push_back(std::move(r));
        } else {
            throw ConfigError("logical_reports: expected open Z strings or closed X loops");
        }
    }
    for (std::size_t i = 0; i < zrays.size(); ++i)
        for (std::size_t j = i + 1; j < zrays.size(); ++j) {
            ObservableReport r;
            r.observable = "z_logical_pair";
            r.label = zrays[i]->label + "*" + zrays[j]->label;
            r.endpoint = endpoint;
            r.estimate = z_pair_exact(psi, *zrays[i], *zrays[j]);
            out.push_back(std::move(r));
        }
    return out;
}

// Snapshot files: '#' headers, then one record per line,
// "<bits>\t<endpoint>\t<seed>".
inline void write_snapshots(std::ostream& os, const std::vector<Snapshot>& snaps,
                            const std::string& config_hash) {
    os << "# rubysim snapshots v" << version_string << "\n";
    os << "# config " << config_hash << "\n";
    char buf[64];
    for (const auto& sn : snaps) {
        std::snprintf(buf, sizeof buf, "%.17g\t%llu", sn.endpoint,
                      static_cast<unsigned long long>(sn.seed));
        os << sn.bits.to_string() << '\t' << buf << '\n';
    }
}

inline std::vector<Snapshot> read_snapshots(std::istream& is, int n_sites) {
    std::vector<Snapshot> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string bits, ep, seed;
        if (!std::getline(ls, bits, '\t') || !std::getline(ls, ep, '\t') ||
            !std::getline(ls, seed, '\t'))
            throw ConfigError("snapshot line " + std::to_string(lineno) +
                              ": expected <bits>\\t<endpoint>\\t<seed>");
        if (static_cast<int>(bits.size()) != n_sites)
            throw ConfigError("snapshot line " + std::to_string(lineno) + ": width " +
                              std::to_string(bits.size()) + " does not match lattice (" +
                              std::to_string(n_sites) + " sites)");
        Snapshot sn;
        try {
            sn.bits = Bitstring::from_string(bits);
            sn.endpoint = std::stod(ep);
            sn.seed = std::stoull(seed);
        } catch (const std::exception& e) {
            throw ConfigError("snapshot line " + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(std::move(sn));
    }
    return out;
}

// Report CSV: '#' headers with version and config hash, then
// observable,label,endpoint,estimate,stderr,n_samples rows.
inline void write_report_csv(std::ostream& os, const std::vector<ObservableReport>& rows,
                             const std::string& config_hash) {
    os << "# rubysim report v" << version_string << "\n";
    os << "# config " << config_hash << "\n";
    os << "observable,label,endpoint,estimate,stderr,n_samples\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%lld", r.endpoint, r.estimate,
                      r.std_error, static_cast<long long>(r.n_samples));
        os << r.observable << ',' << r.label << ',' << buf;
        if (!r.defined) os << ",undefined";
        os << '\n';
    }
}

} // namespace rydberg
