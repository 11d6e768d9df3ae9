#pragma once

// Rydberg Hamiltonians on a blockade-constrained basis:
//
//   H = (omega/2) sum_i (e^{i phi} |r_i><g_i| + e^{-i phi} |g_i><r_i|)
//       - delta sum_i n_i  (+ sum_{i<j} V_ij n_i n_j for the truncated model)
//
// The drive connects basis states differing at exactly one site; flips that
// leave the constrained space are projected out by basis lookup. In the
// blockade model interactions inside the blockade radius become the
// constraint itself; the truncated van der Waals model keeps only the
// intra-triangle constraint and carries V_ij = omega (rb/d_ij)^6 explicitly
// out to a truncation radius.

#include <cmath>
#include <complex>
#include <vector>

#include "rydberg/hilbert.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/operators.hpp"

namespace rydberg {

struct DriveParams {
    double omega = 1.0;
    double delta = 0.0;
    double phase = 0.0;
};

// Drive at unit omega plus diagonal pieces, kept separate so sweeps can
// rescale (omega, delta) without reassembly.
struct HamiltonianTerms {
    SparseOperator drive;          // off-diagonal part at omega = 1
    std::vector<double> n_exc;     // excitation count per basis state
    std::vector<double> v_diag;    // interaction diagonal in units of omega

    std::int64_t dim() const { return drive.dim; }

    LinearMap at(double omega, double delta) const {
        return {dim(), [this, omega, delta](const cplx* x, cplx* y) {
                    drive.apply(x, y);
                    for (std::int64_t k = 0; k < dim(); ++k) {
                        auto ks = static_cast<std::size_t>(k);
                        y[k] = omega * y[k] + (omega * v_diag[ks] - delta * n_exc[ks]) * x[k];
                    }
                }};
    }

    SparseOperator assemble(double omega, double delta) const {
        return SparseBuilder::assemble(dim(), [&](std::int64_t r, auto&& emit) {
            auto rs = static_cast<std::size_t>(r);
            for (std::int64_t k = drive.row_ptr[r]; k < drive.row_ptr[r + 1]; ++k)
                emit(drive.col[static_cast<std::size_t>(k)],
                     omega * drive.val[static_cast<std::size_t>(k)]);
            emit(r, cplx(omega * v_diag[rs] - delta * n_exc[rs], 0));
        });
    }
};

namespace detail {

inline SparseOperator build_drive(const Basis& basis, double phase) {
    cplx up = 0.5 * std::exp(cplx(0, phase));    // <s|H|s'> with s = s' + one atom
    cplx down = 0.5 * std::exp(cplx(0, -phase)); // <s|H|s'> with s = s' - one atom
    return SparseBuilder::assemble(basis.dim(), [&](std::int64_t r, auto&& emit) {
        Bitstring s = basis.state_of(r);
        for (int i = 0; i < basis.n_sites(); ++i) {
            s.flip(i);
            std::int64_t c = basis.index_of(s);
            bool had = !s.test(i);
            s.flip(i);
            if (c >= 0) emit(c, had ? up : down);
        }
        return;
    });
}

} // namespace detail

inline HamiltonianTerms build_pxp_terms(const Basis& basis, double phase = 0.0) {
    HamiltonianTerms t;
    t.drive = detail::build_drive(basis, phase);
    t.n_exc.reserve(static_cast<std::size_t>(basis.dim()));
    for (std::int64_t k = 0; k < basis.dim(); ++k)
        t.n_exc.push_back(static_cast<double>(basis.state_of(k).count()));
    t.v_diag.assign(static_cast<std::size_t>(basis.dim()), 0.0);
    return t;
}

// Interaction diagonal for the truncated model; soft pairs only, the hard
// (same-triangle) pairs are the basis constraint.
inline HamiltonianTerms build_vdw_terms(const Basis& basis, const RubyLattice& lat, double rb,
                                        double r_trunc, double phase = 0.0) {
    HamiltonianTerms t = build_pxp_terms(basis, phase);
    auto pairs = interaction_list(lat, rb, r_trunc);
    for (std::int64_t k = 0; k < basis.dim(); ++k) {
        const Bitstring& s = basis.state_of(k);
        double acc = 0;
        for (const auto& e : pairs)
            if (!e.hard && s.test(e.i) && s.test(e.j)) acc += e.v;
        t.v_diag[static_cast<std::size_t>(k)] = acc;
    }
    return t;
}

inline SparseOperator build_pxp(const Basis& basis, const DriveParams& p) {
    return build_pxp_terms(basis, p.phase).assemble(p.omega, p.delta);
}

inline SparseOperator build_vdw(const Basis& basis, const RubyLattice& lat, const DriveParams& p,
                                double rb, double r_trunc) {
    return build_vdw_terms(basis, lat, rb, r_trunc, p.phase).assemble(p.omega, p.delta);
}

// Preparation waveform: linear drive ramp-on at held detuning, cubic Hermite
// detuning sweep with zero endpoint slopes, optional linear drive ramp-off.
struct SweepSchedule {
    double omega_max = 1.0;
    double delta_min = -2.86;
    double delta_max = 5.0;
    double t_ramp_on = 0.0;
    double t_sweep = 1.0;
    double t_ramp_off = 0.0;

    double total() const { return t_ramp_on + t_sweep + t_ramp_off; }

    DriveParams eval(double t) const {
        if (t < -1e-12 || t > total() * (1 + 1e-12))
            throw ConfigError("SweepSchedule::eval: time outside schedule");
        DriveParams p;
        if (t <= t_ramp_on) {
            p.omega = t_ramp_on > 0 ? omega_max * t / t_ramp_on : omega_max;
            p.delta = delta_min;
        } else if (t <= t_ramp_on + t_sweep) {
            double s = (t - t_ramp_on) / t_sweep;
            p.omega = omega_max;
            p.delta = delta_min + (delta_max - delta_min) * s * s * (3 - 2 * s);
        } else {
            double s = (t - t_ramp_on - t_sweep) / t_ramp_off;
            p.omega = omega_max * (1 - s);
            p.delta = delta_max;
        }
        return p;
    }

    // Time within the sweep segment at which delta/omega_max reaches the
    // endpoint. Monotone cubic, solved by bisection.
    double time_at_endpoint(double endpoint) const {
        double target = endpoint * omega_max;
        if (target < delta_min - 1e-12 || target > delta_max + 1e-12)
            throw ConfigError("SweepSchedule: endpoint outside detuning range");
        double lo = 0, hi = 1;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double d = delta_min + (delta_max - delta_min) * mid * mid * (3 - 2 * mid);
            (d < target ? lo : hi) = mid;
        }
        return t_ramp_on + 0.5 * (lo + hi) * t_sweep;
    }
};

} // namespace rydberg
