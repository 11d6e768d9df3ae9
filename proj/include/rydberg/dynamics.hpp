#pragma once

// State-vector propagation and eigensolvers. Dense eigendecomposition below a
// dimension cutoff, adaptive Lanczos/Krylov propagation above it, a midpoint
// integrator for time-dependent generators, the cubic-sweep driver, and the
// quench rotation that re-embeds a state into a reduced-blockade basis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/hamiltonian.hpp"
#include "rydberg/hilbert.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/operators.hpp"
#include "rydberg/rng.hpp"

namespace rydberg {

struct StateVector {
    std::shared_ptr<const Basis> basis;
    std::vector<cplx> amp;

    std::int64_t dim() const { return static_cast<std::int64_t>(amp.size()); }

    double norm() const {
        double s = 0;
        for (const cplx& z : amp) s += std::norm(z);
        return std::sqrt(s);
    }
};

inline StateVector basis_state(std::shared_ptr<const Basis> basis, std::int64_t index) {
    StateVector s{std::move(basis), {}};
    if (index < 0 || index >= s.basis->dim())
        throw std::out_of_range("basis_state: index out of range");
    s.amp.assign(static_cast<std::size_t>(s.basis->dim()), cplx(0));
    s.amp[static_cast<std::size_t>(index)] = 1.0;
    return s;
}

// The all-ground configuration. It is the first basis state by construction.
inline StateVector vacuum_state(std::shared_ptr<const Basis> basis) {
    if (!basis || basis->dim() == 0) throw std::invalid_argument("vacuum_state: empty basis");
    if (!basis->state_of(0).none())
        throw std::logic_error("vacuum_state: basis does not start at the empty configuration");
    return basis_state(std::move(basis), 0);
}

struct EvolveOptions {
    int krylov_dim = 30;
    double krylov_tol = 1e-10;     // local error target per accepted step
    std::int64_t dense_cutoff = 2000;
};

namespace detail {

inline cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
    return s;
}

inline double nrm(const std::vector<cplx>& v) {
    double s = 0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

inline std::vector<cplx> random_unit(std::int64_t dim, std::uint64_t seed, std::uint64_t stream) {
    CounterRng rng(seed, stream);
    std::vector<cplx> x(static_cast<std::size_t>(dim));
    for (std::int64_t i = 0; i < dim; ++i)
        x[static_cast<std::size_t>(i)] = cplx(rng.uniform(2 * static_cast<std::uint64_t>(i)) - 0.5,
                                              rng.uniform(2 * static_cast<std::uint64_t>(i) + 1) - 0.5);
    double n = nrm(x);
    for (auto& z : x) z /= n;
    return x;
}

inline Eigen::MatrixXcd to_dense(const SparseOperator& h) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(h.dim, h.dim);
    for (std::int64_t r = 0; r < h.dim; ++r)
        for (std::int64_t k = h.row_ptr[static_cast<std::size_t>(r)];
             k < h.row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
            m(r, h.col[static_cast<std::size_t>(k)]) += h.val[static_cast<std::size_t>(k)];
    return m;
}

// u = exp(-i h T) e1 for the real symmetric tridiagonal T described by
// diag a[0..m-1] and subdiag b[0..m-2].
inline Eigen::VectorXcd expm_tridiag_e1(const std::vector<double>& a, const std::vector<double>& b,
                                        int m, double h) {
    Eigen::VectorXd diag(m), sub(std::max(0, m - 1));
    for (int i = 0; i < m; ++i) diag[i] = a[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i) sub[i] = b[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(m);
    for (int k = 0; k < m; ++k) {
        cplx ph = std::exp(cplx(0, -es.eigenvalues()[k] * h)) * es.eigenvectors()(0, k);
        for (int i = 0; i < m; ++i) u[i] += es.eigenvectors()(i, k) * ph;
    }
    return u;
}

struct LanczosData {
    std::vector<std::vector<cplx>> v;  // m orthonormal basis vectors
    std::vector<double> alpha;         // m diagonal entries
    std::vector<double> beta;          // m-1 couplings
    double next_beta = 0;              // coupling out of the subspace
    bool invariant = false;            // breakdown: subspace is exactly invariant
    int m = 0;
};

// Lanczos recurrence with full reorthogonalization. v0 must be normalized.
// After each completed column, stop(data) may end the build early. Vectors in
// locked (if given) are projected out of every product, deflating converged
// eigenpairs.
template <class Stop>
inline LanczosData lanczos(const LinearMap& H, std::vector<cplx> v0, int mmax,
                           const std::vector<std::vector<cplx>>* locked, Stop&& stop,
                           int reorth_passes) {
    const std::int64_t dim = H.dim;
    LanczosData d;
    d.v.push_back(std::move(v0));
    std::vector<cplx> w(static_cast<std::size_t>(dim));
    double scale = 1;
    for (int j = 0; j < mmax; ++j) {
        H.apply(d.v[static_cast<std::size_t>(j)].data(), w.data());
        if (locked)
            for (const auto& l : *locked) {
                cplx c = dot(l, w);
                for (std::int64_t i = 0; i < dim; ++i) w[static_cast<std::size_t>(i)] -= c * l[static_cast<std::size_t>(i)];
            }
        double aj = std::real(dot(d.v[static_cast<std::size_t>(j)], w));
        d.alpha.push_back(aj);
        for (int pass = 0; pass < reorth_passes; ++pass)
            for (int i = 0; i <= j; ++i) {
                cplx c = dot(d.v[static_cast<std::size_t>(i)], w);
                const auto& vi = d.v[static_cast<std::size_t>(i)];
                for (std::int64_t t = 0; t < dim; ++t) w[static_cast<std::size_t>(t)] -= c * vi[static_cast<std::size_t>(t)];
            }
        double bj = nrm(w);
        scale = std::max({scale, std::abs(aj), bj});
        d.m = j + 1;
        d.next_beta = bj;
        if (bj <= 1e-13 * scale) {
            d.invariant = true;
            d.next_beta = 0;
            return d;
        }
        if (j + 1 == mmax) break;
        if (stop(d)) break;
        d.beta.push_back(bj);
        std::vector<cplx> vn(static_cast<std::size_t>(dim));
        for (std::int64_t i = 0; i < dim; ++i) vn[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / bj;
        d.v.push_back(std::move(vn));
    }
    return d;
}

// psi <- exp(-i H t) psi by adaptive-step Lanczos propagation.
inline void krylov_propagate(const LinearMap& H, std::vector<cplx>& psi, double t,
                             const EvolveOptions& opt) {
    if (t == 0 || psi.empty()) return;
    const std::int64_t dim = H.dim;
    if (static_cast<std::int64_t>(psi.size()) != dim)
        throw std::invalid_argument("krylov_propagate: dimension mismatch");
    const int mmax = static_cast<int>(std::min<std::int64_t>(std::max(2, opt.krylov_dim), dim));

    double done = 0;
    double h = t;
    int guard = 0;
    while (std::abs(t - done) > 1e-14 * (1.0 + std::abs(t))) {
        if (++guard > 1000000)
            throw ConvergenceError("krylov_propagate: substep loop stalled", std::abs(t - done),
                                   opt.krylov_tol);
        double rem = t - done;
        if (std::abs(h) > std::abs(rem) || h * rem <= 0) h = rem;

        double beta0 = nrm(psi);
        if (beta0 == 0) return;
        std::vector<cplx> v0(psi.size());
        for (std::size_t i = 0; i < psi.size(); ++i) v0[i] = psi[i] / beta0;

        Eigen::VectorXcd u;
        double err = 0;
        bool accepted = false;
        auto stop = [&](const LanczosData& d) {
            if (d.m < 4 || d.m % 3 != 0) return false;
            u = expm_tridiag_e1(d.alpha, d.beta, d.m, h);
            err = std::abs(h) * d.next_beta * std::abs(u[d.m - 1]);
            accepted = err <= opt.krylov_tol;
            return accepted;
        };
        LanczosData d = lanczos(H, std::move(v0), mmax, nullptr, stop, 1);

        if (d.invariant) {
            // exact within the invariant subspace: finish the interval
            h = rem;
            u = expm_tridiag_e1(d.alpha, d.beta, d.m, h);
            err = 0;
            accepted = true;
        } else if (!accepted) {
            u = expm_tridiag_e1(d.alpha, d.beta, d.m, h);
            err = std::abs(h) * d.next_beta * std::abs(u[d.m - 1]);
            while (err > opt.krylov_tol) {
                h *= 0.5;
                if (std::abs(h) < 1e-12 * (1.0 + std::abs(t)))
                    throw ConvergenceError("krylov_propagate: step size underflow", err,
                                           opt.krylov_tol);
                u = expm_tridiag_e1(d.alpha, d.beta, d.m, h);
                err = std::abs(h) * d.next_beta * std::abs(u[d.m - 1]);
            }
        }

        std::fill(psi.begin(), psi.end(), cplx(0));
        for (int j = 0; j < d.m; ++j) {
            cplx c = beta0 * cplx(u[j]);
            const auto& vj = d.v[static_cast<std::size_t>(j)];
            for (std::int64_t i = 0; i < dim; ++i) psi[static_cast<std::size_t>(i)] += c * vj[static_cast<std::size_t>(i)];
        }
        done += h;
        if (!d.invariant && err < 0.01 * opt.krylov_tol) h *= 2;
    }
}

inline void evolve_dense(const SparseOperator& H, std::vector<cplx>& amp, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense(H));
    if (es.info() != Eigen::Success)
        throw ConvergenceError("evolve: dense eigendecomposition failed", 1.0, 0.0);
    Eigen::Map<Eigen::VectorXcd> x(amp.data(), static_cast<Eigen::Index>(amp.size()));
    Eigen::VectorXcd y = es.eigenvectors().adjoint() * x;
    for (Eigen::Index k = 0; k < y.size(); ++k)
        y[k] *= std::exp(cplx(0, -es.eigenvalues()[k] * t));
    x = es.eigenvectors() * y;
}

// Randomized two-sided probe: <u|H|v> must equal <Hu|v>. Exact defect scan
// below the dense cutoff, two extra products above it.
inline void require_hermitian(const SparseOperator& h) {
    if (h.dim <= 2000) {
        double defect = h.hermiticity_defect();
        if (defect > 1e-10)
            throw std::invalid_argument("Hamiltonian is not Hermitian (defect " +
                                        std::to_string(defect) + ")");
        return;
    }
    auto u = random_unit(h.dim, 0x48657262ull, 1);
    auto v = random_unit(h.dim, 0x48657262ull, 2);
    std::vector<cplx> hu(u.size()), hv(v.size());
    h.apply(u.data(), hu.data());
    h.apply(v.data(), hv.data());
    double defect = std::abs(dot(u, hv) - dot(hu, v));
    if (defect > 1e-10 * (nrm(hu) + nrm(hv) + 1))
        throw std::invalid_argument("Hamiltonian is not Hermitian (probe defect " +
                                    std::to_string(defect) + ")");
}

} // namespace detail

inline double expectation(const LinearMap& H, const std::vector<cplx>& x) {
    std::vector<cplx> y(x.size());
    H.apply(x.data(), y.data());
    return std::real(detail::dot(x, y));
}

inline double expectation(const SparseOperator& H, const std::vector<cplx>& x) {
    std::vector<cplx> y(x.size());
    H.apply(x.data(), y.data());
    return std::real(detail::dot(x, y));
}

inline cplx inner(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
    return detail::dot(a.amp, b.amp);
}

// psi <- exp(-i H t) psi
inline void evolve(StateVector& psi, const SparseOperator& H, double t,
                   const EvolveOptions& opt = {}) {
    if (H.dim != psi.dim()) throw std::invalid_argument("evolve: dimension mismatch");
    detail::require_hermitian(H);
    if (H.dim <= opt.dense_cutoff) {
        detail::evolve_dense(H, psi.amp, t);
    } else {
        LinearMap m = as_map(H);
        detail::krylov_propagate(m, psi.amp, t, opt);
    }
}

inline void evolve(StateVector& psi, const LinearMap& H, double t, const EvolveOptions& opt = {}) {
    if (H.dim != psi.dim()) throw std::invalid_argument("evolve: dimension mismatch");
    detail::krylov_propagate(H, psi.amp, t, opt);
}

// Piecewise-constant midpoint rule: each step evolves under the generator
// frozen at the interval midpoint. Second-order accurate in dt.
inline void evolve_timedep(StateVector& psi, const std::function<LinearMap(double)>& at,
                           double t0, double t1, double dt, const EvolveOptions& opt = {}) {
    if (!(dt > 0)) throw ConfigError("evolve_timedep: dt must be positive");
    if (t1 < t0) throw ConfigError("evolve_timedep: t1 must not precede t0");
    if (t1 == t0) return;
    int n = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9));
    n = std::max(n, 1);
    double h = (t1 - t0) / n;
    for (int k = 0; k < n; ++k) {
        LinearMap H = at(t0 + (k + 0.5) * h);
        if (H.dim != psi.dim()) throw std::invalid_argument("evolve_timedep: dimension mismatch");
        detail::krylov_propagate(H, psi.amp, h, opt);
    }
}

struct SweepResult {
    double endpoint = 0;  // requested detuning over drive
    double t_stop = 0;    // schedule time where the cubic segment was cut
    StateVector state;    // after the optional drive ramp-down
};

// Evolve the vacuum through the schedule, branching at each requested
// endpoint. The main trajectory is shared; each branch optionally gets the
// drive ramped linearly to zero at fixed detuning before being returned.
inline std::vector<SweepResult> run_sweep(std::shared_ptr<const Basis> basis,
                                          const HamiltonianTerms& terms,
                                          const SweepSchedule& sched,
                                          const std::vector<double>& endpoints, double dt,
                                          const EvolveOptions& opt = {}) {
    if (!(dt > 0)) throw ConfigError("run_sweep: dt must be positive");
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < endpoints.size(); ++i)
        order.emplace_back(sched.time_at_endpoint(endpoints[i]), i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<SweepResult> out(endpoints.size());
    StateVector cur = vacuum_state(std::move(basis));
    auto drive_at = [&](double s) {
        DriveParams p = sched.eval(s);
        return terms.at(p.omega, p.delta);
    };
    double tcur = 0;
    for (const auto& [tstop, i] : order) {
        evolve_timedep(cur, drive_at, tcur, tstop, dt, opt);
        tcur = tstop;
        StateVector branch = cur;
        if (sched.t_ramp_off > 0) {
            DriveParams p = sched.eval(tstop);
            auto off_at = [&](double s) {
                return terms.at(p.omega * (1 - s / sched.t_ramp_off), p.delta);
            };
            evolve_timedep(branch, off_at, 0, sched.t_ramp_off, dt, opt);
        }
        out[i] = SweepResult{endpoints[i], tstop, std::move(branch)};
    }
    return out;
}

struct EigenSolveOptions {
    double tol = 1e-8;  // residual ||Hx - Ex||
    int lanczos_dim = 60;
    int max_restarts = 500;
    std::int64_t dense_cutoff = 2000;
    std::uint64_t seed = 0x243f6a8885a308d3ull;
};

// k lowest eigenpairs, ascending, orthonormal. Restarted deflated Lanczos
// above the dense cutoff.
inline std::vector<std::pair<double, std::vector<cplx>>> spectrum_slice(
    const SparseOperator& H, int k, const EigenSolveOptions& opt = {}) {
    if (k < 1 || k > H.dim) throw std::invalid_argument("spectrum_slice: k out of range");
    detail::require_hermitian(H);
    std::vector<std::pair<double, std::vector<cplx>>> out;

    if (H.dim <= opt.dense_cutoff) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(detail::to_dense(H));
        if (es.info() != Eigen::Success)
            throw ConvergenceError("spectrum_slice: dense eigendecomposition failed", 1.0, 0.0);
        for (int p = 0; p < k; ++p) {
            std::vector<cplx> x(static_cast<std::size_t>(H.dim));
            for (std::int64_t i = 0; i < H.dim; ++i)
                x[static_cast<std::size_t>(i)] = es.eigenvectors()(i, p);
            out.emplace_back(es.eigenvalues()[p], std::move(x));
        }
        return out;
    }

    LinearMap map = as_map(H);
    std::vector<std::vector<cplx>> locked;
    auto no_stop = [](const detail::LanczosData&) { return false; };
    for (int p = 0; p < k; ++p) {
        std::vector<cplx> x = detail::random_unit(H.dim, opt.seed, static_cast<std::uint64_t>(p));
        for (const auto& l : locked) {
            cplx c = detail::dot(l, x);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * l[i];
        }
        double n = detail::nrm(x);
        for (auto& z : x) z /= n;

        int m = static_cast<int>(
            std::min<std::int64_t>(opt.lanczos_dim, H.dim - static_cast<std::int64_t>(locked.size())));
        m = std::max(m, 2);
        double theta = 0, res = 0;
        bool converged = false;
        for (int r = 0; r < opt.max_restarts && !converged; ++r) {
            detail::LanczosData d = detail::lanczos(map, x, m, &locked, no_stop, 2);
            Eigen::VectorXd diag(d.m), sub(std::max(0, d.m - 1));
            for (int i = 0; i < d.m; ++i) diag[i] = d.alpha[static_cast<std::size_t>(i)];
            for (int i = 0; i + 1 < d.m; ++i) sub[i] = d.beta[static_cast<std::size_t>(i)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            std::fill(x.begin(), x.end(), cplx(0));
            for (int j = 0; j < d.m; ++j) {
                cplx c = es.eigenvectors()(j, 0);
                const auto& vj = d.v[static_cast<std::size_t>(j)];
                for (std::size_t i = 0; i < x.size(); ++i) x[i] += c * vj[i];
            }
            for (const auto& l : locked) {
                cplx c = detail::dot(l, x);
                for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * l[i];
            }
            n = detail::nrm(x);
            for (auto& z : x) z /= n;

            std::vector<cplx> w(x.size());
            map.apply(x.data(), w.data());
            theta = std::real(detail::dot(x, w));
            double s = 0;
            for (std::size_t i = 0; i < x.size(); ++i) s += std::norm(w[i] - theta * x[i]);
            res = std::sqrt(s);
            converged = res <= opt.tol;
        }
        if (!converged)
            throw ConvergenceError("spectrum_slice: Lanczos failed to converge", res, opt.tol);
        out.emplace_back(theta, x);
        locked.push_back(std::move(x));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

inline std::pair<double, std::vector<cplx>> ground_state(const SparseOperator& H,
                                                         const EigenSolveOptions& opt = {}) {
    auto pairs = spectrum_slice(H, 1, opt);
    return std::move(pairs[0]);
}

// Revival time of the resonant three-atom cycle: one third of a full
// rotation period of the symmetric doublet split by sqrt(3) omega.
inline double ideal_quench_time(double omega) {
    return 4.0 * std::numbers::pi / (3.0 * std::sqrt(3.0) * omega);
}

struct QuenchSpec {
    double omega_q = 1.0;
    double delta_q = 0.0;
    // Drive phase shifted a quarter cycle against the preparation drive. With
    // the adopted drive sign (excitation carries e^{+i phase}), -pi/2 is the
    // direction that rotates X strings onto their dual Z strings.
    double phase = -0.5 * std::numbers::pi;
    double tau = -1.0;       // negative requests the ideal revival time
    double rise_time = 0.0;  // 0 = square pulse
    double rb_over_a = 1.53;

    double effective_tau() const { return tau >= 0 ? tau : ideal_quench_time(omega_q); }
};

// Occupation-identity embedding into another basis. Every configuration with
// weight must exist in the target (guaranteed when the target constraint is
// weaker).
inline StateVector embed_state(const StateVector& psi, std::shared_ptr<const Basis> target) {
    StateVector out{std::move(target), {}};
    out.amp.assign(static_cast<std::size_t>(out.basis->dim()), cplx(0));
    for (std::int64_t i = 0; i < psi.dim(); ++i) {
        std::int64_t j = out.basis->index_of(psi.basis->state_of(i));
        if (j < 0) {
            if (std::abs(psi.amp[static_cast<std::size_t>(i)]) > 1e-14)
                throw std::logic_error(
                    "embed_state: source configuration missing from target basis");
            continue;
        }
        out.amp[static_cast<std::size_t>(j)] = psi.amp[static_cast<std::size_t>(i)];
    }
    return out;
}

// Re-embed into the reduced-blockade basis and evolve under the phase-shifted
// resonant drive for the quench duration. With rise_time set, the drive ramps
// linearly from zero over that window (inside tau) before holding.
inline StateVector apply_quench(const StateVector& psi, const RubyLattice& lat,
                                const QuenchSpec& q, const EvolveOptions& opt = {}) {
    auto reduced = std::make_shared<Basis>(enumerate_basis(lat, q.rb_over_a));
    StateVector out = embed_state(psi, std::move(reduced));
    double tau = q.effective_tau();
    if (tau == 0) return out;
    HamiltonianTerms terms = build_pxp_terms(*out.basis, q.phase);
    double rise = std::min(std::max(q.rise_time, 0.0), tau);
    if (rise > 0) {
        auto at = [&](double s) { return terms.at(q.omega_q * s / rise, q.delta_q); };
        evolve_timedep(out, at, 0, rise, rise / 64, opt);
    }
    if (tau - rise > 0) evolve(out, terms.at(q.omega_q, q.delta_q), tau - rise, opt);
    return out;
}

} // namespace rydberg
