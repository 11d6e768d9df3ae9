#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

#include "rydberg/dynamics.hpp"

using namespace rydberg;

namespace {

Basis triangle_basis() {
    std::vector<Bitstring> states{
        Bitstring::from_string("000"), Bitstring::from_string("001"),
        Bitstring::from_string("010"), Bitstring::from_string("100")};
    std::sort(states.begin(), states.end());
    return Basis(3, std::move(states));
}

} // namespace

TEST_CASE("revival time of the triangle rotation") {
    CHECK(ideal_quench_time(1.0) == Catch::Approx(2.4183991523122903).epsilon(1e-15));
    CHECK(ideal_quench_time(2.0) == Catch::Approx(ideal_quench_time(1.0) / 2));

    QuenchSpec q;
    CHECK(q.phase == Catch::Approx(-std::numbers::pi / 2));
    CHECK(q.rb_over_a == 1.53);
    CHECK(q.effective_tau() == Catch::Approx(ideal_quench_time(1.0)));
    q.tau = 0.3;
    CHECK(q.effective_tau() == 0.3);
    q.tau = 0.0;
    CHECK(q.effective_tau() == 0.0);
}

TEST_CASE("resonant pulse cycles the triangle parity eigenbasis") {
    auto basis = std::make_shared<Basis>(triangle_basis());
    SparseOperator h = build_pxp(*basis, DriveParams{1.0, 0.0, -std::numbers::pi / 2});
    double tau = ideal_quench_time(1.0);

    std::int64_t vac = basis->index_of(Bitstring::from_string("000"));
    std::int64_t sa = basis->index_of(Bitstring::from_string("100"));  // step edge
    std::int64_t sb = basis->index_of(Bitstring::from_string("010"));  // bystanders
    std::int64_t sc = basis->index_of(Bitstring::from_string("001"));

    auto pulse = [&](StateVector psi) {
        evolve(psi, h, tau);
        return psi;
    };
    auto make = [&](cplx v, cplx a, cplx b, cplx c) {
        StateVector psi = vacuum_state(basis);
        psi.amp[static_cast<std::size_t>(vac)] = v;
        psi.amp[static_cast<std::size_t>(sa)] = a;
        psi.amp[static_cast<std::size_t>(sb)] = b;
        psi.amp[static_cast<std::size_t>(sc)] = c;
        return psi;
    };
    auto close_to = [&](const StateVector& got, const StateVector& want) {
        double d = 0;
        for (std::int64_t k = 0; k < got.dim(); ++k)
            d += std::norm(got.amp[static_cast<std::size_t>(k)] -
                           want.amp[static_cast<std::size_t>(k)]);
        return std::sqrt(d);
    };

    // one pulse spreads every basis state evenly: all sixteen amplitudes
    // have magnitude 1/2, so the pulse area is one third of a full cycle
    for (std::int64_t src = 0; src < basis->dim(); ++src) {
        StateVector out = pulse(basis_state(basis, src));
        for (std::int64_t k = 0; k < basis->dim(); ++k)
            CHECK(std::abs(out.amp[static_cast<std::size_t>(k)]) ==
                  Catch::Approx(0.5).margin(1e-10));
    }

    // three pulses compose to the identity, with no residual phase
    for (std::int64_t src = 0; src < basis->dim(); ++src) {
        StateVector out = pulse(pulse(pulse(basis_state(basis, src))));
        CHECK(std::abs(out.amp[static_cast<std::size_t>(src)] - cplx(1, 0)) < 1e-10);
    }

    // the joint eigenstates of the bystander-pair parity and the step
    // toggle cycle in threes; the antisymmetric bystander state is fixed
    const double r = 1.0 / std::sqrt(2.0);
    StateVector b0 = make(r, r, 0, 0);    // parity +1, toggle -1
    StateVector b1 = make(0, 0, -r, -r);  // parity -1, toggle +1
    StateVector b2 = make(-r, r, 0, 0);   // parity +1, toggle +1
    StateVector b3 = make(0, 0, r, -r);   // parity -1, toggle -1
    CHECK(close_to(pulse(b0), b1) < 1e-10);
    CHECK(close_to(pulse(b1), b2) < 1e-10);
    CHECK(close_to(pulse(b2), b0) < 1e-10);
    CHECK(close_to(pulse(b3), b3) < 1e-10);

    // conjugating the bystander parity by the pulse yields the step toggle:
    // <a| U^dag Z U |b> must equal <a| X |b> entry by entry
    auto z_sign = [&](std::int64_t k) { return (k == vac || k == sa) ? 1.0 : -1.0; };
    std::vector<std::vector<cplx>> x(4, std::vector<cplx>(4, 0));
    auto at = [&](std::int64_t r_, std::int64_t c_) -> cplx& {
        return x[static_cast<std::size_t>(r_)][static_cast<std::size_t>(c_)];
    };
    at(sa, vac) = -1;  // empty step edge gains an atom, with a sign
    at(vac, sa) = -1;
    at(sc, sb) = 1;  // an occupied bystander slides to the other edge
    at(sb, sc) = 1;
    std::vector<StateVector> cols;
    for (std::int64_t src = 0; src < basis->dim(); ++src)
        cols.push_back(pulse(basis_state(basis, src)));
    for (std::int64_t a = 0; a < basis->dim(); ++a)
        for (std::int64_t b = 0; b < basis->dim(); ++b) {
            cplx elem = 0;
            for (std::int64_t k = 0; k < basis->dim(); ++k)
                elem += std::conj(cols[static_cast<std::size_t>(a)]
                                      .amp[static_cast<std::size_t>(k)]) *
                        z_sign(k) *
                        cols[static_cast<std::size_t>(b)].amp[static_cast<std::size_t>(k)];
            CHECK(std::abs(elem - at(a, b)) < 1e-12);
        }
}

TEST_CASE("dense and krylov propagation agree") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    auto basis = std::make_shared<Basis>(enumerate_basis(lat, 2.4));
    SparseOperator h = build_pxp(*basis, DriveParams{1.0, 0.7, 0.0});

    StateVector a{basis, detail::random_unit(basis->dim(), 3, 1)};
    StateVector b = a;
    StateVector c = a;
    EvolveOptions dense;  // dim 12 stays under the cutoff
    EvolveOptions kry;
    kry.dense_cutoff = 1;
    evolve(a, h, 1.7, dense);
    evolve(b, h, 1.7, kry);
    evolve(c, as_map(h), 1.7);
    REQUIRE(a.dim() == 12);
    CHECK(a.norm() == Catch::Approx(1.0).margin(1e-10));
    for (std::int64_t k = 0; k < a.dim(); ++k) {
        CHECK(std::abs(a.amp[static_cast<std::size_t>(k)] - b.amp[static_cast<std::size_t>(k)]) < 1e-8);
        CHECK(std::abs(a.amp[static_cast<std::size_t>(k)] - c.amp[static_cast<std::size_t>(k)]) < 1e-8);
    }

    // piecewise-midpoint integrator with a frozen generator matches too
    StateVector d{basis, detail::random_unit(basis->dim(), 3, 1)};
    HamiltonianTerms terms = build_pxp_terms(*basis);
    auto at = [&](double) { return terms.at(1.0, 0.7); };
    evolve_timedep(d, at, 0, 1.7, 0.05);
    for (std::int64_t k = 0; k < a.dim(); ++k)
        CHECK(std::abs(a.amp[static_cast<std::size_t>(k)] - d.amp[static_cast<std::size_t>(k)]) < 1e-8);

    CHECK_THROWS_AS(evolve_timedep(d, at, 0, 1, -0.1), ConfigError);
    CHECK_THROWS_AS(evolve_timedep(d, at, 1, 0, 0.1), ConfigError);
}

TEST_CASE("expectation and inner products") {
    auto basis = std::make_shared<Basis>(triangle_basis());
    SparseOperator h = build_pxp(*basis, DriveParams{1.0, 0.0, 0.0});
    StateVector vac = vacuum_state(basis);
    CHECK(expectation(h, vac.amp) == Catch::Approx(0.0).margin(1e-15));
    CHECK(std::abs(inner(vac, vac) - cplx(1, 0)) < 1e-15);

    StateVector other{std::make_shared<Basis>(Basis(2, {Bitstring(2)})), {cplx(1, 0)}};
    CHECK_THROWS_AS(inner(vac, other), std::invalid_argument);
}

TEST_CASE("embedding keeps amplitudes and rejects missing configurations") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    auto tight = std::make_shared<Basis>(enumerate_basis(lat, 2.4));   // dim 12
    auto loose = std::make_shared<Basis>(enumerate_basis(lat, 1.53));  // dim 16
    REQUIRE(tight->dim() == 12);
    REQUIRE(loose->dim() == 16);

    StateVector psi{tight, detail::random_unit(tight->dim(), 9, 1)};
    StateVector wide = embed_state(psi, loose);
    CHECK(wide.norm() == Catch::Approx(1.0).margin(1e-12));
    for (std::int64_t i = 0; i < tight->dim(); ++i) {
        std::int64_t j = loose->index_of(tight->state_of(i));
        REQUIRE(j >= 0);
        CHECK(wide.amp[static_cast<std::size_t>(j)] == psi.amp[static_cast<std::size_t>(i)]);
    }

    // a cross-triangle pair exists only in the loose basis
    std::int64_t blocked = -1;
    for (std::int64_t i = 0; i < loose->dim(); ++i)
        if (tight->index_of(loose->state_of(i)) < 0) blocked = i;
    REQUIRE(blocked >= 0);
    CHECK_THROWS_AS(embed_state(basis_state(loose, blocked), tight), std::logic_error);
}

TEST_CASE("quench embeds, preserves norm, and is deterministic") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    auto prep = std::make_shared<Basis>(enumerate_basis(lat, 2.4));
    StateVector psi{prep, detail::random_unit(prep->dim(), 21, 1)};

    QuenchSpec q0;
    q0.tau = 0.0;
    StateVector still = apply_quench(psi, lat, q0);
    CHECK(still.basis->dim() == 16);
    CHECK(std::abs(inner(still, embed_state(psi, still.basis)) - cplx(1, 0)) < 1e-12);

    QuenchSpec q;
    StateVector rot1 = apply_quench(psi, lat, q);
    StateVector rot2 = apply_quench(psi, lat, q);
    CHECK(rot1.norm() == Catch::Approx(1.0).margin(1e-10));
    for (std::int64_t k = 0; k < rot1.dim(); ++k)
        CHECK(rot1.amp[static_cast<std::size_t>(k)] == rot2.amp[static_cast<std::size_t>(k)]);

    QuenchSpec soft = q;
    soft.rise_time = q.effective_tau();
    StateVector rot3 = apply_quench(psi, lat, soft);
    double dist = 0;
    for (std::int64_t k = 0; k < rot1.dim(); ++k)
        dist += std::norm(rot1.amp[static_cast<std::size_t>(k)] - rot3.amp[static_cast<std::size_t>(k)]);
    CHECK(dist > 1e-4);  // the ramp genuinely changes the pulse
}

TEST_CASE("sweep returns branches in request order") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    auto basis = std::make_shared<Basis>(enumerate_basis(lat, 2.4));
    HamiltonianTerms terms = build_pxp_terms(*basis);
    SweepSchedule sched;
    sched.omega_max = 1.0;
    sched.t_ramp_on = 1.0;
    sched.t_sweep = 10.0;

    auto res = run_sweep(basis, terms, sched, {4.0, -2.0}, 0.05);
    REQUIRE(res.size() == 2);
    CHECK(res[0].endpoint == 4.0);
    CHECK(res[1].endpoint == -2.0);
    CHECK(res[0].t_stop > res[1].t_stop);
    CHECK(res[0].state.norm() == Catch::Approx(1.0).margin(1e-9));
    CHECK(res[1].state.norm() == Catch::Approx(1.0).margin(1e-9));

    auto rerun = run_sweep(basis, terms, sched, {4.0, -2.0}, 0.05);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::int64_t k = 0; k < res[i].state.dim(); ++k)
            CHECK(res[i].state.amp[static_cast<std::size_t>(k)] ==
                  rerun[i].state.amp[static_cast<std::size_t>(k)]);

    // a switched-off drive leaves the vacuum untouched
    SweepSchedule off = sched;
    off.omega_max = 0.0;
    auto still = run_sweep(basis, terms, off, {4.0}, 0.05);
    CHECK(std::abs(still[0].state.amp[0] - cplx(1, 0)) < 1e-12);

    CHECK_THROWS_AS(run_sweep(basis, terms, sched, {4.0}, 0.0), ConfigError);
    CHECK_THROWS_AS(run_sweep(basis, terms, sched, {9.0}, 0.05), ConfigError);
}

TEST_CASE("iterative eigensolver matches the dense path") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    Basis basis = enumerate_basis(lat, 2.4);
    SparseOperator h = build_pxp(basis, DriveParams{1.0, 5.0, 0.0});

    auto dense = spectrum_slice(h, 3);
    CHECK(dense[0].first <= dense[1].first);
    CHECK(dense[1].first <= dense[2].first);

    EigenSolveOptions it;
    it.dense_cutoff = 1;
    auto lanc = spectrum_slice(h, 3, it);
    for (int k = 0; k < 3; ++k)
        CHECK(lanc[static_cast<std::size_t>(k)].first ==
              Catch::Approx(dense[static_cast<std::size_t>(k)].first).margin(1e-7));

    auto [e0, x0] = ground_state(h, it);
    CHECK(e0 == Catch::Approx(dense[0].first).margin(1e-7));
    std::vector<cplx> hx(x0.size());
    h.apply(x0.data(), hx.data());
    double res = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) res += std::norm(hx[i] - e0 * x0[i]);
    CHECK(std::sqrt(res) < 1e-7);

    CHECK_THROWS_AS(spectrum_slice(h, 0), std::invalid_argument);
}

TEST_CASE("deterministic random states") {
    auto a = detail::random_unit(50, 7, 1);
    auto b = detail::random_unit(50, 7, 1);
    auto c = detail::random_unit(50, 7, 2);
    CHECK(a == b);
    CHECK(a != c);
    double n = 0;
    for (const cplx& z : a) n += std::norm(z);
    CHECK(std::sqrt(n) == Catch::Approx(1.0).margin(1e-12));
}
