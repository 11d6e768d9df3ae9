#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

#include "rydberg/dynamics.hpp"
#include "rydberg/hamiltonian.hpp"

using namespace rydberg;

namespace {

// one blockaded triangle: vacuum plus three single-atom states
Basis triangle_basis() {
    std::vector<Bitstring> states{
        Bitstring::from_string("000"), Bitstring::from_string("001"),
        Bitstring::from_string("010"), Bitstring::from_string("100")};
    std::sort(states.begin(), states.end());
    return Basis(3, std::move(states));
}

Eigen::MatrixXcd dense_of(const SparseOperator& h) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(h.dim, h.dim);
    for (std::int64_t r = 0; r < h.dim; ++r)
        for (std::int64_t k = h.row_ptr[static_cast<std::size_t>(r)];
             k < h.row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
            m(r, h.col[static_cast<std::size_t>(k)]) += h.val[static_cast<std::size_t>(k)];
    return m;
}

} // namespace

TEST_CASE("drive phase convention: adding an atom carries e^{+i phi}") {
    Basis b = triangle_basis();
    double phi = 0.7;
    SparseOperator h = build_pxp(b, DriveParams{2.0, 0.0, phi});
    Eigen::MatrixXcd m = dense_of(h);

    std::int64_t vac = b.index_of(Bitstring::from_string("000"));
    REQUIRE(vac == 0);
    for (const char* s : {"100", "010", "001"}) {
        std::int64_t exc = b.index_of(Bitstring::from_string(s));
        REQUIRE(exc > 0);
        // omega/2 = 1 here
        CHECK(std::abs(m(exc, vac) - std::exp(cplx(0, phi))) < 1e-14);
        CHECK(std::abs(m(vac, exc) - std::exp(cplx(0, -phi))) < 1e-14);
    }
    CHECK(h.hermiticity_defect() < 1e-15);
}

TEST_CASE("detuning enters as minus delta per atom") {
    Basis b = triangle_basis();
    SparseOperator h = build_pxp(b, DriveParams{0.0, 1.5, 0.0});
    Eigen::MatrixXcd m = dense_of(h);
    for (std::int64_t i = 0; i < b.dim(); ++i) {
        for (std::int64_t j = 0; j < b.dim(); ++j)
            if (i != j) CHECK(std::abs(m(i, j)) == 0.0);
        CHECK(m(i, i).real() == Catch::Approx(-1.5 * b.state_of(i).count()));
    }
}

TEST_CASE("resonant triangle spectrum is {0, 0, +-sqrt(3) omega / 2}") {
    Basis b = triangle_basis();
    double omega = 1.7;
    for (double phi : {0.0, -std::numbers::pi / 2, 0.3}) {
        SparseOperator h = build_pxp(b, DriveParams{omega, 0.0, phi});
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_of(h));
        REQUIRE(es.info() == Eigen::Success);
        double split = std::sqrt(3.0) * omega / 2;
        CHECK(std::abs(es.eigenvalues()[0] + split) < 1e-12);
        CHECK(std::abs(es.eigenvalues()[1]) < 1e-12);
        CHECK(std::abs(es.eigenvalues()[2]) < 1e-12);
        CHECK(std::abs(es.eigenvalues()[3] - split) < 1e-12);
    }
}

TEST_CASE("terms map agrees with the assembled matrix") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    Basis basis = enumerate_basis(lat, 2.4);
    HamiltonianTerms t = build_vdw_terms(basis, lat, 2.4, 9.0, 0.4);
    double omega = 0.9, delta = 2.3;
    SparseOperator h = t.assemble(omega, delta);
    CHECK(h.hermiticity_defect() < 1e-15);

    auto x = detail::random_unit(basis.dim(), 11, 1);
    std::vector<cplx> ya(x.size()), yb(x.size());
    h.apply(x.data(), ya.data());
    t.at(omega, delta).apply(x.data(), yb.data());
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(ya[k] - yb[k]) < 1e-13);
}

TEST_CASE("interaction diagonal sums soft tails over occupied pairs") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    // triangle-only constraint admits cross-triangle pairs
    Basis basis = enumerate_basis(lat, 1.0);
    HamiltonianTerms t = build_vdw_terms(basis, lat, 2.4, 9.0);
    auto pairs = interaction_list(lat, 2.4, 9.0);
    for (std::int64_t k = 0; k < basis.dim(); ++k) {
        const Bitstring& s = basis.state_of(k);
        double expect = 0;
        for (const auto& e : pairs)
            if (!e.hard && s.test(e.i) && s.test(e.j)) expect += e.v;
        CHECK(t.v_diag[static_cast<std::size_t>(k)] == Catch::Approx(expect).margin(1e-15));
        CHECK(t.v_diag[static_cast<std::size_t>(k)] >= 0);
        CHECK(t.n_exc[static_cast<std::size_t>(k)] == static_cast<double>(s.count()));
    }
    // blockade model has no explicit interaction
    HamiltonianTerms p = build_pxp_terms(basis);
    for (double v : p.v_diag) CHECK(v == 0.0);
}

TEST_CASE("drive matrix size on the production torus") {
    RubyLattice lat = build_ruby_lattice(3, 2, Boundary::torus);
    Basis basis = enumerate_basis(lat, 2.4);
    HamiltonianTerms t = build_pxp_terms(basis);
    CHECK(t.dim() == 136193);
    CHECK(t.drive.nnz() == 1536312);
    CHECK_NOTHROW(detail::require_hermitian(t.assemble(1.0, 5.0)));
}

TEST_CASE("sweep schedule waveform") {
    SweepSchedule s;
    s.omega_max = 2.0;
    s.delta_min = -3.0;
    s.delta_max = 4.0;
    s.t_ramp_on = 1.0;
    s.t_sweep = 10.0;
    s.t_ramp_off = 2.0;
    CHECK(s.total() == 13.0);

    CHECK(s.eval(0).omega == 0.0);
    CHECK(s.eval(0).delta == -3.0);
    CHECK(s.eval(0.5).omega == Catch::Approx(1.0));
    CHECK(s.eval(1.0).omega == 2.0);
    CHECK(s.eval(11.0).delta == 4.0);
    CHECK(s.eval(13.0).omega == Catch::Approx(0.0).margin(1e-12));
    CHECK(s.eval(12.0).delta == 4.0);

    // cubic sweep: monotone, zero slope at both ends
    double prev = -3.0;
    for (int k = 1; k <= 100; ++k) {
        double d = s.eval(1.0 + 10.0 * k / 100).delta;
        CHECK(d >= prev);
        prev = d;
    }
    CHECK(s.eval(1.001).delta == Catch::Approx(-3.0).margin(1e-4));
    CHECK(s.eval(10.999).delta == Catch::Approx(4.0).margin(1e-4));

    CHECK_THROWS_AS(s.eval(-0.5), ConfigError);
    CHECK_THROWS_AS(s.eval(13.5), ConfigError);
}

TEST_CASE("endpoint time inverts the cubic") {
    SweepSchedule s;
    s.omega_max = 2.0;
    s.delta_min = -3.0;
    s.delta_max = 4.0;
    s.t_ramp_on = 0.5;
    s.t_sweep = 7.0;
    for (double endpoint : {-1.4, 0.0, 1.3, 1.9}) {
        double t = s.time_at_endpoint(endpoint);
        CHECK(t >= s.t_ramp_on);
        CHECK(t <= s.t_ramp_on + s.t_sweep);
        CHECK(s.eval(t).delta / s.omega_max == Catch::Approx(endpoint).margin(1e-10));
    }
    CHECK_THROWS_AS(s.time_at_endpoint(2.1), ConfigError);   // above delta_max/omega_max
    CHECK_THROWS_AS(s.time_at_endpoint(-1.6), ConfigError);  // below delta_min/omega_max
}
