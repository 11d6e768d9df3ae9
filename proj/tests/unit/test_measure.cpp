#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <sstream>

#include "rydberg/measure.hpp"
#include "rydberg/templates.hpp"

using namespace rydberg;

namespace {

StringSpec z_spec(std::vector<int> sites, const std::string& label = "z", bool closed = true) {
    StringSpec s;
    s.kind = StringKind::Z;
    s.closed = closed;
    s.label = label;
    s.sites = std::move(sites);
    return s;
}

std::shared_ptr<Basis> product_basis(int n_sites) {
    std::vector<Bitstring> states;
    for (std::uint64_t m = 0; m < (1ull << n_sites); ++m) {
        Bitstring b(n_sites);
        for (int i = 0; i < n_sites; ++i)
            if ((m >> i) & 1) b.set(i);
        states.push_back(b);
    }
    std::sort(states.begin(), states.end());
    return std::make_shared<Basis>(n_sites, std::move(states));
}

StateVector weighted_state(std::shared_ptr<Basis> basis,
                           const std::vector<std::pair<std::string, double>>& weights) {
    StateVector psi{basis, std::vector<cplx>(static_cast<std::size_t>(basis->dim()), cplx(0))};
    for (const auto& [bits, w] : weights) {
        std::int64_t i = basis->index_of(Bitstring::from_string(bits));
        REQUIRE(i >= 0);
        psi.amp[static_cast<std::size_t>(i)] = std::sqrt(w);
    }
    return psi;
}

} // namespace

TEST_CASE("mean and standard error") {
    auto [m0, s0] = detail::mean_sem({});
    CHECK(m0 == 0);
    CHECK(s0 == 0);
    auto [m1, s1] = detail::mean_sem({2.5});
    CHECK(m1 == 2.5);
    CHECK(s1 == 0);
    auto [m, s] = detail::mean_sem({1.0, 2.0, 3.0});
    CHECK(m == Catch::Approx(2.0));
    CHECK(s == Catch::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("snapshot sampling is a pure function of seed and index") {
    auto basis = product_basis(3);
    StateVector psi = weighted_state(basis, {{"000", 0.25}, {"101", 0.75}});

    auto a = sample_snapshots(psi, 40, 7, 4.5);
    auto b = sample_snapshots(psi, 40, 7, 4.5);
    auto prefix = sample_snapshots(psi, 10, 7, 4.5);
    REQUIRE(a.size() == 40);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].bits == b[k].bits);
        CHECK(a[k].endpoint == 4.5);
        CHECK(a[k].seed == 7);
    }
    for (std::size_t k = 0; k < prefix.size(); ++k) CHECK(a[k].bits == prefix[k].bits);

    auto c = sample_snapshots(psi, 40, 8, 4.5);
    int diff = 0;
    for (std::size_t k = 0; k < a.size(); ++k) diff += !(a[k].bits == c[k].bits);
    CHECK(diff > 0);

    // only the two support patterns ever appear
    for (const auto& sn : a) {
        std::string s = sn.bits.to_string();
        CHECK((s == "000" || s == "101"));
    }

    StateVector bad = psi;
    bad.amp[0] *= 3.0;
    CHECK_THROWS_AS(sample_snapshots(bad, 1, 0), std::invalid_argument);
}

TEST_CASE("diagonal string parity, snapshots and exact") {
    auto basis = product_basis(3);
    StringSpec s01 = z_spec({0, 1});

    Snapshot even{Bitstring::from_string("110"), 0, 0};
    Snapshot odd{Bitstring::from_string("100"), 0, 0};
    CHECK(z_parity_snap(even, s01) == 1);
    CHECK(z_parity_snap(odd, s01) == -1);

    StateVector psi = weighted_state(basis, {{"110", 0.3}, {"100", 0.7}});
    CHECK(z_parity_exact(psi, s01) == Catch::Approx(0.3 - 0.7));

    StringSpec x = s01;
    x.kind = StringKind::X;
    CHECK_THROWS_AS(z_parity_snap(even, x), std::invalid_argument);
    CHECK_THROWS_AS(z_parity_exact(psi, x), std::invalid_argument);

    // string products live on the symmetric difference
    StringSpec s12 = z_spec({1, 2});
    CHECK(z_pair_exact(psi, s01, s12) == Catch::Approx(z_parity_exact(psi, z_spec({0, 2}))));
    CHECK(z_pair_exact(psi, s01, s01) == Catch::Approx(1.0));
}

TEST_CASE("x string maps columns within the triangle-blockade basis") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    auto basis = std::make_shared<Basis>(enumerate_basis(lat, 1.53));
    REQUIRE(basis->dim() == 16);

    const Triangle& t = lat.triangles[0];
    StringSpec s;
    s.kind = StringKind::X;
    s.closed = true;
    s.label = "step";
    s.steps.push_back(XStep{0, t.sites[0], t.verts[0], t.verts[1]});
    s.sites.push_back(t.sites[0]);

    XColumnMap m = x_column_map(*basis, lat, s);
    for (std::int64_t k = 0; k < basis->dim(); ++k) {
        REQUIRE(m.image[static_cast<std::size_t>(k)] >= 0);  // reduced basis is closed under X
        CHECK(m.image[static_cast<std::size_t>(m.image[static_cast<std::size_t>(k)])] == k);
    }

    // vacuum <-> single atom with sign -1 each way
    Bitstring vac(6), one(6);
    one.set(t.sites[0]);
    std::int64_t iv = basis->index_of(vac), io = basis->index_of(one);
    CHECK(m.image[static_cast<std::size_t>(iv)] == io);
    CHECK(m.sign[static_cast<std::size_t>(iv)] == -1);
    CHECK(m.sign[static_cast<std::size_t>(io)] == -1);

    // an occupied other edge moves to the third edge with sign +1
    Bitstring other(6);
    other.set(t.sites[1]);
    Bitstring third(6);
    third.set(t.sites[2]);
    std::int64_t ia = basis->index_of(other);
    CHECK(m.image[static_cast<std::size_t>(ia)] == basis->index_of(third));
    CHECK(m.sign[static_cast<std::size_t>(ia)] == 1);

    // expectation on (|vac> + |one>)/sqrt(2) is -1
    StateVector psi{basis, std::vector<cplx>(16, cplx(0))};
    psi.amp[static_cast<std::size_t>(iv)] = 1 / std::sqrt(2.0);
    psi.amp[static_cast<std::size_t>(io)] = 1 / std::sqrt(2.0);
    CHECK(x_parity_exact(psi, lat, s) == Catch::Approx(-1.0));

    // the sparse operator agrees with the column map
    SparseOperator op = x_operator(*basis, lat, s);
    std::vector<cplx> y(16);
    op.apply(psi.amp.data(), y.data());
    double acc = 0;
    for (std::size_t k = 0; k < y.size(); ++k) acc += std::real(std::conj(psi.amp[k]) * y[k]);
    CHECK(acc == Catch::Approx(-1.0));

    // degenerate walks are refused
    StringSpec twice = s;
    twice.steps.push_back(twice.steps[0]);
    CHECK_THROWS_AS(x_column_map(*basis, lat, twice), ConfigError);
    StringSpec none = s;
    none.steps.clear();
    CHECK_THROWS_AS(x_column_map(*basis, lat, none), ConfigError);
    StringSpec zkind = s;
    zkind.kind = StringKind::Z;
    CHECK_THROWS_AS(x_column_map(*basis, lat, zkind), std::invalid_argument);
}

TEST_CASE("quench measurement of a closed X loop matches the direct parity") {
    RubyLattice lat = build_ruby_lattice(2, 2, Boundary::torus);
    TemplateSet set = load_template_dir(std::string(FIXTURE_DIR) + "/loops");
    auto loops = enumerate_loops(lat, set);
    const StringSpec* hex_x = nullptr;
    for (const auto& s : loops)
        if (s.template_name == "hex_x" && s.closed) {
            hex_x = &s;
            break;
        }
    REQUIRE(hex_x != nullptr);

    auto basis = std::make_shared<Basis>(enumerate_basis(lat, 2.4));
    StateVector psi{basis, detail::random_unit(basis->dim(), 5, 1)};

    double direct = x_parity_exact(psi, lat, *hex_x);
    ObservableReport viaq = x_parity_via_quench(psi, lat, QuenchSpec{}, *hex_x);
    CHECK(viaq.estimate == Catch::Approx(direct).margin(1e-8));
}

TEST_CASE("open-string normalization") {
    CHECK(!bffm(0.3, 1e-4));
    auto v = bffm(0.3, 0.36);
    REQUIRE(v);
    CHECK(*v == Catch::Approx(0.5));
    CHECK(*bffm(-0.3, 0.36) == Catch::Approx(-0.5));
}

TEST_CASE("family grouping follows template and block suffix") {
    StringSpec a = z_spec({0}, "hex_z@r0c0#0");
    a.template_name = "hex_z";
    StringSpec b = z_spec({1}, "hex_z@r1c1#0");
    b.template_name = "hex_z";
    StringSpec c = z_spec({2}, "z_half@r0c0#1");
    c.template_name = "z_half";
    CHECK(family_key(a) == "hex_z#0");
    CHECK(family_key(c) == "z_half#1");

    std::vector<StringSpec> all{a, b, c};
    auto fams = group_by_family(all);
    REQUIRE(fams.size() == 2);
    CHECK(fams.at("hex_z#0").size() == 2);
    CHECK(fams.at("z_half#1").size() == 1);
}

TEST_CASE("family reports average instances within each repetition") {
    StringSpec a = z_spec({0}, "t@r0c0#0");
    StringSpec b = z_spec({1}, "t@r1c0#0");
    std::vector<const StringSpec*> fam{&a, &b};

    std::vector<Snapshot> snaps{{Bitstring::from_string("10"), 4.0, 1},
                                {Bitstring::from_string("11"), 4.0, 1}};
    ObservableReport r = family_report_snaps("z_loop", "t#0", 4.0, snaps, fam);
    // repetitions contribute (-1+1)/2 = 0 and (-1-1)/2 = -1
    CHECK(r.estimate == Catch::Approx(-0.5));
    CHECK(r.std_error == Catch::Approx(0.5));
    CHECK(r.n_samples == 2);
    CHECK(r.n_loop_instances == 2);
    CHECK(r.observable == "z_loop");

    CHECK_THROWS_AS(family_report_snaps("z_loop", "t#0", 4.0, {}, fam), ConfigError);
    CHECK_THROWS_AS(family_report_snaps("z_loop", "t#0", 4.0, snaps, {}), ConfigError);

    auto basis = product_basis(2);
    StateVector psi = weighted_state(basis, {{"10", 0.5}, {"11", 0.5}});
    ObservableReport ex = family_report_exact("z_loop", "t#0", 4.0, psi, RubyLattice{}, fam);
    CHECK(ex.estimate == Catch::Approx(-0.5));
    CHECK(ex.n_samples == 0);
    CHECK_THROWS_AS(family_report_exact("z_loop", "t#0", 4.0, psi, RubyLattice{}, {}), ConfigError);
}

TEST_CASE("vertex statistics agree between exact and snapshot paths") {
    RubyLattice lat = build_ruby_lattice(2, 2, Boundary::torus);
    auto basis = std::make_shared<Basis>(enumerate_basis(lat, 2.4));
    auto sector = dimer_sector(*basis, lat);
    REQUIRE(!sector.empty());

    // perfect covering: every vertex carries exactly one dimer
    StateVector cov = basis_state(basis, sector[0]);
    VertexStats st = vertex_stats_exact(cov, lat);
    CHECK(st.n_vertices == 12);
    CHECK(st.monomer == Catch::Approx(0.0));
    CHECK(st.single_dimer == Catch::Approx(1.0));
    CHECK(st.multi_dimer == Catch::Approx(0.0));

    // vacuum: all monomers
    VertexStats vac = vertex_stats_exact(vacuum_state(basis), lat);
    CHECK(vac.monomer == Catch::Approx(1.0));

    StateVector mix{basis, std::vector<cplx>(static_cast<std::size_t>(basis->dim()), cplx(0))};
    mix.amp[0] = std::sqrt(0.25);
    mix.amp[static_cast<std::size_t>(sector[0])] = std::sqrt(0.75);
    VertexStats stm = vertex_stats_exact(mix, lat);
    CHECK(stm.monomer == Catch::Approx(0.25));
    CHECK(stm.single_dimer == Catch::Approx(0.75));

    auto snaps = sample_snapshots(mix, 4000, 11);
    VertexStats sts = vertex_stats(snaps, lat);
    CHECK(sts.monomer == Catch::Approx(stm.monomer).margin(0.05));
    CHECK(sts.single_dimer == Catch::Approx(stm.single_dimer).margin(0.05));
    CHECK_THROWS_AS(vertex_stats({}, lat), ConfigError);

    // a torus has no boundary, so layer filtering keeps every vertex
    CHECK(vertex_stats_exact(mix, lat, 1).n_vertices == 12);
}

TEST_CASE("site densities and their averages") {
    auto basis = product_basis(3);
    StateVector psi = weighted_state(basis, {{"110", 0.4}, {"011", 0.6}});
    auto d = site_density(psi);
    CHECK(d[0] == Catch::Approx(0.4));
    CHECK(d[1] == Catch::Approx(1.0));
    CHECK(d[2] == Catch::Approx(0.6));
    CHECK(mean_density(d, {0, 2}) == Catch::Approx(0.5));
    CHECK_THROWS_AS(mean_density(d, {}), ConfigError);

    std::vector<Snapshot> snaps{{Bitstring::from_string("110"), 0, 0},
                                {Bitstring::from_string("011"), 0, 0}};
    auto ds = site_density(snaps, 3);
    CHECK(ds[0] == Catch::Approx(0.5));
    CHECK(ds[1] == Catch::Approx(1.0));
    CHECK_THROWS_AS(site_density({}, 3), ConfigError);
}

TEST_CASE("connected correlators remove disconnected parts") {
    auto basis = product_basis(2);
    StringSpec s0 = z_spec({0}), s1 = z_spec({1});

    // product state: no connected part
    StateVector prod{basis, {}};
    prod.amp = {cplx(std::sqrt(0.48), 0), cplx(std::sqrt(0.32), 0), cplx(std::sqrt(0.12), 0),
                cplx(std::sqrt(0.08), 0)};
    // amplitudes chosen as p(x0) q(x1) with p = (0.8, 0.2), q = (0.6, 0.4)
    CHECK(g2_z_exact(prod, s0, s1) == Catch::Approx(0.0).margin(1e-14));

    // perfectly correlated state
    StateVector bell = weighted_state(basis, {{"00", 0.5}, {"11", 0.5}});
    CHECK(g2_z_exact(bell, s0, s1) == Catch::Approx(1.0));

    auto b3 = product_basis(3);
    StateVector ghz = weighted_state(b3, {{"000", 0.8}, {"111", 0.2}});
    StringSpec t0 = z_spec({0}), t1 = z_spec({1}), t2 = z_spec({2});
    // m = 0.6: three-string connected part is -2 m (1 - m^2)
    CHECK(g3_z_exact(ghz, t0, t1, t2) == Catch::Approx(-2 * 0.6 * (1 - 0.36)));

    // snapshot estimators coincide on the matching empirical ensemble
    std::vector<Snapshot> snaps;
    for (int k = 0; k < 4; ++k) snaps.push_back({Bitstring::from_string("000"), 0, 0});
    snaps.push_back({Bitstring::from_string("111"), 0, 0});
    CHECK(g2_z_snaps(snaps, t0, t1) == Catch::Approx(g2_z_exact(ghz, t0, t1)));
    CHECK(g3_z_snaps(snaps, t0, t1, t2) == Catch::Approx(g3_z_exact(ghz, t0, t1, t2)));
    CHECK_THROWS_AS(g2_z_snaps({}, t0, t1), ConfigError);
    CHECK_THROWS_AS(g3_z_snaps({}, t0, t1, t2), ConfigError);
}

TEST_CASE("scaling rows take area and perimeter roots") {
    StringSpec s = z_spec({0, 1, 2, 3}, "loop");
    s.region = {0, 1};
    ScalingRow r = scaling_row(s, 0.25);
    CHECK(r.area == 2);
    CHECK(r.perimeter == 4);
    CHECK(r.per_area_root == Catch::Approx(0.5));
    CHECK(r.per_perimeter_root == Catch::Approx(std::pow(0.25, 0.25)));
    CHECK(!r.zero);

    ScalingRow z = scaling_row(s, 0.0);
    CHECK(z.zero);
    CHECK(z.per_area_root == 0.0);

    StringSpec open = z_spec({0, 1}, "arc", false);
    CHECK_THROWS_AS(scaling_row(open, 0.5), ConfigError);  // open strings have no area
}

TEST_CASE("defect model parities") {
    auto a = simulate_defect_parities(3, 0.1, 200, 42);
    auto b = simulate_defect_parities(3, 0.1, 200, 42);
    CHECK(a == b);

    auto none = simulate_defect_parities(5, 0.0, 50, 1);
    for (int p : none) CHECK(p == 1);
    auto all = simulate_defect_parities(5, 1.0, 50, 1);
    for (int p : all) CHECK(p == -1);  // odd area flips every sample

    // mean approaches (1 - 2p)^area
    auto big = simulate_defect_parities(2, 0.1, 100000, 7);
    double mean = 0;
    for (int p : big) mean += p;
    mean /= static_cast<double>(big.size());
    CHECK(mean == Catch::Approx(std::pow(0.8, 2)).margin(0.01));

    CHECK_THROWS_AS(simulate_defect_parities(-1, 0.1, 10, 0), ConfigError);
    CHECK_THROWS_AS(simulate_defect_parities(1, 1.5, 10, 0), ConfigError);
}

TEST_CASE("revival picks the maximum after the first collapse") {
    CHECK(revival_index({3, 1, 2}) == 2);
    CHECK(revival_index({3, 2, 1, 5, 0}) == 3);
    CHECK(revival_index({5, 4, 3, 2, 1}) == 0);  // strict fall has no dip: global argmax
    CHECK(revival_index({1, 2, 3, 4}) == 3);     // no dip: global argmax
    CHECK(revival_index({1, 1, 1}) == 1);
    CHECK_THROWS_AS(revival_index({1, 2}), ConfigError);
}

TEST_CASE("sector weight sums probability over listed states") {
    auto basis = product_basis(2);
    StateVector psi = weighted_state(basis, {{"00", 0.7}, {"11", 0.3}});
    std::int64_t i11 = basis->index_of(Bitstring::from_string("11"));
    CHECK(sector_weight(psi, {i11}) == Catch::Approx(0.3));
    CHECK(sector_weight(psi, {}) == 0.0);
}

TEST_CASE("logical reports pair hole-to-boundary strings") {
    RubyLattice lat = build_ruby_lattice(1, 1, Boundary::open);
    auto basis = std::make_shared<Basis>(enumerate_basis(lat, 1.53));

    StringSpec ray_a = z_spec({0, 1}, "za", false);
    ray_a.endpoint_faces = {kFaceHole, kFaceOuter};
    StringSpec ray_b = z_spec({1, 2}, "zb", false);
    ray_b.endpoint_faces = {kFaceOuter, kFaceHole};

    const Triangle& t = lat.triangles[0];
    StringSpec xloop;
    xloop.kind = StringKind::X;
    xloop.closed = true;
    xloop.label = "xl";
    xloop.steps.push_back(XStep{0, t.sites[0], t.verts[0], t.verts[1]});
    xloop.sites.push_back(t.sites[0]);

    StateVector psi = vacuum_state(basis);
    auto rows = logical_reports(psi, lat, {ray_a, ray_b, xloop}, 4.0);
    REQUIRE(rows.size() == 4);  // two rays, one loop, one pair
    CHECK(rows[0].observable == "z_logical");
    CHECK(rows[0].estimate == Catch::Approx(1.0));  // vacuum has even parity
    CHECK(rows[2].observable == "x_logical");
    CHECK(rows[3].observable == "z_logical_pair");
    CHECK(rows[3].label == "za*zb");
    CHECK(rows[3].estimate == Catch::Approx(1.0));

    StringSpec dangling = z_spec({0}, "bad", false);  // endpoints unset
    CHECK_THROWS_AS(logical_reports(psi, lat, {dangling}, 0), ConfigError);
    StringSpec closed_z = z_spec({0}, "badz", true);
    CHECK_THROWS_AS(logical_reports(psi, lat, {closed_z}, 0), ConfigError);
}

TEST_CASE("snapshot files round trip") {
    std::vector<Snapshot> snaps{{Bitstring::from_string("0101"), 4.5, 9},
                                {Bitstring::from_string("1100"), -2.25, 9}};
    std::stringstream ss;
    write_snapshots(ss, snaps, "00ff00ff00ff00ff");
    std::string text = ss.str();
    CHECK(text.find("# rubysim snapshots v1.0.0\n") == 0);
    CHECK(text.find("# config 00ff00ff00ff00ff\n") != std::string::npos);
    CHECK(text.find("0101\t4.5\t9\n") != std::string::npos);

    auto back = read_snapshots(ss, 4);
    REQUIRE(back.size() == 2);
    CHECK(back[0].bits == snaps[0].bits);
    CHECK(back[0].endpoint == 4.5);
    CHECK(back[1].endpoint == -2.25);
    CHECK(back[1].seed == 9);
}

TEST_CASE("snapshot files fail loudly with line numbers") {
    std::istringstream wrong_width("# h\n# h\n0101\t1\t2\n011\t1\t2\n");
    CHECK_THROWS_WITH(read_snapshots(wrong_width, 4),
                      Catch::Matchers::ContainsSubstring("line 4") &&
                          Catch::Matchers::ContainsSubstring("width"));

    std::istringstream missing_tab("0101 1 2\n");
    CHECK_THROWS_WITH(read_snapshots(missing_tab, 4),
                      Catch::Matchers::ContainsSubstring("line 1"));

    std::istringstream bad_number("0101\tx\t2\n");
    CHECK_THROWS_AS(read_snapshots(bad_number, 4), ConfigError);

    std::istringstream bad_bits("01a1\t1\t2\n");
    CHECK_THROWS_AS(read_snapshots(bad_bits, 4), ConfigError);
}

TEST_CASE("report csv format") {
    std::vector<ObservableReport> rows;
    ObservableReport a;
    a.observable = "z_loop";
    a.label = "hex_z#0";
    a.endpoint = 4.0;
    a.estimate = 0.25;
    rows.push_back(a);
    ObservableReport b;
    b.observable = "bffm_x";
    b.label = "x_half#0";
    b.endpoint = -2.0;
    b.estimate = 0.0;
    b.std_error = 0.125;
    b.n_samples = 1000;
    b.defined = false;
    rows.push_back(b);

    std::ostringstream os;
    write_report_csv(os, rows, "0123456789abcdef");
    CHECK(os.str() ==
          "# rubysim report v1.0.0\n"
          "# config 0123456789abcdef\n"
          "observable,label,endpoint,estimate,stderr,n_samples\n"
          "z_loop,hex_z#0,4,0.25,0,0\n"
          "bffm_x,x_half#0,-2,0,0.125,1000,undefined\n");
}
