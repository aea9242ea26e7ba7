#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ellstr/lattice.hpp"

using namespace ellstr;

namespace {

elliptic_params regime_i() {
    return elliptic_params::from_periods(cx(0.0, 0.51), cx(0.0, 0.73));
}

lattice_graph canonical_star(double s1, double s2, double s3) {
    // One internal hub; legs follow the star pattern on rapidities p,q,r.
    const double p = 1.2, q = 0.5, r = 0.1;
    lattice_graph g;
    g.sites.push_back({0, false, 0.0});
    g.sites.push_back({1, true, s1});
    g.sites.push_back({2, true, s2});
    g.sites.push_back({3, true, s3});
    g.edges.push_back({1, 0, edge_type::second, q, r});
    g.edges.push_back({2, 0, edge_type::first, p, r});
    g.edges.push_back({3, 0, edge_type::second, p, q});
    return g;
}

} // namespace

TEST_CASE("square lattice builder satisfies the sum rule exactly") {
    auto ep = regime_i();
    auto g = build_square_lattice(4, 4, 1.1, 0.3);
    g.validate();
    CHECK(g.internal_count() == 4);
    auto a = assign_alphas(g, ep);
    for (const auto& [id, resid] : check_sum_rule(g, a)) {
        CAPTURE(id);
        CHECK(resid < 1e-14);
    }
}

TEST_CASE("alpha assignment follows the edge type") {
    auto ep = regime_i();
    const double third = ep.eta.real() / 3.0;
    lattice_graph g;
    g.sites.push_back({0, true, 0.0});
    g.sites.push_back({1, true, 1.0});
    g.edges.push_back({0, 1, edge_type::first, third, 0.0});
    auto a = assign_alphas(g, ep);
    CHECK(a.alpha[0].real() == doctest::Approx(third).epsilon(1e-14));

    g.edges[0].type = edge_type::second;
    a = assign_alphas(g, ep);
    CHECK(a.alpha[0].real() == doctest::Approx(2.0 * third).epsilon(1e-14));

    g.edges[0] = {0, 1, edge_type::first, 0.0, third};
    CHECK_THROWS_AS(assign_alphas(g, ep), bad_domain);
    CHECK_NOTHROW(assign_alphas(g, ep, /*physical=*/false));
}

TEST_CASE("corrupted edge shows up in the sum rule") {
    auto ep = regime_i();
    auto g = build_square_lattice(3, 3, 1.1, 0.3);
    for (auto& e : g.edges)
        if (e.from == 1 && e.to == 4) e.q_rap += 0.05; // a leg of the center
    auto a = assign_alphas(g, ep);
    double worst = 0.0;
    for (const auto& [id, resid] : check_sum_rule(g, a))
        worst = std::max(worst, resid);
    CHECK(worst > 0.01);
}

TEST_CASE("graph JSON round trip") {
    auto g = build_square_lattice(3, 4, 0.9, 0.2);
    auto h = lattice_graph::from_json(g.to_json());
    REQUIRE(h.sites.size() == g.sites.size());
    REQUIRE(h.edges.size() == g.edges.size());
    for (size_t i = 0; i < g.edges.size(); ++i) {
        CHECK(h.edges[i].from == g.edges[i].from);
        CHECK(h.edges[i].to == g.edges[i].to);
        CHECK(h.edges[i].type == g.edges[i].type);
        CHECK(h.edges[i].p_rap == g.edges[i].p_rap);
    }
    CHECK_THROWS_AS(lattice_graph::from_json("not json"), bad_input);
    CHECK_THROWS_AS(lattice_graph::from_json(R"({"sites": []})"), bad_input);
}

TEST_CASE("all-boundary graph gives the plain weight product") {
    auto ep = regime_i();
    lattice_graph g;
    g.sites.push_back({0, true, 0.8});
    g.sites.push_back({1, true, 2.3});
    g.edges.push_back({0, 1, edge_type::first, 1.0, 0.4});
    const cx z = partition_function(g, ep);
    weight_spec ws{ep, cx(0.6)};
    const cx w = weight_W(ws, spin(0.8), spin(2.3));
    CHECK(std::abs(z / w - 1.0) < 1e-13);
}

TEST_CASE("homogeneous cross is positive and doubling-stable") {
    auto ep = regime_i();
    const double half = ep.eta.real() / 2.0;
    lattice_graph g;
    g.sites.push_back({0, false, 0.0});
    for (int i = 1; i <= 4; ++i) g.sites.push_back({i, true, 0.0});
    g.edges.push_back({1, 0, edge_type::first, half, 0.0});
    g.edges.push_back({0, 2, edge_type::first, half, 0.0});
    g.edges.push_back({3, 0, edge_type::second, half, 0.0});
    g.edges.push_back({0, 4, edge_type::second, half, 0.0});
    quadrature_control qctl;
    qctl.points = 64;
    qctl.rel_tol = 1e-8;
    const cx z = partition_function(g, ep, qctl);
    CHECK(z.real() > 0.0);
    CHECK(std::abs(z.imag()) < 1e-12 * std::abs(z));
}

TEST_CASE("star-triangle move preserves the partition function") {
    auto ep = regime_i();
    auto star = canonical_star(0.7, 2.1, 4.4);
    auto tri = star_triangle_move(star, 0);
    REQUIRE(tri.internal_count() == 0);
    REQUIRE(tri.edges.size() == 3);

    // Triangle edges carry alpha1, eta-alpha1-alpha3, alpha3.
    auto a = assign_alphas(tri, ep);
    double a1 = 0.0, a13 = 0.0, a3 = 0.0;
    for (size_t i = 0; i < tri.edges.size(); ++i) {
        const auto& e = tri.edges[i];
        if (e.from == 2 && e.to == 3) a1 = a.alpha[i].real();
        if (e.from == 1 && e.to == 3) a13 = a.alpha[i].real();
        if (e.from == 1 && e.to == 2) a3 = a.alpha[i].real();
    }
    CHECK(a1 == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(a3 == doctest::Approx(0.7).epsilon(1e-13));
    CHECK(a13 == doctest::Approx(ep.eta.real() - 1.1).epsilon(1e-13));

    quadrature_control qctl;
    qctl.points = 128;
    qctl.rel_tol = 1e-9;
    const cx z_star = partition_function(star, ep, qctl);
    const cx z_tri = partition_function(tri, ep, qctl);
    CHECK(std::abs(z_star / z_tri - 1.0) < 1e-7);
}

TEST_CASE("move rejects graphs that are not stars") {
    auto star = canonical_star(0.7, 2.1, 4.4);
    CHECK_THROWS_AS(star_triangle_move(star, 1), not_a_star); // boundary site

    auto deg4 = star;
    deg4.sites.push_back({5, true, 1.0});
    deg4.edges.push_back({5, 0, edge_type::first, 1.0, 0.4});
    CHECK_THROWS_AS(star_triangle_move(deg4, 0), not_a_star);

    auto wrong = star;
    wrong.edges[0].type = edge_type::first; // two first-type legs
    CHECK_THROWS_AS(star_triangle_move(wrong, 0), not_a_star);

    auto torn = star;
    torn.edges[2].q_rap += 0.2; // rapidities no longer share the pattern
    CHECK_THROWS_AS(star_triangle_move(torn, 0), not_a_star);
}

TEST_CASE("partition function rejects more than four internal sites") {
    auto ep = regime_i();
    auto g = build_square_lattice(3, 7, 1.1, 0.3);
    CHECK(g.internal_count() == 5);
    CHECK_THROWS_AS(partition_function(g, ep), too_many_internal_sites);
}

TEST_CASE("two-internal-site strip integrates with certification") {
    auto ep = regime_i();
    auto g = build_square_lattice(3, 4, ep.eta.real() / 2.0, 0.0);
    quadrature_control qctl;
    qctl.points = 32;
    qctl.rel_tol = 1e-6;
    const cx z = partition_function(g, ep, qctl);
    CHECK(std::abs(z) > 0.0);
    CHECK(std::isfinite(z.real()));

    qctl.points = 8;
    qctl.rel_tol = 1e-14;
    CHECK_THROWS_AS(partition_function(g, ep, qctl), quadrature_not_converged);
}

TEST_CASE("graph validation catches structural errors") {
    lattice_graph empty;
    CHECK_THROWS_AS(empty.validate(), bad_input);

    lattice_graph dup;
    dup.sites.push_back({0, true, 0.0});
    dup.sites.push_back({0, true, 0.0});
    CHECK_THROWS_AS(dup.validate(), bad_input);

    lattice_graph island;
    island.sites.push_back({0, true, 0.0});
    island.sites.push_back({1, true, 0.0});
    island.sites.push_back({2, false, 0.0});
    island.edges.push_back({0, 1, edge_type::first, 1.0, 0.4});
    CHECK_THROWS_AS(island.validate(), bad_input); // internal site with no edges
}
