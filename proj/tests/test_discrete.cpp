#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <string>

#include <json.hpp>

#include "ellstr/discrete.hpp"
#include "ellstr/errors.hpp"

using namespace ellstr;
using nlohmann::json;

namespace {

// shared regime for the finite-sum checks: far from the trigonometric limit
const cx tp{0.0, 1.5};
const cx th1{0.6}, th3{0.45};
const cx f1{1.9}, f2{1.3}, f3{2.4};

// chiral Potts fixture angles (algebraic layer, no tau' involved)
const cx ct1{0.36}, ct3{0.27};
const cx cf1{0.35}, cf2{0.21}, cf3{0.52};

} // namespace

TEST_CASE("difference and sum factors keep the branch guard") {
    const cx th{0.6, 0.2}, f{1.1};
    CHECK(std::abs(r_func(th, f, 0, 3, tp) - cx(1.0)) < 1e-15);
    CHECK(std::abs(t_func(th, f, 0, 3, tp) - t_func(th, f, 0, 3, tp)) == 0.0);
    // charge period N is the certificate that the principal branches of the
    // fractional powers glue consistently around the cycle
    for (int n = 0; n < 3; ++n) {
        CHECK(rel_diff(r_func(th, f, n + 3, 3, tp), r_func(th, f, n, 3, tp)) < 1e-11);
        CHECK(rel_diff(t_func(th, f, n + 3, 3, tp), t_func(th, f, n, 3, tp)) < 1e-11);
    }
    CHECK(rel_diff(r_func(th, f, 8, 5, tp), r_func(th, f, 3, 5, tp)) < 1e-11);
    // reflection ties negative charges to positive ones
    CHECK(rel_diff(r_func(th, -f, -2, 3, tp), r_func(th, f, 2, 3, tp)) < 1e-12);
    CHECK(rel_diff(t_func(th, -f, -2, 3, tp), t_func(th, f, 2, 3, tp)) < 1e-12);
    CHECK_THROWS_AS(r_func(th, f, 1, 0, tp), bad_input);
}

TEST_CASE("edge weights normalize at zero charge and swap sites whole") {
    CHECK(std::abs(discrete_W(th1, f1, f2, 0, 0, 3, tp) - cx(1.0)) < 1e-14);
    for (int ni = 0; ni < 3; ++ni)
        for (int nj = 0; nj < 3; ++nj)
            CHECK(rel_diff(discrete_W(th1, f1, f2, ni, nj, 3, tp),
                           discrete_W(th1, f2, f1, nj, ni, 3, tp)) < 1e-12);
    // chiral: transposing the charges alone changes the weight
    CHECK(std::abs(discrete_W(th1, f1, f2, 1, 2, 3, tp) -
                   discrete_W(th1, f1, f2, 2, 1, 3, tp)) > 1e-3);
}

TEST_CASE("weight table exports a parseable fixture") {
    auto tab = discrete_weight_table::build(th1, f1, f2, 3, tp);
    REQUIRE(tab.w.size() == 3);
    REQUIRE(tab.w[0].size() == 3);
    REQUIRE(tab.s.size() == 3);
    CHECK(std::abs(tab.w[0][0] - cx(1.0)) < 1e-14);
    CHECK(rel_diff(tab.w[1][2], discrete_W(th1, f1, f2, 1, 2, 3, tp)) < 1e-14);
    CHECK(rel_diff(tab.s[1], discrete_S(f1, 1, 3, tp)) < 1e-14);
    auto j = json::parse(tab.to_json());
    CHECK(j["N"] == 3);
    CHECK(j["branch"] == "principal");
    CHECK(j["w"].size() == 3);
    CHECK(j["w"][0][0][0].get<double>() == doctest::Approx(1.0));
    CHECK(j["s"].size() == 3);
}

TEST_CASE("triangle-side products are symmetric in the angle pair") {
    for (int N : {2, 3, 5}) {
        CHECK(rel_diff(p_factor(th1, f1, f2, N, tp),
                       p_factor(th1, f2, f1, N, tp)) < 1e-11);
        CHECK(rel_diff(q_factor(th1, f1, f2, N, tp),
                       q_factor(th1, f2, f1, N, tp)) < 1e-11);
    }
}

TEST_CASE("discrete star-triangle sum is exact for orders two through five") {
    for (int N : {2, 3, 4, 5}) {
        auto rep = verify_str_discrete(th1, th3, f1, f2, f3, N, tp);
        CHECK(rep.max_residual < 1e-10);
        CHECK(rep.ratio_spread < 1e-10);
        CHECK(rel_diff(rep.measured_R, rep.formula_R) < 1e-10);
    }
    // equal scattering angles, same boundary
    auto rep = verify_str_discrete(cx(0.7), cx(0.7), f1, f2, f3, 2, tp);
    CHECK(rep.max_residual < 1e-10);
    CHECK(rel_diff(rep.measured_R, rep.formula_R) < 1e-10);
}

TEST_CASE("order one collapses to a scalar identity") {
    auto rep = verify_str_discrete(th1, th3, f1, f2, f3, 1, tp);
    CHECK(rep.max_residual < 1e-12);
    CHECK(rel_diff(rep.measured_R, rep.formula_R) < 1e-12);
}

TEST_CASE("random angle draws keep the discrete relation exact") {
    // the fractional powers are principal-branch; they glue consistently
    // while each difference stays inside the positivity window of its leg,
    // |phi_i - phi_j| < pi - Theta with Theta the leg parameter (for the
    // star legs that reads |phi_i - phi0| < theta). Clustered boundary
    // angles with theta away from zero keep every leg inside.
    std::mt19937_64 rng(11);
    for (int rep_i = 0; rep_i < 3; ++rep_i) {
        cx a{uniform(rng, 0.5, 0.75)}, b{uniform(rng, 0.5, 0.75)};
        double c0 = uniform(rng, 1.0, 2.2);
        cx p1{c0 + uniform(rng, -0.2, 0.2)}, p2{c0 + uniform(rng, -0.2, 0.2)},
            p3{c0 + uniform(rng, -0.2, 0.2)};
        auto rep = verify_str_discrete(a, b, p1, p2, p3, 3, tp);
        CHECK(rep.max_residual < 1e-10);
        CHECK(rel_diff(rep.measured_R, rep.formula_R) < 1e-10);
    }
    // outside the window a base crosses the negative axis and the branch
    // guard refuses to pick a sheet
    CHECK_THROWS_AS(verify_str_discrete(cx(0.4358), cx(0.3493), cx(2.3928),
                                        cx(1.5098), cx(1.2634), 3, tp),
                    branch_ambiguity);
}

TEST_CASE("triangle factor rejects a center angle off the three-leg root") {
    CHECK_THROWS_AS(factor_R_discrete(th1, th3, cx(2.0), f1, f2, f3, 2, tp),
                    bad_input);
    auto rep = verify_str_discrete(th1, th3, f1, f2, f3, 2, tp);
    CHECK(rel_diff(factor_R_discrete(th1, th3, rep.phi0, f1, f2, f3, 2, tp),
                   rep.formula_R) < 1e-13);
}

TEST_CASE("frozen-angle weights satisfy the relation across orders and sectors") {
    for (int N : {2, 3, 4, 5})
        for (int zeta : {0, 1, 2})
            for (double nu : {0.0, 0.5}) {
                km_params kp{N, zeta, nu, tp};
                auto rep = verify_str_km(kp, th1, th3);
                CAPTURE(N);
                CAPTURE(zeta);
                CAPTURE(nu);
                CHECK(rep.max_residual < 1e-10);
                CHECK(rel_diff(rep.measured_R, rep.formula_R) < 1e-10);
                CHECK(rel_diff(rep.formula_R, km_R(kp, th1, th3)) < 1e-13);
            }
    CHECK_THROWS_AS(km_weight(km_params{3, 0, 0.3, tp}, th1, 0, 0), bad_input);
    CHECK_THROWS_AS(verify_str_km(km_params{3, 0, 0.0, cx(0.0, -1.0)}, th1, th3),
                    bad_domain);
}

TEST_CASE("shifting the frozen-angle index matches shifting both charges") {
    km_params shifted{3, 2, 0.0, tp}, base{3, 0, 0.0, tp};
    CHECK(rel_diff(km_weight(shifted, th1, 0, 0), km_weight(base, th1, 1, 1)) <
          1e-12);
}

TEST_CASE("general weights reduce to the frozen-angle point up to one constant") {
    auto rr = km_reduction(km_params{3, 0, 0.0, tp}, th1);
    CHECK(rr.spread < 1e-12);
    CHECK(std::abs(rr.ratio) > 0.1);
    auto r2 = km_reduction(km_params{4, 1, 0.5, tp}, th1);
    CHECK(r2.spread < 1e-12);
    CHECK(std::abs(r2.ratio - cx(1.0)) > 1e-3); // genuinely nontrivial constant
    // the general sweep still closes when every angle sits at the frozen value
    cx c = pi * 1.5;
    auto gen = verify_str_discrete_at(th1, th3, c, c, c, c, 3, tp);
    CHECK(gen.max_residual < 1e-10);
    CHECK(rel_diff(gen.measured_R, gen.formula_R) < 1e-10);
}

TEST_CASE("chiral potts dictionary sits on the curve") {
    auto d = cp_from_angles(ct1, ct3, cf1, cf2, cf3, 3);
    CHECK(cp_curve_residual(d.p, d.k, d.kp, 3) < 1e-10);
    CHECK(cp_curve_residual(d.q, d.k, d.kp, 3) < 1e-10);
    CHECK(cp_curve_residual(d.r, d.k, d.kp, 3) < 1e-10);
    CHECK(std::abs(d.k.imag()) < 1e-12); // real modulus for real angles
    CHECK(std::abs(d.k * d.k + d.kp * d.kp - cx(1.0)) < 1e-12);
    // the rapidity coordinates carry the angle differences exactly
    cx om_half = std::exp(iu * pi / 3.0);
    CHECK(std::abs(om_half * d.q.x / d.r.y -
                   std::exp(iu * (cf2 - cf3 - ct1) / 3.0)) < 1e-11);
    CHECK(std::abs(d.r.x * d.r.y / (d.q.x * d.q.y) -
                   std::exp(2.0 * iu * ct1 / 3.0)) < 1e-11);
    CHECK(std::abs(d.q.y * d.r.x / (d.q.x * d.r.y) -
                   std::exp(2.0 * iu * (cf1 - d.phi0) / 3.0)) < 1e-11);
}

TEST_CASE("rapidity map inverts back to the angles") {
    auto d = cp_from_angles(ct1, ct3, cf1, cf2, cf3, 3);
    auto a = cp_to_angles(d);
    CHECK(rel_diff(a.theta1, ct1) < 1e-9);
    CHECK(rel_diff(a.theta3, ct3) < 1e-9);
    CHECK(rel_diff(a.d10, cf1 - d.phi0) < 1e-9);
    CHECK(rel_diff(a.d20, cf2 - d.phi0) < 1e-9);
    CHECK(rel_diff(a.d30, cf3 - d.phi0) < 1e-9);
}

TEST_CASE("square roots cancel over a full charge cycle") {
    // the weights are defined through square roots of curve coordinates; the
    // consistency condition is that the raw product over a whole Z_N cycle
    // closes to one, which the curve equations guarantee
    auto d = cp_from_angles(ct1, ct3, cf1, cf2, cf3, 3);
    auto cycle = [&](const cp_rapidity& a, const cp_rapidity& b) {
        cx om = std::exp(2.0 * pi * iu / 3.0);
        cx pw(1.0), pb(1.0);
        for (int j = 1; j <= 3; ++j) {
            cx w = std::pow(om, j);
            pw *= (b.y - w * a.x) / (a.y - w * b.x);
            pb *= (om * a.x - w * b.x) / (b.y - w * a.y);
        }
        CHECK(std::abs(std::pow(a.mu / b.mu, 3) * pw - cx(1.0)) < 1e-11);
        CHECK(std::abs(std::pow(a.mu * b.mu, 3) * pb - cx(1.0)) < 1e-11);
    };
    cycle(d.p, d.q);
    cycle(d.p, d.r);
    cycle(d.q, d.r);
    // and the packaged weights normalize at zero charge
    CHECK(std::abs(cp_weights(d.p, d.q, 0, 3).w - cx(1.0)) < 1e-14);
    CHECK(std::abs(cp_weights(d.p, d.q, 0, 3).wbar - cx(1.0)) < 1e-14);
}

TEST_CASE("chiral potts relation sums exactly on the curve") {
    auto d = cp_from_angles(ct1, ct3, cf1, cf2, cf3, 3);
    auto rep = verify_str_cp(d);
    CHECK(rep.max_residual < 1e-10);
    CHECK(rep.ratio_spread < 1e-10);
    CHECK(rel_diff(rep.measured_R, cp_R(d)) < 1e-10);
    CHECK(rel_diff(rep.measured_R, rep.formula_R) < 1e-10);
    // more draws; the explicit square-root construction lives on the sheet
    // with phi1 < phi3, so the window keeps that ordering
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2; ++i) {
        cx a{uniform(rng, 0.15, 0.5)}, b{uniform(rng, 0.15, 0.5)};
        cx p1{uniform(rng, 0.1, 0.35)}, p2{uniform(rng, 0.1, 0.6)},
            p3{uniform(rng, 0.4, 0.6)};
        auto dd = cp_from_angles(a, b, p1, p2, p3, 3);
        auto rr = verify_str_cp(dd);
        CHECK(rr.max_residual < 1e-10);
        CHECK(rel_diff(rr.measured_R, cp_R(dd)) < 1e-10);
    }
    // outside the window the principal roots leave the curve and the
    // membership guard fires
    CHECK_THROWS_AS(cp_from_angles(ct1, ct3, cf3, cf2, cf1, 3),
                    curve_violation);
}

TEST_CASE("trigonometric limit ties the general weights to chiral potts") {
    auto d = cp_from_angles(ct1, ct3, cf1, cf2, cf3, 3);
    const cx tp_trig{0.0, 40.0};
    const double rt3 = std::sqrt(3.0);
    // center angle of the general layer degenerates to the closed trig form
    CHECK(rel_diff(cp_phi0_trig(ct1, ct3, cf1, cf2, cf3), d.phi0) < 1e-13);
    CHECK(rel_diff(cp_phi0_trig(ct1, ct3, cx(0.9), cx(0.9), cx(0.9)), cx(0.9)) <
          1e-13);
    // site factor flattens to 1/sqrt(N)
    for (int n = 0; n < 3; ++n)
        CHECK(std::abs(discrete_S(d.phi0, n, 3, tp_trig) - cx(1.0 / rt3)) <
              1e-12);
    // scalar factor matches up to the same 1/sqrt(N) normalization
    CHECK(rel_diff(factor_R_discrete(ct1, ct3, d.phi0, cf1, cf2, cf3, 3, tp_trig),
                   cp_R(d) / rt3) < 1e-9);
    auto gat = verify_str_discrete_at(ct1, ct3, d.phi0, cf1, cf2, cf3, 3, tp_trig);
    CHECK(gat.max_residual < 1e-10);
    CHECK(rel_diff(gat.measured_R, cp_R(d) / rt3) < 1e-9);
    // every edge of the star and triangle maps onto the (W, Wbar) pair
    for (int n0 = 0; n0 < 3; ++n0)
        for (int n1 = 0; n1 < 3; ++n1)
            for (int n2 = 0; n2 < 3; ++n2) {
                int n3 = (n0 + n1 + n2) % 3;
                CHECK(rel_diff(
                          discrete_W(ct1 + ct3, cf2, d.phi0, n2, n0, 3, tp_trig),
                          cp_weights(d.p, d.r, n2 - n0, 3).w) < 1e-10);
                CHECK(rel_diff(discrete_W(pi - ct1 - ct3, cf3, cf1, n3, n1, 3,
                                          tp_trig),
                               cp_weights(d.p, d.r, n1 - n3, 3).wbar) < 1e-10);
                CHECK(rel_diff(discrete_W(ct1, cf2, cf3, n2, n3, 3, tp_trig),
                               cp_weights(d.q, d.r, n2 - n3, 3).w) < 1e-10);
                CHECK(rel_diff(discrete_W(pi - ct1, cf1, d.phi0, n1, n0, 3,
                                          tp_trig),
                               cp_weights(d.q, d.r, n1 - n0, 3).wbar) < 1e-10);
                CHECK(rel_diff(discrete_W(ct3, cf1, cf2, n1, n2, 3, tp_trig),
                               cp_weights(d.p, d.q, n2 - n1, 3).w) < 1e-10);
                CHECK(rel_diff(discrete_W(pi - ct3, cf3, d.phi0, n3, n0, 3,
                                          tp_trig),
                               cp_weights(d.p, d.q, n0 - n3, 3).wbar) < 1e-10);
            }
}
