#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ellstr/weights.hpp"

using namespace ellstr;

namespace {

elliptic_params regime_i() {
    return elliptic_params::from_periods(cx(0.0, 0.51), cx(0.0, 0.73));
}

elliptic_params regime_ii() {
    return elliptic_params::from_periods(cx(0.11, 0.64), cx(-0.11, 0.64));
}

} // namespace

TEST_CASE("zero rapidity difference gives the identity weight") {
    for (auto ep : {regime_i(), regime_ii()}) {
        weight_spec spec{ep, cx(0.0)};
        CHECK(std::abs(weight_W(spec, spin(1.3), spin(0.4)) - 1.0) < 1e-13);
    }
}

TEST_CASE("weight values against independently computed anchors") {
    // 30-digit evaluations of the same product formulas, frozen here.
    {
        weight_spec spec{regime_i(), cx(0.37, 0.21)};
        cx w = weight_W(spec, spin(1.13), spin(2.41));
        CHECK(std::abs(w - cx(0.97926731202176059601, -0.012387439620862715225)) < 1e-12);
        cx s = weight_S(spec.params, spin(1.13));
        CHECK(std::abs(s - cx(0.26395490121729054345, 0.0)) < 1e-13);
    }
    {
        weight_spec spec{regime_ii(), cx(0.52)};
        cx w = weight_W(spec, spin(0.77), spin(5.03));
        CHECK(std::abs(w - cx(1.017287314493936853, 0.0)) < 1e-12);
        cx s = weight_S(spec.params, spin(0.77));
        CHECK(std::abs(s - cx(0.14978622508950512998, 0.0)) < 1e-13);
    }
}

TEST_CASE("weights are symmetric and even in the spin arguments") {
    std::mt19937_64 rng(2024);
    for (auto ep : {regime_i(), regime_ii()}) {
        for (int rep = 0; rep < 5; ++rep) {
            weight_spec spec{ep, cx(uniform(rng, 0.1, 0.5), uniform(rng, -0.2, 0.2))};
            double x = uniform(rng, 0.0, 2.0 * pi), y = uniform(rng, 0.0, 2.0 * pi);
            cx w = weight_W(spec, spin(x), spin(y));
            CHECK(rel_diff(w, weight_W(spec, spin(y), spin(x))) < 1e-12);
            CHECK(rel_diff(w, weight_W(spec, spin(-x), spin(y))) < 1e-12);
            CHECK(rel_diff(w, weight_W(spec, spin(x), spin(-y))) < 1e-12);
        }
    }
}

TEST_CASE("physical regimes give real positive weights for real rapidity") {
    std::mt19937_64 rng(77);
    for (auto ep : {regime_i(), regime_ii()}) {
        for (int rep = 0; rep < 5; ++rep) {
            weight_spec spec{ep, cx(uniform(rng, 0.05, 0.45 * ep.eta.real()))};
            cx w = weight_W(spec, spin(uniform(rng, 0.0, 2.0 * pi)),
                            spin(uniform(rng, 0.0, 2.0 * pi)));
            CHECK(w.real() > 0.0);
            CHECK(std::abs(w.imag()) < 1e-12 * std::abs(w));
        }
    }
}

TEST_CASE("raw normalization differs from the default by kappa") {
    auto ep = regime_i();
    weight_spec norm{ep, cx(0.41, 0.07)};
    weight_spec raw = norm;
    raw.norm = weight_spec::normalization::raw;
    cx ratio = weight_W(raw, spin(0.9), spin(1.7)) / weight_W(norm, spin(0.9), spin(1.7));
    CHECK(rel_diff(ratio, kappa(norm.alpha, ep)) < 1e-12);
}

TEST_CASE("difference equations in both quasi-periods") {
    std::mt19937_64 rng(5150);
    for (auto ep : {regime_i(), regime_ii()}) {
        for (int rep = 0; rep < 4; ++rep) {
            weight_spec spec{ep, cx(uniform(rng, 0.1, 0.6), uniform(rng, -0.1, 0.1))};
            double r = check_recurrence(spec, spin(uniform(rng, 0.0, 2.0 * pi)),
                                        spin(uniform(rng, 0.0, 2.0 * pi)));
            CHECK(r < 1e-11);
        }
    }
}

TEST_CASE("pointwise inversion") {
    std::mt19937_64 rng(31337);
    for (auto ep : {regime_i(), regime_ii()}) {
        for (int rep = 0; rep < 5; ++rep) {
            weight_spec spec{ep, cx(uniform(rng, 0.05, 0.7), uniform(rng, -0.3, 0.3))};
            CHECK(verify_inversion_second(spec, spin(uniform(rng, 0.0, 2.0 * pi)),
                                          spin(uniform(rng, 0.0, 2.0 * pi))) < 1e-12);
        }
    }
}

TEST_CASE("star integral equals the triangle product") {
    std::mt19937_64 rng(909);
    quadrature_control qctl;
    qctl.points = 128;
    for (auto ep : {regime_i(), regime_ii()}) {
        double eta = ep.eta.real();
        weight_spec s1{ep, cx(uniform(rng, 0.1, 0.4) * eta)};
        weight_spec s3{ep, cx(uniform(rng, 0.1, 0.4) * eta)};
        auto rep = verify_str_master(s1, s3, spin(uniform(rng, 0.0, 2.0 * pi)),
                                     spin(uniform(rng, 0.0, 2.0 * pi)),
                                     spin(uniform(rng, 0.0, 2.0 * pi)), qctl);
        CHECK(rep.ratio_minus_one < 1e-9);
        CHECK(rep.points_used == 256);
    }
}

TEST_CASE("star integral is contour independent inside the analyticity strip") {
    auto ep = regime_i();
    weight_spec s1{ep, cx(0.9)};
    weight_spec s3{ep, cx(1.2)};
    quadrature_control qctl;
    qctl.points = 128;
    auto flat = verify_str_master(s1, s3, spin(0.6), spin(2.9), spin(4.4), qctl);
    qctl.contour_shift = 0.1;
    auto lifted = verify_str_master(s1, s3, spin(0.6), spin(2.9), spin(4.4), qctl);
    CHECK(rel_diff(flat.lhs, lifted.lhs) < 1e-9);
}

TEST_CASE("doubling certification rejects an unresolvable tolerance") {
    auto ep = regime_i();
    weight_spec s1{ep, cx(0.9)};
    weight_spec s3{ep, cx(1.2)};
    quadrature_control qctl;
    qctl.points = 32;
    qctl.rel_tol = 1e-15;
    CHECK_THROWS_AS(verify_str_master(s1, s3, spin(0.6), spin(2.9), spin(4.4), qctl),
                    quadrature_not_converged);
}

TEST_CASE("grid validation") {
    auto ep = regime_i();
    weight_spec s1{ep, cx(0.9)};
    weight_spec s3{ep, cx(1.2)};
    quadrature_control qctl;
    qctl.points = 100;
    CHECK_THROWS_AS(verify_str_master(s1, s3, spin(0.6), spin(2.9), spin(4.4), qctl),
                    bad_input);
    qctl.points = 16;
    CHECK_THROWS_AS(verify_str_master(s1, s3, spin(0.6), spin(2.9), spin(4.4), qctl),
                    bad_input);
}

TEST_CASE("smeared inversion reproduces the reflection-symmetrized test function") {
    auto ep = regime_i();
    quadrature_control qctl;
    qctl.points = 128;
    qctl.rel_tol = 1e-4;
    auto g_const = [](const cx&) { return cx(1.0); };
    auto g_cos = [](const cx& y) { return std::cos(y); };
    const spin x(1.9);

    // The composed kernel is a delta family of width ~alpha, so smearing
    // leaves a residual floor proportional to alpha^2.
    weight_spec spec{ep, cx(0.2)};
    const double r_const_wide = verify_inversion_first(spec, x, g_const, qctl);
    spec.alpha = cx(0.1);
    const double r_const = verify_inversion_first(spec, x, g_const, qctl);
    const double r_cos = verify_inversion_first(spec, x, g_cos, qctl);
    CHECK(r_const_wide < 0.15);
    CHECK(r_const < 0.04);
    CHECK(r_cos < 0.08);
    CHECK(r_const_wide / r_const == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("smeared inversion residual drops as the grid is refined") {
    auto ep = regime_i();
    weight_spec spec{ep, cx(0.1)};
    auto g_cos = [](const cx& y) { return std::cos(y); };
    quadrature_control qctl;
    qctl.rel_tol = 2.0; // compare raw grids without the doubling gate
    qctl.points = 32;
    const double coarse = verify_inversion_first(spec, spin(pi / 3.0), g_cos, qctl);
    qctl.points = 128;
    const double fine = verify_inversion_first(spec, spin(pi / 3.0), g_cos, qctl);
    CHECK(fine < coarse);
}

TEST_CASE("smeared inversion rejects the degenerate points") {
    auto ep = regime_i();
    weight_spec spec{ep, cx(0.1 * ep.eta.real())};
    auto g = [](const cx&) { return cx(1.0); };
    CHECK_THROWS_AS(verify_inversion_first(spec, spin(0.0), g), bad_domain);
    CHECK_THROWS_AS(verify_inversion_first(spec, spin(pi), g), bad_domain);
    spec.alpha = cx(-0.1);
    CHECK_THROWS_AS(verify_inversion_first(spec, spin(1.9), g), bad_domain);
    spec.alpha = cx(0.2);
    quadrature_control qctl;
    qctl.contour_shift = 0.3;
    CHECK_THROWS_AS(verify_inversion_first(spec, spin(1.9), g, qctl), pole_on_contour);
}
