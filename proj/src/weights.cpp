#include "ellstr/weights.hpp"

#include <algorithm>
#include <cmath>

namespace ellstr {

namespace {

// Route each gamma-ratio argument to the series inside its convergence
// strip and to the double product outside it.
cx phi_auto(const cx& s, const elliptic_params& ep, const series_control& ctl) {
    if (std::abs(s.imag()) < 0.95 * ep.eta.real())
        return elliptic_gamma_series(s, ep, ctl);
    return elliptic_gamma_product(s, ep, ctl);
}

cx weight_W_unnormalized(const elliptic_params& ep, const cx& alpha,
                         const cx& x, const cx& y, const series_control& ctl) {
    const cx ia = iu * alpha;
    const cx u = x - y, v = x + y;
    return phi_auto(u + ia, ep, ctl) / phi_auto(u - ia, ep, ctl) *
           phi_auto(v + ia, ep, ctl) / phi_auto(v - ia, ep, ctl);
}

// One edge weight with the normalization constant hoisted out of the
// quadrature loops; kappa only depends on the rapidity difference.
struct edge_fn {
    elliptic_params ep;
    cx alpha;
    cx kap{1.0, 0.0};

    edge_fn(const weight_spec& spec, const series_control& ctl)
        : ep(spec.params), alpha(spec.alpha) {
        if (spec.norm == weight_spec::normalization::kappa_normalized)
            kap = kappa(alpha, spec.params, ctl);
    }

    cx operator()(const cx& x, const cx& y, const series_control& ctl) const {
        return weight_W_unnormalized(ep, alpha, x, y, ctl) / kap;
    }
};

void require_grid(int points) {
    if (points < 32 || (points & (points - 1)) != 0)
        throw bad_input("quadrature points must be a power of two, at least 32");
}

bool finite(const cx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

} // namespace

cx weight_W_cx(const weight_spec& spec, const cx& x, const cx& y,
               const series_control& ctl) {
    cx w = weight_W_unnormalized(spec.params, spec.alpha, x, y, ctl);
    if (spec.norm == weight_spec::normalization::kappa_normalized)
        w /= kappa(spec.alpha, spec.params, ctl);
    return w;
}

cx weight_W(const weight_spec& spec, const spin& x, const spin& y,
            const series_control& ctl) {
    return weight_W_cx(spec, cx(x.x), cx(y.x), ctl);
}

cx weight_S_cx(const elliptic_params& params, const cx& x,
               const series_control& ctl) {
    return std::exp(params.eta / 4.0) / (4.0 * pi) *
           theta(1, x, params.tau, ctl) * theta(1, x, params.sigma, ctl);
}

cx weight_S(const elliptic_params& params, const spin& x,
            const series_control& ctl) {
    return weight_S_cx(params, cx(x.x), ctl);
}

double check_recurrence(const weight_spec& spec, const spin& x, const spin& y,
                        const series_control& ctl) {
    const auto& ep = spec.params;
    const cx ia = iu * spec.alpha;
    const cx u = cx(x.x) - cx(y.x), v = cx(x.x) + cx(y.x);
    // A shift by pi*sigma pairs with theta ratios in tau, and vice versa.
    const cx shift_period[2] = {ep.sigma, ep.tau};
    const cx theta_period[2] = {ep.tau, ep.sigma};
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
        cx lhs = weight_W_unnormalized(ep, spec.alpha,
                                       cx(x.x) - pi * shift_period[k], cx(y.x), ctl) /
                 weight_W_unnormalized(ep, spec.alpha,
                                       cx(x.x) + pi * shift_period[k], cx(y.x), ctl);
        cx rhs = theta(4, 0.5 * (u + ia), theta_period[k], ctl) /
                 theta(4, 0.5 * (u - ia), theta_period[k], ctl) *
                 theta(4, 0.5 * (v + ia), theta_period[k], ctl) /
                 theta(4, 0.5 * (v - ia), theta_period[k], ctl);
        worst = std::max(worst, std::abs(lhs / rhs - 1.0));
    }
    return worst;
}

str_master_report verify_str_master(const weight_spec& spec1,
                                    const weight_spec& spec3, const spin& x1,
                                    const spin& x2, const spin& x3,
                                    const quadrature_control& qctl) {
    require_grid(qctl.points);
    const series_control ctl{};
    const auto& ep = spec1.params;
    const cx a1 = spec1.alpha, a3 = spec3.alpha;

    auto mk = [&](const cx& a) {
        return edge_fn(weight_spec{ep, a, spec1.norm}, ctl);
    };
    edge_fn star1 = mk(ep.eta - a1), star2 = mk(a1 + a3), star3 = mk(ep.eta - a3);
    edge_fn tri1 = mk(a1), tri2 = mk(ep.eta - a1 - a3), tri3 = mk(a3);

    auto integral = [&](int m) {
        const double h = 2.0 * pi / m;
        kahan_sum_cx acc;
        for (int k = 0; k < m; ++k) {
            const cx x0(h * k, qctl.contour_shift);
            cx f;
            try {
                f = weight_S_cx(ep, x0, ctl) * star1(cx(x1.x), x0, ctl) *
                    star2(cx(x2.x), x0, ctl) * star3(cx(x3.x), x0, ctl);
            } catch (const pole_hit&) {
                throw pole_on_contour("weight pole on the integration line");
            }
            if (!finite(f))
                throw pole_on_contour("integrand overflow on the integration line");
            acc.add(f);
        }
        return h * acc.value();
    };

    const cx coarse = integral(qctl.points);
    const cx fine = integral(2 * qctl.points);
    if (std::abs(coarse / fine - 1.0) > qctl.rel_tol)
        throw quadrature_not_converged("trapezoid doubling changed the integral by " +
                                       std::to_string(std::abs(coarse / fine - 1.0)));

    str_master_report rep;
    rep.lhs = fine;
    rep.rhs = tri1(cx(x2.x), cx(x3.x), ctl) * tri2(cx(x1.x), cx(x3.x), ctl) *
              tri3(cx(x1.x), cx(x2.x), ctl);
    rep.ratio_minus_one = std::abs(rep.lhs / rep.rhs - 1.0);
    rep.points_used = 2 * qctl.points;
    return rep;
}

double verify_inversion_second(const weight_spec& spec, const spin& x,
                               const spin& y, const series_control& ctl) {
    weight_spec mirror = spec;
    mirror.alpha = -spec.alpha;
    return std::abs(weight_W(spec, x, y, ctl) * weight_W(mirror, x, y, ctl) - 1.0);
}

double verify_inversion_first(const weight_spec& spec, const spin& x,
                              const std::function<cx(const cx&)>& test_fn,
                              const quadrature_control& qctl) {
    require_grid(qctl.points);
    const series_control ctl{};
    const auto& ep = spec.params;
    const cx alpha = spec.alpha;
    const double a = alpha.real();
    const double band = pi * std::min(ep.tau.imag(), ep.sigma.imag());

    if (std::abs(alpha.imag()) > 1e-12 || a <= 0.0 || a >= band)
        throw bad_domain("smeared inversion check needs small real positive alpha");

    // The delta-comb pairs x with -x, so the two coincide at 0 and pi and
    // the smeared identity degenerates there (S(x) also vanishes).
    const double d0 = std::min({x.x, std::abs(x.x - pi),
                                std::abs(x.x - 2.0 * pi)});
    if (d0 < 1e-9)
        throw bad_domain("smeared inversion check needs x away from 0 and pi");

    // The second factor sits past the crossing point, where its nearest
    // pole pairs have swapped sides of the real line. The integral that
    // continues the composition from inside the physical strip is the
    // real-line one plus the residues those poles dragged across; a line
    // shift that reaches the poles would change the crossing pattern.
    if (std::abs(qctl.contour_shift) >= a)
        throw pole_on_contour("contour shift reaches the nearest weight pole");

    edge_fn wm(weight_spec{ep, ep.eta - alpha, spec.norm}, ctl);
    edge_fn wp(weight_spec{ep, ep.eta + alpha, spec.norm}, ctl);
    const cx ia = iu * alpha;

    // Residue of y -> wp(z,y) at y = z + dir*i*alpha by a small circle;
    // the radius keeps every other pole of the kernel outside.
    auto residue = [&](const cx& z, double dir) {
        const double zr = z.real();
        const double rad =
            0.9 * std::min({a, zr, std::abs(pi - zr), std::abs(2.0 * pi - zr)});
        const cx c0 = z + dir * ia;
        const int n = 32;
        kahan_sum_cx acc;
        for (int j = 0; j < n; ++j) {
            const cx e = rad * std::exp(iu * (2.0 * pi * j / n));
            acc.add(wp(z, c0 + e, ctl) * e);
        }
        return acc.value() / static_cast<double>(n);
    };

    auto composed = [&](int m) {
        const double h = 2.0 * pi / m;
        kahan_sum_cx outer;
        for (int j = 0; j < m; ++j) {
            const cx z(h * (j + 0.5), qctl.contour_shift);
            kahan_sum_cx inner;
            for (int k = 0; k < m; ++k) {
                const cx y(h * (k + 0.5));
                inner.add(wp(z, y, ctl) * test_fn(y));
            }
            const cx rp = residue(z, +1.0), rm = residue(z, -1.0);
            const cx crossed =
                2.0 * pi * iu *
                (rm * (test_fn(z - ia) + test_fn(-z + ia)) -
                 rp * (test_fn(z + ia) + test_fn(-z - ia)));
            const cx f = weight_S_cx(ep, z, ctl) * wm(cx(x.x), z, ctl) *
                         (h * inner.value() + crossed);
            if (!finite(f))
                throw pole_on_contour("integrand overflow on the integration line");
            outer.add(f);
        }
        return h * outer.value();
    };

    const cx coarse = composed(qctl.points);
    const cx fine = composed(2 * qctl.points);
    if (std::abs(coarse / fine - 1.0) > qctl.rel_tol)
        throw quadrature_not_converged("trapezoid doubling changed the integral by " +
                                       std::to_string(std::abs(coarse / fine - 1.0)));

    const cx rhs = (test_fn(cx(x.x)) + test_fn(cx(2.0 * pi - x.x))) /
                   (2.0 * weight_S(ep, x, ctl));
    return std::abs(fine / rhs - 1.0);
}

} // namespace ellstr
