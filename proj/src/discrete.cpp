#include "ellstr/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ellstr/classical.hpp"

namespace ellstr {

using nlohmann::json;

namespace {

// Principal-branch fractional power. The period-N symmetry of r/t is the
// systemic guard for this choice; a base sitting exactly on the cut has no
// preferred side and is rejected.
cx frac_pow(const cx& base, double expo) {
    if (std::abs(base) == 0.0)
        throw pole_hit("fractional power of a vanishing base");
    if (base.imag() == 0.0 && base.real() < 0.0)
        throw branch_ambiguity("fractional-power base on the negative axis");
    return std::exp(expo * std::log(base));
}

void require_order(int N) {
    if (N < 1) throw bad_input("charge order N must be at least 1");
}

int mod_n(int n, int N) { return ((n % N) + N) % N; }

void require_km(const km_params& kp) {
    require_order(kp.N);
    if (kp.nu != 0.0 && kp.nu != 0.5)
        throw bad_input("nu must be 0 or 1/2");
    if (!(kp.tau_prime.imag() > 0.0))
        throw bad_domain("tau' must lie in the upper half plane");
}

} // namespace

cx r_func(const cx& th, const cx& phi, int n, int N, const cx& tau_prime,
          const series_control& ctl) {
    require_order(N);
    if (n == 0) return cx(1.0);
    if (n < 0) return r_func(th, -phi, -n, N, tau_prime, ctl);
    const cx sub = tau_prime / static_cast<double>(N);
    const cx base = theta(2, 0.5 * (phi + th), tau_prime, ctl) /
                    theta(2, 0.5 * (phi - th), tau_prime, ctl);
    cx out = frac_pow(base, static_cast<double>(n) / N);
    for (int k = 1; k <= n; ++k) {
        const double node = pi * (k - 0.5) / N;
        const cx den = theta(1, node + (phi + th) / (2.0 * N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta1 zero in r product");
        out *= theta(1, node + (phi - th) / (2.0 * N), sub, ctl) / den;
    }
    return out;
}

cx t_func(const cx& th, const cx& phi, int n, int N, const cx& tau_prime,
          const series_control& ctl) {
    require_order(N);
    if (n == 0) return cx(1.0);
    if (n < 0) return t_func(th, -phi, -n, N, tau_prime, ctl);
    const cx sub = tau_prime / static_cast<double>(N);
    const cx base = theta(3, 0.5 * (phi + th), tau_prime, ctl) /
                    theta(3, 0.5 * (phi - th), tau_prime, ctl);
    cx out = frac_pow(base, static_cast<double>(n) / N);
    for (int k = 1; k <= n; ++k) {
        const double node = pi * (k - 0.5) / N;
        const cx den = theta(4, node + (phi + th) / (2.0 * N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta4 zero in t product");
        out *= theta(4, node + (phi - th) / (2.0 * N), sub, ctl) / den;
    }
    return out;
}

cx discrete_W(const cx& th, const cx& phi_i, const cx& phi_j, int n_i,
              int n_j, int N, const cx& tau_prime, const series_control& ctl) {
    return r_func(th, phi_i - phi_j, n_i - n_j, N, tau_prime, ctl) *
           t_func(th, phi_i + phi_j, n_i + n_j, N, tau_prime, ctl);
}

cx discrete_S(const cx& phi0, int n0, int N, const cx& tau_prime,
              const series_control& ctl) {
    require_order(N);
    const cx den = theta(4, phi0, tau_prime, ctl);
    if (std::abs(den) == 0.0) throw pole_hit("theta4 zero in site weight");
    return theta(4, 2.0 * pi * n0 / N + phi0 / static_cast<double>(N),
                 tau_prime / static_cast<double>(N), ctl) /
           (den * std::sqrt(static_cast<double>(N)));
}

discrete_weight_table discrete_weight_table::build(const cx& th,
                                                   const cx& phi_i,
                                                   const cx& phi_j, int N,
                                                   const cx& tau_prime,
                                                   const series_control& ctl) {
    require_order(N);
    discrete_weight_table t;
    t.N = N;
    t.theta = th;
    t.phi_i = phi_i;
    t.phi_j = phi_j;
    t.w.assign(N, std::vector<cx>(N));
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            t.w[a][b] = discrete_W(th, phi_i, phi_j, a, b, N, tau_prime, ctl);
    t.s.resize(N);
    for (int a = 0; a < N; ++a)
        t.s[a] = discrete_S(phi_i, a, N, tau_prime, ctl);
    return t;
}

std::string discrete_weight_table::to_json() const {
    auto out = [](const cx& v) { return json::array({v.real(), v.imag()}); };
    json j;
    j["N"] = N;
    j["theta"] = out(theta);
    j["phi_i"] = out(phi_i);
    j["phi_j"] = out(phi_j);
    j["branch"] = "principal";
    j["w"] = json::array();
    for (const auto& row : w) {
        json jr = json::array();
        for (const auto& v : row) jr.push_back(out(v));
        j["w"].push_back(jr);
    }
    j["s"] = json::array();
    for (const auto& v : s) j["s"].push_back(out(v));
    return j.dump(2);
}

namespace {

cx k_factor(const cx& th, int N, const cx& tau_prime,
            const series_control& ctl) {
    const cx sub = tau_prime / static_cast<double>(N);
    const cx t1p = theta1_prime(sub, ctl);
    cx out(1.0);
    for (int n = 1; n < N; ++n)
        out *= frac_pow(0.5 * t1p *
                            theta(1, pi * n / N + th / static_cast<double>(N),
                                  sub, ctl),
                        static_cast<double>(n) / N);
    return out;
}

} // namespace

cx p_factor(const cx& th, const cx& fi, const cx& fj, int N,
            const cx& tau_prime, const series_control& ctl) {
    require_order(N);
    const cx sub = tau_prime / static_cast<double>(N);
    cx out(1.0);
    for (int n = 0; n < N; ++n) {
        const double node = pi * (n + 0.5) / N;
        const cx num = theta(1, node + (fi - fj + th) / (2.0 * N), sub, ctl) *
                       theta(4, node + (fi + fj + th) / (2.0 * N), sub, ctl);
        const cx den = theta(1, node + (fi - fj - th) / (2.0 * N), sub, ctl) *
                       theta(4, node + (fi + fj - th) / (2.0 * N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta zero in P factor");
        out *= frac_pow(num / den,
                        static_cast<double>(N - 1 - 2 * n) / (2.0 * N));
    }
    return out;
}

// Exponent is the product index over N; the printed form indexes it by the
// corner permutation, which fails the brute-force sum check.
cx q_factor(const cx& th, const cx& fa, const cx& fb, int N,
            const cx& tau_prime, const series_control& ctl) {
    require_order(N);
    const cx sub = tau_prime / static_cast<double>(N);
    cx out(1.0);
    for (int n = 1; n < N; ++n) {
        const double node = pi * n / N;
        const cx prod =
            theta(1, node + (th - fa + fb) / (2.0 * N), sub, ctl) *
            theta(1, node + (th + fa - fb) / (2.0 * N), sub, ctl) *
            theta(4, node + (th + fa + fb) / (2.0 * N), sub, ctl) *
            theta(4, node + (th - fa - fb) / (2.0 * N), sub, ctl);
        out *= frac_pow(prod, static_cast<double>(n) / N);
    }
    return out;
}

cx factor_R_discrete(const cx& theta1, const cx& theta3, const cx& phi0,
                     const cx& phi1, const cx& phi2, const cx& phi3, int N,
                     const cx& tau_prime, const series_control& ctl) {
    require_order(N);
    // the product equation pins the log sum only mod full turns
    cx leg_sum = threeleg_log_product(theta1, theta3, phi0, phi1, phi2, phi3,
                                      tau_prime, ctl);
    leg_sum -= 2.0 * pi * iu * std::round(leg_sum.imag() / (2.0 * pi));
    const double leg = std::abs(leg_sum);
    if (leg > 1e-8) {
        std::ostringstream os;
        os << "center angle violates the three-leg equation, residual "
           << leg;
        throw bad_input(os.str());
    }
    const cx f1 = k_factor(theta1, N, tau_prime, ctl) *
                  p_factor(theta1, phi2, phi3, N, tau_prime, ctl) /
                  q_factor(theta1, phi0, phi1, N, tau_prime, ctl);
    const cx f3 = k_factor(theta3, N, tau_prime, ctl) *
                  p_factor(theta3, phi1, phi2, N, tau_prime, ctl) /
                  q_factor(theta3, phi0, phi3, N, tau_prime, ctl);
    const cx f13 = k_factor(theta1 + theta3, N, tau_prime, ctl) *
                   p_factor(theta1 + theta3, phi0, phi2, N, tau_prime, ctl) /
                   q_factor(theta1 + theta3, phi1, phi3, N, tau_prime, ctl);
    if (std::abs(f13) == 0.0)
        throw zero_denominator("vanishing cross-channel factor");
    return f1 * f3 / f13;
}

str_discrete_report verify_str_discrete_at(const cx& theta1, const cx& theta3,
                                           const cx& phi0, const cx& phi1,
                                           const cx& phi2, const cx& phi3,
                                           int N, const cx& tau_prime,
                                           const series_control& ctl) {
    require_order(N);
    str_discrete_report rep;
    rep.phi0 = phi0;
    rep.formula_R = factor_R_discrete(theta1, theta3, phi0, phi1, phi2, phi3,
                                      N, tau_prime, ctl);

    // precompute the four weight families over their charge pairs
    std::vector<cx> s0(N);
    for (int n0 = 0; n0 < N; ++n0)
        s0[n0] = discrete_S(phi0, n0, N, tau_prime, ctl);
    auto table = [&](const cx& th, const cx& fa, const cx& fb) {
        std::vector<std::vector<cx>> t(N, std::vector<cx>(N));
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                t[a][b] = discrete_W(th, fa, fb, a, b, N, tau_prime, ctl);
        return t;
    };
    const auto w10 = table(pi - theta1, phi1, phi0);
    const auto w20 = table(theta1 + theta3, phi2, phi0);
    const auto w30 = table(pi - theta3, phi3, phi0);
    const auto w23 = table(theta1, phi2, phi3);
    const auto w13 = table(pi - theta1 - theta3, phi1, phi3);
    const auto w12 = table(theta3, phi1, phi2);

    bool first = true;
    cx ratio0;
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            for (int n3 = 0; n3 < N; ++n3) {
                kahan_sum_cx lhs;
                for (int n0 = 0; n0 < N; ++n0)
                    lhs.add(s0[n0] * w10[n1][n0] * w20[n2][n0] * w30[n3][n0]);
                const cx rhs = w23[n2][n3] * w13[n1][n3] * w12[n1][n2];
                const cx l = lhs.value();
                const cx scaled = rep.formula_R * rhs;
                if (std::abs(scaled) == 0.0)
                    throw zero_denominator("triangle side vanishes");
                rep.max_residual = std::max(
                    rep.max_residual, std::abs(l - scaled) / std::abs(scaled));
                const cx ratio = l / rhs;
                if (first) {
                    ratio0 = ratio;
                    rep.measured_R = ratio;
                    first = false;
                } else {
                    rep.ratio_spread =
                        std::max(rep.ratio_spread, std::abs(ratio - ratio0));
                }
            }
    return rep;
}

str_discrete_report verify_str_discrete(const cx& theta1, const cx& theta3,
                                        const cx& phi1, const cx& phi2,
                                        const cx& phi3, int N,
                                        const cx& tau_prime,
                                        const series_control& ctl) {
    const auto cp = classical_params::from_tau_prime(N, tau_prime);
    const cx phi0 =
        solve_q4_threeleg(theta1, theta3, phi1, phi2, phi3, cp, {});
    return verify_str_discrete_at(theta1, theta3, phi0, phi1, phi2, phi3, N,
                                  tau_prime, ctl);
}

namespace {

cx km_r(const km_params& kp, const cx& th, int n, const series_control& ctl) {
    const cx sub = kp.tau_prime / static_cast<double>(kp.N);
    cx out(1.0);
    for (int k = 1; k <= n; ++k) {
        const double node = pi * (k - 0.5) / kp.N;
        const cx den = theta(1, node + th / (2.0 * kp.N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta1 zero in km ratio");
        out *= theta(1, node - th / (2.0 * kp.N), sub, ctl) / den;
    }
    return out;
}

cx km_t(const km_params& kp, const cx& th, int n, const series_control& ctl) {
    const cx sub = kp.tau_prime / static_cast<double>(kp.N);
    cx out(1.0);
    for (int k = 1; k <= n; ++k) {
        const double node = pi * (k - 0.5 + kp.nu) / kp.N;
        const cx den = theta(4, node + th / (2.0 * kp.N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta4 zero in km ratio");
        out *= theta(4, node - th / (2.0 * kp.N), sub, ctl) / den;
    }
    return out;
}

cx km_f(const km_params& kp, const cx& th, const series_control& ctl) {
    const cx sub = kp.tau_prime / static_cast<double>(kp.N);
    cx out(1.0);
    for (int k = 1; k <= kp.N / 2; ++k) {
        const cx den = theta(1, pi * k / kp.N - th / (2.0 * kp.N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta1 zero in km factor");
        out *= theta(1, pi * (k - 0.5) / kp.N + th / (2.0 * kp.N), sub, ctl) /
               den;
    }
    const int m = static_cast<int>(std::floor((kp.N - 2.0 * kp.nu) / 2.0));
    for (int k = 1; k <= m; ++k) {
        const cx den =
            theta(4, pi * (k + kp.nu) / kp.N - th / (2.0 * kp.N), sub, ctl);
        if (std::abs(den) == 0.0) throw pole_hit("theta4 zero in km factor");
        out *= theta(4, pi * (k - 0.5 + kp.nu) / kp.N + th / (2.0 * kp.N),
                     sub, ctl) /
               den;
    }
    return out;
}

} // namespace

cx km_weight(const km_params& kp, const cx& th, int n_i, int n_j,
             const series_control& ctl) {
    require_km(kp);
    return km_r(kp, th, mod_n(n_i - n_j, kp.N), ctl) *
           km_t(kp, th, mod_n(n_i + n_j + kp.zeta, kp.N), ctl);
}

cx km_S(const km_params& kp, int n, const series_control& ctl) {
    require_km(kp);
    const cx den = theta(4, cx(pi * kp.nu), kp.tau_prime, ctl);
    if (std::abs(den) == 0.0) throw pole_hit("theta4 zero in km site weight");
    return theta(4, cx(pi * (2.0 * n + kp.zeta + kp.nu) / kp.N),
                 kp.tau_prime / static_cast<double>(kp.N), ctl) /
           (den * std::sqrt(static_cast<double>(kp.N)));
}

cx km_R(const km_params& kp, const cx& theta1, const cx& theta3,
        const series_control& ctl) {
    require_km(kp);
    const cx f13 = km_f(kp, theta1 + theta3, ctl);
    if (std::abs(f13) == 0.0)
        throw zero_denominator("vanishing km cross factor");
    return km_f(kp, theta1, ctl) * km_f(kp, theta3, ctl) / f13;
}

str_discrete_report verify_str_km(const km_params& kp, const cx& theta1,
                                  const cx& theta3,
                                  const series_control& ctl) {
    require_km(kp);
    const int N = kp.N;
    str_discrete_report rep;
    rep.phi0 = cx(pi * (kp.zeta + kp.nu));
    rep.formula_R = km_R(kp, theta1, theta3, ctl);

    std::vector<cx> s0(N);
    for (int n0 = 0; n0 < N; ++n0) s0[n0] = km_S(kp, n0, ctl);
    auto table = [&](const cx& th) {
        std::vector<std::vector<cx>> t(N, std::vector<cx>(N));
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                t[a][b] = km_weight(kp, th, a, b, ctl);
        return t;
    };
    const auto w1 = table(pi - theta1);
    const auto w13s = table(theta1 + theta3);
    const auto w3 = table(pi - theta3);
    const auto v1 = table(theta1);
    const auto v13 = table(pi - theta1 - theta3);
    const auto v3 = table(theta3);

    bool first = true;
    cx ratio0;
    for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = 0; n2 < N; ++n2)
            for (int n3 = 0; n3 < N; ++n3) {
                kahan_sum_cx lhs;
                for (int n0 = 0; n0 < N; ++n0)
                    lhs.add(s0[n0] * w1[n1][n0] * w13s[n2][n0] * w3[n3][n0]);
                const cx rhs = v1[n2][n3] * v13[n1][n3] * v3[n1][n2];
                const cx scaled = rep.formula_R * rhs;
                if (std::abs(scaled) == 0.0)
                    throw zero_denominator("km triangle side vanishes");
                const cx l = lhs.value();
                rep.max_residual = std::max(
                    rep.max_residual, std::abs(l - scaled) / std::abs(scaled));
                const cx ratio = l / rhs;
                if (first) {
                    ratio0 = ratio;
                    rep.measured_R = ratio;
                    first = false;
                } else {
                    rep.ratio_spread =
                        std::max(rep.ratio_spread, std::abs(ratio - ratio0));
                }
            }
    return rep;
}

reduction_report km_reduction(const km_params& kp, const cx& th,
                              const series_control& ctl) {
    require_km(kp);
    const cx phi(pi * (kp.zeta + kp.nu));
    reduction_report rep;
    bool first = true;
    for (int a = 0; a < kp.N; ++a)
        for (int b = 0; b < kp.N; ++b) {
            const cx km = km_weight(kp, th, a, b, ctl);
            if (std::abs(km) == 0.0)
                throw zero_denominator("km weight vanishes in reduction");
            const cx ratio =
                discrete_W(th, phi, phi, a, b, kp.N, kp.tau_prime, ctl) / km;
            if (first) {
                rep.ratio = ratio;
                first = false;
            } else {
                rep.spread = std::max(rep.spread, std::abs(ratio - rep.ratio));
            }
        }
    return rep;
}

double cp_curve_residual(const cp_rapidity& z, const cx& k, const cx& kp,
                         int N) {
    require_order(N);
    const cx xn = std::pow(z.x, N), yn = std::pow(z.y, N);
    const cx mn = std::pow(z.mu, N);
    if (std::abs(mn) == 0.0)
        throw zero_denominator("rapidity has vanishing mu");
    const double e1 = std::abs(xn + yn - k * (1.0 + xn * yn));
    const double e2 = std::abs(k * xn - (1.0 - kp / mn));
    const double e3 = std::abs(k * yn - (1.0 - kp * mn));
    return std::max({e1, e2, e3});
}

cx cp_phi0_trig(const cx& theta1, const cx& theta3, const cx& phi1,
                const cx& phi2, const cx& phi3) {
    return phi0_trig(theta1, theta3, phi1, phi2, phi3);
}

cp_dictionary cp_from_angles(const cx& theta1, const cx& theta3,
                             const cx& phi1, const cx& phi2, const cx& phi3,
                             int N) {
    require_order(N);
    cp_dictionary d;
    d.N = N;
    d.theta1 = theta1;
    d.theta3 = theta3;
    d.phi1 = phi1;
    d.phi2 = phi2;
    d.phi3 = phi3;
    d.phi0 = cp_phi0_trig(theta1, theta3, phi1, phi2, phi3);

    const cx l1 = -theta3, l2 = 0.0, l3 = theta1;
    auto sum3 = [](const cx& a1, const cx& c1, const cx& a2, const cx& c2,
                   const cx& a3, const cx& c3) {
        return std::exp(a1) * c1 + std::exp(a2) * c2 + std::exp(a3) * c3;
    };
    const cx s23 = std::sin(phi2 - phi3), s13 = std::sin(phi1 - phi3),
             s12 = std::sin(phi1 - phi2);
    const cx vp = sum3(iu * l1, s23, iu * l2, s13, iu * l3, s12);
    const cx vm = sum3(-iu * l1, s23, -iu * l2, s13, -iu * l3, s12);
    const cx t23 = std::sin(l2 - l3), t13 = std::sin(l1 - l3),
             t12 = std::sin(l1 - l2);
    const cx up = sum3(iu * phi1, t23, iu * phi2, t13, iu * phi3, t12);
    const cx um = sum3(-iu * phi1, t23, -iu * phi2, t13, -iu * phi3, t12);
    if (std::abs(vp) == 0.0 || std::abs(up) == 0.0 || std::abs(um) == 0.0)
        throw degenerate_denominator("gauge sums vanish");
    d.lambda0 = -iu * std::log(std::exp(iu * (l1 + l2 + l3)) * vm / vp);

    const double two_n = 2.0 * N;
    const cx big_l1 = (d.lambda0 + l1 - l2 - l3) / two_n;
    const cx big_l2 = (d.lambda0 + l2 - l1 - l3) / two_n;
    const cx big_l3 = (d.lambda0 + l3 - l1 - l2) / two_n;
    const cx big_f1 = (d.phi0 + phi1 - phi2 - phi3) / two_n;
    const cx big_f2 = (d.phi0 + phi2 - phi1 - phi3) / two_n;
    const cx big_f3 = (d.phi0 + phi3 - phi1 - phi2) / two_n;
    const cx om_half = std::exp(iu * pi / static_cast<double>(N));

    d.p.x = std::exp(iu * (big_l1 - big_f1));
    d.p.y = om_half * std::exp(iu * (big_l1 + big_f1));
    d.q.x = std::exp(iu * (big_l2 + big_f2));
    d.q.y = om_half * std::exp(iu * (big_l2 - big_f2));
    d.r.x = std::exp(iu * (big_l3 - big_f3));
    d.r.y = om_half * std::exp(iu * (big_l3 + big_f3));

    d.k = std::sqrt(vp * vm / (up * um));
    d.kp = std::sqrt(1.0 - d.k * d.k);

    for (cp_rapidity* z : {&d.p, &d.q, &d.r}) {
        const cx den = 1.0 - d.k * std::pow(z->x, N);
        if (std::abs(den) == 0.0)
            throw zero_denominator("curve branch point: 1 - k x^N = 0");
        z->mu = frac_pow(d.kp / den, 1.0 / N);
        const double resid = cp_curve_residual(*z, d.k, d.kp, N);
        if (resid > 1e-9) {
            std::ostringstream os;
            os << "constructed rapidity misses the curve by " << resid;
            throw curve_violation(os.str());
        }
    }
    return d;
}

cp_angles cp_to_angles(const cp_dictionary& d) {
    const double n = d.N;
    const cx om_half = std::exp(iu * pi / n);
    auto logq = [&](const cx& num, const cx& den) {
        if (std::abs(den) == 0.0)
            throw zero_denominator("vanishing rapidity ratio");
        return -iu * n * std::log(num / den);
    };
    cp_angles a;
    a.theta1 = logq(std::sqrt(d.r.x * d.r.y), std::sqrt(d.q.x * d.q.y));
    a.theta3 = logq(std::sqrt(d.q.x * d.q.y), std::sqrt(d.p.x * d.p.y));
    a.d10 = logq(std::sqrt(d.q.y * d.r.x), std::sqrt(d.q.x * d.r.y));
    a.d20 = logq(om_half * std::sqrt(d.p.x * d.r.x),
                 std::sqrt(d.p.y * d.r.y));
    a.d30 = logq(std::sqrt(d.p.x * d.q.y), std::sqrt(d.p.y * d.q.x));
    return a;
}

cp_weight_pair cp_weights(const cp_rapidity& a, const cp_rapidity& b, int n,
                          int N) {
    require_order(N);
    const int m = mod_n(n, N);
    const cx omega = std::exp(2.0 * pi * iu / static_cast<double>(N));
    if (std::abs(b.mu) == 0.0)
        throw zero_denominator("rapidity has vanishing mu");
    cp_weight_pair out;
    out.w = std::pow(a.mu / b.mu, m);
    out.wbar = std::pow(a.mu * b.mu, m);
    cx oj(1.0);
    for (int j = 1; j <= m; ++j) {
        oj *= omega;
        const cx den_w = a.y - oj * b.x;
        const cx den_wb = b.y - oj * a.y;
        if (std::abs(den_w) == 0.0 || std::abs(den_wb) == 0.0)
            throw zero_denominator("coincident rapidities in weight product");
        out.w *= (b.y - oj * a.x) / den_w;
        out.wbar *= (omega * a.x - oj * b.x) / den_wb;
    }
    return out;
}

cx cp_f(const cp_rapidity& a, const cp_rapidity& b, int N) {
    require_order(N);
    const cx omega = std::exp(2.0 * pi * iu / static_cast<double>(N));
    const cx ta = a.x * a.y, tb = b.x * b.y;
    if (std::abs(a.mu) == 0.0)
        throw zero_denominator("rapidity has vanishing mu");
    cx out(1.0);
    cx oj(1.0);
    for (int j = 1; j < N; ++j) {
        oj *= omega;
        const cx den = a.mu * (a.x - oj * b.x) * (a.y - oj * b.y) *
                       (a.x - oj * b.y);
        if (std::abs(den) == 0.0)
            throw zero_denominator("coincident rapidities in f factor");
        const cx val =
            b.mu * (1.0 - oj) * (ta - oj * tb) * (b.x - oj * a.y) / den;
        out *= frac_pow(val, static_cast<double>(j) / N);
    }
    return out;
}

cx cp_R(const cp_dictionary& d) {
    const cx fpr = cp_f(d.p, d.r, d.N);
    if (std::abs(fpr) == 0.0)
        throw zero_denominator("vanishing cross-channel f factor");
    return cp_f(d.q, d.r, d.N) * cp_f(d.p, d.q, d.N) / fpr;
}

str_discrete_report verify_str_cp(const cp_dictionary& d) {
    const int N = d.N;
    str_discrete_report rep;
    rep.phi0 = d.phi0;
    rep.formula_R = cp_R(d);

    std::vector<cx> w_pq(N), wb_pq(N), w_pr(N), wb_pr(N), w_qr(N), wb_qr(N);
    for (int m = 0; m < N; ++m) {
        const auto pq = cp_weights(d.p, d.q, m, N);
        const auto pr = cp_weights(d.p, d.r, m, N);
        const auto qr = cp_weights(d.q, d.r, m, N);
        w_pq[m] = pq.w;
        wb_pq[m] = pq.wbar;
        w_pr[m] = pr.w;
        wb_pr[m] = pr.wbar;
        w_qr[m] = qr.w;
        wb_qr[m] = qr.wbar;
    }
    auto at = [&](const std::vector<cx>& t, int n) { return t[mod_n(n, N)]; };

    bool first = true;
    cx ratio0;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) {
                kahan_sum_cx lhs;
                for (int dd = 0; dd < N; ++dd)
                    lhs.add(at(wb_pq, dd - c) * at(w_pr, b - dd) *
                            at(wb_qr, a - dd));
                const cx rhs =
                    at(w_pq, b - a) * at(wb_pr, a - c) * at(w_qr, b - c);
                const cx scaled = rep.formula_R * rhs;
                if (std::abs(scaled) == 0.0)
                    throw zero_denominator("cp triangle side vanishes");
                const cx l = lhs.value();
                rep.max_residual = std::max(
                    rep.max_residual, std::abs(l - scaled) / std::abs(scaled));
                const cx ratio = l / rhs;
                if (first) {
                    ratio0 = ratio;
                    rep.measured_R = ratio;
                    first = false;
                } else {
                    rep.ratio_spread =
                        std::max(rep.ratio_spread, std::abs(ratio - ratio0));
                }
            }
    return rep;
}

} // namespace ellstr
