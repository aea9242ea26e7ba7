#include "ellstr/elliptic.hpp"

#include <cmath>

namespace ellstr {

namespace {

bool nearly_real(const cx& v) { return std::abs(v.imag()) <= 1e-12 * (1.0 + std::abs(v)); }

// Shift z by multiples of pi and pi*tau into the fundamental cell.
// Returns the reduced argument plus the multiplicative factor and the
// extra d/dz log term (-2ik from the quasi-period shifts).
struct reduced_arg {
    cx z;
    cx factor;
    cx dlog_extra;
};

reduced_arg reduce_theta_arg(int j, const cx& z, const cx& tau) {
    reduced_arg r{z, cx(1.0, 0.0), cx(0.0, 0.0)};
    // quasi-period shifts first (they also move the real part when Re tau != 0):
    // theta(z + k*pi*tau) = s^k q^{-k^2} e^{-2ikz} theta(z),
    // s = -1 for theta1/theta4, s = +1 for theta2/theta3
    double k = std::round(z.imag() / (pi * tau.imag()));
    if (k != 0.0) {
        r.z -= pi * tau * k;
        cx lq = iu * pi * tau;
        r.factor *= std::exp(-lq * (k * k) - 2.0 * iu * k * r.z);
        r.dlog_extra = -2.0 * iu * k;
        if ((j == 1 || j == 4) && std::fmod(std::abs(k), 2.0) == 1.0)
            r.factor = -r.factor;
    }
    // real-period shifts: theta1/theta2 pick up (-1)^m
    double m = std::round(r.z.real() / pi);
    if (m != 0.0) {
        r.z -= pi * m;
        if ((j == 1 || j == 2) && std::fmod(std::abs(m), 2.0) == 1.0)
            r.factor = -r.factor;
    }
    return r;
}

} // namespace

elliptic_params elliptic_params::from_periods(const cx& tau, const cx& sigma) {
    if (tau.imag() <= 0.0 || sigma.imag() <= 0.0)
        throw bad_domain("periods must have positive imaginary part");
    elliptic_params ep;
    ep.tau = tau;
    ep.sigma = sigma;
    ep.p = std::exp(iu * pi * tau);
    ep.q = std::exp(iu * pi * sigma);
    ep.eta = -iu * pi * (tau + sigma);
    if (nearly_real(ep.p) && nearly_real(ep.q))
        ep.regime = regime_kind::regime_i;
    else if (std::abs(ep.p - std::conj(ep.q)) <= 1e-12 * std::abs(ep.p))
        ep.regime = regime_kind::regime_ii;
    return ep;
}

elliptic_params elliptic_params::from_nomes(const cx& p, const cx& q) {
    if (std::abs(p) >= 1.0 || std::abs(q) >= 1.0 || p == cx(0.0) || q == cx(0.0))
        throw bad_domain("nomes must satisfy 0 < |p|,|q| < 1");
    // principal log fixes the period branch
    return from_periods(std::log(p) / (iu * pi), std::log(q) / (iu * pi));
}

theta_pair theta_with_deriv(int j, const cx& z, const cx& tau,
                            const series_control& ctl) {
    if (j < 1 || j > 4) throw bad_input("theta index must be 1..4");
    if (tau.imag() <= 0.0) throw bad_domain("theta needs Im tau > 0");

    reduced_arg ra = reduce_theta_arg(j, z, tau);
    const cx lq = iu * pi * tau;

    kahan_sum_cx val, der;
    if (j == 3 || j == 4) val.add(cx(1.0, 0.0));

    int small_run = 0;
    bool converged = false;
    for (int n = 0; n < ctl.max_terms; ++n) {
        cx term, dterm;
        if (j == 1) {
            double h = n + 0.5;
            cx qe = std::exp(lq * (h * h));
            double sg = (n % 2 == 0) ? 1.0 : -1.0;
            term = 2.0 * sg * qe * std::sin((2.0 * n + 1.0) * ra.z);
            dterm = 2.0 * sg * qe * (2.0 * n + 1.0) * std::cos((2.0 * n + 1.0) * ra.z);
        } else if (j == 2) {
            double h = n + 0.5;
            cx qe = std::exp(lq * (h * h));
            term = 2.0 * qe * std::cos((2.0 * n + 1.0) * ra.z);
            dterm = -2.0 * qe * (2.0 * n + 1.0) * std::sin((2.0 * n + 1.0) * ra.z);
        } else {
            double m = n + 1.0;
            cx qe = std::exp(lq * (m * m));
            double sg = (j == 3 || std::fmod(m, 2.0) == 0.0) ? 1.0 : -1.0;
            term = 2.0 * sg * qe * std::cos(2.0 * m * ra.z);
            dterm = -4.0 * sg * qe * m * std::sin(2.0 * m * ra.z);
        }
        val.add(term);
        der.add(dterm);
        double scale = std::max(1.0, std::abs(val.value()));
        if (std::abs(term) + std::abs(dterm) < ctl.abs_tol * scale) {
            if (++small_run >= 3) {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    if (!converged) throw non_convergent("theta series hit max_terms");

    cx v = val.value(), d = der.value();
    return {ra.factor * v, ra.factor * (d + ra.dlog_extra * v)};
}

cx theta(int j, const cx& z, const cx& tau, const series_control& ctl) {
    return theta_with_deriv(j, z, tau, ctl).value;
}

cx theta1_prime(const cx& tau, const series_control& ctl) {
    cx zero(0.0, 0.0);
    return theta(2, zero, tau, ctl) * theta(3, zero, tau, ctl) * theta(4, zero, tau, ctl);
}

cx elliptic_gamma_log_series(const cx& s, const elliptic_params& ep,
                             const series_control& ctl) {
    double eta_r = ep.eta.real();
    if (eta_r <= 0.0) throw bad_domain("series needs Re eta > 0");
    if (std::abs(s.imag()) >= eta_r)
        throw bad_domain("argument outside the series strip |Im s| < Re eta");

    kahan_sum_cx acc;
    const cx pq = ep.p * ep.q;
    int small_run = 0;
    for (int n = 1; n <= ctl.max_terms; ++n) {
        cx pqn = std::pow(pq, n);
        cx p2n = std::pow(ep.p, 2 * n);
        cx q2n = std::pow(ep.q, 2 * n);
        cx den = static_cast<double>(n) * (1.0 - p2n) * (1.0 - q2n);
        // the (n, -n) pair combined: e^{-ins} - e^{+ins}
        cx term = pqn * (std::exp(-iu * static_cast<double>(n) * s) -
                         std::exp(iu * static_cast<double>(n) * s)) /
                  den;
        acc.add(term);
        double scale = std::max(1.0, std::abs(acc.value()));
        if (std::abs(term) < ctl.abs_tol * scale) {
            if (++small_run >= 10) return acc.value();
        } else {
            small_run = 0;
        }
    }
    throw non_convergent("elliptic gamma series hit max_terms");
}

cx elliptic_gamma_series(const cx& s, const elliptic_params& ep,
                         const series_control& ctl) {
    return std::exp(elliptic_gamma_log_series(s, ep, ctl));
}

cx elliptic_gamma_product(const cx& s, const elliptic_params& ep,
                          const series_control& ctl) {
    const cx eip = std::exp(iu * s);
    const cx ein = std::exp(-iu * s);
    const double ap = std::abs(ep.p), aq = std::abs(ep.q);
    const double grow = std::max(std::abs(eip), std::abs(ein));
    // factors differ from 1 by at most |p|^{2n+1} |q|^{2m+1} * grow
    const double cutoff = ctl.abs_tol * 1e-3;

    cx num(1.0, 0.0), den(1.0, 0.0);
    for (int n = 0;; ++n) {
        cx pf = std::pow(ep.p, 2 * n + 1);
        if (std::pow(ap, 2 * n + 1) * aq * grow < cutoff) break;
        if (n * 2 + 1 > ctl.max_terms) throw non_convergent("product outer loop");
        for (int m = 0;; ++m) {
            cx w = pf * std::pow(ep.q, 2 * m + 1);
            if (std::abs(w) * grow < cutoff) break;
            if (m * 2 + 1 > ctl.max_terms) throw non_convergent("product inner loop");
            cx dfac = 1.0 - ein * w;
            if (std::abs(dfac) < 1e-13)
                throw pole_hit("denominator factor vanished in the double product");
            num *= 1.0 - eip * w;
            den *= dfac;
        }
    }
    return num / den;
}

cx kappa_log_series(const cx& alpha, const elliptic_params& ep,
                    const series_control& ctl) {
    double eta_r = ep.eta.real();
    if (eta_r <= 0.0) throw bad_domain("series needs Re eta > 0");
    if (std::abs(alpha.real()) >= eta_r)
        throw bad_domain("kappa series needs |Re alpha| < Re eta");

    kahan_sum_cx acc;
    const cx pq2 = ep.p * ep.p * ep.q * ep.q;
    int small_run = 0;
    for (int n = 1; n <= ctl.max_terms; ++n) {
        cx pq2n = std::pow(pq2, n);
        cx p2n = std::pow(ep.p, 2 * n);
        cx q2n = std::pow(ep.q, 2 * n);
        cx den = static_cast<double>(n) * (1.0 - p2n) * (1.0 - q2n) * (1.0 + pq2n);
        cx term = pq2n * (std::exp(2.0 * static_cast<double>(n) * alpha) -
                          std::exp(-2.0 * static_cast<double>(n) * alpha)) /
                  den;
        acc.add(term);
        double scale = std::max(1.0, std::abs(acc.value()));
        if (std::abs(term) < ctl.abs_tol * scale) {
            if (++small_run >= 10) return acc.value();
        } else {
            small_run = 0;
        }
    }
    throw non_convergent("kappa series hit max_terms");
}

cx kappa(const cx& alpha, const elliptic_params& ep, const series_control& ctl) {
    double eta_r = ep.eta.real();
    if (eta_r <= 0.0) throw bad_domain("kappa needs Re eta > 0");
    double re_a = alpha.real();
    // stay well inside the strip so the series converges quickly
    if (std::abs(re_a) <= 0.6 * eta_r)
        return std::exp(kappa_log_series(alpha, ep, ctl));
    if (re_a < 0.0) return 1.0 / kappa(-alpha, ep, ctl);
    // kappa(a) = Phi(2ia - i eta) * kappa(eta - a); each pass through here
    // moves Re(a) down by Re(eta), so the recursion terminates
    cx shifted = elliptic_gamma_product(2.0 * iu * alpha - iu * ep.eta, ep, ctl);
    return shifted * kappa(ep.eta - alpha, ep, ctl);
}

namespace {

double wrap_angle(double b) {
    b = std::fmod(b, 2.0 * pi);
    if (b > pi) b -= 2.0 * pi;
    if (b <= -pi) b += 2.0 * pi;
    return b;
}

// principal log(1 - e^a) without forming e^a when it would overflow
cx log_one_minus_exp(const cx& a) {
    if (a.real() < -40.0) {
        cx ea = std::exp(a);
        return -ea - 0.5 * ea * ea; // Taylor tail below roundoff
    }
    if (a.real() <= 40.0) return std::log(cx(1.0, 0.0) - std::exp(a));
    // 1 - e^a = -e^a (1 - e^{-a}); arg(-e^a) wrapped to the principal sheet
    cx tail = std::log(cx(1.0, 0.0) - std::exp(-a));
    return cx(a.real(), wrap_angle(a.imag() + pi)) + tail;
}

// principal log(sin Z), safe for large |Im Z|
cx log_sin(const cx& z) {
    if (z.imag() < -20.0)
        return iu * z - std::log(cx(2.0, 0.0)) - iu * (pi / 2.0) +
               log_one_minus_exp(-2.0 * iu * z);
    if (z.imag() > 20.0)
        return -iu * z - std::log(cx(2.0, 0.0)) + iu * (pi / 2.0) +
               log_one_minus_exp(2.0 * iu * z);
    return std::log(std::sin(z));
}

} // namespace

cx theta1_log_cusp(double x, int N, double delta) {
    if (N < 1) throw bad_input("cusp evaluation needs N >= 1");
    if (delta <= 0.0) throw bad_domain("cusp evaluation needs delta > 0");
    if (x <= 0.0) throw bad_domain("cusp evaluation window is x > 0");

    const double t = delta / pi;
    const cx sigma = cx(1.0 / N, t);
    const cx spp = static_cast<double>(N) - 1.0 / sigma;
    const cx sppp = -1.0 / spp;
    // sigma * spp = i N t exactly, so Z = -i x / (N t)
    const cx Z = x / (sigma * spp);

    const cx log_i(0.0, pi / 2.0);
    cx logpref = log_i - 0.5 * std::log(-iu * sigma) - iu * (x * x) / (pi * sigma) -
                 iu * pi * static_cast<double>(N) / 4.0 + log_i -
                 0.5 * std::log(-iu * spp) -
                 iu * (x / sigma) * (x / sigma) / (pi * spp);

    const cx lq = iu * pi * sppp;
    cx s = std::log(2.0) + lq / 4.0 + log_sin(Z);

    const cx two_iZ = 2.0 * iu * Z; // real and positive for real x
    kahan_sum_cx acc;
    bool converged = false;
    for (int n = 1; n <= 500; ++n) {
        cx a = 2.0 * static_cast<double>(n) * lq;
        acc.add(log_one_minus_exp(a));
        acc.add(log_one_minus_exp(a + two_iZ));
        acc.add(log_one_minus_exp(a - two_iZ));
        if (n > 3 && a.real() + std::abs(two_iZ.real()) < -45.0) {
            converged = true;
            break;
        }
    }
    if (!converged) throw non_convergent("cusp product did not terminate");
    return logpref + s + acc.value();
}

} // namespace ellstr
