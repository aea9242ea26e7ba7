#include "ellstr/classical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ellstr/discrete.hpp"

namespace ellstr {

using nlohmann::json;

namespace {

json cx_out(const cx& v) { return json::array({v.real(), v.imag()}); }

cx cx_in(const json& j) {
    if (j.is_number()) return cx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2)
        return cx(j.at(0).get<double>(), j.at(1).get<double>());
    throw bad_input("complex values must be numbers or [re, im] pairs");
}

// Composite GL16 along the straight segment [a, b] of log(ratio(z)), with
// the branch tracked stepwise: each node's principal log is shifted by
// multiples of 2 pi i until it sits within pi of the previous node. The
// anchor is the known log value at z = a.
template <typename F>
cx integrate_log_ratio(F&& ratio, const cx& a, const cx& b, int panels,
                       const cx& anchor) {
    kahan_sum_cx acc;
    cx prev = anchor;
    const cx span = b - a;
    for (int p = 0; p < panels; ++p) {
        const cx lo = a + span * (static_cast<double>(p) / panels);
        const cx hi = a + span * (static_cast<double>(p + 1) / panels);
        const cx mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (const auto& node : gl16) {
            const cx z = mid + half * node.x;
            cx val = std::log(ratio(z));
            double d = (val - prev).imag();
            while (d > pi) {
                val -= 2.0 * pi * iu;
                d = (val - prev).imag();
            }
            while (d < -pi) {
                val += 2.0 * pi * iu;
                d = (val - prev).imag();
            }
            if (std::abs(d) > 1.5)
                throw log_branch_cross(
                    "integrand log jumps too fast for branch tracking");
            acc.add(node.w * half * val);
            prev = val;
        }
    }
    return acc.value();
}

template <typename F>
cx certified_log_integral(F&& ratio, const cx& a, const cx& b,
                          const cx& anchor, const quadrature_control& qctl) {
    if (std::abs(b - a) == 0.0) return cx(0.0);
    int panels = std::max(4, qctl.points / 64);
    bool have_prev = false;
    cx prev;
    for (int round = 0; round < 8; ++round, panels *= 2) {
        cx cur;
        try {
            cur = integrate_log_ratio(ratio, a, b, panels, anchor);
        } catch (const log_branch_cross&) {
            // too coarse to keep the branch pinned between nodes; refine,
            // and only give up once refinement stops helping
            if (round + 1 == 8) throw;
            have_prev = false;
            continue;
        }
        if (have_prev) {
            const double scale = std::max({std::abs(cur), std::abs(prev), 1e-3});
            if (std::abs(cur - prev) <= qctl.rel_tol * scale) return cur;
        }
        prev = cur;
        have_prev = true;
    }
    throw quadrature_not_converged(
        "log-ratio integral failed panel-doubling certification");
}

// Principal-log sums solve a product equation only up to full turns; snap
// onto the nearest sheet before driving them to zero.
cx snap_turns(const cx& v) {
    return v - 2.0 * pi * iu * std::round(v.imag() / (2.0 * pi));
}

cx log_theta_deriv(int j, const cx& z, const cx& tp,
                   const series_control& ctl) {
    const auto p = theta_with_deriv(j, z, tp, ctl);
    if (std::abs(p.value) == 0.0)
        throw pole_hit("theta zero hit in logarithmic derivative");
    return p.deriv / p.value;
}

// Both partials of log Psi_theta(phi_i, phi_j).
struct psi_partials {
    cx d_i, d_j;
};

psi_partials psi_log_partials(const cx& th, const cx& fi, const cx& fj,
                              const cx& tp, const series_control& ctl) {
    const cx dm = 0.5 * (fi - fj), sm = 0.5 * (fi + fj), h = 0.5 * th;
    const cx l2p = log_theta_deriv(2, dm + h, tp, ctl);
    const cx l2m = log_theta_deriv(2, dm - h, tp, ctl);
    const cx l3p = log_theta_deriv(3, sm + h, tp, ctl);
    const cx l3m = log_theta_deriv(3, sm - h, tp, ctl);
    return {0.5 * (l2p - l2m + l3p - l3m), 0.5 * (-l2p + l2m + l3p - l3m)};
}

cx psi_log(const cx& th, const cx& fi, const cx& fj, const cx& tp,
           const series_control& ctl) {
    return std::log(psi(th, fi, fj, tp, ctl));
}

} // namespace

limit_params limit_params::make(int N, double eps, const cx& tau) {
    if (N < 1) throw bad_input("root order N must be at least 1");
    if (!(eps > 0.0)) throw bad_domain("limit parameter eps must be positive");
    if (!(tau.imag() > 0.0))
        throw bad_domain("tau must lie in the upper half plane");
    limit_params lp;
    lp.N = N;
    lp.eps = eps;
    lp.tau = tau;
    return lp;
}

classical_params classical_params::make(int N, const cx& tau) {
    if (N < 1) throw bad_input("root order N must be at least 1");
    if (!(tau.imag() > 0.0))
        throw bad_domain("tau must lie in the upper half plane");
    classical_params cp;
    cp.N = N;
    cp.tau = tau;
    cp.tau_prime = static_cast<double>(N) * tau /
                   (1.0 + static_cast<double>(N) * tau);
    return cp;
}

classical_params classical_params::from_tau_prime(int N, const cx& tau_prime) {
    if (N < 1) throw bad_input("root order N must be at least 1");
    if (!(tau_prime.imag() > 0.0))
        throw bad_domain("tau' must lie in the upper half plane");
    const cx den = 1.0 - tau_prime;
    if (std::abs(den) == 0.0) throw bad_domain("tau' = 1 has no preimage");
    classical_params cp;
    cp.N = N;
    cp.tau_prime = tau_prime;
    cp.tau = tau_prime / (static_cast<double>(N) * den);
    return cp;
}

spin_decomposition decompose_spin(double x, int N) {
    if (N < 1) throw bad_input("root order N must be at least 1");
    const double u = x * N / (2.0 * pi);
    // representative in (-pi/N, pi/N]: winding index is ceil(u - 1/2)
    const long long n_raw = static_cast<long long>(std::ceil(u - 0.5));
    spin_decomposition d;
    d.xi = x - 2.0 * pi * static_cast<double>(n_raw) / N;
    d.n = static_cast<int>(((n_raw % N) + N) % N);
    return d;
}

cx c_term(const cx& phi, const cx& tau_prime) {
    const cx r = (2.0 * phi - pi) / (1.0 - tau_prime);
    return 0.5 * r * r;
}

cx c_term_deriv(const cx& phi, const cx& tau_prime) {
    const cx d = 1.0 - tau_prime;
    return 2.0 * (2.0 * phi - pi) / (d * d);
}

double c_term_original(double xi, int N) {
    if (N < 1) throw bad_input("root order N must be at least 1");
    const double period = pi / N;
    double t = std::fmod(xi, period);
    if (t < 0.0) t += period;
    const double v = N * t - 0.5 * pi;
    return 2.0 * v * v;
}

cx lagrangian(const cx& th, const cx& phi1, const cx& phi2,
              const classical_params& cp, const quadrature_control& qctl) {
    const cx tp = cp.tau_prime;
    const series_control ctl;
    const cx pref = iu / (1.0 - tp);
    const cx quad = -(th / (2.0 * pi)) * (c_term(phi1, tp) + c_term(phi2, tp));
    auto ratio2 = [&](const cx& z) {
        return theta(2, 0.5 * (z - th), tp, ctl) /
               theta(2, 0.5 * (z + th), tp, ctl);
    };
    auto ratio3 = [&](const cx& z) {
        return theta(3, 0.5 * (z - th), tp, ctl) /
               theta(3, 0.5 * (z + th), tp, ctl);
    };
    // both integrands equal 1 at their lower endpoints, so the anchors are 0
    const cx i2 =
        certified_log_integral(ratio2, cx(0.0), phi1 - phi2, cx(0.0), qctl);
    const cx i3 =
        certified_log_integral(ratio3, cx(pi), phi1 + phi2, cx(0.0), qctl);
    return quad + pref * (i2 + i3);
}

cx lagrangian_original(const cx& alpha, double xi1, double xi2,
                       const limit_params& lp, const quadrature_control& qctl) {
    const cx big_tau = static_cast<double>(lp.N) * lp.tau;
    const series_control ctl;
    const double n = lp.N;
    auto ratio = [&](const cx& z) {
        return theta(3, 0.5 * n * (z - iu * alpha), big_tau, ctl) /
               theta(3, 0.5 * n * (z + iu * alpha), big_tau, ctl);
    };
    const cx i1 =
        certified_log_integral(ratio, cx(0.0), cx(xi1 - xi2), cx(0.0), qctl);
    const cx i2 = certified_log_integral(ratio, cx(pi / n), cx(xi1 + xi2),
                                         cx(0.0), qctl);
    return iu * n * (i1 + i2);
}

cx lagrangian_original_crossed(const cx& alpha, double xi1, double xi2,
                               const limit_params& lp,
                               const quadrature_control& qctl) {
    const cx big_tau = static_cast<double>(lp.N) * lp.tau;
    const series_control ctl;
    const double n = lp.N;
    auto ratio = [&](const cx& z) {
        return theta(1, 0.5 * n * (iu * alpha + z), big_tau, ctl) /
               theta(1, 0.5 * n * (iu * alpha - z), big_tau, ctl);
    };
    const double quad =
        0.5 * pi * pi - (n * xi1) * (n * xi1) - (n * xi2) * (n * xi2);
    const cx i1 =
        certified_log_integral(ratio, cx(0.0), cx(xi1 - xi2), cx(0.0), qctl);
    // at z = pi/N the theta1 ratio equals -1 and the branch consistent with
    // the rescaled-frame object is the lower one, log = -i pi
    const cx i2 = certified_log_integral(ratio, cx(pi / n), cx(xi1 + xi2),
                                         -iu * pi, qctl);
    return quad + iu * n * (i1 + i2);
}

cx psi(const cx& th, const cx& phi_i, const cx& phi_j, const cx& tau_prime,
       const series_control& ctl) {
    const cx dm = 0.5 * (phi_i - phi_j), sm = 0.5 * (phi_i + phi_j),
             h = 0.5 * th;
    const cx den = theta(2, dm - h, tau_prime, ctl) *
                   theta(3, sm - h, tau_prime, ctl);
    if (std::abs(den) == 0.0) throw pole_hit("theta zero in psi denominator");
    return theta(2, dm + h, tau_prime, ctl) *
           theta(3, sm + h, tau_prime, ctl) / den;
}

cx psi_log_deriv(const cx& th, const cx& phi_i, const cx& phi_j,
                 const cx& tau_prime, const series_control& ctl) {
    return psi_log_partials(th, phi_i, phi_j, tau_prime, ctl).d_i;
}

cx psi_tilde(int j, const cx& x, const cx& y, const cx& alpha, const cx& tau,
             int N, const series_control& ctl) {
    if (j < 1 || j > 4) throw bad_input("theta kind must be 1..4");
    if (N < 1) throw bad_input("root order N must be at least 1");
    const cx big_tau = static_cast<double>(N) * tau;
    const double n = N;
    const cx ia = iu * alpha;
    const cx den = theta(j, 0.5 * n * (x - y - ia), big_tau, ctl) *
                   theta(j, 0.5 * n * (x + y - ia), big_tau, ctl);
    if (std::abs(den) == 0.0)
        throw pole_hit("theta zero in psi_tilde denominator");
    return theta(j, 0.5 * n * (x - y + ia), big_tau, ctl) *
           theta(j, 0.5 * n * (x + y + ia), big_tau, ctl) / den;
}

cx threeleg_log_product(const cx& theta1, const cx& theta3, const cx& phi0,
                        const cx& phi1, const cx& phi2, const cx& phi3,
                        const cx& tau_prime, const series_control& ctl) {
    return psi_log(pi - theta1, phi0, phi1, tau_prime, ctl) +
           psi_log(theta1 + theta3, phi0, phi2, tau_prime, ctl) +
           psi_log(pi - theta3, phi0, phi3, tau_prime, ctl);
}

cx phi0_trig(const cx& theta1, const cx& theta3, const cx& phi1,
             const cx& phi2, const cx& phi3) {
    const cx theta2 = pi - theta1 - theta3;
    const cx num = std::exp(-iu * phi1) * std::sin(theta1) +
                   std::exp(-iu * phi2) * std::sin(theta2) +
                   std::exp(-iu * phi3) * std::sin(theta3);
    const cx den = std::exp(iu * phi1) * std::sin(theta1) +
                   std::exp(iu * phi2) * std::sin(theta2) +
                   std::exp(iu * phi3) * std::sin(theta3);
    if (std::abs(den) == 0.0 || std::abs(num) == 0.0)
        throw degenerate_denominator(
            "trigonometric center-angle sums vanish");
    return -iu * std::log(std::exp(iu * (phi1 + phi2 + phi3)) * num / den);
}

cx solve_q4_threeleg(const cx& theta1, const cx& theta3, const cx& phi1,
                     const cx& phi2, const cx& phi3, const classical_params& cp,
                     const q4_solve_options& opt) {
    const series_control ctl;
    cx f0 = opt.seed ? *opt.seed : phi0_trig(theta1, theta3, phi1, phi2, phi3);
    std::vector<double> ladder = {0.0};
    if (opt.continue_from_trig && !opt.seed)
        ladder = {8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.0};
    for (double s : ladder) {
        const cx tps = cp.tau_prime + iu * s;
        auto resid = [&](const cx& f) {
            return snap_turns(threeleg_log_product(theta1, theta3, f, phi1,
                                                   phi2, phi3, tps, ctl));
        };
        for (int it = 0; it < opt.max_iters; ++it) {
            const cx F = resid(f0);
            if (std::abs(F) < 1e-13) break;
            const cx dF =
                psi_log_partials(pi - theta1, f0, phi1, tps, ctl).d_i +
                psi_log_partials(theta1 + theta3, f0, phi2, tps, ctl).d_i +
                psi_log_partials(pi - theta3, f0, phi3, tps, ctl).d_i;
            if (std::abs(dF) < 1e-14) break;
            const cx step = -F / dF;
            double lam = 1.0;
            cx trial = f0 + step;
            double fn = std::abs(resid(trial));
            while (fn > std::abs(F) && lam > 1.0 / 1024.0) {
                lam *= 0.5;
                trial = f0 + lam * step;
                fn = std::abs(resid(trial));
            }
            f0 = trial;
        }
    }
    const double final_resid = std::abs(snap_turns(threeleg_log_product(
        theta1, theta3, f0, phi1, phi2, phi3, cp.tau_prime, ctl)));
    if (final_resid > opt.tol) {
        std::ostringstream os;
        os << "three-leg solve stalled at residual " << final_resid;
        throw no_convergence(os.str());
    }
    return f0;
}

std::array<double, 3> q4_alternative_residuals(
    const cx& theta1, const cx& theta3, const cx& phi0, const cx& phi1,
    const cx& phi2, const cx& phi3, const cx& tau_prime,
    const series_control& ctl) {
    const cx theta2 = pi - theta1 - theta3;
    const cx l1 = psi(pi - theta1, phi1, phi0, tau_prime, ctl);
    const cx r1 = psi(theta2, phi1, phi3, tau_prime, ctl) *
                  psi(theta3, phi1, phi2, tau_prime, ctl);
    const cx l2 = psi(theta1 + theta3, phi2, phi0, tau_prime, ctl);
    const cx r2 = psi(theta1, phi2, phi3, tau_prime, ctl) *
                  psi(theta3, phi2, phi1, tau_prime, ctl);
    const cx l3 = psi(pi - theta3, phi3, phi0, tau_prime, ctl);
    const cx r3 = psi(theta1, phi3, phi2, tau_prime, ctl) *
                  psi(theta2, phi3, phi1, tau_prime, ctl);
    return {std::abs(l1 / r1 - 1.0), std::abs(l2 / r2 - 1.0),
            std::abs(l3 / r3 - 1.0)};
}

cx q4_T(const cx& th, const cx& tau_prime, const series_control& ctl) {
    const cx half_tau = 0.5 * tau_prime;
    const cx den = theta(2, 0.5 * th, half_tau, ctl);
    if (std::abs(den) == 0.0) throw pole_hit("theta2 zero in spectral map");
    return theta(1, 0.5 * th, half_tau, ctl) / den;
}

q4_quad q4_quad::make(const cx& theta1, const cx& theta3, const cx& phi0,
                      const cx& phi1, const cx& phi2, const cx& phi3,
                      const classical_params& cp, const series_control& ctl) {
    q4_quad q;
    q.theta1 = theta1;
    q.theta3 = theta3;
    q.phi0 = phi0;
    q.phi1 = phi1;
    q.phi2 = phi2;
    q.phi3 = phi3;
    q.tau_prime = cp.tau_prime;
    const cx half_tau = 0.5 * cp.tau_prime;
    auto ratio12 = [&](const cx& f) {
        const cx den = theta(2, 0.5 * f, half_tau, ctl);
        if (std::abs(den) == 0.0)
            throw pole_hit("corner variable pole: theta2 zero");
        return theta(1, 0.5 * f, half_tau, ctl) / den;
    };
    q.u0 = ratio12(phi0);
    q.u1 = ratio12(phi1);
    q.u3 = ratio12(phi3);
    // the second corner enters through the inverted ratio
    const cx den2 = theta(1, 0.5 * phi2, half_tau, ctl);
    if (std::abs(den2) == 0.0)
        throw pole_hit("corner variable pole: theta1 zero at phi2");
    q.u2 = theta(2, 0.5 * phi2, half_tau, ctl) / den2;
    return q;
}

cx q4_canonical_residual(const q4_quad& q, const series_control& ctl) {
    const cx t1 = q4_T(q.theta1, q.tau_prime, ctl);
    const cx t13 = q4_T(q.theta1 + q.theta3, q.tau_prime, ctl);
    const cx t3 = q4_T(q.theta3, q.tau_prime, ctl);
    const cx &u0 = q.u0, &u1 = q.u1, &u2 = q.u2, &u3 = q.u3;
    return t1 * (u0 * u1 - u2 * u3) + t13 * (u0 * u2 - u1 * u3) +
           t3 * (u0 * u3 - u1 * u2) +
           t1 * t13 * t3 * (u0 * u1 * u2 * u3 - 1.0);
}

cx action_star(const cx& phi0, const cx& phi1, const cx& phi2, const cx& phi3,
               const cx& theta1, const cx& theta3, const classical_params& cp,
               const quadrature_control& qctl) {
    return lagrangian(pi - theta1, phi1, phi0, cp, qctl) +
           lagrangian(theta1 + theta3, phi2, phi0, cp, qctl) +
           lagrangian(pi - theta3, phi3, phi0, cp, qctl) +
           c_term(phi0, cp.tau_prime);
}

cx action_triangle(const cx& phi1, const cx& phi2, const cx& phi3,
                   const cx& theta1, const cx& theta3,
                   const classical_params& cp, const quadrature_control& qctl) {
    return lagrangian(theta1, phi2, phi3, cp, qctl) +
           lagrangian(pi - theta1 - theta3, phi3, phi1, cp, qctl) +
           lagrangian(theta3, phi1, phi2, cp, qctl);
}

cx action_star_dphi0(const cx& phi0, const cx& phi1, const cx& phi2,
                     const cx& phi3, const cx& theta1, const cx& theta3,
                     const classical_params& cp, const series_control& ctl) {
    // the quadratic site term cancels against the edge quadratics because
    // the three spectral angles sum to 2 pi
    return -(iu / (1.0 - cp.tau_prime)) *
           threeleg_log_product(theta1, theta3, phi0, phi1, phi2, phi3,
                                cp.tau_prime, ctl);
}

cx saddle_R(const cx& phi0, const cx& phi1, const cx& phi2, const cx& phi3,
            const cx& theta1, const cx& theta3, const classical_params& cp,
            const quadrature_control& qctl) {
    auto a = [&](double t) {
        return action_star(phi0 + t, phi1, phi2, phi3, theta1, theta3, cp,
                           qctl);
    };
    const double h = 1e-4;
    const cx a0 = a(0.0);
    const cx d_h = (a(h) - 2.0 * a0 + a(-h)) / (h * h);
    const cx d_h2 = (a(0.5 * h) - 2.0 * a0 + a(-0.5 * h)) / (0.25 * h * h);
    const cx second = (4.0 * d_h2 - d_h) / 3.0;
    if (std::abs(second) < 1e-8)
        throw degenerate_saddle("flat action: second derivative vanishes");
    return (cp.tau_prime / cp.tau) * std::sqrt(second / (2.0 * pi));
}

energy_problem energy_problem::from_json(const std::string& text) {
    energy_problem ep;
    ep.graph = lattice_graph::from_json(text);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw bad_input(std::string("energy JSON parse failed: ") + e.what());
    }
    try {
        ep.N = j.value("N", 2);
        if (j.contains("tau_prime")) ep.tau_prime = cx_in(j.at("tau_prime"));
        const auto& edges = j.at("edges");
        for (const auto& je : edges) {
            if (!je.contains("theta"))
                throw bad_input("every edge needs a spectral angle theta");
            ep.thetas.push_back(cx_in(je.at("theta")));
        }
        size_t k = 0;
        for (const auto& js : j.at("sites")) {
            cx phi(0.0);
            if (js.contains("phi"))
                phi = cx_in(js.at("phi"));
            else if (ep.graph.sites[k].boundary)
                throw bad_input("boundary sites need a fixed angle phi");
            ep.boundary_phi.push_back(phi);
            ++k;
        }
    } catch (const json::exception& e) {
        throw bad_input(std::string("energy JSON missing fields: ") + e.what());
    }
    return ep;
}

std::string energy_problem::to_json() const {
    json j = json::parse(graph.to_json());
    j["N"] = N;
    j["tau_prime"] = cx_out(tau_prime);
    for (size_t i = 0; i < thetas.size() && i < j["edges"].size(); ++i)
        j["edges"][i]["theta"] = cx_out(thetas[i]);
    for (size_t i = 0; i < boundary_phi.size() && i < j["sites"].size(); ++i)
        j["sites"][i]["phi"] = cx_out(boundary_phi[i]);
    return j.dump(2);
}

energy_solution minimize_energy(const lattice_graph& g,
                                const std::vector<cx>& thetas,
                                const std::vector<cx>& boundary_phi,
                                const classical_params& cp,
                                const quadrature_control& qctl) {
    if (thetas.size() != g.edges.size())
        throw bad_input("one spectral angle per edge required");
    if (boundary_phi.size() != g.sites.size())
        throw bad_input("one angle slot per site required");
    g.validate();
    const series_control ctl;

    std::map<int, int> pos_of;
    for (size_t i = 0; i < g.sites.size(); ++i)
        pos_of[g.sites[i].id] = static_cast<int>(i);

    // adjacency: per site, incident (edge index, other endpoint position)
    std::vector<std::vector<std::pair<int, int>>> adj(g.sites.size());
    for (size_t e = 0; e < g.edges.size(); ++e) {
        const int a = pos_of.at(g.edges[e].from);
        const int b = pos_of.at(g.edges[e].to);
        adj[a].push_back({static_cast<int>(e), b});
        adj[b].push_back({static_cast<int>(e), a});
    }

    std::vector<int> internal;
    for (size_t i = 0; i < g.sites.size(); ++i)
        if (!g.sites[i].boundary) internal.push_back(static_cast<int>(i));

    // spectral angles at every internal site must close up to a full turn,
    // otherwise the site equation has no quadratic-free form
    for (int i : internal) {
        kahan_sum_cx s;
        for (const auto& [e, other] : adj[i]) s.add(thetas[e]);
        if (std::abs(s.value() - 2.0 * pi) > 1e-8) {
            std::ostringstream os;
            os << "spectral angles at internal site " << g.sites[i].id
               << " sum to " << s.value() << ", expected 2 pi";
            throw bad_domain(os.str());
        }
    }

    energy_solution sol;
    sol.phi = boundary_phi;

    const int m = static_cast<int>(internal.size());
    if (m > 0) {
        // seed internal angles at the boundary mean and walk Im tau' down
        // from the trigonometric regime
        kahan_sum_cx mean;
        int nb = 0;
        for (size_t i = 0; i < g.sites.size(); ++i)
            if (g.sites[i].boundary) {
                mean.add(boundary_phi[i]);
                ++nb;
            }
        const cx seed = nb ? mean.value() / static_cast<double>(nb) : cx(pi / 2.0);
        for (int i : internal) sol.phi[i] = seed;

        std::vector<int> slot(g.sites.size(), -1);
        for (int k = 0; k < m; ++k) slot[internal[k]] = k;

        const std::vector<double> ladder = {8.0, 4.0, 2.0,  1.0,
                                            0.5, 0.25, 0.1, 0.0};
        const double tol = 1e-10;
        int iterations = 0;
        for (double s : ladder) {
            const cx tps = cp.tau_prime + iu * s;
            auto residual = [&](const std::vector<cx>& phi) {
                std::vector<cx> f(m);
                for (int k = 0; k < m; ++k) {
                    kahan_sum_cx acc;
                    const int i = internal[k];
                    for (const auto& [e, other] : adj[i])
                        acc.add(psi_log(thetas[e], phi[i], phi[other], tps,
                                        ctl));
                    f[k] = snap_turns(acc.value());
                }
                return f;
            };
            auto worst = [](const std::vector<cx>& f) {
                double w = 0.0;
                for (const auto& v : f) w = std::max(w, std::abs(v));
                return w;
            };
            std::vector<cx> f = residual(sol.phi);
            double fw = worst(f);
            for (int it = 0; it < 50 && fw > (s == 0.0 ? tol : 1e-12); ++it) {
                std::vector<std::vector<cx>> jac(m, std::vector<cx>(m, cx(0.0)));
                for (int k = 0; k < m; ++k) {
                    const int i = internal[k];
                    for (const auto& [e, other] : adj[i]) {
                        const auto parts = psi_log_partials(
                            thetas[e], sol.phi[i], sol.phi[other], tps, ctl);
                        jac[k][k] += parts.d_i;
                        if (slot[other] >= 0) jac[k][slot[other]] += parts.d_j;
                    }
                }
                std::vector<cx> rhs(m);
                for (int k = 0; k < m; ++k) rhs[k] = -f[k];
                solve_dense(jac, rhs);
                double lam = 1.0;
                std::vector<cx> trial = sol.phi;
                double tw = 0.0;
                for (int halve = 0; halve < 12; ++halve) {
                    for (int k = 0; k < m; ++k)
                        trial[internal[k]] = sol.phi[internal[k]] + lam * rhs[k];
                    tw = worst(residual(trial));
                    if (tw < fw) break;
                    lam *= 0.5;
                }
                sol.phi = trial;
                f = residual(sol.phi);
                fw = worst(f);
                ++iterations;
            }
            if (s == 0.0) {
                sol.residual = fw;
                sol.iterations = iterations;
                if (fw > tol) {
                    std::ostringstream os;
                    os << "site equations stalled, worst residual " << fw;
                    throw no_convergence(os.str());
                }
            }
        }
    }

    kahan_sum_cx energy;
    for (size_t e = 0; e < g.edges.size(); ++e) {
        const int a = pos_of.at(g.edges[e].from);
        const int b = pos_of.at(g.edges[e].to);
        energy.add(lagrangian(thetas[e], sol.phi[a], sol.phi[b], cp, qctl));
    }
    for (int i : internal) energy.add(c_term(sol.phi[i], cp.tau_prime));
    sol.energy = energy.value();
    return sol;
}

cx log_weight_asym(const cx& alpha, double x, double y, const limit_params& lp,
                   const series_control& ctl) {
    if (lp.eps > 0.1)
        throw bad_domain("asymptotic evaluation needs eps <= 0.1");
    const auto ep = elliptic_params::from_nomes(lp.nome_p(), lp.nome_q());
    const cx ia = iu * alpha;
    const cx u(x - y), v(x + y);
    return -kappa_log_series(alpha, ep, ctl) +
           elliptic_gamma_log_series(u + ia, ep, ctl) -
           elliptic_gamma_log_series(u - ia, ep, ctl) +
           elliptic_gamma_log_series(v + ia, ep, ctl) -
           elliptic_gamma_log_series(v - ia, ep, ctl);
}

cx log_site_asym(double x, const limit_params& lp) {
    if (lp.eps > 0.1)
        throw bad_domain("asymptotic evaluation needs eps <= 0.1");
    if (!(x > 0.0)) throw bad_domain("site asymptotics need x > 0");
    const series_control ctl;
    const double delta = lp.eps / (2.0 * lp.N * lp.N);
    return 0.25 * lp.eta_eps() - std::log(4.0 * pi) +
           std::log(theta(1, cx(x), lp.tau, ctl)) +
           theta1_log_cusp(x, lp.N, delta);
}

namespace {

// Square interpolation in the basis {-1/eps, 1, eps, eps^2, ...}; columns
// are scaled to unit max before elimination so the pivot ratio is a real
// conditioning signal. coef[0] is the leading (slope) coefficient, coef[1]
// the constant term.
std::vector<cx> fit_ladder(const std::vector<double>& eps,
                           const std::vector<cx>& y) {
    const int n = static_cast<int>(eps.size());
    std::vector<std::vector<cx>> v(n, std::vector<cx>(n));
    std::vector<cx> rhs = y;
    for (int r = 0; r < n; ++r) {
        v[r][0] = cx(-1.0 / eps[r]);
        v[r][1] = cx(1.0);
        double p = 1.0;
        for (int c = 2; c < n; ++c) {
            p *= eps[r];
            v[r][c] = cx(p);
        }
    }
    std::vector<double> scale(n, 0.0);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r)
            scale[c] = std::max(scale[c], std::abs(v[r][c]));
        for (int r = 0; r < n; ++r) v[r][c] /= scale[c];
    }
    const double cond = solve_dense(v, rhs);
    if (cond < 1e-12)
        throw fit_unstable("eps ladder produces a near-singular fit");
    for (int c = 0; c < n; ++c) rhs[c] /= scale[c];
    return rhs;
}

// Pull every ladder value onto the sheet of the first one; the fits see a
// smooth sequence even when the principal logs jump by 2 pi i mid-ladder.
void align_branch(std::vector<cx>& y) {
    for (size_t k = 1; k < y.size(); ++k) {
        const double turns =
            std::round((y[k].imag() - y[0].imag()) / (2.0 * pi));
        y[k] -= 2.0 * pi * iu * turns;
    }
}

} // namespace

asymptotic_report asymptotic_check(double x1, double x2, const cx& alpha,
                                   const limit_params& lp,
                                   std::vector<double> eps_sequence) {
    if (eps_sequence.empty()) eps_sequence = {1e-2, 5e-3, 2.5e-3};
    const int n = static_cast<int>(eps_sequence.size());
    if (n < 3 || n > 6)
        throw bad_input("eps ladder needs between 3 and 6 points");
    for (int k = 0; k < n; ++k) {
        if (!(eps_sequence[k] > 0.0) || eps_sequence[k] > 0.1)
            throw bad_input("eps ladder entries must lie in (0, 0.1]");
        if (k > 0 && !(eps_sequence[k] < eps_sequence[k - 1]))
            throw bad_input("eps ladder must be strictly decreasing");
    }

    asymptotic_report rep;
    rep.eps = eps_sequence;
    rep.d1 = decompose_spin(x1, lp.N);
    rep.d2 = decompose_spin(x2, lp.N);

    const auto cp = classical_params::make(lp.N, lp.tau);
    const series_control ctl;
    const quadrature_control qctl;
    const cx th = cp.theta_of_alpha(alpha);
    const cx f1 = cp.phi_of_xi(cx(rep.d1.xi));
    const cx f2 = cp.phi_of_xi(cx(rep.d2.xi));

    std::vector<cx> yw(n), yw_ref(n);
    for (int k = 0; k < n; ++k) {
        limit_params lpe = lp;
        lpe.eps = eps_sequence[k];
        yw[k] = log_weight_asym(alpha, x1, x2, lpe, ctl);
        yw_ref[k] = log_weight_asym(alpha, rep.d1.xi, rep.d2.xi, lpe, ctl);
    }
    const auto cw = fit_ladder(eps_sequence, yw);
    const auto cw_ref = fit_ladder(eps_sequence, yw_ref);
    rep.w.slope_fit = cw[0];
    rep.w.slope_ref = lagrangian(th, f1, f2, cp, qctl);
    rep.w.slope_rel_err = rel_diff(rep.w.slope_fit, rep.w.slope_ref);
    rep.w.intercept_fit = std::exp(cw[1] - cw_ref[1]);
    rep.w.intercept_ref =
        discrete_W(th, f1, f2, rep.d1.n, rep.d2.n, lp.N, cp.tau_prime, ctl);
    rep.w.intercept_rel_err =
        rel_diff(rep.w.intercept_fit, rep.w.intercept_ref);

    auto site_channel = [&](double x, const spin_decomposition& d,
                            const cx& f, asymptotic_channel& ch, bool& valid) {
        valid = x > 0.0 && d.xi > 0.0 && d.xi < pi / lp.N;
        if (!valid) return;
        std::vector<cx> ys(n), ys_ref(n);
        for (int k = 0; k < n; ++k) {
            limit_params lpe = lp;
            lpe.eps = eps_sequence[k];
            const cx half_log = cx(0.5 * std::log(eps_sequence[k]));
            ys[k] = log_site_asym(x, lpe) + half_log;
            ys_ref[k] = log_site_asym(d.xi, lpe) + half_log;
        }
        align_branch(ys);
        align_branch(ys_ref);
        const auto cs = fit_ladder(eps_sequence, ys);
        const auto cs_ref = fit_ladder(eps_sequence, ys_ref);
        ch.slope_fit = cs[0];
        ch.slope_ref = cx(c_term_original(d.xi, lp.N));
        ch.slope_rel_err = rel_diff(ch.slope_fit, ch.slope_ref);
        ch.intercept_fit = std::exp(cs[1] - cs_ref[1]);
        const cx s_rep = discrete_S(f, 0, lp.N, cp.tau_prime, ctl);
        if (std::abs(s_rep) == 0.0)
            throw zero_denominator("reference site weight vanishes");
        ch.intercept_ref =
            discrete_S(f, d.n, lp.N, cp.tau_prime, ctl) / s_rep;
        ch.intercept_rel_err = rel_diff(ch.intercept_fit, ch.intercept_ref);
    };
    site_channel(x1, rep.d1, f1, rep.s1, rep.s1_valid);
    site_channel(x2, rep.d2, f2, rep.s2, rep.s2_valid);
    return rep;
}

} // namespace ellstr
