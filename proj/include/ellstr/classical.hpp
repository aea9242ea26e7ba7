#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ellstr/elliptic.hpp"
#include "ellstr/lattice.hpp"

namespace ellstr {

// Root-of-unity frame: p = e^{i pi tau} stays fixed while q spirals into
// the N-th root e^{i pi/N}. The radial rate is eps/(2N^2), scaled so the
// crossing value drifts as eta_limit + eps/(2N^2) and the leading weight
// asymptotics carries coefficient exactly 1/eps.
struct limit_params {
    int N = 2;
    double eps = 1e-2;
    cx tau{0.0, 1.0};

    cx nome_p() const { return std::exp(iu * pi * tau); }
    cx nome_q() const {
        return std::exp(cx(-eps / (2.0 * N * N), pi / N));
    }
    cx sigma() const { return cx(1.0 / N, eps / (2.0 * pi * N * N)); }
    cx eta_eps() const { return eta_limit() + cx(eps / (2.0 * N * N)); }
    cx eta_limit() const { return -iu * (pi / N + pi * tau); }

    static limit_params make(int N, double eps, const cx& tau);
};

// Rescaled frame reached in the limit: tau' = N tau/(1+N tau) maps the
// crossing value to pi on the nose, spins to angles phi, and spectral
// values alpha to theta = i N alpha/(1+N tau).
struct classical_params {
    int N = 2;
    cx tau;
    cx tau_prime;

    static classical_params make(int N, const cx& tau);
    static classical_params from_tau_prime(int N, const cx& tau_prime);

    cx theta_of_alpha(const cx& alpha) const {
        return iu * static_cast<double>(N) * alpha / (1.0 + static_cast<double>(N) * tau);
    }
    cx phi_of_xi(const cx& xi) const {
        return static_cast<double>(N) * (xi + pi * tau / 2.0) /
               (1.0 + static_cast<double>(N) * tau);
    }
    // the crossing value in the rescaled frame; pi by construction
    cx eta_prime() const { return cx(pi); }
};

// x = xi + 2 pi n/N with the representative in (-pi/N, pi/N]; n is the
// mod-N winding index, so reconstruction holds mod 2 pi.
struct spin_decomposition {
    double xi = 0.0;
    int n = 0;
};
spin_decomposition decompose_spin(double x, int N);

// Quadratic site term and its phi-derivative.
cx c_term(const cx& phi, const cx& tau_prime);
cx c_term_deriv(const cx& phi, const cx& tau_prime);
// Periodized parabola in the original spin variable: period pi/N, value
// 2(N xi - pi/2)^2 on (0, pi/N). Equals c_term(phi_of_xi(xi)) on the window.
double c_term_original(double xi, int N);

// Edge Lagrangian: quadratic terms plus two log-theta-ratio integrals on
// straight segments, branch tracked stepwise. Symmetric in (phi1, phi2).
cx lagrangian(const cx& theta, const cx& phi1, const cx& phi2,
              const classical_params& cp, const quadrature_control& qctl = {});

// Same object in the original spin variables, direct and crossed spectral
// value. crossed(alpha) here means the spectral value eta - alpha, whose
// theta image is pi - theta(alpha).
cx lagrangian_original(const cx& alpha, double xi1, double xi2,
                       const limit_params& lp, const quadrature_control& qctl = {});
cx lagrangian_original_crossed(const cx& alpha, double xi1, double xi2,
                               const limit_params& lp,
                               const quadrature_control& qctl = {});

// Theta cross-ratio entering the variational equations, its log-derivative
// in the first argument, and the original-variable variant indexed by the
// theta kind j = 1..4.
cx psi(const cx& theta, const cx& phi_i, const cx& phi_j, const cx& tau_prime,
       const series_control& ctl = {});
cx psi_log_deriv(const cx& theta, const cx& phi_i, const cx& phi_j,
                 const cx& tau_prime, const series_control& ctl = {});
cx psi_tilde(int j, const cx& x, const cx& y, const cx& alpha, const cx& tau,
             int N, const series_control& ctl = {});

// Sum of the principal logs of the three leg factors; zero at a root.
cx threeleg_log_product(const cx& theta1, const cx& theta3, const cx& phi0,
                        const cx& phi1, const cx& phi2, const cx& phi3,
                        const cx& tau_prime, const series_control& ctl = {});

// Closed-form root in the trigonometric regime; exact as Im tau' -> inf,
// used as the continuation seed everywhere else.
cx phi0_trig(const cx& theta1, const cx& theta3, const cx& phi1,
             const cx& phi2, const cx& phi3);

struct q4_solve_options {
    int max_iters = 50;
    double tol = 1e-11;
    // walk Im tau' down from the trigonometric regime; keeps the returned
    // root on the branch connected to the closed-form seed
    bool continue_from_trig = true;
    std::optional<cx> seed;
};
cx solve_q4_threeleg(const cx& theta1, const cx& theta3, const cx& phi1,
                     const cx& phi2, const cx& phi3, const classical_params& cp,
                     const q4_solve_options& opt = {});

// |ratio - 1| of each alternative three-leg form at the given phi0; all
// three vanish at a stationary point.
std::array<double, 3> q4_alternative_residuals(
    const cx& theta1, const cx& theta3, const cx& phi0, const cx& phi1,
    const cx& phi2, const cx& phi3, const cx& tau_prime,
    const series_control& ctl = {});

// Canonical quad variables: u = theta1/theta2 ratio of the half angle at
// half period, with the second corner inverted, and the same map T on the
// spectral values.
struct q4_quad {
    cx theta1, theta3;
    cx phi0, phi1, phi2, phi3;
    cx tau_prime;
    cx u0, u1, u2, u3;

    static q4_quad make(const cx& theta1, const cx& theta3, const cx& phi0,
                        const cx& phi1, const cx& phi2, const cx& phi3,
                        const classical_params& cp,
                        const series_control& ctl = {});
};
cx q4_T(const cx& theta, const cx& tau_prime, const series_control& ctl = {});
cx q4_canonical_residual(const q4_quad& q, const series_control& ctl = {});

// Saddle actions for the degree-3 move and the derivative certificate.
cx action_star(const cx& phi0, const cx& phi1, const cx& phi2, const cx& phi3,
               const cx& theta1, const cx& theta3, const classical_params& cp,
               const quadrature_control& qctl = {});
cx action_triangle(const cx& phi1, const cx& phi2, const cx& phi3,
                   const cx& theta1, const cx& theta3,
                   const classical_params& cp,
                   const quadrature_control& qctl = {});
// d(action_star)/d(phi0) in closed form: the site quadratic drops against
// the edge quadratics through the angle sum, leaving the three-leg log.
cx action_star_dphi0(const cx& phi0, const cx& phi1, const cx& phi2,
                     const cx& phi3, const cx& theta1, const cx& theta3,
                     const classical_params& cp, const series_control& ctl = {});
// (tau'/tau) sqrt(A''/2pi) with A'' by Richardson-refined central second
// differences of action_star in phi0.
cx saddle_R(const cx& phi0, const cx& phi1, const cx& phi2, const cx& phi3,
            const cx& theta1, const cx& theta3, const classical_params& cp,
            const quadrature_control& qctl = {});

// Variational problem on a lattice graph: per-edge spectral angles theta,
// boundary angles phi fixed, internal angles solved from the product
// equations. JSON form extends the lattice graph with "theta" on edges and
// "phi" on boundary sites.
struct energy_problem {
    lattice_graph graph;
    std::vector<cx> thetas;        // parallel to graph.edges
    std::vector<cx> boundary_phi;  // parallel to graph.sites, read on boundary
    int N = 2;
    cx tau_prime{0.0, 1.0};

    static energy_problem from_json(const std::string& text);
    std::string to_json() const;
};

struct energy_solution {
    std::vector<cx> phi;  // parallel to sites; boundary entries echoed
    cx energy;
    double residual = 0.0;  // worst internal-site equation residual
    int iterations = 0;
};

energy_solution minimize_energy(const lattice_graph& g,
                                const std::vector<cx>& thetas,
                                const std::vector<cx>& boundary_phi,
                                const classical_params& cp,
                                const quadrature_control& qctl = {});

// One side of the small-eps fit: fitted leading coefficient and constant
// term against their closed-form references. Intercepts are compared on
// exponentials, sidestepping the 2 pi i log ambiguity.
struct asymptotic_channel {
    cx slope_fit, slope_ref;
    cx intercept_fit, intercept_ref;
    double slope_rel_err = 0.0;
    double intercept_rel_err = 0.0;
};

struct asymptotic_report {
    spin_decomposition d1, d2;
    std::vector<double> eps;
    asymptotic_channel w;  // edge weight, log W against -L/eps + c0 + ...
    // site weight channels at x1 and x2, log S against -C/eps - log(eps)/2
    // + s0 + ...; only meaningful when the representative sits inside the
    // parabola window (0, pi/N)
    asymptotic_channel s1, s2;
    bool s1_valid = false, s2_valid = false;
};

// Log of the kappa-normalized edge weight, evaluated through the series
// logs so the values stay on one branch along the whole eps ladder. The
// site variant goes through the cusp-stable modular chain; x > 0 required.
cx log_weight_asym(const cx& alpha, double x, double y, const limit_params& lp,
                   const series_control& ctl = {});
cx log_site_asym(double x, const limit_params& lp);

// Fits the quantum weights at small eps against the classical data. The
// intercept is normalization-differenced: the same fit at the (xi1, xi2)
// representatives (index 0) serves as reference, so the discrete-weight
// comparison is free of the eps-independent normalization constants.
asymptotic_report asymptotic_check(double x1, double x2, const cx& alpha,
                                   const limit_params& lp,
                                   std::vector<double> eps_sequence = {});

} // namespace ellstr
