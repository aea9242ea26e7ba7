#pragma once

#include <string>
#include <vector>

#include "ellstr/elliptic.hpp"

namespace ellstr {

// Discrete-spin layer: each site carries an angle phi plus a Z_N charge n.
// Edge weights factor into a difference part r and a sum part t, both built
// from fractional powers of theta ratios at period tau_prime times products
// of thetas at period tau_prime/N. All fractional powers take the principal
// branch; the period-N symmetry r(phi; n+N) = r(phi; n) is the guard that
// the branch choice is globally consistent.

// Difference factor. r(phi; 0) = 1, r(-phi; -n) = r(phi; n).
cx r_func(const cx& theta, const cx& phi, int n, int N, const cx& tau_prime,
          const series_control& ctl = {});

// Sum factor, same structure on the theta3/theta4 pair.
cx t_func(const cx& theta, const cx& phi, int n, int N, const cx& tau_prime,
          const series_control& ctl = {});

// Edge weight W = r(phi_i - phi_j; n_i - n_j) * t(phi_i + phi_j; n_i + n_j).
// Normalized so W(..., 0, 0) = 1. Chiral: W[ni][nj] != W[nj][ni] in general,
// but symmetric under swapping sites whole, W(i,j;ni,nj) = W(j,i;nj,ni).
cx discrete_W(const cx& theta, const cx& phi_i, const cx& phi_j, int n_i,
              int n_j, int N, const cx& tau_prime,
              const series_control& ctl = {});

// Site weight for the summed-over center spin.
cx discrete_S(const cx& phi0, int n0, int N, const cx& tau_prime,
              const series_control& ctl = {});

// Full N x N edge-weight table plus the site-factor column for phi_i,
// exportable as a JSON regression fixture.
struct discrete_weight_table {
    int N = 2;
    cx theta;
    cx phi_i, phi_j;
    std::vector<std::vector<cx>> w; // w[ni][nj]
    std::vector<cx> s;              // discrete_S(phi_i, n)

    static discrete_weight_table build(const cx& theta, const cx& phi_i,
                                       const cx& phi_j, int N,
                                       const cx& tau_prime,
                                       const series_control& ctl = {});
    std::string to_json() const;
};

// Symmetric and cross theta products entering the triangle-side factor.
// Both are symmetric under swapping the angle pair.
cx p_factor(const cx& theta, const cx& phi_i, const cx& phi_j, int N,
            const cx& tau_prime, const series_control& ctl = {});
cx q_factor(const cx& theta, const cx& phi_a, const cx& phi_b, int N,
            const cx& tau_prime, const series_control& ctl = {});

// Scalar factor on the triangle side of the discrete star-triangle sum,
// assembled from theta-constant (K), symmetric (P) and cross (Q) products.
// phi0 must solve the three-leg equation for (theta1, theta3, phi1..phi3);
// the residual is checked and BadInput thrown above 1e-8.
cx factor_R_discrete(const cx& theta1, const cx& theta3, const cx& phi0,
                     const cx& phi1, const cx& phi2, const cx& phi3, int N,
                     const cx& tau_prime, const series_control& ctl = {});

struct str_discrete_report {
    double max_residual = 0.0; // worst |LHS - R*RHS| / |R*RHS| over Z_N^3
    cx measured_R;             // LHS/RHS at (n1,n2,n3) = (0,0,0)
    cx formula_R;              // the closed-form factor
    double ratio_spread = 0.0; // constancy check on LHS/RHS across sectors
    cx phi0;                   // center angle used
};

// Exact finite-sum check of the discrete star-triangle relation over all
// (n1,n2,n3) in Z_N^3. Solves for phi0 internally.
str_discrete_report verify_str_discrete(const cx& theta1, const cx& theta3,
                                        const cx& phi1, const cx& phi2,
                                        const cx& phi3, int N,
                                        const cx& tau_prime,
                                        const series_control& ctl = {});

// Same sweep with a caller-supplied center angle (used at special points
// where the solver seed is degenerate, e.g. all boundary angles equal).
str_discrete_report verify_str_discrete_at(const cx& theta1, const cx& theta3,
                                           const cx& phi0, const cx& phi1,
                                           const cx& phi2, const cx& phi3,
                                           int N, const cx& tau_prime,
                                           const series_control& ctl = {});

// Kashiwara-Miwa point: all angles frozen at phi = pi*(zeta + nu). The
// weights depend on the charges alone and the theta products telescope into
// charge-indexed ratios.
struct km_params {
    int N = 3;
    int zeta = 0;
    double nu = 0.0; // 0 or 1/2
    cx tau_prime;
};

cx km_weight(const km_params& kp, const cx& theta, int n_i, int n_j,
             const series_control& ctl = {});
cx km_S(const km_params& kp, int n, const series_control& ctl = {});
cx km_R(const km_params& kp, const cx& theta1, const cx& theta3,
        const series_control& ctl = {});

// Exact Z_N^3 star-triangle sweep in the frozen-angle weights.
str_discrete_report verify_str_km(const km_params& kp, const cx& theta1,
                                  const cx& theta3,
                                  const series_control& ctl = {});

// Ratio of the general edge weight at phi_i = phi_j = pi*(zeta + nu) to
// km_weight, which is charge-independent; spread records how constant the
// measured ratio actually is across (n_i, n_j).
struct reduction_report {
    cx ratio;
    double spread = 0.0;
};
reduction_report km_reduction(const km_params& kp, const cx& theta,
                              const series_control& ctl = {});

// Chiral Potts corner. A rapidity is a point (x, y, mu) on the curve
//   x^N + y^N = k (1 + x^N y^N),  k x^N = 1 - k' mu^-N,  k y^N = 1 - k' mu^N
// with omega = e^{2 pi i / N} and omega^{1/2} = e^{i pi / N} fixed.
struct cp_rapidity {
    cx x, y, mu;
};

// Max absolute residual of the three curve equations (any two imply the
// third; all three are checked).
double cp_curve_residual(const cp_rapidity& z, const cx& k, const cx& kp,
                         int N);

struct cp_dictionary {
    int N = 3;
    cx k, kp; // modulus pair, k^2 + kp^2 = 1
    cp_rapidity p, q, r;
    cx theta1, theta3;
    cx phi0, phi1, phi2, phi3;
    cx lambda0; // dependent gauge angle (lambda1 = -theta3, lambda2 = 0,
                // lambda3 = theta1)
};

// Closed-form center angle of the trigonometric three-leg equation.
// Throws DegenerateDenominator when the conjugate sum vanishes.
cx cp_phi0_trig(const cx& theta1, const cx& theta3, const cx& phi1,
                const cx& phi2, const cx& phi3);

// Build the three rapidities p, q, r from scattering angles. Solves the
// center angle via cp_phi0_trig, fixes the gauge, and verifies curve
// membership (CurveViolation above 1e-9).
cp_dictionary cp_from_angles(const cx& theta1, const cx& theta3,
                             const cx& phi1, const cx& phi2, const cx& phi3,
                             int N);

// Inverse map: recover the angles from the rapidity triple.
struct cp_angles {
    cx theta1, theta3;
    cx d10, d20, d30; // phi_k - phi0
};
cp_angles cp_to_angles(const cp_dictionary& d);

// Weight pair across an edge: W is the difference-type product, Wbar the
// conjugate-type one. Both normalized to 1 at n = 0.
struct cp_weight_pair {
    cx w, wbar;
};
cp_weight_pair cp_weights(const cp_rapidity& a, const cp_rapidity& b, int n,
                          int N);

// Scalar f-factor of one edge; the star-triangle constant is
// R = f_qr * f_pq / f_pr. Throws ZeroDenominator on a vanishing factor.
cx cp_f(const cp_rapidity& a, const cp_rapidity& b, int N);
cx cp_R(const cp_dictionary& d);

// Exact Z_N^3 sweep of the chiral Potts star-triangle relation.
str_discrete_report verify_str_cp(const cp_dictionary& d);

} // namespace ellstr
