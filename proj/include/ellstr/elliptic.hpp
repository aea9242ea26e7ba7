#pragma once

#include "ellstr/numeric.hpp"

namespace ellstr {

// Two-nome parameter pack. Periods tau, sigma live in the upper half plane;
// p = e^{i pi tau}, q = e^{i pi sigma}, and the crossing parameter is
// eta = -i pi (tau + sigma). Physical regimes: (i) both nomes real,
// (ii) p = conj(q). Everything downstream keys off Re(eta) > 0.
struct elliptic_params {
    cx tau{0.0, 1.0};
    cx sigma{0.0, 1.0};
    cx p, q, eta;
    enum class regime_kind { generic, regime_i, regime_ii };
    regime_kind regime = regime_kind::generic;

    static elliptic_params from_periods(const cx& tau, const cx& sigma);
    static elliptic_params from_nomes(const cx& p, const cx& q);
};

// Jacobi theta ϑ_j(z|τ), Whittaker-Watson convention: nome e^{iπτ},
// argument period π, quasi-period πτ. Arguments are reduced into the
// fundamental cell before summing, so large real or imaginary parts are
// safe as long as the reduction factors stay representable.
cx theta(int j, const cx& z, const cx& tau, const series_control& ctl = {});

// Value and d/dz together, sharing one argument reduction. Used for the
// analytic gradients in the classical layer.
struct theta_pair {
    cx value, deriv;
};
theta_pair theta_with_deriv(int j, const cx& z, const cx& tau,
                            const series_control& ctl = {});

// ϑ1'(0|τ) = ϑ2(0)ϑ3(0)ϑ4(0).
cx theta1_prime(const cx& tau, const series_control& ctl = {});

// Elliptic gamma ratio Φ(s). Series form converges in the strip
// |Im s| < Re eta; the product form works on the whole plane off poles.
cx elliptic_gamma_log_series(const cx& s, const elliptic_params& ep,
                             const series_control& ctl = {});
cx elliptic_gamma_series(const cx& s, const elliptic_params& ep,
                         const series_control& ctl = {});
cx elliptic_gamma_product(const cx& s, const elliptic_params& ep,
                          const series_control& ctl = {});

// Normalization factor κ(α). The plain series needs |Re α| < Re eta;
// kappa() continues outside the strip through the reflection
// κ(α)κ(-α) = 1 and the shift κ(η-α)/κ(α) = Φ(iη-2iα).
cx kappa_log_series(const cx& alpha, const elliptic_params& ep,
                    const series_control& ctl = {});
cx kappa(const cx& alpha, const elliptic_params& ep,
         const series_control& ctl = {});

// log ϑ1(x | 1/N + i delta/π) for real x > 0 and small delta, evaluated
// through a modular chain that stays finite where the direct series loses
// all significant digits. Branch conventions: principal logs throughout,
// so intercept differences taken at nearby x are consistent.
cx theta1_log_cusp(double x, int N, double delta);

} // namespace ellstr
