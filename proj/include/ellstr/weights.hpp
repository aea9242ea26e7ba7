#pragma once

#include <functional>

#include "ellstr/elliptic.hpp"

namespace ellstr {

// Spin = angle variable on the circle, reduced mod 2pi on construction.
struct spin {
    double x = 0.0;
    spin() = default;
    explicit spin(double v) {
        x = std::fmod(v, 2.0 * pi);
        if (x < 0.0) x += 2.0 * pi;
    }
};

struct weight_spec {
    elliptic_params params;
    cx alpha;
    enum class normalization { kappa_normalized, raw };
    normalization norm = normalization::kappa_normalized;
};

struct quadrature_control {
    int points = 512;           // power of two, >= 32
    double contour_shift = 0.0; // imaginary offset of the integration line
    double rel_tol = 1e-8;      // point-doubling certification threshold
};

// Edge weight W_alpha(x, y) and site weight S(x). The _cx variants accept
// complex spin arguments for deformed contours; the spin overloads are the
// public real-angle interface.
cx weight_W_cx(const weight_spec& spec, const cx& x, const cx& y,
               const series_control& ctl = {});
cx weight_W(const weight_spec& spec, const spin& x, const spin& y,
            const series_control& ctl = {});
cx weight_S_cx(const elliptic_params& params, const cx& x,
               const series_control& ctl = {});
cx weight_S(const elliptic_params& params, const spin& x,
            const series_control& ctl = {});

// Max over the sigma-shift identity and its tau<->sigma partner of
// |LHS/RHS - 1| for W_alpha(x -/+ pi*period, y) against the theta4 ratios.
double check_recurrence(const weight_spec& spec, const spin& x, const spin& y,
                        const series_control& ctl = {});

struct str_master_report {
    cx lhs, rhs;
    double ratio_minus_one = 0.0;
    int points_used = 0;
};

// Star side integrated over the central spin vs the triangle side.
// spec1/spec3 carry alpha1/alpha3 over the same parameter pack.
str_master_report verify_str_master(const weight_spec& spec1,
                                    const weight_spec& spec3, const spin& x1,
                                    const spin& x2, const spin& x3,
                                    const quadrature_control& qctl = {});

// |W_alpha(x,y) W_{-alpha}(x,y) - 1|, pointwise.
double verify_inversion_second(const weight_spec& spec, const spin& x,
                               const spin& y, const series_control& ctl = {});

// First inversion relation in smeared form: the delta-pair is tested
// against a smooth 2pi-periodic even test function. The kernel pair acts
// as a delta family of width ~alpha, so the residual floor scales like
// alpha^2; pass a small alpha for a tight check. test_fn must be analytic
// on |Im y| <= alpha since the crossed-pole terms sample it off the line.
double verify_inversion_first(const weight_spec& spec, const spin& x,
                              const std::function<cx(const cx&)>& test_fn,
                              const quadrature_control& qctl = {});

} // namespace ellstr
