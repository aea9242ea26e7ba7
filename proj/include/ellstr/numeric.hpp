#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ellstr/errors.hpp"

namespace ellstr {

using cx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cx iu{0.0, 1.0};

struct series_control {
    double abs_tol = 1e-14;
    int max_terms = 100000;
};

// Neumaier-compensated accumulator. Order-deterministic: summing the same
// terms in the same order is bit-identical, and the compensation keeps the
// result stable when individual terms dwarf the total.
class kahan_sum {
public:
    void add(double v) {
        double t = s_ + v;
        if (std::abs(s_) >= std::abs(v))
            c_ += (s_ - t) + v;
        else
            c_ += (v - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0, c_ = 0.0;
};

class kahan_sum_cx {
public:
    void add(const cx& v) {
        re_.add(v.real());
        im_.add(v.imag());
    }
    cx value() const { return {re_.value(), im_.value()}; }

private:
    kahan_sum re_, im_;
};

// 16-point Gauss-Legendre rule on [-1, 1]; composite panels give ~1e-30
// truncation error on analytic integrands, far below double roundoff.
struct gl_point {
    double x, w;
};
inline constexpr std::array<gl_point, 16> gl16 = {{
    {-0.989400934991649933, 0.0271524594117540949},
    {-0.944575023073232576, 0.0622535239386478929},
    {-0.865631202387831744, 0.0951585116824927848},
    {-0.755404408355003034, 0.124628971255533872},
    {-0.617876244402643748, 0.149595988816576732},
    {-0.458016777657227386, 0.169156519395002538},
    {-0.281603550779258913, 0.182603415044923589},
    {-0.0950125098376374402, 0.189450610455068496},
    {0.0950125098376374402, 0.189450610455068496},
    {0.281603550779258913, 0.182603415044923589},
    {0.458016777657227386, 0.169156519395002538},
    {0.617876244402643748, 0.149595988816576732},
    {0.755404408355003034, 0.124628971255533872},
    {0.865631202387831744, 0.0951585116824927848},
    {0.944575023073232576, 0.0622535239386478929},
    {0.989400934991649933, 0.0271524594117540949},
}};

// Dense complex linear solve by partial-pivot elimination. Sizes here are
// tiny (Newton Jacobians, asymptotic fits), so no factorization reuse.
// Returns the estimated reciprocal pivot ratio so callers can flag
// ill-conditioned systems.
inline double solve_dense(std::vector<std::vector<cx>>& a, std::vector<cx>& b) {
    const int n = static_cast<int>(a.size());
    double max_piv = 0.0, min_piv = 0.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        double pv = std::abs(a[col][col]);
        if (pv == 0.0) throw fit_unstable("singular linear system");
        max_piv = std::max(max_piv, pv);
        min_piv = (col == 0) ? pv : std::min(min_piv, pv);
        for (int r = col + 1; r < n; ++r) {
            cx f = a[r][col] / a[col][col];
            a[r][col] = 0.0;
            for (int c = col + 1; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        cx acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r][c] * b[c];
        b[r] = acc / a[r][r];
    }
    return min_piv / max_piv;
}

// Uniform double in [0,1) built directly from the engine's 64-bit output.
// std::uniform_real_distribution is implementation-defined, which would
// break byte-stable reports across standard libraries.
template <typename Rng>
double uniform(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename Rng>
double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform(rng);
}

inline double rel_diff(const cx& a, const cx& b) {
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return 0.0;
    return std::abs(a - b) / scale;
}

} // namespace ellstr
