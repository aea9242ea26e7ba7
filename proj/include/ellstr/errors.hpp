#pragma once

#include <stdexcept>
#include <string>

namespace ellstr {

// Base for all library errors. `kind()` is a stable machine-readable tag;
// the CLI maps domain/config errors to exit code 2.
class error : public std::runtime_error {
public:
    error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ELLSTR_DEFINE_ERROR(class_name, tag)                       \
    class class_name : public error {                              \
    public:                                                        \
        explicit class_name(const std::string& msg)                \
            : error(tag, msg) {}                                   \
    }

ELLSTR_DEFINE_ERROR(non_convergent, "NonConvergent");
ELLSTR_DEFINE_ERROR(bad_domain, "BadDomain");
ELLSTR_DEFINE_ERROR(pole_hit, "PoleHit");
ELLSTR_DEFINE_ERROR(quadrature_not_converged, "QuadratureNotConverged");
ELLSTR_DEFINE_ERROR(pole_on_contour, "PoleOnContour");
ELLSTR_DEFINE_ERROR(not_a_star, "NotAStar");
ELLSTR_DEFINE_ERROR(too_many_internal_sites, "TooManyInternalSites");
ELLSTR_DEFINE_ERROR(log_branch_cross, "LogBranchCross");
ELLSTR_DEFINE_ERROR(branch_ambiguity, "BranchAmbiguity");
ELLSTR_DEFINE_ERROR(no_convergence, "NoConvergence");
ELLSTR_DEFINE_ERROR(degenerate_saddle, "DegenerateSaddle");
ELLSTR_DEFINE_ERROR(degenerate_denominator, "DegenerateDenominator");
ELLSTR_DEFINE_ERROR(curve_violation, "CurveViolation");
ELLSTR_DEFINE_ERROR(zero_denominator, "ZeroDenominator");
ELLSTR_DEFINE_ERROR(bad_input, "BadInput");
ELLSTR_DEFINE_ERROR(fit_unstable, "FitUnstable");
ELLSTR_DEFINE_ERROR(config_error, "ConfigError");

#undef ELLSTR_DEFINE_ERROR

} // namespace ellstr
