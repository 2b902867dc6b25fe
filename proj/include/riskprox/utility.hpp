#pragma once

#include <cmath>
#include <limits>

#include "riskprox/common.hpp"

namespace riskprox {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class UtilityKind {
    piecewise_linear,  // u(t) = g1*[t]_+ - g2*[t]_-,  g2 < -1 < g1 <= 0
    exponential,       // u(t) = exp(-t) - 1
    indicator,         // u(t) = 0 on [0,inf), +inf below
    quadratic,         // u(t) = (b/2)t^2 - t for t <= 1/b, -1/(2b) above
    logarithmic        // u(t) = -th*ln(1 + t/th) on (-th,inf)
};

/// A normalized convex utility: proper, convex, lsc, nonincreasing, u(0)=0,
/// -1 in du(0). The five parameterizations cover every risk measure the
/// toolkit knows about; CVaR is the piecewise-linear special case
/// g1 = 0, g2 = -1/(1-alpha).
struct Utility {
    UtilityKind kind = UtilityKind::indicator;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double beta = 0.0;
    double theta = 0.0;
    double alpha = -1.0;  // > 0 only when built through cvar()

    static Utility piecewise_linear(double g1, double g2) {
        if (!(g2 < -1.0 && -1.0 < g1 && g1 <= 0.0))
            throw config_error("piecewise_linear requires g2 < -1 < g1 <= 0");
        Utility u;
        u.kind = UtilityKind::piecewise_linear;
        u.gamma1 = g1;
        u.gamma2 = g2;
        return u;
    }

    static Utility cvar(double a) {
        if (!(a > 0.0 && a < 1.0)) throw config_error("cvar level must lie in (0,1)");
        Utility u = piecewise_linear(0.0, -1.0 / (1.0 - a));
        u.alpha = a;
        return u;
    }

    static Utility exponential() {
        Utility u;
        u.kind = UtilityKind::exponential;
        return u;
    }

    static Utility indicator() {
        Utility u;
        u.kind = UtilityKind::indicator;
        return u;
    }

    static Utility quadratic(double b) {
        if (!(b > 0.0)) throw config_error("quadratic utility requires beta > 0");
        Utility u;
        u.kind = UtilityKind::quadratic;
        u.beta = b;
        return u;
    }

    static Utility logarithmic(double th) {
        if (!(th > 0.0)) throw config_error("logarithmic utility requires theta > 0");
        Utility u;
        u.kind = UtilityKind::logarithmic;
        u.theta = th;
        return u;
    }

    bool is_cvar() const { return alpha > 0.0; }

    /// Infimum of the effective domain (closed for the indicator, open for log).
    double domain_lower() const {
        switch (kind) {
            case UtilityKind::indicator: return 0.0;
            case UtilityKind::logarithmic: return -theta;
            default: return -kInf;
        }
    }

    double value(double t) const {
        switch (kind) {
            case UtilityKind::piecewise_linear:
                return t > 0.0 ? gamma1 * t : gamma2 * t;
            case UtilityKind::exponential:
                return std::expm1(-t);
            case UtilityKind::indicator:
                return t >= 0.0 ? 0.0 : kInf;
            case UtilityKind::quadratic:
                return t <= 1.0 / beta ? 0.5 * beta * t * t - t : -0.5 / beta;
            case UtilityKind::logarithmic:
                return t > -theta ? -theta * std::log1p(t / theta) : kInf;
        }
        return kInf;
    }

    /// One-sided derivative from the right; -inf left of the domain.
    double right_derivative(double t) const {
        switch (kind) {
            case UtilityKind::piecewise_linear:
                return t >= 0.0 ? gamma1 : gamma2;
            case UtilityKind::exponential:
                return -std::exp(-t);
            case UtilityKind::indicator:
                return t >= 0.0 ? 0.0 : -kInf;
            case UtilityKind::quadratic:
                return t < 1.0 / beta ? beta * t - 1.0 : 0.0;
            case UtilityKind::logarithmic:
                return t > -theta ? -theta / (theta + t) : -kInf;
        }
        return 0.0;
    }

    /// Fenchel conjugate u*(s); finite only on a subset of (-inf, 0].
    double conjugate(double s) const {
        switch (kind) {
            case UtilityKind::piecewise_linear:
                return (s >= gamma2 && s <= gamma1) ? 0.0 : kInf;
            case UtilityKind::exponential:
                if (s > 0.0) return kInf;
                if (s == 0.0) return 1.0;
                return -s * std::log(-s) + s + 1.0;
            case UtilityKind::indicator:
                return s <= 0.0 ? 0.0 : kInf;
            case UtilityKind::quadratic:
                if (s > 0.0) return kInf;
                return 0.5 * (1.0 + s) * (1.0 + s) / beta;
            case UtilityKind::logarithmic:
                if (s >= 0.0) return kInf;
                return -theta * (1.0 + s) - theta * std::log(-s);
        }
        return kInf;
    }
};

}  // namespace riskprox
