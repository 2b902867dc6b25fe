#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "riskprox/common.hpp"
#include "riskprox/utility.hpp"

namespace riskprox {

// ---------------------------------------------------------------------------
// Scalar proximal operators of the five utilities, Prox_{g u}(t).
// ---------------------------------------------------------------------------

inline void require_positive_gamma(double gamma) {
    if (!(gamma > 0.0)) throw config_error("prox step gamma must be positive");
}

/// Soft-threshold with a dead zone on [g*g2, g*g1]:
/// [t - g*g1]_+ - [t - g*g2]_-.
inline double prox_piecewise_linear(double g1, double g2, double gamma, double t) {
    if (!(g2 < -1.0 && -1.0 < g1 && g1 <= 0.0))
        throw config_error("piecewise_linear requires g2 < -1 < g1 <= 0");
    require_positive_gamma(gamma);
    if (t > gamma * g1) return t - gamma * g1;
    if (t < gamma * g2) return t - gamma * g2;
    return 0.0;
}

namespace detail {
// Stationarity residual of the exponential prox: s - t - g*exp(-s).
// Saturates instead of overflowing far left of the root.
inline double exp_prox_residual(double gamma, double t, double s) {
    if (-s > 700.0) return -kInf;
    return s - t - gamma * std::exp(-s);
}
}  // namespace detail

/// Newton's method on s - t - g*exp(-s) = 0 (warm-startable), polished until
/// the residual is a small multiple of machine epsilon, with a bisection
/// fallback whenever the Newton result misses the 1e-9 residual budget.
inline double prox_exponential(double gamma, double t, int newton_iters = 5,
                               std::optional<double> x0 = std::nullopt) {
    require_positive_gamma(gamma);
    constexpr double kResidualTol = 1e-9;
    double s = x0.value_or(std::max(t, 0.0));
    // run at least the requested steps, then keep going (up to 16) until the
    // residual is dominated by round-off; warm starts exit after one or two
    for (int it = 0; it < std::max(newton_iters, 16); ++it) {
        const double r = detail::exp_prox_residual(gamma, t, s);
        if (!std::isfinite(r)) break;
        const double slope = 1.0 + gamma * std::exp(std::min(-s, 700.0));
        if (std::abs(r) <= 1e-13 * slope) return s;
        s -= r / slope;
    }
    {
        const double r = detail::exp_prox_residual(gamma, t, s);
        if (std::isfinite(r) && std::abs(r) <= kResidualTol) return s;
    }
    // The residual is increasing in s, negative at s = t, and eventually
    // positive: the root is bracketed by [t, hi].
    double lo = t;
    double hi = std::max(t, 0.0) + 1.0;
    double step = 1.0;
    while (detail::exp_prox_residual(gamma, t, hi) < 0.0) {
        hi += step;
        step *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = detail::exp_prox_residual(gamma, t, mid);
        if (std::isfinite(r) && std::abs(r) <= kResidualTol) return mid;
        (r < 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-16 * (1.0 + std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

/// Projection onto [0, +inf).
inline double prox_indicator_halfline(double /*gamma*/, double t) {
    return std::max(t, 0.0);
}

inline double prox_quadratic(double beta, double gamma, double t) {
    if (!(beta > 0.0)) throw config_error("quadratic utility requires beta > 0");
    require_positive_gamma(gamma);
    return t <= 1.0 / beta ? (t + gamma) / (1.0 + gamma * beta) : t;
}

inline double prox_logarithmic(double theta, double gamma, double t) {
    if (!(theta > 0.0)) throw config_error("logarithmic utility requires theta > 0");
    require_positive_gamma(gamma);
    const double d = 0.5 * (theta - t);
    return -d + std::sqrt(d * d + theta * (gamma + t));
}

inline double prox_scalar(const Utility& u, double gamma, double t,
                          std::optional<double> warm = std::nullopt) {
    switch (u.kind) {
        case UtilityKind::piecewise_linear:
            return prox_piecewise_linear(u.gamma1, u.gamma2, gamma, t);
        case UtilityKind::exponential:
            return prox_exponential(gamma, t, 5, warm);
        case UtilityKind::indicator:
            return prox_indicator_halfline(gamma, t);
        case UtilityKind::quadratic:
            return prox_quadratic(u.beta, gamma, t);
        case UtilityKind::logarithmic:
            return prox_logarithmic(u.theta, gamma, t);
    }
    throw config_error("unknown utility kind");
}

/// Prox of the conjugate u*, implemented directly (not through the Moreau
/// route) so the decomposition identity can be cross-checked between two
/// independent code paths.
inline double prox_conjugate_scalar(const Utility& u, double sigma, double s) {
    require_positive_gamma(sigma);
    switch (u.kind) {
        case UtilityKind::piecewise_linear:
            return std::clamp(s, u.gamma2, u.gamma1);
        case UtilityKind::indicator:
            return std::min(s, 0.0);
        case UtilityKind::quadratic: {
            const double z = (u.beta * s - sigma) / (u.beta + sigma);
            return std::min(z, 0.0);
        }
        case UtilityKind::logarithmic: {
            const double c = s + sigma * u.theta;
            return 0.5 * (c - std::sqrt(c * c + 4.0 * sigma * u.theta));
        }
        case UtilityKind::exponential: {
            // root of z - s - sigma*ln(-z) = 0 on (-inf, 0); increasing in z
            auto res = [&](double z) { return z - s - sigma * std::log(-z); };
            double lo = std::min(s, -1.0);
            while (res(lo) > 0.0) lo *= 2.0;
            double hi = -1.0;
            while (res(hi) < 0.0) hi *= 0.5;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (res(mid) < 0.0 ? lo : hi) = mid;
                if (hi - lo <= 1e-16 * std::abs(hi)) break;
            }
            return 0.5 * (lo + hi);
        }
    }
    throw config_error("unknown utility kind");
}

// ---------------------------------------------------------------------------
// Componentwise and vector-valued operators.
// ---------------------------------------------------------------------------

/// Prox of X |-> E[u(X)] in the weighted L2 geometry: the scalar prox applied
/// per scenario, independent of the scenario weights. `warm` (optional)
/// carries per-scenario Newton starting points for the exponential utility
/// and is updated in place.
inline Eigen::VectorXd prox_expectation(const Utility& u, double gamma,
                                        const Eigen::VectorXd& x,
                                        Eigen::VectorXd* warm = nullptr) {
    require_positive_gamma(gamma);
    Eigen::VectorXd out(x.size());
    const bool use_warm = warm != nullptr && warm->size() == x.size();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        std::optional<double> w0;
        if (use_warm) w0 = (*warm)(i);
        out(i) = prox_scalar(u, gamma, x(i), w0);
    }
    if (warm != nullptr) *warm = out;
    return out;
}

/// Moreau decomposition: Prox_{g f*}(x) = x - g * Prox_{(1/g) f}(x / g).
/// `prox_inv_gamma_f` must evaluate Prox_{(1/g) f} at the supplied point.
template <typename ProxFn, typename PointT>
PointT moreau_conjugate_prox(ProxFn&& prox_inv_gamma_f, double gamma, const PointT& x) {
    require_positive_gamma(gamma);
    return x - gamma * prox_inv_gamma_f(x / gamma);
}

/// Projection onto the halfspace {x : x'mu >= mu_star}.
inline Eigen::VectorXd proj_halfspace(const Eigen::VectorXd& mu, double mu_star,
                                      const Eigen::VectorXd& x) {
    if (mu.size() != x.size()) throw dimension_error("proj_halfspace: dimension mismatch");
    const double nn = mu.squaredNorm();
    if (nn == 0.0) throw config_error("proj_halfspace: mu must be nonzero");
    const double slack = x.dot(mu) - mu_star;
    if (slack >= 0.0) return x;
    return x - (slack / nn) * mu;
}

/// Projection onto the hyperplane {x : sum_i x_i = target}.
inline Eigen::VectorXd proj_hyperplane_sum(double target, const Eigen::VectorXd& x) {
    if (x.size() < 1) throw dimension_error("proj_hyperplane_sum: empty vector");
    return x.array() + (target - x.sum()) / double(x.size());
}

/// Componentwise clamp onto [lower, upper].
inline Eigen::VectorXd proj_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const Eigen::VectorXd& x) {
    if (lower.size() != x.size() || upper.size() != x.size())
        throw dimension_error("proj_box: dimension mismatch");
    if ((lower.array() > upper.array()).any())
        throw config_error("proj_box: inverted bounds");
    return x.cwiseMax(lower).cwiseMin(upper);
}

/// Prox of f(x, l) = delta_{R^N_+}(x) + l on R^(N+1):
/// clamp the weights at zero, shift the certainty-equivalent scalar by -gamma.
inline Eigen::VectorXd prox_f_oce(double gamma, const Eigen::VectorXd& xl) {
    require_positive_gamma(gamma);
    if (xl.size() < 2) throw dimension_error("prox_f_oce: expects weights plus lambda");
    Eigen::VectorXd out = xl;
    out.head(xl.size() - 1) = out.head(xl.size() - 1).cwiseMax(0.0);
    out(xl.size() - 1) -= gamma;
    return out;
}

inline std::pair<Eigen::VectorXd, double> prox_f_oce(double gamma,
                                                     const Eigen::VectorXd& x,
                                                     double lambda) {
    require_positive_gamma(gamma);
    return {x.cwiseMax(0.0), lambda - gamma};
}

}  // namespace riskprox
