#pragma once

// Brute-force reference implementations used by tests and the acceptance
// suite. Nothing in here is called from the solve path, and nothing in here
// shares code with the fast implementations it checks.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "riskprox/common.hpp"
#include "riskprox/probspace.hpp"
#include "riskprox/utility.hpp"

namespace riskprox::oracle {

struct GridSpec {
    double resolution = 1e-3;
    int max_dim = 4;
};

/// Golden-section minimization of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo,
                             double hi, int iters = 200) {
    constexpr double phi = 0.6180339887498949;  // 1/golden ratio
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 > f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

namespace detail {

/// Extended-precision variant: the argmin of a value-based search is only
/// accurate to about sqrt(eps * |f|), so the scalar prox oracles evaluate in
/// long double to land comfortably below 1e-8.
inline long double golden_section_l(const std::function<long double(long double)>& f,
                                    long double lo, long double hi, int iters = 200) {
    constexpr long double phi = 0.61803398874989484820L;
    long double a = lo, b = hi;
    long double x1 = b - phi * (b - a);
    long double x2 = a + phi * (b - a);
    long double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 > f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5L * (a + b);
}

constexpr long double kInfL = std::numeric_limits<long double>::infinity();

/// Utility values recomputed from their definitions in long double; kept
/// separate from Utility::value so the oracle does not share its arithmetic.
inline long double utility_value_l(const Utility& u, long double t) {
    switch (u.kind) {
        case UtilityKind::piecewise_linear:
            return t > 0.0L ? (long double)u.gamma1 * t : (long double)u.gamma2 * t;
        case UtilityKind::exponential:
            return std::expm1(-t);
        case UtilityKind::indicator:
            return t >= 0.0L ? 0.0L : kInfL;
        case UtilityKind::quadratic: {
            const long double b = u.beta;
            return t <= 1.0L / b ? 0.5L * b * t * t - t : -0.5L / b;
        }
        case UtilityKind::logarithmic: {
            const long double th = u.theta;
            return t > -th ? -th * std::log1p(t / th) : kInfL;
        }
    }
    return kInfL;
}

}  // namespace detail

/// Direct minimization of g*u(s) + (s-t)^2/2 over the utility domain.
inline double prox_numeric(const Utility& u, double gamma, double t) {
    if (!(gamma > 0.0)) throw config_error("prox_numeric: gamma must be positive");
    const double half_width = 10.0 * gamma * (1.0 + std::abs(t)) + 1.0;
    double lo = t - half_width;
    double hi = t + half_width;
    const double dlo = u.domain_lower();
    if (dlo > -kInf) {
        // closed at the edge for the indicator, open for the logarithmic utility
        const double edge = u.kind == UtilityKind::logarithmic
                                ? dlo + 1e-12 * (1.0 + std::abs(dlo))
                                : dlo;
        lo = std::max(lo, edge);
        hi = std::max(hi, lo + 1e-12);
    }
    auto objective = [&](long double s) -> long double {
        const long double v = detail::utility_value_l(u, s);
        return v == detail::kInfL
                   ? detail::kInfL
                   : (long double)gamma * v + 0.5L * (s - (long double)t) * (s - (long double)t);
    };
    return double(detail::golden_section_l(objective, lo, hi));
}

/// Numeric prox of the conjugate via direct minimization of
/// g*u*(z) + (z-s)^2/2; the conjugate of every built-in utility lives on a
/// subset of (-inf, 0] so the search interval is clipped accordingly.
inline double prox_conjugate_numeric(const Utility& u, double sigma, double s) {
    double lo, hi;
    switch (u.kind) {
        case UtilityKind::piecewise_linear:
            lo = u.gamma2;
            hi = u.gamma1;
            break;
        case UtilityKind::exponential:
        case UtilityKind::logarithmic:
            lo = std::min(s, -1.0) - 10.0 * sigma * (1.0 + std::abs(s)) - 1.0;
            hi = -1e-13;
            break;
        default:
            lo = std::min(s, 0.0) - 10.0 * sigma * (1.0 + std::abs(s)) - 1.0;
            hi = 0.0;
            break;
    }
    auto objective = [&](double z) {
        const double v = u.conjugate(z);
        return v == kInf ? kInf : sigma * v + 0.5 * (z - s) * (z - s);
    };
    return golden_section(objective, lo, hi);
}

/// Exhaustive search over the lattice {x >= 0, sum x = 1, x'mu >= mu_star}
/// with spacing grid.resolution. Refuses more than grid.max_dim assets.
inline std::pair<Vec, double> grid_search_simplex(
    const ReturnsMatrix& returns, double mu_star,
    const std::function<double(const RandomVector&)>& risk_eval, const GridSpec& grid) {
    const int n = int(returns.n_assets());
    if (n > grid.max_dim || grid.max_dim > 4)
        throw config_error("grid_search_simplex: too many assets for exhaustive search");
    if (!(grid.resolution > 0.0)) throw config_error("grid resolution must be positive");
    const long steps = std::lround(1.0 / grid.resolution);
    const SpacePtr& space = returns.space();
    Vec best_x;
    double best_value = kInf;
    Vec x(n);
    std::function<void(int, long)> recurse = [&](int coord, long left) {
        if (coord == n - 1) {
            x(coord) = double(left) / double(steps);
            if (x.dot(returns.mu()) < mu_star) return;
            const double value = risk_eval(RandomVector(space, returns.columns() * x));
            if (value < best_value) {
                best_value = value;
                best_x = x;
            }
            return;
        }
        for (long k = 0; k <= left; ++k) {
            x(coord) = double(k) / double(steps);
            recurse(coord + 1, left - k);
        }
    };
    recurse(0, steps);
    if (best_value == kInf)
        throw model_error("grid_search_simplex: no feasible lattice point");
    return {best_x, best_value};
}

/// min over the supplied lambda grid of lambda + E[u(X+lambda)].
inline double oce_grid(const Utility& u, const RandomVector& X, const Vec& lambda_grid) {
    double best = kInf;
    for (Eigen::Index k = 0; k < lambda_grid.size(); ++k) {
        const double lam = lambda_grid(k);
        double acc = lam;
        for (Eigen::Index i = 0; i < X.values.size(); ++i) {
            const double v = u.value(X.values(i) + lam);
            if (v == kInf) {
                acc = kInf;
                break;
            }
            acc += X.space->probs()(i) * v;
        }
        best = std::min(best, acc);
    }
    return best;
}

/// ||L|| from a dense symmetric eigensolve of the Gram matrix of the
/// operator's columns under the codomain weights.
inline double dense_operator_norm(const Mat& columns, const Vec& codomain_weights) {
    if (columns.rows() != codomain_weights.size())
        throw dimension_error("dense_operator_norm: weight length mismatch");
    if (double(columns.rows()) * double(columns.cols()) > 5e7)
        throw config_error("dense_operator_norm: instance too large to materialize");
    const Mat gram =
        columns.transpose() * codomain_weights.asDiagonal() * columns;
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double dense_operator_norm(const OceOperatorK& op) {
    const ReturnsMatrix& r = op.returns();
    Mat cols(r.n_scenarios(), r.n_assets() + 1);
    cols.leftCols(r.n_assets()) = r.columns();
    cols.col(r.n_assets()).setOnes();
    return dense_operator_norm(cols, r.space()->probs());
}

inline double dense_operator_norm(const DrOperatorR& op) {
    return dense_operator_norm(-op.returns().columns(), op.returns().space()->probs());
}

/// CVaR by enumerating the vertices of the truncated simplex
/// {sum q = 1, 0 <= q_i <= p_i/(1-a)}: every vertex saturates all coordinates
/// but at most one fractional one.
inline double cvar_vertex_enum(double alpha, const RandomVector& X) {
    const Eigen::Index m = X.values.size();
    if (m > 12) throw config_error("cvar_vertex_enum: refuses |Omega| > 12");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("cvar level must lie in (0,1)");
    const Vec cap = X.space->probs() / (1.0 - alpha);
    double best = -kInf;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        double used = 0.0;
        double value = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (mask & (1u << i)) {
                used += cap(i);
                value += cap(i) * (-X.values(i));
            }
        if (used > 1.0 + 1e-12) continue;
        const double frac = 1.0 - used;
        if (frac <= 1e-12) {
            best = std::max(best, value);
            continue;
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            if (mask & (1u << j)) continue;
            if (cap(j) + 1e-12 < frac) continue;
            best = std::max(best, value + frac * (-X.values(j)));
        }
    }
    if (best == -kInf) throw model_error("cvar_vertex_enum: empty feasible set");
    return best;
}

/// Projections onto the halfspace/hyperplane at M=2, reduced to a 1-D search
/// along the boundary. Independent of the closed-form projection formulas.
inline Vec proj_halfspace_numeric_2d(const Vec& mu, double mu_star, const Vec& x) {
    if (mu.size() != 2 || x.size() != 2)
        throw config_error("proj_halfspace_numeric_2d: wants M=2");
    if (x.dot(mu) >= mu_star) return x;
    // boundary {y : y'mu = mu_star}, parametrized by y0 when mu1 != 0
    const bool by_y0 = std::abs(mu(1)) >= std::abs(mu(0));
    auto point = [&](long double t) {
        std::array<long double, 2> y;
        if (by_y0) {
            y[0] = t;
            y[1] = ((long double)mu_star - (long double)mu(0) * t) / (long double)mu(1);
        } else {
            y[1] = t;
            y[0] = ((long double)mu_star - (long double)mu(1) * t) / (long double)mu(0);
        }
        return y;
    };
    auto dist = [&](long double t) -> long double {
        const auto y = point(t);
        const long double d0 = y[0] - (long double)x(0);
        const long double d1 = y[1] - (long double)x(1);
        return d0 * d0 + d1 * d1;
    };
    const double span = 10.0 * (1.0 + x.norm() + std::abs(mu_star) / (1e-12 + mu.norm()));
    const long double t = detail::golden_section_l(dist, -span, span, 300);
    const auto y = point(t);
    Vec out(2);
    out << double(y[0]), double(y[1]);
    return out;
}

inline Vec proj_hyperplane_numeric_2d(double target, const Vec& x) {
    if (x.size() != 2) throw config_error("proj_hyperplane_numeric_2d: wants M=2");
    auto dist = [&](long double t) -> long double {
        const long double d0 = t - (long double)x(0);
        const long double d1 = ((long double)target - t) - (long double)x(1);
        return d0 * d0 + d1 * d1;
    };
    const double span = 10.0 * (1.0 + x.norm() + std::abs(target));
    const long double t = detail::golden_section_l(dist, -span, span, 300);
    Vec y(2);
    y(0) = double(t);
    y(1) = target - double(t);
    return y;
}

/// Box projection, one independent 1-D search per coordinate.
inline Vec proj_box_numeric(const Vec& lo, const Vec& hi, const Vec& x) {
    if (lo.size() != x.size() || hi.size() != x.size())
        throw dimension_error("proj_box_numeric: bound length mismatch");
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto dist = [&](long double z) -> long double {
            const long double d = z - (long double)x(i);
            return d * d;
        };
        out(i) = double(detail::golden_section_l(dist, lo(i), hi(i), 300));
    }
    return out;
}

}  // namespace riskprox::oracle
