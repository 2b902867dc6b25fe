#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "riskprox/probspace.hpp"
#include "riskprox/utility.hpp"

namespace riskprox {

enum class RiskMethod { oce_1d, cvar_sort, cvar_dual };

struct RiskReport {
    double rho = 0.0;
    // Argmin interval of lambda + E[u(X+lambda)]; collapses to a point for
    // strictly convex utilities. The reported minimizer is the left endpoint.
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    RiskMethod method = RiskMethod::oce_1d;

    double minimizer_lambda() const { return lambda_lo; }
};

namespace detail {

inline double oce_objective(const Utility& u, const DiscreteSpace& sp, const Vec& x,
                            double lambda) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = u.value(x(i) + lambda);
        if (v == kInf) return kInf;
        acc += sp.probs()(i) * v;
    }
    return lambda + acc;
}

inline double oce_right_derivative(const Utility& u, const DiscreteSpace& sp,
                                   const Vec& x, double lambda) {
    double acc = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double d = u.right_derivative(x(i) + lambda);
        if (d == -kInf) return -kInf;
        acc += sp.probs()(i) * d;
    }
    return acc;
}

}  // namespace detail

/// Evaluates rho_u(X) = inf_l { l + E[u(X+l)] } by bisection on the one-sided
/// derivative of the inner convex function. The bracket [-max X - 1,
/// -min X + 1] always contains the argmin for utilities satisfying the
/// normalization conditions; the left bracket end is tightened to the domain
/// edge for the logarithmic utility.
inline RiskReport oce_evaluate(const Utility& u, const RandomVector& X,
                               double tol = 1e-10) {
    if (!(tol > 0.0)) throw config_error("oce_evaluate: tol must be positive");
    const DiscreteSpace& sp = *X.space;
    const double xmin = X.values.minCoeff();
    const double xmax = X.values.maxCoeff();
    double lo = -xmax - 1.0;
    double hi = -xmin + 1.0;
    if (u.kind == UtilityKind::logarithmic) lo = std::max(lo, -u.theta - xmin);
    if (detail::oce_right_derivative(u, sp, X.values, lo) >= 0.0)
        throw model_error("oce_evaluate: bracket does not enclose the minimizer");
    // Invariant: h'_+(lo) < 0 <= h'_+(hi); converges to the left argmin endpoint.
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        (detail::oce_right_derivative(u, sp, X.values, mid) < 0.0 ? lo : hi) = mid;
    }
    RiskReport rep;
    rep.method = RiskMethod::oce_1d;
    rep.lambda_lo = rep.lambda_hi = hi;
    rep.rho = detail::oce_objective(u, sp, X.values, hi);
    return rep;
}

/// Exact CVaR on a discrete space: the argmin interval of the Rockafellar-
/// Uryasev objective comes from scanning sorted scenarios against the (1-a)
/// mass level, the value from evaluating the objective at the left endpoint.
inline RiskReport cvar_sort(double alpha, const RandomVector& X) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("cvar level must lie in (0,1)");
    const DiscreteSpace& sp = *X.space;
    const Eigen::Index m = X.values.size();
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return X.values(a) < X.values(b); });

    // Collapse ties into groups of (value, group mass).
    std::vector<std::pair<double, double>> groups;
    for (Eigen::Index k : order) {
        const double v = X.values(k);
        const double p = sp.probs()(k);
        if (p == 0.0) continue;
        if (!groups.empty() && groups.back().first == v)
            groups.back().second += p;
        else
            groups.emplace_back(v, p);
    }
    const double mass = 1.0 - alpha;
    double cum = 0.0;
    double v_left = groups.back().first;   // first value with P(X < v) <= mass < P(X <= v)
    double v_right = groups.back().first;  // first value with P(X <= v) >= mass
    bool left_set = false, right_set = false;
    for (const auto& [v, p] : groups) {
        cum += p;
        if (!right_set && cum >= mass) {
            v_right = v;
            right_set = true;
        }
        if (!left_set && cum > mass) {
            v_left = v;
            left_set = true;
        }
        if (left_set && right_set) break;
    }
    RiskReport rep;
    rep.method = RiskMethod::cvar_sort;
    rep.lambda_lo = -v_left;
    rep.lambda_hi = -v_right;
    const double lam = rep.lambda_lo;
    double neg = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        neg += sp.probs()(i) * std::max(-(X.values(i) + lam), 0.0);
    rep.rho = lam + neg / mass;
    return rep;
}

/// CVaR through its dual representation: maximize -q'X over the truncated
/// simplex by the greedy fractional-knapsack rule, spending mass p_i/(1-a) on
/// scenarios in increasing order of X.
inline double cvar_dual(double alpha, const RandomVector& X) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("cvar level must lie in (0,1)");
    const DiscreteSpace& sp = *X.space;
    const Eigen::Index m = X.values.size();
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return X.values(a) < X.values(b); });
    double remaining = 1.0;
    double value = 0.0;
    for (Eigen::Index k : order) {
        if (remaining <= 0.0) break;
        const double q = std::min(sp.probs()(k) / (1.0 - alpha), remaining);
        value += q * (-X.values(k));
        remaining -= q;
    }
    return value;
}

/// Value-at-Risk: the left endpoint of the CVaR argmin interval.
inline double var_evaluate(double alpha, const RandomVector& X) {
    return cvar_sort(alpha, X).lambda_lo;
}

using RiskEval = std::function<double(const RandomVector&)>;

/// Worst observed violation of each risk-measure axiom over the supplied
/// samples (consecutive samples are paired for the two-argument axioms).
struct AxiomReport {
    double convexity = 0.0;        // rho((X+Y)/2) - (rho(X)+rho(Y))/2
    double monotonicity = 0.0;     // rho(X) - rho(min(X,Y)),  min(X,Y) <= X
    double cash_invariance = 0.0;  // |rho(X+c) - rho(X) + c|
    double homogeneity = 0.0;      // |rho(cX) - c*rho(X)|, only when requested
};

inline AxiomReport axiom_check(const RiskEval& rho, const SpacePtr& space,
                               const std::vector<Vec>& samples,
                               bool positive_homogeneity = false) {
    AxiomReport rep;
    auto eval = [&](const Vec& v) { return rho(RandomVector(space, v)); };
    const double cash = 3.0;
    const double scale = 2.5;
    for (std::size_t k = 0; k + 1 < samples.size(); k += 2) {
        const Vec& x = samples[k];
        const Vec& y = samples[k + 1];
        const double rx = eval(x), ry = eval(y);
        rep.convexity = std::max(rep.convexity, eval(0.5 * (x + y)) - 0.5 * (rx + ry));
        rep.monotonicity = std::max(rep.monotonicity, rx - eval(x.cwiseMin(y)));
        rep.cash_invariance = std::max(rep.cash_invariance,
                                       std::abs(eval(Vec(x.array() + cash)) - rx + cash));
        if (positive_homogeneity)
            rep.homogeneity = std::max(rep.homogeneity, std::abs(eval(scale * x) - scale * rx));
    }
    return rep;
}

}  // namespace riskprox
