#pragma once

// Error-tolerant primal-dual proximal splitting for
//   inf_x f(x) + sum_i (g_i [] l_i)(L_i x)
// with m blocks of (prox of g_i*, prox of l_i*, L_i, L_i*). Each iteration
// evaluates every prox once and every operator twice; the step sizes must
// satisfy tau * sum_i sigma_i ||L_i||^2 < 4.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "riskprox/common.hpp"

namespace riskprox {

using Point = Eigen::VectorXd;
using ProxFn = std::function<Point(double, const Point&)>;  // (step, point)
using LinFn = std::function<Point(const Point&)>;
using NormFn = std::function<double(const Point&)>;

struct Block {
    ProxFn prox_g_star;
    ProxFn prox_l_star;  // empty => identity (l_i = delta_{0})
    LinFn apply_L;
    LinFn adjoint_L;
    double norm_L = 1.0;
    double sigma = 1.0;
    Eigen::Index dual_dim = 0;
    NormFn dual_norm;  // empty => Euclidean
};

struct SolverConfig {
    double tau = 1.0;
    double lambda_relax = 1.99;  // constant relaxation in (0,2)
    long max_iter = 20000;
    double stop_tol = 1e-6;
    int stall_window = 10;
};

struct StepSizeReport {
    bool ok = false;
    double lhs = 0.0;  // tau * sum_i sigma_i ||L_i||^2, must be < 4
    double margin = 0.0;
};

inline StepSizeReport validate_config(const SolverConfig& config,
                                      const std::vector<Block>& blocks) {
    StepSizeReport rep;
    double acc = 0.0;
    bool positive = config.tau > 0.0;
    for (const Block& b : blocks) {
        positive = positive && b.sigma > 0.0;
        acc += b.sigma * b.norm_L * b.norm_L;
    }
    rep.lhs = config.tau * acc;
    rep.margin = 4.0 - rep.lhs;
    rep.ok = positive && rep.lhs < 4.0 && config.lambda_relax > 0.0 &&
             config.lambda_relax < 2.0;
    return rep;
}

struct SolverState {
    Point x;
    std::vector<Point> v;
    long iteration = 0;
    double residual_primal = 0.0;  // ||lambda (z1 - p1)|| / (1 + ||x||)
    double residual_dual = 0.0;    // max_i ||lambda (z2_i - p2_i)|| / (1 + ||x||)
};

enum class SolveStatus { converged, max_iter, infeasible_detected };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::infeasible_detected: return "infeasible_detected";
    }
    return "unknown";
}

struct Solution {
    Point primal;              // recovered p1
    std::vector<Point> dual;   // recovered p2_i
    double objective = 0.0;    // problem objective at primal, when available
    long iterations = 0;
    SolveStatus status = SolveStatus::max_iter;
    double residual_primal = 0.0;
    double residual_dual = 0.0;
    std::vector<std::array<double, 2>> residual_history;
};

struct SplitProblem {
    Eigen::Index primal_dim = 0;
    ProxFn prox_f;
    std::vector<Block> blocks;
    // Optional reporting hooks; the iteration itself never calls them.
    std::function<double(const Point&)> objective;
    std::function<double(const Point&, const std::vector<Point>&)> dual_objective;
};

namespace detail {
inline double block_norm(const Block& b, const Point& p) {
    return b.dual_norm ? b.dual_norm(p) : p.norm();
}
}  // namespace detail

/// One pass of the iteration, exactly in the displayed order: primal prox,
/// reflection, per-block dual prox on g*, correction step, relaxed primal
/// update, per-block prox on l* and relaxed dual update.
inline void iterate(SolverState& state, const SplitProblem& problem,
                    const SolverConfig& config) {
    const double tau = config.tau;
    const double relax = config.lambda_relax;
    const std::size_t m = problem.blocks.size();

    Point back = state.x;
    for (std::size_t i = 0; i < m; ++i)
        back -= (tau / 2.0) * problem.blocks[i].adjoint_L(state.v[i]);
    const Point p1 = problem.prox_f(tau, back);
    const Point w1 = 2.0 * p1 - state.x;

    std::vector<Point> p2(m), w2(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Block& b = problem.blocks[i];
        p2[i] = b.prox_g_star(b.sigma, state.v[i] + (b.sigma / 2.0) * b.apply_L(w1));
        w2[i] = 2.0 * p2[i] - state.v[i];
    }

    Point z1 = w1;
    for (std::size_t i = 0; i < m; ++i)
        z1 -= (tau / 2.0) * problem.blocks[i].adjoint_L(w2[i]);
    state.x += relax * (z1 - p1);

    const Point fwd = 2.0 * z1 - w1;
    double dual_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Block& b = problem.blocks[i];
        Point arg = w2[i] + (b.sigma / 2.0) * b.apply_L(fwd);
        Point z2 = b.prox_l_star ? b.prox_l_star(b.sigma, arg) : std::move(arg);
        state.v[i] += relax * (z2 - p2[i]);
        dual_res = std::max(dual_res, detail::block_norm(b, relax * (z2 - p2[i])));
    }

    const double scale = 1.0 + state.x.norm();
    state.residual_primal = relax * (z1 - p1).norm() / scale;
    state.residual_dual = dual_res / scale;
    ++state.iteration;

    if (!state.x.allFinite())
        throw divergence_error("solver diverged at iteration " +
                               std::to_string(state.iteration));
}

/// Solution recovery at a cluster point: p1 = Prox_{tau f}(x - (tau/2) sum L_i* v_i)
/// and p2_i = Prox_{sigma_i g_i*}(v_i + (sigma_i/2) L_i (2 p1 - x)).
inline std::pair<Point, std::vector<Point>> recover_solutions(
    const Point& x, const std::vector<Point>& v, const SplitProblem& problem,
    const SolverConfig& config) {
    Point back = x;
    for (std::size_t i = 0; i < problem.blocks.size(); ++i)
        back -= (config.tau / 2.0) * problem.blocks[i].adjoint_L(v[i]);
    Point p1 = problem.prox_f(config.tau, back);
    const Point w1 = 2.0 * p1 - x;
    std::vector<Point> p2(problem.blocks.size());
    for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
        const Block& b = problem.blocks[i];
        p2[i] = b.prox_g_star(b.sigma, v[i] + (b.sigma / 2.0) * b.apply_L(w1));
    }
    return {std::move(p1), std::move(p2)};
}

inline Solution solve(const SplitProblem& problem, const SolverConfig& config,
                      const Point& x0, const std::vector<Point>* v0 = nullptr) {
    const StepSizeReport step = validate_config(config, problem.blocks);
    if (!step.ok)
        throw config_error("step-size condition tau*sum sigma_i||L_i||^2 < 4 violated "
                           "(lhs = " + std::to_string(step.lhs) + ")");
    if (x0.size() != problem.primal_dim)
        throw dimension_error("solve: initial point has wrong dimension");

    SolverState state;
    state.x = x0;
    state.v.resize(problem.blocks.size());
    for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
        if (v0 != nullptr) {
            state.v[i] = (*v0)[i];
        } else {
            state.v[i] = Point::Zero(problem.blocks[i].dual_dim);
        }
    }

    Solution sol;
    sol.residual_history.reserve(std::min<long>(config.max_iter, 1 << 20));
    int quiet = 0;
    while (state.iteration < config.max_iter) {
        iterate(state, problem, config);
        sol.residual_history.push_back({state.residual_primal, state.residual_dual});
        if (state.residual_primal <= config.stop_tol &&
            state.residual_dual <= config.stop_tol) {
            if (++quiet >= config.stall_window) break;
        } else {
            quiet = 0;
        }
    }
    sol.status = quiet >= config.stall_window ? SolveStatus::converged
                                              : SolveStatus::max_iter;
    sol.iterations = state.iteration;
    sol.residual_primal = state.residual_primal;
    sol.residual_dual = state.residual_dual;
    auto [p1, p2] = recover_solutions(state.x, state.v, problem, config);
    sol.primal = std::move(p1);
    sol.dual = std::move(p2);
    if (problem.objective) sol.objective = problem.objective(sol.primal);
    return sol;
}

}  // namespace riskprox
