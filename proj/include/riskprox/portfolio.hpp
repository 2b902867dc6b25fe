#pragma once

// Assembles the risk-minimization formulations into solver-ready split
// problems, applies the tested step-size recipes, and sweeps efficient
// frontiers.

#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "riskprox/probspace.hpp"
#include "riskprox/prox.hpp"
#include "riskprox/risk.hpp"
#include "riskprox/solver.hpp"
#include "riskprox/utility.hpp"

namespace riskprox {

enum class Formulation { oce, dual_representation, weighted_cvar };

struct CvarTerm {
    double alpha;
    double weight;
};

struct PortfolioProblem {
    ReturnsMatrix returns;
    double mu_star = 0.0;
    Utility risk = Utility::cvar(0.95);
    Formulation formulation = Formulation::oce;
    std::vector<CvarTerm> terms;  // weighted_cvar only
};

enum class PresetKind { automatic, oce_default, dr_small, dr_large };

struct BuildOptions {
    PresetKind preset = PresetKind::automatic;
    std::optional<std::vector<double>> sigma;  // overrides the preset
    std::optional<double> tau;
    double lambda_relax = 1.99;
    long max_iter = 20000;
    double stop_tol = 1e-6;
    int stall_window = 10;
    double power_tol = 1e-10;
};

struct SolveSetup {
    SplitProblem problem;
    SolverConfig config;
    Point init;
};

struct FeasibilityResidual {
    double negativity = 0.0;       // max(0, -min_i x_i)
    double budget = 0.0;           // |sum x - 1|
    double expected_return = 0.0;  // max(0, mu_star - x'mu)

    double max() const { return std::max({negativity, budget, expected_return}); }
};

inline FeasibilityResidual feasibility_residual(const Vec& weights,
                                                const ReturnsMatrix& returns,
                                                double mu_star) {
    FeasibilityResidual r;
    r.negativity = std::max(0.0, -weights.minCoeff());
    r.budget = std::abs(weights.sum() - 1.0);
    r.expected_return = std::max(0.0, mu_star - weights.dot(returns.mu()));
    return r;
}

/// rho applied to the portfolio payoff sum_i x_i R_i; exact sort evaluation
/// for CVaR-type risks, 1-D minimization otherwise.
inline double evaluate_portfolio_risk(const PortfolioProblem& p, const Vec& weights) {
    RandomVector payoff(p.returns.space(), p.returns.columns() * weights);
    if (p.formulation == Formulation::weighted_cvar) {
        double acc = 0.0;
        for (const CvarTerm& t : p.terms) acc += t.weight * cvar_sort(t.alpha, payoff).rho;
        return acc;
    }
    if (p.risk.is_cvar()) return cvar_sort(p.risk.alpha, payoff).rho;
    return oce_evaluate(p.risk, payoff).rho;
}

namespace detail {

inline void check_return_target(const PortfolioProblem& p) {
    if (p.mu_star > p.returns.mu().maxCoeff())
        throw model_error("return target mu_star exceeds every expected return");
}

// Support-function value of a halfspace/hyperplane at v, with a membership
// tolerance; returns +inf when v is not (close to) the normal cone direction.
inline double support_halfspace(const Vec& mu, double mu_star, const Vec& v, double tol) {
    const double a = v.dot(mu) / mu.squaredNorm();
    if (a > tol) return kInf;
    if ((v - a * mu).norm() > tol * (1.0 + v.norm())) return kInf;
    return a * mu_star;
}

inline double support_hyperplane_sum(double target, const Vec& v, double tol) {
    const double b = v.mean();
    if ((v.array() - b).matrix().norm() > tol * (1.0 + v.norm())) return kInf;
    return b * target;
}

inline double conjugate_expectation(const Utility& u, const DiscreteSpace& sp,
                                    const Vec& v, double tol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double s = std::min(v(i), 0.0);
        if (v(i) > tol) return kInf;
        if (u.kind == UtilityKind::piecewise_linear) {
            if (s < u.gamma2 - tol || s > u.gamma1 + tol) return kInf;
            s = std::clamp(s, u.gamma2, u.gamma1);
        }
        if ((u.kind == UtilityKind::exponential || u.kind == UtilityKind::logarithmic) &&
            s >= 0.0)
            s = -1e-12;
        const double c = u.conjugate(s);
        if (c == kInf) return kInf;
        acc += sp.probs()(i) * c;
    }
    return acc;
}

inline double preset_tau(double scale, const std::vector<Block>& blocks) {
    double acc = 0.0;
    for (const Block& b : blocks) acc += b.sigma * b.norm_L * b.norm_L;
    return scale / acc;
}

inline void apply_step_sizes(SolveSetup& setup, const BuildOptions& opt,
                             double tau_scale) {
    auto& blocks = setup.problem.blocks;
    if (opt.sigma) {
        if (opt.sigma->size() != blocks.size())
            throw config_error("sigma override must supply one value per block");
        for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].sigma = (*opt.sigma)[i];
    }
    setup.config.tau = opt.tau.value_or(preset_tau(tau_scale, blocks));
    setup.config.lambda_relax = opt.lambda_relax;
    setup.config.max_iter = opt.max_iter;
    setup.config.stop_tol = opt.stop_tol;
    setup.config.stall_window = opt.stall_window;
    const StepSizeReport rep = validate_config(setup.config, blocks);
    if (!rep.ok)
        throw config_error("step sizes violate tau*sum sigma_i||L_i||^2 < 4 (lhs = " +
                           std::to_string(rep.lhs) + ")");
}

inline Block identity_block(Eigen::Index dim, const std::function<Vec(const Vec&)>& proj) {
    Block b;
    b.apply_L = [](const Vec& x) { return x; };
    b.adjoint_L = [](const Vec& x) { return x; };
    b.norm_L = 1.0;
    b.dual_dim = dim;
    b.prox_g_star = [proj](double sigma, const Vec& v) {
        return moreau_conjugate_prox([&](const Vec& y) { return proj(y); }, sigma, v);
    };
    return b;
}

}  // namespace detail

/// OCE formulation on R^(N+1): f(x,l) = delta_{R^N_+}(x) + l, indicator blocks
/// for the return and budget constraints, and E[u] composed with the payoff
/// operator K as the third block.
inline SolveSetup build_oce_problem(const PortfolioProblem& p,
                                    const BuildOptions& opt = {}) {
    if (p.formulation != Formulation::oce)
        throw config_error("build_oce_problem: formulation must be oce");
    detail::check_return_target(p);
    const Eigen::Index n = p.returns.n_assets();
    const Eigen::Index m = p.returns.n_scenarios();
    auto op = std::make_shared<OceOperatorK>(p.returns);
    const double norm_k = operator_norm(*op, opt.power_tol);
    const SpacePtr space = p.returns.space();
    const Vec mu = p.returns.mu();
    const double mu_star = p.mu_star;
    const Utility u = p.risk;

    SolveSetup setup;
    setup.problem.primal_dim = n + 1;
    setup.problem.prox_f = [](double tau, const Vec& xl) { return prox_f_oce(tau, xl); };

    setup.problem.blocks.push_back(detail::identity_block(n + 1, [mu, mu_star](const Vec& xl) {
        Vec out = xl;
        out.head(xl.size() - 1) = proj_halfspace(mu, mu_star, xl.head(xl.size() - 1));
        return out;
    }));
    setup.problem.blocks.push_back(detail::identity_block(n + 1, [](const Vec& xl) {
        Vec out = xl;
        out.head(xl.size() - 1) = proj_hyperplane_sum(1.0, xl.head(xl.size() - 1));
        return out;
    }));

    Block risk_block;
    risk_block.apply_L = [op](const Vec& xl) { return op->apply(xl); };
    risk_block.adjoint_L = [op](const Vec& z) { return op->adjoint(z); };
    risk_block.norm_L = norm_k;
    risk_block.dual_dim = m;
    risk_block.dual_norm = [space](const Vec& z) { return weighted_norm(*space, z); };
    auto warm = std::make_shared<Vec>();  // Newton warm starts across iterations
    risk_block.prox_g_star = [u, warm](double sigma, const Vec& v) {
        return moreau_conjugate_prox(
            [&](const Vec& y) { return prox_expectation(u, 1.0 / sigma, y, warm.get()); },
            sigma, v);
    };
    setup.problem.blocks.push_back(std::move(risk_block));

    setup.problem.blocks[0].sigma = 50.0;
    setup.problem.blocks[1].sigma = 50.0;
    setup.problem.blocks[2].sigma = 70.0 / norm_k;

    setup.problem.objective = [op, space, u](const Vec& xl) {
        const double lambda = xl(xl.size() - 1);
        const Vec payoff = op->apply(xl);
        double acc = lambda;
        for (Eigen::Index i = 0; i < payoff.size(); ++i) {
            const double val = u.value(payoff(i));
            if (val == kInf) return kInf;
            acc += space->probs()(i) * val;
        }
        return acc;
    };
    setup.problem.dual_objective = [op, space, u, mu, mu_star](
                                       const Vec&, const std::vector<Point>& v) {
        const double tol = 1e-5;
        Vec y = Vec::Zero(v[0].size());
        y -= v[0] + v[1];
        y -= op->adjoint(v[2]);
        if (y.head(y.size() - 1).maxCoeff() > tol) return -kInf;       // f* finite: y <= 0
        if (std::abs(y(y.size() - 1) - 1.0) > tol) return -kInf;       // and nu = 1
        double d = 0.0;
        const Vec v1 = v[0].head(v[0].size() - 1);
        const Vec v2 = v[1].head(v[1].size() - 1);
        if (std::abs(v[0](v[0].size() - 1)) > tol ||
            std::abs(v[1](v[1].size() - 1)) > tol)
            return -kInf;
        const double s1 = detail::support_halfspace(mu, mu_star, v1, tol);
        const double s2 = detail::support_hyperplane_sum(1.0, v2, tol);
        const double s3 = detail::conjugate_expectation(u, *space, v[2], tol);
        if (s1 == kInf || s2 == kInf || s3 == kInf) return -kInf;
        d -= s1 + s2 + s3;
        return d;
    };

    detail::apply_step_sizes(setup, opt, 3.0);

    setup.init = Vec::Zero(n + 1);
    setup.init.head(n).setConstant(1.0 / double(n));
    return setup;
}

namespace detail {

inline void add_dr_risk_block(SolveSetup& setup, const ReturnsMatrix& returns,
                              double alpha, double weight, double norm_r) {
    const Eigen::Index m = returns.n_scenarios();
    auto op = std::make_shared<DrOperatorR>(returns);
    const Vec upper = returns.space()->probs() / (1.0 - alpha);
    Block b;
    b.apply_L = [op, weight](const Vec& x) { return Vec(weight * op->apply(x)); };
    b.adjoint_L = [op, weight](const Vec& z) {
        return Vec(weight * op->adjoint_euclidean(z));
    };
    b.norm_L = weight * norm_r;
    b.dual_dim = m;
    b.prox_g_star = [](double, const Vec& v) { return proj_hyperplane_sum(1.0, v); };
    b.prox_l_star = [upper](double, const Vec& v) {
        return proj_box(Vec::Zero(upper.size()), upper, v);
    };
    setup.problem.blocks.push_back(std::move(b));
}

inline SolveSetup build_dr_common(const PortfolioProblem& p, const BuildOptions& opt,
                                  const std::vector<CvarTerm>& terms) {
    detail::check_return_target(p);
    const Eigen::Index n = p.returns.n_assets();
    const Vec mu = p.returns.mu();
    const double mu_star = p.mu_star;

    SolveSetup setup;
    setup.problem.primal_dim = n;
    setup.problem.prox_f = [](double, const Vec& x) { return Vec(x.cwiseMax(0.0)); };
    setup.problem.blocks.push_back(detail::identity_block(
        n, [mu, mu_star](const Vec& x) { return proj_halfspace(mu, mu_star, x); }));
    setup.problem.blocks.push_back(detail::identity_block(
        n, [](const Vec& x) { return proj_hyperplane_sum(1.0, x); }));

    // The dual-representation blocks work in the plain Euclidean geometry on
    // R^|Omega|; with the sets U and V this makes the risk term exactly the
    // (weighted sum of) CVaR for any probability vector.
    const DrOperatorR op(p.returns);
    const double norm_r = operator_norm(
        [&](const Vec& x) { return op.apply(x); },
        [&](const Vec& z) { return op.adjoint_euclidean(z); }, n, opt.power_tol);
    for (const CvarTerm& t : terms)
        detail::add_dr_risk_block(setup, p.returns, t.alpha, t.weight, norm_r);

    bool large = p.returns.n_scenarios() >= 5000;
    if (opt.preset == PresetKind::dr_small) large = false;
    if (opt.preset == PresetKind::dr_large) large = true;
    const double s_id = large ? 0.1 : 2.0;
    const double s_risk = large ? 0.001 : 0.1;
    setup.problem.blocks[0].sigma = s_id;
    setup.problem.blocks[1].sigma = s_id;
    for (std::size_t j = 2; j < setup.problem.blocks.size(); ++j)
        setup.problem.blocks[j].sigma = s_risk / setup.problem.blocks[j].norm_L;

    const ReturnsMatrix returns = p.returns;
    const std::vector<CvarTerm> local_terms = terms;
    setup.problem.objective = [returns, local_terms](const Vec& x) {
        RandomVector payoff(returns.space(), returns.columns() * x);
        double acc = 0.0;
        for (const CvarTerm& t : local_terms)
            acc += t.weight * cvar_sort(t.alpha, payoff).rho;
        return acc;
    };
    const Vec probs = p.returns.space()->probs();
    setup.problem.dual_objective = [mu, mu_star, local_terms, probs, returns](
                                       const Vec&, const std::vector<Point>& v) {
        const double tol = 1e-5;
        Vec y = -(v[0] + v[1]);
        const DrOperatorR rop(returns);
        for (std::size_t j = 0; j < local_terms.size(); ++j)
            y -= local_terms[j].weight * rop.adjoint_euclidean(v[2 + j]);
        if (y.maxCoeff() > tol) return -kInf;
        const double s1 = detail::support_halfspace(mu, mu_star, v[0], tol);
        const double s2 = detail::support_hyperplane_sum(1.0, v[1], tol);
        if (s1 == kInf || s2 == kInf) return -kInf;
        for (std::size_t j = 0; j < local_terms.size(); ++j) {
            const Vec& q = v[2 + j];
            if (std::abs(q.sum() - 1.0) > tol) return -kInf;  // q in U
            const Vec cap = probs / (1.0 - local_terms[j].alpha);
            if (q.minCoeff() < -tol || (q - cap).maxCoeff() > tol) return -kInf;  // q in V
        }
        return -(s1 + s2);
    };

    detail::apply_step_sizes(setup, opt, 2.0);
    setup.init = Vec::Constant(n, 1.0 / double(n));
    return setup;
}

}  // namespace detail

/// CVaR-specific formulation through the dual representation: all three proxes
/// are pure projections.
inline SolveSetup build_dr_problem(const PortfolioProblem& p,
                                   const BuildOptions& opt = {}) {
    if (p.formulation != Formulation::dual_representation)
        throw config_error("build_dr_problem: formulation must be dual_representation");
    if (!p.risk.is_cvar())
        throw config_error("the dual-representation formulation is CVaR-specific");
    return detail::build_dr_common(p, opt, {{p.risk.alpha, 1.0}});
}

/// One dual-representation block per confidence level.
inline SolveSetup build_weighted_cvar_problem(const PortfolioProblem& p,
                                              const BuildOptions& opt = {}) {
    if (p.formulation != Formulation::weighted_cvar)
        throw config_error("build_weighted_cvar_problem: formulation must be weighted_cvar");
    if (p.terms.empty()) throw config_error("weighted_cvar needs at least one term");
    for (const CvarTerm& t : p.terms) {
        if (!(t.alpha > 0.0 && t.alpha < 1.0))
            throw config_error("cvar level must lie in (0,1)");
        if (!(t.weight > 0.0)) throw config_error("cvar weights must be positive");
    }
    return detail::build_dr_common(p, opt, p.terms);
}

inline SolveSetup build_problem(const PortfolioProblem& p, const BuildOptions& opt = {}) {
    switch (p.formulation) {
        case Formulation::oce: return build_oce_problem(p, opt);
        case Formulation::dual_representation: return build_dr_problem(p, opt);
        case Formulation::weighted_cvar: return build_weighted_cvar_problem(p, opt);
    }
    throw config_error("unknown formulation");
}

struct PortfolioResult {
    Vec weights;      // clamped to >= 0 and renormalized for reporting
    Vec weights_raw;  // untouched solver output
    double lambda = 0.0;  // certainty-equivalent shift (OCE formulation only)
    double risk_value = 0.0;
    Solution solution;
};

inline PortfolioResult solve_portfolio(const PortfolioProblem& p,
                                       const BuildOptions& opt = {}) {
    const SolveSetup setup = build_problem(p, opt);
    PortfolioResult res;
    res.solution = solve(setup.problem, setup.config, setup.init);
    const Eigen::Index n = p.returns.n_assets();
    res.weights_raw = res.solution.primal.head(n);
    if (p.formulation == Formulation::oce)
        res.lambda = res.solution.primal(n);
    Vec w = res.weights_raw.cwiseMax(0.0);
    const double total = w.sum();
    res.weights = total > 0.0 ? Vec(w / total) : Vec::Constant(n, 1.0 / double(n));
    res.risk_value = evaluate_portfolio_risk(p, res.weights);
    return res;
}

struct FrontierPoint {
    double mu_star = 0.0;
    double risk_value = 0.0;
    Vec weights;
    SolveStatus status = SolveStatus::max_iter;
    long iterations = 0;
};

/// One solve per grid value; non-converged points are kept and flagged.
inline std::vector<FrontierPoint> frontier(const PortfolioProblem& base,
                                           const std::vector<double>& mu_star_grid,
                                           const BuildOptions& opt = {}, int jobs = 1) {
    for (double target : mu_star_grid)
        if (target > base.returns.mu().maxCoeff())
            throw model_error("frontier grid value exceeds every expected return");
    std::vector<FrontierPoint> points(mu_star_grid.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= mu_star_grid.size()) return;
            PortfolioProblem p = base;
            p.mu_star = mu_star_grid[k];
            const PortfolioResult res = solve_portfolio(p, opt);
            points[k] = {p.mu_star, res.risk_value, res.weights, res.solution.status,
                         res.solution.iterations};
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, int(mu_star_grid.size())));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return points;
}

}  // namespace riskprox
