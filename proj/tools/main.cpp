// Command-line front end: batch portfolio risk minimization, frontier sweeps,
// synthetic data generation, risk evaluation, and solver-vs-oracle comparison.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskprox/riskprox.hpp"

namespace {

using namespace riskprox;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIter = 2;

struct RiskSpec {
    Utility utility = Utility::cvar(0.95);
    std::vector<CvarTerm> terms;  // nonempty only for wcvar
    bool weighted = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) parts.push_back(part);
    return parts;
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error("cannot parse " + what + " from '" + s + "'");
    }
}

RiskSpec parse_risk(const std::string& text) {
    RiskSpec spec;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "cvar") {
        spec.utility = Utility::cvar(parse_number(args, "cvar level"));
    } else if (kind == "linear") {
        const auto p = split(args, ',');
        if (p.size() != 2) throw config_error("linear risk wants linear:g1,g2");
        spec.utility = Utility::piecewise_linear(parse_number(p[0], "g1"),
                                                 parse_number(p[1], "g2"));
    } else if (kind == "exponential") {
        spec.utility = Utility::exponential();
    } else if (kind == "indicator") {
        spec.utility = Utility::indicator();
    } else if (kind == "quadratic") {
        spec.utility = Utility::quadratic(parse_number(args, "beta"));
    } else if (kind == "logarithmic") {
        spec.utility = Utility::logarithmic(parse_number(args, "theta"));
    } else if (kind == "wcvar") {
        const auto p = split(args, ',');
        if (p.empty()) throw config_error("wcvar wants wcvar:a1:w1,a2:w2,...");
        for (const std::string& term : p) {
            const auto aw = split(term, ':');
            if (aw.size() != 2) throw config_error("wcvar term wants alpha:weight");
            spec.terms.push_back({parse_number(aw[0], "cvar level"),
                                  parse_number(aw[1], "cvar weight")});
        }
        spec.utility = Utility::cvar(spec.terms.front().alpha);
        spec.weighted = true;
    } else {
        throw config_error("unknown risk spec '" + text + "'");
    }
    return spec;
}

std::vector<double> parse_grid(const std::string& text) {
    const auto p = split(text, ':');
    if (p.size() != 3) throw config_error("grid wants a:b:step");
    const double a = parse_number(p[0], "grid start");
    const double b = parse_number(p[1], "grid end");
    const double step = parse_number(p[2], "grid step");
    if (!(step > 0.0)) throw config_error("grid step must be positive");
    std::vector<double> grid;
    for (double x = a; x <= b + 1e-12 * (1.0 + std::abs(b)); x += step) grid.push_back(x);
    if (grid.empty()) throw config_error("grid is empty");
    return grid;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const std::string& cell : split(text, ',')) out.push_back(parse_number(cell, what));
    return out;
}

/// Loads either a returns CSV or a price-history CSV (header starting with
/// "date") and normalizes to a scenario matrix.
ReturnsMatrix load_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
    }
    if (line.rfind("date,", 0) == 0 || line.rfind("date\t", 0) == 0)
        return prices_to_returns(load_prices_csv(path));
    return load_returns_csv(path);
}

struct CommonFlags {
    std::string data;
    std::string risk = "cvar:0.95";
    std::string formulation = "oce";
    double mu_star = 0.5;
    std::string mu_star_grid;
    std::string preset = "";
    std::optional<double> tau;
    std::string sigma;
    double relax = 1.99;
    long max_iter = 20000;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out;
};

void add_solver_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--risk", f.risk,
                    "cvar:a | linear:g1,g2 | exponential | indicator | quadratic:b | "
                    "logarithmic:t | wcvar:a1:w1,...");
    cmd->add_option("--formulation", f.formulation, "oce | dr | wdr");
    cmd->add_option("--preset", f.preset, "oce-default | dr-small | dr-large");
    cmd->add_option("--tau", [&f](const CLI::results_t& r) {
        f.tau = parse_number(r[0], "tau");
        return true;
    }, "primal step size override");
    cmd->add_option("--sigma", f.sigma, "dual step sizes s1,s2,s3 override");
    cmd->add_option("--relax", f.relax, "relaxation parameter in (0,2)");
    cmd->add_option("--max-iter", f.max_iter, "iteration cap");
    cmd->add_option("--tol", f.tol, "residual stopping tolerance");
}

BuildOptions make_build_options(const CommonFlags& f) {
    BuildOptions opt;
    if (f.preset == "oce-default") opt.preset = PresetKind::oce_default;
    else if (f.preset == "dr-small") opt.preset = PresetKind::dr_small;
    else if (f.preset == "dr-large") opt.preset = PresetKind::dr_large;
    else if (!f.preset.empty()) throw config_error("unknown preset '" + f.preset + "'");
    if (!f.sigma.empty()) opt.sigma = parse_list(f.sigma, "sigma");
    if (f.tau) opt.tau = f.tau;
    opt.lambda_relax = f.relax;
    opt.max_iter = f.max_iter;
    opt.stop_tol = f.tol;
    return opt;
}

PortfolioProblem make_problem(const CommonFlags& f, const ReturnsMatrix& returns,
                              double mu_star) {
    const RiskSpec spec = parse_risk(f.risk);
    Formulation form;
    if (f.formulation == "oce") form = Formulation::oce;
    else if (f.formulation == "dr") form = Formulation::dual_representation;
    else if (f.formulation == "wdr") form = Formulation::weighted_cvar;
    else throw config_error("unknown formulation '" + f.formulation + "'");
    if (spec.weighted && form != Formulation::weighted_cvar)
        throw config_error("wcvar risk requires --formulation wdr");
    if (form == Formulation::weighted_cvar && !spec.weighted)
        throw config_error("--formulation wdr requires a wcvar risk");
    return PortfolioProblem{returns, mu_star, spec.utility, form, spec.terms};
}

int cmd_solve(const CommonFlags& f) {
    const ReturnsMatrix returns = load_data(f.data);
    const PortfolioProblem p = make_problem(f, returns, f.mu_star);
    const auto t0 = std::chrono::steady_clock::now();
    const PortfolioResult res = solve_portfolio(p, make_build_options(f));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (f.out.empty()) {
        write_solution(std::cout, res, p);
    } else {
        write_solution(f.out, res, p);
    }
    std::printf("objective %.10g iterations %ld wall_time_s %.3f status %s\n",
                res.risk_value, res.solution.iterations, secs,
                to_string(res.solution.status));
    return res.solution.status == SolveStatus::converged ? kExitOk : kExitMaxIter;
}

int cmd_frontier(const CommonFlags& f) {
    if (f.mu_star_grid.empty()) throw config_error("frontier requires --mu-star-grid");
    const std::vector<double> grid = parse_grid(f.mu_star_grid);
    const ReturnsMatrix returns = load_data(f.data);
    const PortfolioProblem base = make_problem(f, returns, grid.front());
    const auto points = frontier(base, grid, make_build_options(f), f.jobs);
    const std::string out = f.out.empty() ? "frontier.csv" : f.out;
    write_frontier_csv(out, points, returns.names());
    const std::string svg =
        std::filesystem::path(out).replace_extension(".svg").string();
    write_frontier_svg(svg, points);
    bool all_converged = true;
    for (const auto& pt : points) {
        std::printf("mu_star %.6g risk %.10g status %s iterations %ld\n", pt.mu_star,
                    pt.risk_value, to_string(pt.status), pt.iterations);
        all_converged = all_converged && pt.status == SolveStatus::converged;
    }
    std::printf("wrote %s and %s\n", out.c_str(), svg.c_str());
    return all_converged ? kExitOk : kExitMaxIter;
}

int cmd_gen(const CommonFlags& f, Eigen::Index omega, Eigen::Index assets,
            const std::string& dist, double a, double b) {
    SyntheticSpec spec;
    spec.seed = f.seed;
    spec.omega = omega;
    spec.n_assets = assets;
    spec.a = a;
    spec.b = b;
    if (dist == "uniform") spec.distribution = SyntheticSpec::Dist::uniform;
    else if (dist == "gaussian") spec.distribution = SyntheticSpec::Dist::gaussian;
    else throw config_error("unknown distribution '" + dist + "'");
    const std::string out = f.out.empty() ? "synthetic.csv" : f.out;
    save_returns_csv(out, gen_synthetic(spec), false);
    std::printf("wrote %s (%lld scenarios x %lld assets, seed %llu)\n", out.c_str(),
                (long long)omega, (long long)assets, (unsigned long long)f.seed);
    return kExitOk;
}

int cmd_eval_risk(const CommonFlags& f, const std::string& weights_text) {
    const ReturnsMatrix returns = load_data(f.data);
    Vec w;
    if (weights_text.empty()) {
        w = Vec::Constant(returns.n_assets(), 1.0 / double(returns.n_assets()));
    } else {
        const std::vector<double> parsed = parse_list(weights_text, "weight");
        if (Eigen::Index(parsed.size()) != returns.n_assets())
            throw config_error("--weights must supply one value per asset");
        w = Eigen::Map<const Vec>(parsed.data(), Eigen::Index(parsed.size()));
    }
    const RiskSpec spec = parse_risk(f.risk);
    PortfolioProblem p{returns, 0.0, spec.utility,
                       spec.weighted ? Formulation::weighted_cvar : Formulation::oce,
                       spec.terms};
    std::printf("rho %.12g\n", evaluate_portfolio_risk(p, w));
    return kExitOk;
}

int cmd_compare(const CommonFlags& f) {
    const ReturnsMatrix returns = load_data(f.data);
    const RiskSpec spec = parse_risk(f.risk);
    if (!spec.utility.is_cvar() || spec.weighted)
        throw config_error("compare wants a plain cvar risk");
    const BuildOptions opt = make_build_options(f);
    PortfolioProblem oce{returns, f.mu_star, spec.utility, Formulation::oce, {}};
    PortfolioProblem dr{returns, f.mu_star, spec.utility,
                        Formulation::dual_representation, {}};
    const PortfolioResult a = solve_portfolio(oce, opt);
    const PortfolioResult b = solve_portfolio(dr, opt);
    std::printf("%-12s %-16s %-12s %s\n", "path", "objective", "iterations", "status");
    std::printf("%-12s %-16.8g %-12ld %s\n", "oce", a.risk_value, a.solution.iterations,
                to_string(a.solution.status));
    std::printf("%-12s %-16.8g %-12ld %s\n", "dr", b.risk_value, b.solution.iterations,
                to_string(b.solution.status));
    if (returns.n_assets() <= 4) {
        auto eval = [&](const RandomVector& X) {
            return cvar_sort(spec.utility.alpha, X).rho;
        };
        oracle::GridSpec grid;
        const auto [gx, gv] = oracle::grid_search_simplex(returns, f.mu_star, eval, grid);
        std::printf("%-12s %-16.8g %-12s %s\n", "grid-oracle", gv, "-", "-");
    } else {
        std::printf("%-12s skipped (more than 4 assets)\n", "grid-oracle");
    }
    const bool ok = a.solution.status == SolveStatus::converged &&
                    b.solution.status == SolveStatus::converged;
    return ok ? kExitOk : kExitMaxIter;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"portfolio risk minimization via primal-dual proximal splitting"};
    app.require_subcommand(1);

    CommonFlags f;
    Eigen::Index omega = 100, assets = 5;
    std::string dist = "gaussian";
    double gen_a = -1.0, gen_b = 1.0;
    std::string weights_text;

    CLI::App* solve = app.add_subcommand("solve", "minimize risk at one return target");
    solve->add_option("--data", f.data, "returns or price-history CSV")->required();
    solve->add_option("--mu-star", f.mu_star, "minimum expected return");
    solve->add_option("--out", f.out, "solution document path (default: stdout)");
    add_solver_flags(solve, f);

    CLI::App* front = app.add_subcommand("frontier", "sweep a grid of return targets");
    front->add_option("--data", f.data, "returns or price-history CSV")->required();
    front->add_option("--mu-star-grid", f.mu_star_grid, "grid a:b:step")->required();
    front->add_option("--jobs", f.jobs, "parallel frontier solves");
    front->add_option("--out", f.out, "frontier CSV path (SVG written alongside)");
    add_solver_flags(front, f);

    CLI::App* gen = app.add_subcommand("gen", "generate synthetic return scenarios");
    gen->add_option("--seed", f.seed, "generator seed");
    gen->add_option("--omega", omega, "number of scenarios");
    gen->add_option("--assets", assets, "number of assets");
    gen->add_option("--dist", dist, "uniform | gaussian");
    gen->add_option("--a", gen_a, "uniform lower bound");
    gen->add_option("--b", gen_b, "uniform upper bound");
    gen->add_option("--out", f.out, "output CSV path");

    CLI::App* evalr = app.add_subcommand("eval-risk", "evaluate rho for fixed weights");
    evalr->add_option("--data", f.data, "returns or price-history CSV")->required();
    evalr->add_option("--risk", f.risk, "risk spec");
    evalr->add_option("--weights", weights_text, "w1,w2,... (default: equal weights)");

    CLI::App* comp = app.add_subcommand("compare", "OCE vs DR vs exhaustive oracle");
    comp->add_option("--data", f.data, "returns or price-history CSV")->required();
    comp->add_option("--mu-star", f.mu_star, "minimum expected return");
    add_solver_flags(comp, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (solve->parsed()) return cmd_solve(f);
        if (front->parsed()) return cmd_frontier(f);
        if (gen->parsed()) return cmd_gen(f, omega, assets, dist, gen_a, gen_b);
        if (evalr->parsed()) return cmd_eval_risk(f, weights_text);
        if (comp->parsed()) return cmd_compare(f);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
