#pragma once

// CSV ingestion (price histories, return scenarios), deterministic synthetic
// scenario generation, and result serialization.
//
// Returns CSV: one header row, comma separated; an optional leading column
// literally named "prob" carries scenario probabilities, the remaining header
// cells are asset names. One data row per scenario, '.' decimal, UTF-8.
// Prices CSV: header "date,<asset names...>", one row per time step with
// strictly positive prices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "riskprox/portfolio.hpp"
#include "riskprox/probspace.hpp"
#include "riskprox/solver.hpp"

namespace riskprox {

struct PriceSeries {
    std::vector<std::string> dates;
    Mat prices;  // (T+1) x N, strictly positive
    std::vector<std::string> names;
};

namespace detail {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim whitespace and a stray CR from windows line endings
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline double parse_cell(const std::string& cell, const std::string& path, long line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw data_error(path + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                         cell + "'");
    }
}

}  // namespace detail

inline ReturnsMatrix load_returns_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line[0] != '#') break;
        if (!line.empty() && line[0] == '#') line.clear();
    }
    if (line.empty()) throw data_error(path + ": missing header row");
    std::vector<std::string> header = detail::split_csv_line(line);
    const bool has_probs = !header.empty() && header.front() == "prob";
    std::vector<std::string> names(header.begin() + (has_probs ? 1 : 0), header.end());
    if (names.empty()) throw data_error(path + ": header names no assets");

    std::vector<double> probs;
    std::vector<double> values;
    long rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != names.size() + (has_probs ? 1 : 0))
            throw data_error(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(names.size() + (has_probs ? 1 : 0)) +
                             " cells, got " + std::to_string(cells.size()));
        std::size_t c = 0;
        if (has_probs) probs.push_back(detail::parse_cell(cells[c++], path, line_no));
        for (; c < cells.size(); ++c)
            values.push_back(detail::parse_cell(cells[c], path, line_no));
        ++rows;
    }
    if (rows == 0) throw data_error(path + ": no scenario rows");

    SpacePtr space;
    if (has_probs) {
        Vec p = Eigen::Map<Vec>(probs.data(), rows);
        try {
            space = std::make_shared<const DiscreteSpace>(p);
        } catch (const config_error& e) {
            throw data_error(path + ": bad probability column: " + e.what());
        }
    } else {
        space = DiscreteSpace::uniform(rows);
    }
    Mat cols =
        Eigen::Map<detail::RowMajorMat>(values.data(), rows, Eigen::Index(names.size()));
    return ReturnsMatrix(space, cols, names);
}

inline void save_returns_csv(const std::string& path, const ReturnsMatrix& m,
                             bool with_probs = true) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << std::setprecision(17);
    if (with_probs) out << "prob";
    for (std::size_t j = 0; j < m.names().size(); ++j)
        out << (with_probs || j > 0 ? "," : "") << m.names()[j];
    out << "\n";
    for (Eigen::Index i = 0; i < m.n_scenarios(); ++i) {
        if (with_probs) out << m.space()->probs()(i);
        for (Eigen::Index j = 0; j < m.n_assets(); ++j)
            out << (with_probs || j > 0 ? "," : "") << m.columns()(i, j);
        out << "\n";
    }
}

inline PriceSeries load_prices_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::string line;
    long line_no = 1;
    if (!std::getline(in, line)) throw data_error(path + ": missing header row");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2) throw data_error(path + ": header needs date plus assets");
    PriceSeries s;
    s.names.assign(header.begin() + 1, header.end());
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw data_error(path + ":" + std::to_string(line_no) + ": ragged row");
        s.dates.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c)
            values.push_back(detail::parse_cell(cells[c], path, line_no));
    }
    const Eigen::Index rows = Eigen::Index(s.dates.size());
    if (rows < 2) throw data_error(path + ": need at least two price rows");
    s.prices = Eigen::Map<detail::RowMajorMat>(values.data(), rows,
                                               Eigen::Index(s.names.size()));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < s.prices.cols(); ++j)
            if (!(s.prices(i, j) > 0.0))
                throw data_error(path + ": nonpositive price at row " +
                                 std::to_string(i + 2) + ", asset " + s.names[j]);
    return s;
}

/// Simple percentage returns r_{t,i} = 100 * (P_{t+1,i} - P_{t,i}) / P_{t,i},
/// one scenario per time step, uniform probabilities.
inline ReturnsMatrix prices_to_returns(const PriceSeries& series) {
    const Eigen::Index t = series.prices.rows() - 1;
    Mat cols(t, series.prices.cols());
    for (Eigen::Index i = 0; i < t; ++i)
        cols.row(i) = 100.0 *
                      (series.prices.row(i + 1) - series.prices.row(i)).array() /
                      series.prices.row(i).array();
    return ReturnsMatrix(DiscreteSpace::uniform(t), cols, series.names);
}

// ---------------------------------------------------------------------------
// Synthetic scenarios. The generator is SplitMix64 (Steele, Lea, Flood 2014):
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//   z = (z ^ z>>27) * 0x94D049BB133111EB; output z ^ z>>31
// uniform doubles come from the top 53 bits, normals from the Box-Muller
// transform on consecutive uniform pairs.
// ---------------------------------------------------------------------------

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double normal() {
        // Box-Muller; discard the second member of each pair
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::uint64_t state_;
};

struct SyntheticSpec {
    std::uint64_t seed = 1;
    Eigen::Index omega = 1;
    Eigen::Index n_assets = 1;
    enum class Dist { uniform, gaussian } distribution = Dist::uniform;
    double a = -1.0, b = 1.0;         // uniform bounds
    double mean_lo = -0.3, mean_hi = 1.4;  // gaussian: per-asset mean range
    double vol_lo = 0.5, vol_hi = 4.0;     // gaussian: per-asset volatility range
};

inline ReturnsMatrix gen_synthetic(const SyntheticSpec& spec) {
    if (spec.omega < 1 || spec.n_assets < 1)
        throw config_error("gen_synthetic: omega and n_assets must be >= 1");
    SplitMix64 rng(spec.seed);
    Mat cols(spec.omega, spec.n_assets);
    if (spec.distribution == SyntheticSpec::Dist::uniform) {
        for (Eigen::Index j = 0; j < spec.n_assets; ++j)
            for (Eigen::Index i = 0; i < spec.omega; ++i)
                cols(i, j) = rng.uniform(spec.a, spec.b);
    } else {
        for (Eigen::Index j = 0; j < spec.n_assets; ++j) {
            const double mean = rng.uniform(spec.mean_lo, spec.mean_hi);
            const double vol = rng.uniform(spec.vol_lo, spec.vol_hi);
            for (Eigen::Index i = 0; i < spec.omega; ++i)
                cols(i, j) = mean + vol * rng.normal();
        }
    }
    return ReturnsMatrix(DiscreteSpace::uniform(spec.omega), cols, {});
}

// ---------------------------------------------------------------------------
// Result serialization.
// ---------------------------------------------------------------------------

/// Key-value solution document: status, iterations, objective, lambda,
/// residuals, weights and asset names, space separated on one line each.
inline void write_solution(std::ostream& out, const PortfolioResult& res,
                           const PortfolioProblem& p) {
    out << std::setprecision(17);
    out << "status " << to_string(res.solution.status) << "\n";
    out << "iterations " << res.solution.iterations << "\n";
    out << "objective " << res.risk_value << "\n";
    out << "lambda " << res.lambda << "\n";
    out << "mu_star " << p.mu_star << "\n";
    out << "residual_primal " << res.solution.residual_primal << "\n";
    out << "residual_dual " << res.solution.residual_dual << "\n";
    out << "weights";
    for (Eigen::Index i = 0; i < res.weights.size(); ++i) out << " " << res.weights(i);
    out << "\n";
    out << "asset_names";
    for (const auto& n : p.returns.names()) out << " " << n;
    out << "\n";
}

inline void write_solution(const std::string& path, const PortfolioResult& res,
                           const PortfolioProblem& p) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    write_solution(out, res, p);
}

/// Frontier CSV: mu_star,risk,status,iterations,w_1..w_N.
inline void write_frontier_csv(const std::string& path,
                               const std::vector<FrontierPoint>& points,
                               const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << std::setprecision(17);
    out << "mu_star,risk,status,iterations";
    for (std::size_t j = 0; j < names.size(); ++j) out << ",w_" << (j + 1);
    out << "\n";
    for (const FrontierPoint& pt : points) {
        out << pt.mu_star << "," << pt.risk_value << "," << to_string(pt.status) << ","
            << pt.iterations;
        for (Eigen::Index j = 0; j < pt.weights.size(); ++j) out << "," << pt.weights(j);
        out << "\n";
    }
}

/// Self-contained SVG line chart of (mu_star, risk).
inline void write_frontier_svg(const std::string& path,
                               const std::vector<FrontierPoint>& points) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    const double w = 640, h = 420, margin = 60;
    double x_lo = kInf, x_hi = -kInf, y_lo = kInf, y_hi = -kInf;
    for (const auto& pt : points) {
        x_lo = std::min(x_lo, pt.mu_star);
        x_hi = std::max(x_hi, pt.mu_star);
        y_lo = std::min(y_lo, pt.risk_value);
        y_hi = std::max(y_hi, pt.risk_value);
    }
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;
    auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (w - 2 * margin); };
    auto py = [&](double y) { return h - margin - (y - y_lo) / (y_hi - y_lo) * (h - 2 * margin); };
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
        << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << margin << "' y1='" << h - margin << "' x2='" << w - margin
        << "' y2='" << h - margin << "' stroke='black'/>\n";
    out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << h - margin << "' stroke='black'/>\n";
    out << "<polyline fill='none' stroke='steelblue' stroke-width='2' points='";
    for (const auto& pt : points) out << px(pt.mu_star) << "," << py(pt.risk_value) << " ";
    out << "'/>\n";
    for (const auto& pt : points)
        out << "<circle cx='" << px(pt.mu_star) << "' cy='" << py(pt.risk_value)
            << "' r='4' fill='" << (pt.status == SolveStatus::converged ? "steelblue" : "crimson")
            << "'/>\n";
    out << "<text x='" << w / 2 << "' y='" << h - margin / 3
        << "' text-anchor='middle' font-size='14'>target expected return</text>\n";
    out << "<text x='" << margin / 3 << "' y='" << h / 2
        << "' text-anchor='middle' font-size='14' transform='rotate(-90 " << margin / 3
        << " " << h / 2 << ")'>risk</text>\n";
    out << "</svg>\n";
}

}  // namespace riskprox
