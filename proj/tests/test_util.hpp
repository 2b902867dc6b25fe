#pragma once

// Shared helpers for the test suites: deterministic random inputs and small
// factories for spaces and return matrices.

#include <random>
#include <vector>

#include "riskprox/dataio.hpp"
#include "riskprox/probspace.hpp"

namespace riskprox::testing {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double lo = -5.0,
                      double hi = 5.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

inline SpacePtr random_space(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    Vec p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = dist(rng);
    p /= p.sum();
    return std::make_shared<const DiscreteSpace>(p);
}

inline ReturnsMatrix random_returns(std::mt19937_64& rng, Eigen::Index n_assets,
                                    Eigen::Index n_scenarios, bool uniform_probs = true) {
    std::uniform_real_distribution<double> dist(-2.0, 2.5);
    Mat cols(n_scenarios, n_assets);
    for (Eigen::Index j = 0; j < n_assets; ++j)
        for (Eigen::Index i = 0; i < n_scenarios; ++i) cols(i, j) = dist(rng);
    SpacePtr space = uniform_probs ? DiscreteSpace::uniform(n_scenarios)
                                   : random_space(rng, n_scenarios);
    return ReturnsMatrix(space, cols, {});
}

}  // namespace riskprox::testing
