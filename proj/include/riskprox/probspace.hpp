#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "riskprox/common.hpp"

namespace riskprox {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A finite scenario set with probability weights. Random variables on the
/// space live in the probability-weighted L2 geometry: <X,Y> = sum_w p_w X_w Y_w.
class DiscreteSpace {
  public:
    explicit DiscreteSpace(Vec probs) : probs_(std::move(probs)) {
        if (probs_.size() < 1) throw config_error("scenario set must be nonempty");
        if ((probs_.array() < 0.0).any())
            throw config_error("probabilities must be nonnegative");
        if (std::abs(probs_.sum() - 1.0) > 1e-12)
            throw config_error("probabilities must sum to 1 within 1e-12");
    }

    static std::shared_ptr<const DiscreteSpace> uniform(Eigen::Index m) {
        return std::make_shared<const DiscreteSpace>(Vec::Constant(m, 1.0 / double(m)));
    }

    Eigen::Index size() const { return probs_.size(); }
    const Vec& probs() const { return probs_; }

  private:
    Vec probs_;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

/// One value per scenario.
struct RandomVector {
    SpacePtr space;
    Vec values;

    RandomVector(SpacePtr s, Vec v) : space(std::move(s)), values(std::move(v)) {
        if (!space) throw dimension_error("RandomVector needs a space");
        if (values.size() != space->size())
            throw dimension_error("RandomVector length does not match its space");
    }
};

inline void require_same_space(const RandomVector& x, const RandomVector& y) {
    if (x.space->size() != y.space->size() ||
        (x.space != y.space && x.space->probs() != y.space->probs()))
        throw dimension_error("random vectors live on different spaces");
}

inline double weighted_inner(const DiscreteSpace& space, const Vec& x, const Vec& y) {
    if (x.size() != space.size() || y.size() != space.size())
        throw dimension_error("weighted_inner: dimension mismatch");
    return (space.probs().array() * x.array() * y.array()).sum();
}

inline double weighted_inner(const RandomVector& x, const RandomVector& y) {
    require_same_space(x, y);
    return weighted_inner(*x.space, x.values, y.values);
}

inline double weighted_norm(const DiscreteSpace& space, const Vec& x) {
    return std::sqrt(weighted_inner(space, x, x));
}

inline double expectation(const DiscreteSpace& space, const Vec& x) {
    if (x.size() != space.size()) throw dimension_error("expectation: dimension mismatch");
    return space.probs().dot(x);
}

inline double expectation(const RandomVector& x) { return expectation(*x.space, x.values); }

/// N asset return columns sharing one scenario space, with precomputed
/// expected returns mu_i = E[R_i].
class ReturnsMatrix {
  public:
    ReturnsMatrix(SpacePtr space, Mat columns, std::vector<std::string> names)
        : space_(std::move(space)), columns_(std::move(columns)), names_(std::move(names)) {
        if (!space_) throw dimension_error("ReturnsMatrix needs a space");
        if (columns_.rows() != space_->size())
            throw dimension_error("return columns do not match the scenario count");
        if (columns_.cols() < 1) throw config_error("at least one asset required");
        if (names_.empty()) {
            for (Eigen::Index j = 0; j < columns_.cols(); ++j)
                names_.push_back("asset_" + std::to_string(j + 1));
        }
        if (Eigen::Index(names_.size()) != columns_.cols())
            throw dimension_error("asset name count does not match column count");
        mu_ = columns_.transpose() * space_->probs();
        if (mu_.lpNorm<Eigen::Infinity>() == 0.0)
            throw model_error("expected-return vector must be nonzero");
    }

    const SpacePtr& space() const { return space_; }
    const Mat& columns() const { return columns_; }
    const std::vector<std::string>& names() const { return names_; }
    const Vec& mu() const { return mu_; }
    Eigen::Index n_assets() const { return columns_.cols(); }
    Eigen::Index n_scenarios() const { return columns_.rows(); }

  private:
    SpacePtr space_;
    Mat columns_;
    std::vector<std::string> names_;
    Vec mu_;
};

/// K : R^(N+1) -> L2,  (x, lambda) |-> sum_i x_i R_i + lambda.
/// The domain carries the Euclidean inner product, the codomain the weighted one.
class OceOperatorK {
  public:
    explicit OceOperatorK(ReturnsMatrix returns) : returns_(std::move(returns)) {}

    Eigen::Index domain_dim() const { return returns_.n_assets() + 1; }
    Eigen::Index codomain_dim() const { return returns_.n_scenarios(); }
    const ReturnsMatrix& returns() const { return returns_; }

    Vec apply(const Vec& x, double lambda) const {
        if (x.size() != returns_.n_assets())
            throw dimension_error("apply_K: weight vector has wrong length");
        return (returns_.columns() * x).array() + lambda;
    }

    Vec apply(const Vec& xl) const {
        if (xl.size() != domain_dim()) throw dimension_error("apply_K: wrong length");
        return apply(xl.head(xl.size() - 1), xl(xl.size() - 1));
    }

    /// K* Z = (<R_1,Z>, ..., <R_N,Z>, E[Z]); inner products are the weighted ones.
    Vec adjoint(const Vec& z) const {
        if (z.size() != returns_.n_scenarios())
            throw dimension_error("adjoint_K: dimension mismatch");
        Vec out(domain_dim());
        const Vec pz = returns_.space()->probs().cwiseProduct(z);
        out.head(returns_.n_assets()) = returns_.columns().transpose() * pz;
        out(returns_.n_assets()) = pz.sum();
        return out;
    }

  private:
    ReturnsMatrix returns_;
};

/// R : R^N -> R^|Omega|,  x |-> -sum_i x_i R_i, the sign-flipped payoff map of
/// the CVaR dual formulation. adjoint() pairs against the weighted codomain
/// inner product; adjoint_euclidean() against the plain dot product.
class DrOperatorR {
  public:
    explicit DrOperatorR(ReturnsMatrix returns) : returns_(std::move(returns)) {}

    Eigen::Index domain_dim() const { return returns_.n_assets(); }
    Eigen::Index codomain_dim() const { return returns_.n_scenarios(); }
    const ReturnsMatrix& returns() const { return returns_; }

    Vec apply(const Vec& x) const {
        if (x.size() != returns_.n_assets())
            throw dimension_error("apply_R: weight vector has wrong length");
        return -(returns_.columns() * x);
    }

    Vec adjoint(const Vec& z) const {
        if (z.size() != returns_.n_scenarios())
            throw dimension_error("adjoint_R: dimension mismatch");
        return -(returns_.columns().transpose() *
                 returns_.space()->probs().cwiseProduct(z));
    }

    Vec adjoint_euclidean(const Vec& z) const {
        if (z.size() != returns_.n_scenarios())
            throw dimension_error("adjoint_R: dimension mismatch");
        return -(returns_.columns().transpose() * z);
    }

  private:
    ReturnsMatrix returns_;
};

/// Operator norm by power iteration on L*L. `apply` and `adjoint` fix the
/// geometry; the returned value is ||L|| with respect to it. Starts from the
/// all-ones vector with a small deterministic tilt so runs are reproducible.
inline double operator_norm(const std::function<Vec(const Vec&)>& apply,
                            const std::function<Vec(const Vec&)>& adjoint,
                            Eigen::Index domain_dim, double tol = 1e-10,
                            int max_iter = 5000) {
    if (!(tol > 0.0)) throw config_error("operator_norm: tol must be positive");
    Vec v(domain_dim);
    for (Eigen::Index i = 0; i < domain_dim; ++i)
        v(i) = 1.0 + 1e-6 * double(i) / double(domain_dim);
    v /= v.norm();
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vec w = adjoint(apply(v));
        const double wn = w.norm();
        if (wn == 0.0) return 0.0;
        const double next = std::sqrt(v.dot(w));  // Rayleigh quotient of L*L at unit v
        w /= wn;
        if (it > 0 && std::abs(next - est) <= tol * std::max(1.0, next)) return next;
        est = next;
        v = std::move(w);
    }
    throw convergence_error("operator_norm: power iteration did not converge", est);
}

inline double operator_norm(const OceOperatorK& op, double tol = 1e-10,
                            int max_iter = 5000) {
    return operator_norm([&](const Vec& v) { return op.apply(v); },
                         [&](const Vec& z) { return op.adjoint(z); }, op.domain_dim(),
                         tol, max_iter);
}

inline double operator_norm(const DrOperatorR& op, double tol = 1e-10,
                            int max_iter = 5000) {
    return operator_norm([&](const Vec& v) { return op.apply(v); },
                         [&](const Vec& z) { return op.adjoint(z); }, op.domain_dim(),
                         tol, max_iter);
}

}  // namespace riskprox
