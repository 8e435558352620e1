#pragma once

#include "covsamp/projection.hpp"
#include "covsamp/selection.hpp"

#include <memory>

namespace covsamp {

/// A covariance model together with its long-regression objects:
///   Y = beta_long X + gamma'W + Y^{perp X,W}
///   X = pi'W + X^{perp W}
/// Immutable after construction and safe to share across threads. Only
/// mask-independent quantities are cached.
class Population {
public:
    explicit Population(CovarianceModel cov);

    const CovarianceModel& cov() const noexcept { return cov_; }
    Index k() const noexcept { return cov_.k(); }
    double beta_long() const noexcept { return beta_long_; }
    const Eigen::VectorXd& gamma() const noexcept { return gamma_; }
    const Eigen::VectorXd& pi() const noexcept { return pi_; }

    auto var_w() const { return cov_.var_w(); }
    double var_x() const noexcept { return cov_.sigma()(1, 1); }
    double var_y() const noexcept { return cov_.sigma()(0, 0); }
    double cov_yx() const noexcept { return cov_.sigma()(0, 1); }

    /// Var(W) pi and Var(W) gamma, i.e. Cov(W, pi'W) and Cov(W, gamma'W).
    const Eigen::VectorXd& var_w_pi() const noexcept { return var_w_pi_; }
    const Eigen::VectorXd& var_w_gamma() const noexcept { return var_w_gamma_; }
    double var_pi_index() const noexcept { return var_pi_index_; }
    double var_gamma_index() const noexcept { return var_gamma_index_; }
    double cov_pi_gamma_index() const noexcept { return cov_pi_gamma_; }
    /// Var(X^{perp W}) and Var(Y^{perp X,W}).
    double x_resid_var() const noexcept { return x_resid_var_; }
    double y_resid_var() const noexcept { return y_resid_var_; }

    /// Var(gamma'W) or Var(pi'W) is numerically zero; selection ratios
    /// then come back as failure codes.
    bool degenerate() const noexcept { return degenerate_; }

    /// Var(W)^{-1}, computed on first use and shared by copies.
    const Eigen::MatrixXd& precision() const;

private:
    struct PrecisionCache;

    CovarianceModel cov_;
    double beta_long_ = 0.0;
    Eigen::VectorXd gamma_;
    Eigen::VectorXd pi_;
    Eigen::VectorXd var_w_pi_;
    Eigen::VectorXd var_w_gamma_;
    double var_pi_index_ = 0.0;
    double var_gamma_index_ = 0.0;
    double cov_pi_gamma_ = 0.0;
    double x_resid_var_ = 0.0;
    double y_resid_var_ = 0.0;
    bool degenerate_ = false;
    std::shared_ptr<PrecisionCache> precision_;
};

Population derive_population(const CovarianceModel& cov);

/// Coefficient on X in the projection of Y on X and the observed covariates.
double beta_medium(const Population& pop, const SelectionMask& mask);

/// beta_medium - beta_long.
double ovb(const Population& pop, const SelectionMask& mask);

}  // namespace covsamp
