#pragma once

// Covariance-level linear projection algebra. Every quantity here is a
// population object: regressions are solved from the normal equations of
// a covariance matrix, never from data.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace covsamp {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

namespace tolerance {
/// Smallest admissible eigenvalue, relative to the largest diagonal entry.
inline constexpr double pd_relative = 1e-10;
inline constexpr double symmetry_relative = 1e-12;
/// Residual orthogonality and negative-variance clamp threshold.
inline constexpr double orthogonality = 1e-10;
inline constexpr double residual_clamp = 1e-10;
inline constexpr double degenerate_target = 1e-14;
}  // namespace tolerance

/// Labeled covariance matrix of (Y, X, W_1..W_K). Position 0 is the
/// outcome, position 1 the treatment, positions 2.. the covariates.
class CovarianceModel {
public:
    static constexpr Index outcome = 0;
    static constexpr Index treatment = 1;

    /// Validates symmetry, label uniqueness and positive definiteness.
    CovarianceModel(std::vector<std::string> labels, Eigen::MatrixXd sigma);

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
    Index dim() const noexcept { return sigma_.rows(); }
    Index k() const noexcept { return sigma_.rows() - 2; }
    static constexpr Index covariate(Index i) noexcept { return i + 2; }

    /// Var(W) as a view into sigma.
    auto var_w() const { return sigma_.bottomRightCorner(k(), k()); }

    Index index_of(const std::string& label) const;

private:
    std::vector<std::string> labels_;
    Eigen::MatrixXd sigma_;
};

/// Labels "Y", "X", "W1".."WK".
std::vector<std::string> default_labels(Index k);

/// Throws NotPositiveDefinite unless the smallest eigenvalue of `sigma`
/// exceeds pd_relative times its largest diagonal entry.
void check_positive_definite(const Eigen::MatrixXd& sigma);

struct ProjectionResult {
    Eigen::VectorXd coefficients;  // aligned to the predictor index set
    double residual_variance = 0.0;
    double r_squared = 0.0;
};

ProjectionResult project(const CovarianceModel& model, Index target, const IndexSet& predictors);

/// Var(A) - Cov(A,B) Var(B)^{-1} Cov(B,A).
Eigen::MatrixXd residual_covariance(const CovarianceModel& model, const IndexSet& a_set,
                                    const IndexSet& b_set);

/// R^2 of target^{perp controls} on added^{perp controls}. Plain R^2 when
/// controls is empty.
double partial_r_squared(const CovarianceModel& model, Index target, const IndexSet& added,
                         const IndexSet& controls);

// Raw-matrix forms of the above, used by callers that already hold a
// covariance matrix (e.g. Var(W) alone).
ProjectionResult project(const Eigen::MatrixXd& sigma, Index target, const IndexSet& predictors);
Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& sigma, const IndexSet& a_set,
                                    const IndexSet& b_set);

Eigen::MatrixXd gather(const Eigen::MatrixXd& sigma, const IndexSet& rows, const IndexSet& cols);
Eigen::VectorXd gather(const Eigen::VectorXd& v, const IndexSet& idx);

// Linear functionals: a random variable a'V written as its coefficient
// vector over the variables V of a covariance matrix. These let derived
// variables such as (g'W_2)^{perp W_1} be manipulated exactly.
namespace functional {

inline double cov(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(sigma * b);
}

Eigen::VectorXd unit(Index dim, Index i);

/// Columns are unit functionals for the given variable indices.
Eigen::MatrixXd units(Index dim, const IndexSet& idx);

/// target minus its linear projection on the span of the predictor
/// columns. Throws SingularSubmatrix if the predictors are collinear.
Eigen::VectorXd residualize(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& target,
                            const Eigen::MatrixXd& predictors);

/// Each column residualized on the predictors.
Eigen::MatrixXd residualize_all(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& targets,
                                const Eigen::MatrixXd& predictors);

/// R^2 of target on the predictor columns (0 for an empty predictor set).
double r_squared(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& target,
                 const Eigen::MatrixXd& predictors);

double corr(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace functional

}  // namespace covsamp
