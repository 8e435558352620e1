#include "covsamp/projection.hpp"

#include "covsamp/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace covsamp {

namespace {

void require_valid_indices(Index dim, const IndexSet& idx, const char* what) {
    for (Index i : idx) {
        require(i >= 0 && i < dim, ErrorCode::InvalidArgument,
                std::string(what) + " index " + std::to_string(i) + " out of range");
    }
    std::unordered_set<Index> seen(idx.begin(), idx.end());
    require(seen.size() == idx.size(), ErrorCode::InvalidArgument,
            std::string(what) + " contains duplicate indices");
}

void require_disjoint(const IndexSet& a, const IndexSet& b, const char* what) {
    for (Index i : a) {
        require(std::find(b.begin(), b.end(), i) == b.end(), ErrorCode::InvalidArgument,
                std::string(what) + " must be disjoint (index " + std::to_string(i) + ")");
    }
}

Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& block) {
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) {
        fail(ErrorCode::SingularSubmatrix,
             "predictor covariance block of size " + std::to_string(block.rows()) +
                 " failed Cholesky factorization");
    }
    return llt;
}

double clamp_residual(double value, double scale) {
    if (value >= 0.0) return value;
    if (value >= -tolerance::residual_clamp * std::max(1.0, scale)) return 0.0;
    fail(ErrorCode::InternalConsistency,
         "negative residual variance " + std::to_string(value) + " beyond tolerance");
}

}  // namespace

std::vector<std::string> default_labels(Index k) {
    std::vector<std::string> labels{"Y", "X"};
    for (Index i = 0; i < k; ++i) labels.push_back("W" + std::to_string(i + 1));
    return labels;
}

void check_positive_definite(const Eigen::MatrixXd& sigma) {
    require(sigma.rows() == sigma.cols(), ErrorCode::InvalidArgument, "covariance must be square");
    if (sigma.rows() == 0) return;
    const double max_diag = sigma.diagonal().maxCoeff();
    require(std::isfinite(max_diag) && max_diag > 0.0, ErrorCode::NotPositiveDefinite,
            "largest diagonal entry is not positive");
    // Cholesky of the shifted matrix succeeds iff lambda_min > shift.
    const double shift = tolerance::pd_relative * max_diag;
    Eigen::MatrixXd shifted = sigma;
    shifted.diagonal().array() -= shift;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) return;
    std::ostringstream os;
    os << "covariance is not positive definite (threshold " << std::setprecision(6) << shift;
    if (sigma.rows() <= 400) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
        os << "; smallest eigenvalue " << eig.eigenvalues()(0);
    }
    os << ")";
    fail(ErrorCode::NotPositiveDefinite, os.str());
}

CovarianceModel::CovarianceModel(std::vector<std::string> labels, Eigen::MatrixXd sigma)
    : labels_(std::move(labels)), sigma_(std::move(sigma)) {
    require(sigma_.rows() == sigma_.cols(), ErrorCode::InvalidArgument, "covariance must be square");
    require(sigma_.rows() >= 3, ErrorCode::InvalidArgument,
            "covariance must hold Y, X and at least one covariate");
    require(static_cast<Index>(labels_.size()) == sigma_.rows(), ErrorCode::InvalidArgument,
            "label count does not match covariance dimension");
    std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
    require(seen.size() == labels_.size(), ErrorCode::InvalidArgument, "labels must be unique");
    require(sigma_.allFinite(), ErrorCode::InvalidArgument, "covariance has non-finite entries");

    const double scale = sigma_.diagonal().cwiseAbs().maxCoeff();
    const double asym = (sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff();
    require(asym <= tolerance::symmetry_relative * std::max(scale, 1e-300), ErrorCode::InvalidArgument,
            "covariance is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
    check_positive_definite(sigma_);
}

Index CovarianceModel::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    require(it != labels_.end(), ErrorCode::InvalidArgument, "unknown variable label '" + label + "'");
    return static_cast<Index>(it - labels_.begin());
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& sigma, const IndexSet& rows, const IndexSet& cols) {
    Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (Index c = 0; c < out.cols(); ++c) {
        const double* column = sigma.col(cols[static_cast<std::size_t>(c)]).data();
        for (Index r = 0; r < out.rows(); ++r) out(r, c) = column[rows[static_cast<std::size_t>(r)]];
    }
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const IndexSet& idx) {
    Eigen::VectorXd out(static_cast<Index>(idx.size()));
    for (Index i = 0; i < out.size(); ++i) out(i) = v(idx[static_cast<std::size_t>(i)]);
    return out;
}

ProjectionResult project(const Eigen::MatrixXd& sigma, Index target, const IndexSet& predictors) {
    require(!predictors.empty(), ErrorCode::InvalidArgument, "predictor set is empty");
    require_valid_indices(sigma.rows(), predictors, "predictor");
    require(target >= 0 && target < sigma.rows(), ErrorCode::InvalidArgument, "target out of range");
    require(std::find(predictors.begin(), predictors.end(), target) == predictors.end(),
            ErrorCode::InvalidArgument, "target is among the predictors");

    const Eigen::MatrixXd var_p = gather(sigma, predictors, predictors);
    const Eigen::VectorXd cov_pt = gather(sigma, predictors, IndexSet{target});
    auto llt = factor_or_throw(var_p);

    ProjectionResult result;
    result.coefficients = llt.solve(cov_pt);
    const double var_t = sigma(target, target);

    const Eigen::VectorXd fitted_cov = var_p * result.coefficients;
    const double scale = std::max({1.0, var_t, cov_pt.cwiseAbs().maxCoeff()});
    const double gap = (cov_pt - fitted_cov).cwiseAbs().maxCoeff();
    require(gap <= tolerance::orthogonality * scale, ErrorCode::InternalConsistency,
            "projection residual is correlated with a predictor (gap " + std::to_string(gap) + ")");

    result.residual_variance = clamp_residual(var_t - cov_pt.dot(result.coefficients), var_t);
    result.r_squared = var_t > 0.0 ? std::clamp(1.0 - result.residual_variance / var_t, 0.0, 1.0) : 0.0;
    return result;
}

ProjectionResult project(const CovarianceModel& model, Index target, const IndexSet& predictors) {
    return project(model.sigma(), target, predictors);
}

Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& sigma, const IndexSet& a_set,
                                    const IndexSet& b_set) {
    require(!b_set.empty(), ErrorCode::InvalidArgument, "conditioning set is empty");
    require_valid_indices(sigma.rows(), a_set, "a_set");
    require_valid_indices(sigma.rows(), b_set, "b_set");
    require_disjoint(a_set, b_set, "a_set and b_set");

    const Eigen::MatrixXd var_a = gather(sigma, a_set, a_set);
    const Eigen::MatrixXd var_b = gather(sigma, b_set, b_set);
    const Eigen::MatrixXd cov_ba = gather(sigma, b_set, a_set);
    auto llt = factor_or_throw(var_b);
    const Eigen::MatrixXd half = llt.matrixL().solve(cov_ba);
    Eigen::MatrixXd out = var_a - half.transpose() * half;
    return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd residual_covariance(const CovarianceModel& model, const IndexSet& a_set,
                                    const IndexSet& b_set) {
    return residual_covariance(model.sigma(), a_set, b_set);
}

double partial_r_squared(const CovarianceModel& model, Index target, const IndexSet& added,
                         const IndexSet& controls) {
    const auto& sigma = model.sigma();
    require(!added.empty(), ErrorCode::InvalidArgument, "added set is empty");
    require_valid_indices(sigma.rows(), added, "added");
    require_valid_indices(sigma.rows(), controls, "controls");
    require(target >= 0 && target < sigma.rows(), ErrorCode::InvalidArgument, "target out of range");
    const IndexSet target_set{target};
    require_disjoint(target_set, added, "target and added");
    require_disjoint(target_set, controls, "target and controls");
    require_disjoint(added, controls, "added and controls");

    // Joint residual covariance of (target, added) given controls, then a
    // plain projection inside it.
    IndexSet joint{target};
    joint.insert(joint.end(), added.begin(), added.end());
    Eigen::MatrixXd resid = controls.empty() ? gather(sigma, joint, joint)
                                             : residual_covariance(sigma, joint, controls);
    const double var_t = resid(0, 0);
    require(var_t > tolerance::degenerate_target, ErrorCode::DegenerateTarget,
            "target is fully explained by the controls");

    IndexSet inner(added.size());
    for (std::size_t i = 0; i < added.size(); ++i) inner[i] = static_cast<Index>(i + 1);
    return project(resid, 0, inner).r_squared;
}

namespace functional {

Eigen::VectorXd unit(Index dim, Index i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e(i) = 1.0;
    return e;
}

Eigen::MatrixXd units(Index dim, const IndexSet& idx) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, static_cast<Index>(idx.size()));
    for (Index c = 0; c < out.cols(); ++c) out(idx[static_cast<std::size_t>(c)], c) = 1.0;
    return out;
}

Eigen::MatrixXd residualize_all(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& targets,
                                const Eigen::MatrixXd& predictors) {
    if (predictors.cols() == 0) return targets;
    const Eigen::MatrixXd sp = sigma * predictors;
    const Eigen::MatrixXd gram = predictors.transpose() * sp;
    auto llt = factor_or_throw(0.5 * (gram + gram.transpose()));
    const Eigen::MatrixXd cross = sp.transpose() * targets;
    return targets - predictors * llt.solve(cross);
}

Eigen::VectorXd residualize(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& target,
                            const Eigen::MatrixXd& predictors) {
    return residualize_all(sigma, target, predictors).col(0);
}

double r_squared(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& target,
                 const Eigen::MatrixXd& predictors) {
    const double total = cov(sigma, target, target);
    require(total > tolerance::degenerate_target, ErrorCode::DegenerateTarget, "target has zero variance");
    if (predictors.cols() == 0) return 0.0;
    const Eigen::VectorXd resid = residualize(sigma, target, predictors);
    return 1.0 - cov(sigma, resid, resid) / total;
}

double corr(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return cov(sigma, a, b) / std::sqrt(cov(sigma, a, a) * cov(sigma, b, b));
}

}  // namespace functional

}  // namespace covsamp
