#include "covsamp/population.hpp"

#include "covsamp/error.hpp"

#include <mutex>
#include <numeric>

namespace covsamp {

namespace {
constexpr double kDegenerateIndex = 1e-14;
}

struct Population::PrecisionCache {
    std::once_flag once;
    Eigen::MatrixXd value;
};

Population::Population(CovarianceModel cov)
    : cov_(std::move(cov)), precision_(std::make_shared<PrecisionCache>()) {
    const Index k = cov_.k();
    IndexSet x_and_w(static_cast<std::size_t>(k + 1));
    std::iota(x_and_w.begin(), x_and_w.end(), Index{1});
    IndexSet w_only(x_and_w.begin() + 1, x_and_w.end());

    const ProjectionResult long_reg = project(cov_, CovarianceModel::outcome, x_and_w);
    const ProjectionResult x_reg = project(cov_, CovarianceModel::treatment, w_only);

    beta_long_ = long_reg.coefficients(0);
    gamma_ = long_reg.coefficients.tail(k);
    pi_ = x_reg.coefficients;
    y_resid_var_ = long_reg.residual_variance;
    x_resid_var_ = x_reg.residual_variance;

    const auto var_w = cov_.var_w();
    var_w_pi_ = var_w * pi_;
    var_w_gamma_ = var_w * gamma_;
    var_pi_index_ = pi_.dot(var_w_pi_);
    var_gamma_index_ = gamma_.dot(var_w_gamma_);
    cov_pi_gamma_ = pi_.dot(var_w_gamma_);
    degenerate_ = var_pi_index_ <= kDegenerateIndex || var_gamma_index_ <= kDegenerateIndex;
}

const Eigen::MatrixXd& Population::precision() const {
    std::call_once(precision_->once, [this] {
        const Eigen::MatrixXd var_w = cov_.var_w();
        Eigen::LLT<Eigen::MatrixXd> llt(var_w);
        require(llt.info() == Eigen::Success, ErrorCode::SingularSubmatrix, "Var(W) failed Cholesky");
        Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(k(), k()));
        precision_->value = 0.5 * (inv + inv.transpose());
    });
    return precision_->value;
}

Population derive_population(const CovarianceModel& cov) { return Population(cov); }

double beta_medium(const Population& pop, const SelectionMask& mask) {
    require(mask.k() == pop.k(), ErrorCode::InvalidArgument, "mask length differs from K");
    IndexSet predictors{CovarianceModel::treatment};
    for (Index i : mask.observed_indices()) predictors.push_back(CovarianceModel::covariate(i));
    return project(pop.cov(), CovarianceModel::outcome, predictors).coefficients(0);
}

double ovb(const Population& pop, const SelectionMask& mask) {
    return beta_medium(pop, mask) - pop.beta_long();
}

}  // namespace covsamp
