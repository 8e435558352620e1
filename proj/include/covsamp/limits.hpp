#pragma once

// Closed-form probability limits of the selection ratios as K grows with
// d2/d1 -> r, and the consistency / monotonicity classification of a
// limit curve.

#include "covsamp/dgp.hpp"
#include "covsamp/params.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace covsamp {

double limit_r_x(double r, double c_pi);
double limit_r_y(double r, double c_gamma);
double limit_delta_orig(double r, double c_gamma);
double limit_delta_acet() noexcept;
double limit_k_x(double r, double alpha, double d_ex);

/// Leading-order value of delta_resid under exchangeable covariates at
/// finite K:
///   [r Sp Sg^2 + K Spg Sg] / [r Sp Sg^2 + K Sp Sgg]
/// with Sp = sum pi, Sg = sum gamma, Spg = sum pi_i gamma_i, Sgg = sum gamma^2.
double delta_resid_finite_k(const Eigen::VectorXd& pi, const Eigen::VectorXd& gamma, double r);

/// c implied by a structure's d constant: MA (1 + 2 rho d)^-1, AR
/// (1 + d)^-1, factor/exchangeable 0, shrinking exchangeable d / (d + alpha).
double prop_c_value(StructureKind kind, double rho_or_alpha, double d);

struct PropertyVerdict {
    bool consistent = false;
    bool monotone = false;
};

/// Applies |.| to the curve. Consistent iff |curve(1)| = 1 within 1e-9;
/// monotone iff |curve(r)| > 1 for grid points r > 1 and < 1 for r < 1.
/// The grid must contain points on both sides of 1.
PropertyVerdict property_check(const std::function<double(double)>& curve, const std::vector<double>& r_grid);

struct LimitPrediction {
    ParamId param = ParamId::RX;
    double r = 1.0;
    std::map<std::string, double> inputs;
    double value = 0.0;
    std::string source;
};

/// The analytic limit for `param` under `spec`, using c and d constants
/// evaluated at this K. Declines (nullopt) where no result applies: k_X
/// outside shrinking-exchangeable structures, delta_resid outside
/// exchangeable ones, and the parameters without limit theory.
std::optional<LimitPrediction> predict_limit(ParamId param, const DgpSpec& spec, Index k, double r);

/// The limit curve r -> value for property classification, with the
/// spec's constants evaluated at K.
std::optional<std::function<double(double)>> limit_curve(ParamId param, const DgpSpec& spec, Index k);

}  // namespace covsamp
