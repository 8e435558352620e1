#pragma once

// Covariance structures and coefficient sequences for synthetic
// populations, plus finite-K checks of the regularity assumptions.

#include "covsamp/population.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace covsamp {

struct MA1 { double rho = 0.0; };
struct AR1 { double rho = 0.0; };
/// Var(W) = L L' + sigma_e2 I. L has k rows, or a single row that is
/// broadcast to every covariate.
struct Factor {
    Eigen::MatrixXd loadings;
    double sigma_e2 = 1.0;
};
/// 1 on the diagonal, rho elsewhere.
struct Exchangeable { double rho = 0.0; };
/// 1 on the diagonal, alpha / K elsewhere.
struct ExchangeableShrink { double alpha = 0.0; };

using Structure = std::variant<MA1, AR1, Factor, Exchangeable, ExchangeableShrink>;

enum class StructureKind { MA1, AR1, Factor, Exchangeable, ExchangeableShrink };

StructureKind kind_of(const Structure& s) noexcept;
std::string_view to_string(StructureKind kind) noexcept;

struct Flat { double c = 1.0; };
/// c, -c, c, ... scaled like Flat.
struct Alternating { double c = 1.0; };
/// The sequences of the counterexample for residualized delta: gamma_i =
/// (2/K) 1(i even), pi_i = (2 - C')/K for odd i and C'/K for even i, with
/// C' = C (r + 2) - r and i counted from 1.
struct Corollary1 {
    double target_c = 3.0;
    double r = 1.0;
};
/// Given values, zero-padded (or truncated) to length K.
struct Explicit { std::vector<double> values; };

using CoefficientRule = std::variant<Flat, Alternating, Corollary1, Explicit>;

enum class Equation { Treatment, Outcome };

/// Scaling of Flat/Alternating coefficients: c / sqrt(K) or c / K.
enum class CoefScale { InvSqrtK, InvK };

/// c / K for factor and exchangeable structures (whose Var(W) does not
/// shrink), c / sqrt(K) otherwise.
CoefScale default_scale(const Structure& s) noexcept;

struct DgpSpec {
    Structure structure = MA1{0.3};
    CoefficientRule pi_rule = Flat{1.0};
    CoefficientRule gamma_rule = Flat{1.0};
    double x_resid_var = 1.0;
    double y_resid_var = 1.0;
    double beta_long = 1.0;
};

/// Throws InvalidParameter for out-of-range structure parameters at this k.
void validate_structure(const Structure& s, Index k);

Eigen::MatrixXd build_cov(const Structure& s, Index k);

Eigen::VectorXd build_coefficients(const CoefficientRule& rule, Index k, Equation eq = Equation::Treatment,
                                   CoefScale scale = CoefScale::InvSqrtK);

Eigen::VectorXd build_pi(const DgpSpec& spec, Index k);
Eigen::VectorXd build_gamma(const DgpSpec& spec, Index k);

/// Full (Y, X, W) covariance implied by the spec.
CovarianceModel assemble_covariance(const DgpSpec& spec, Index k);
Population assemble_population(const DgpSpec& spec, Index k);

struct CConstants {
    double c_pi = 0.0;
    double c_gamma = 0.0;
};

/// sum_i Var(p_i W_i) / Var(p'W) at this k, for p = pi and gamma.
CConstants c_constants(const DgpSpec& spec, Index k);
double c_constant(const Eigen::MatrixXd& var_w, const Eigen::VectorXd& p);

struct DConstants {
    double d_pi = 0.0;
    double d_gamma = 0.0;
};

/// Finite-K d constants of the structure (MA, AR, or exchangeable form);
/// nullopt for a general factor structure, which has none.
std::optional<DConstants> d_constants(const DgpSpec& spec, Index k);
double d_constant(StructureKind kind, const Structure& s, const Eigen::VectorXd& p);

struct AssumptionPoint {
    Index k = 0;
    Index d1 = 0;
    double var_pi_index = 0.0;
    double var_gamma_index = 0.0;
    double cov_x_gamma_index = 0.0;
    // Var_S of the observed- and unobserved-side double sums.
    double lln_pi_observed = 0.0;
    double lln_pi_unobserved = 0.0;
    double lln_gamma_observed = 0.0;
    double lln_gamma_unobserved = 0.0;
    double c_pi = 0.0;
    double c_gamma = 0.0;
    std::optional<DConstants> d;
    double outlier_x = 0.0;      // sum_i Cov(X, gamma_i W_i)^2
    double outlier_index = 0.0;  // sum_i Cov(gamma'W, gamma_i W_i)^2
};

struct AssumptionCheck {
    std::string name;
    bool pass = true;
    std::string detail;
};

struct AssumptionReport {
    double r = 1.0;
    std::vector<AssumptionPoint> points;
    std::vector<AssumptionCheck> checks;
    std::vector<std::string> warnings;

    bool all_pass() const;
};

/// Evaluates the assumptions along an increasing K grid with d1 =
/// round(K / (1 + r)).
AssumptionReport validate_assumptions(const DgpSpec& spec, const std::vector<Index>& k_grid, double r = 1.0);

/// Random positive definite (Y, X, W) covariance with k covariates.
CovarianceModel random_covariance(Index k, std::uint64_t seed);

}  // namespace covsamp
