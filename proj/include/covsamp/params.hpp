#pragma once

// The eleven selection ratios as functions of a covariate selection mask.

#include "covsamp/population.hpp"
#include "covsamp/selection.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace covsamp {

enum class ParamId {
    DeltaOrig,
    DeltaResid,
    DeltaAcet,
    RX,
    RY,
    KX,
    KY,
    KXAlt,
    KYAlt,
    KYAlt2,
    LambdaKrauth,
};

inline constexpr std::array<ParamId, 11> all_params{
    ParamId::DeltaOrig, ParamId::DeltaResid, ParamId::DeltaAcet, ParamId::RX,
    ParamId::RY,        ParamId::KX,         ParamId::KY,        ParamId::KXAlt,
    ParamId::KYAlt,     ParamId::KYAlt2,     ParamId::LambdaKrauth,
};

/// The six ratios with asymptotic results; the CLI default.
inline constexpr std::array<ParamId, 6> default_params{
    ParamId::RX, ParamId::RY, ParamId::KX, ParamId::DeltaOrig, ParamId::DeltaAcet, ParamId::DeltaResid,
};

std::string_view to_string(ParamId id) noexcept;
std::optional<ParamId> parse_param_id(std::string_view name);

/// Whether |.| is applied by default when summarizing (the delta family
/// and lambda are reported in absolute value).
bool abs_by_default(ParamId id) noexcept;

enum class Failure { None, ZeroDenominator, DegenerateIndex, SingularSplit };

inline constexpr std::array<Failure, 3> failure_codes{
    Failure::ZeroDenominator, Failure::DegenerateIndex, Failure::SingularSplit};

std::string_view to_string(Failure f) noexcept;

struct ParamEval {
    ParamId id = ParamId::RX;
    double value = 0.0;  // meaningful only when failure == None
    Failure failure = Failure::None;

    bool ok() const noexcept { return failure == Failure::None; }
};

/// Blocks of the population sliced by a mask. Pure slicing, no solves.
struct SplitView {
    IndexSet observed;
    IndexSet unobserved;
    Eigen::VectorXd gamma1, gamma2;
    Eigen::VectorXd pi1, pi2;
    Eigen::MatrixXd var_w1, var_w2;
    Eigen::MatrixXd cov_w1_w2;
    Eigen::VectorXd cov_x_w1, cov_x_w2;
};

SplitView split(const Population& pop, const SelectionMask& mask);

/// Worker-local evaluator. Holds scratch space and evaluates any subset of
/// the parameters for one mask, sharing per-mask work across them:
/// index variances cost O(K min(d1, d2)); the residualized parameters need
/// one Cholesky factorization of size min(d1, d2) (conditioning block of
/// Var(W) or the complementary block of its inverse, whichever is
/// smaller).
class MaskEvaluator {
public:
    explicit MaskEvaluator(const Population& pop);

    std::vector<ParamEval> evaluate(const SelectionMask& mask, std::span<const ParamId> ids);
    void evaluate_into(const SelectionMask& mask, std::span<const ParamId> ids, std::span<ParamEval> out);

private:
    // Variances and covariances of the four indices pi1'W1, pi2'W2,
    // g1'W1, g2'W2.
    struct IndexMoments {
        double v_pi1, v_pi2, c_pi12;
        double v_g1, v_g2, c_g12;
        double c_pi1_g1, c_pi1_g2, c_pi2_g1, c_pi2_g2;
    };
    // Quadratic forms of Var(W_own^{perp W_cond}) with the own-side pi and
    // gamma blocks: a = pi'V pi, b = pi'V g, c = g'V g.
    struct ResidualForms {
        bool ok = false;
        double a = 0.0, b = 0.0, c = 0.0;
    };

    void prepare(const SelectionMask& mask);
    const IndexMoments& index_moments();
    const ResidualForms& residual_forms(bool unobserved_given_observed);
    ParamEval compute(ParamId id);

    const Population* pop_;
    IndexSet observed_;
    IndexSet unobserved_;
    IndexMoments moments_{};
    ResidualForms forms_[2];
    bool have_moments_ = false;
    bool have_forms_[2] = {false, false};
    // Var(W) p for the observed/unobserved parts of pi and gamma.
    Eigen::VectorXd t_pi1_, t_pi2_, t_g1_, t_g2_;
};

std::vector<ParamEval> evaluate(const Population& pop, const SelectionMask& mask, std::span<const ParamId> ids);
ParamEval evaluate_one(const Population& pop, const SelectionMask& mask, ParamId id);

ParamEval delta_orig(const Population& pop, const SelectionMask& mask);
ParamEval delta_resid(const Population& pop, const SelectionMask& mask);
ParamEval delta_acet(const Population& pop, const SelectionMask& mask);
ParamEval r_x(const Population& pop, const SelectionMask& mask);
ParamEval r_y(const Population& pop, const SelectionMask& mask);
ParamEval k_x(const Population& pop, const SelectionMask& mask);
ParamEval k_y(const Population& pop, const SelectionMask& mask);
ParamEval k_x_alt(const Population& pop, const SelectionMask& mask);
ParamEval k_y_alt(const Population& pop, const SelectionMask& mask);
ParamEval k_y_alt2(const Population& pop, const SelectionMask& mask);
/// Vector generalization of the scalar-covariate correlation ratio:
/// corr(X, (g2'W2)^{perp W1}) / corr(X, (g1 + phi)'W1).
ParamEval lambda_krauth(const Population& pop, const SelectionMask& mask);

namespace reference {

/// Each parameter computed literally from its definition with explicit
/// residualized variables over the full (Y, X, W) covariance. Slow; kept
/// as an independent check of MaskEvaluator.
ParamEval evaluate(const Population& pop, const SelectionMask& mask, ParamId id);

}  // namespace reference

}  // namespace covsamp
