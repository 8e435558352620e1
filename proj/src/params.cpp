#include "covsamp/params.hpp"

#include "covsamp/error.hpp"

#include <cmath>

namespace covsamp {

namespace {

// Absolute threshold below which a denominator or index variance is
// treated as zero.
constexpr double kEps = 1e-14;

ParamEval ok(ParamId id, double value) {
    if (!std::isfinite(value)) return {id, 0.0, Failure::ZeroDenominator};
    return {id, value, Failure::None};
}

ParamEval failed(ParamId id, Failure f) { return {id, 0.0, f}; }

}  // namespace

std::string_view to_string(ParamId id) noexcept {
    switch (id) {
        case ParamId::DeltaOrig: return "DeltaOrig";
        case ParamId::DeltaResid: return "DeltaResid";
        case ParamId::DeltaAcet: return "DeltaAcet";
        case ParamId::RX: return "RX";
        case ParamId::RY: return "RY";
        case ParamId::KX: return "KX";
        case ParamId::KY: return "KY";
        case ParamId::KXAlt: return "KXAlt";
        case ParamId::KYAlt: return "KYAlt";
        case ParamId::KYAlt2: return "KYAlt2";
        case ParamId::LambdaKrauth: return "LambdaKrauth";
    }
    return "?";
}

std::optional<ParamId> parse_param_id(std::string_view name) {
    for (ParamId id : all_params)
        if (to_string(id) == name) return id;
    return std::nullopt;
}

bool abs_by_default(ParamId id) noexcept {
    switch (id) {
        case ParamId::DeltaOrig:
        case ParamId::DeltaResid:
        case ParamId::DeltaAcet:
        case ParamId::LambdaKrauth:
            return true;
        default:
            return false;
    }
}

std::string_view to_string(Failure f) noexcept {
    switch (f) {
        case Failure::None: return "None";
        case Failure::ZeroDenominator: return "ZeroDenominator";
        case Failure::DegenerateIndex: return "DegenerateIndex";
        case Failure::SingularSplit: return "SingularSplit";
    }
    return "?";
}

SplitView split(const Population& pop, const SelectionMask& mask) {
    require(mask.k() == pop.k(), ErrorCode::InvalidArgument, "mask length differs from K");
    require_design(mask.k(), mask.d1());
    SplitView view;
    view.observed = mask.observed_indices();
    view.unobserved = mask.unobserved_indices();
    const Eigen::MatrixXd var_w = pop.var_w();
    view.gamma1 = gather(pop.gamma(), view.observed);
    view.gamma2 = gather(pop.gamma(), view.unobserved);
    view.pi1 = gather(pop.pi(), view.observed);
    view.pi2 = gather(pop.pi(), view.unobserved);
    view.var_w1 = gather(var_w, view.observed, view.observed);
    view.var_w2 = gather(var_w, view.unobserved, view.unobserved);
    view.cov_w1_w2 = gather(var_w, view.observed, view.unobserved);
    const Eigen::VectorXd cov_x_w = pop.cov().sigma().row(CovarianceModel::treatment).tail(pop.k()).transpose();
    view.cov_x_w1 = gather(cov_x_w, view.observed);
    view.cov_x_w2 = gather(cov_x_w, view.unobserved);
    return view;
}

MaskEvaluator::MaskEvaluator(const Population& pop) : pop_(&pop) {
    const Index k = pop.k();
    t_pi1_.resize(k);
    t_pi2_.resize(k);
    t_g1_.resize(k);
    t_g2_.resize(k);
}

void MaskEvaluator::prepare(const SelectionMask& mask) {
    require(mask.k() == pop_->k(), ErrorCode::InvalidArgument, "mask length differs from K");
    require_design(mask.k(), mask.d1());
    observed_.clear();
    unobserved_.clear();
    for (Index i = 0; i < mask.k(); ++i) (mask.observed(i) ? observed_ : unobserved_).push_back(i);
    have_moments_ = false;
    have_forms_[0] = have_forms_[1] = false;
}

const MaskEvaluator::IndexMoments& MaskEvaluator::index_moments() {
    if (have_moments_) return moments_;
    const auto& sigma = pop_->cov().sigma();
    const Index dim = sigma.rows();
    const Index k = pop_->k();
    const auto& pi = pop_->pi();
    const auto& gamma = pop_->gamma();

    // Var(W) p_s for the smaller side s by column accumulation; the other
    // side follows from Var(W) pi - Var(W) p_s.
    const bool small_is_observed = observed_.size() <= unobserved_.size();
    const IndexSet& small = small_is_observed ? observed_ : unobserved_;
    Eigen::VectorXd& t_pi_s = small_is_observed ? t_pi1_ : t_pi2_;
    Eigen::VectorXd& t_pi_o = small_is_observed ? t_pi2_ : t_pi1_;
    Eigen::VectorXd& t_g_s = small_is_observed ? t_g1_ : t_g2_;
    Eigen::VectorXd& t_g_o = small_is_observed ? t_g2_ : t_g1_;
    t_pi_s.setZero();
    t_g_s.setZero();
    for (Index j : small) {
        Eigen::Map<const Eigen::VectorXd> column(sigma.data() + (j + 2) * dim + 2, k);
        t_pi_s.noalias() += pi(j) * column;
        t_g_s.noalias() += gamma(j) * column;
    }
    t_pi_o = pop_->var_w_pi() - t_pi_s;
    t_g_o = pop_->var_w_gamma() - t_g_s;

    IndexMoments m{};
    for (Index i : observed_) {
        m.v_pi1 += pi(i) * t_pi1_(i);
        m.v_g1 += gamma(i) * t_g1_(i);
        m.c_pi1_g1 += gamma(i) * t_pi1_(i);
        m.c_pi2_g1 += gamma(i) * t_pi2_(i);
    }
    for (Index i : unobserved_) {
        m.v_pi2 += pi(i) * t_pi2_(i);
        m.v_g2 += gamma(i) * t_g2_(i);
        m.c_pi12 += pi(i) * t_pi1_(i);
        m.c_g12 += gamma(i) * t_g1_(i);
        m.c_pi1_g2 += gamma(i) * t_pi1_(i);
        m.c_pi2_g2 += gamma(i) * t_pi2_(i);
    }
    moments_ = m;
    have_moments_ = true;
    return moments_;
}

const MaskEvaluator::ResidualForms& MaskEvaluator::residual_forms(bool unobserved_given_observed) {
    const int slot = unobserved_given_observed ? 0 : 1;
    if (have_forms_[slot]) return forms_[slot];
    have_forms_[slot] = true;
    ResidualForms& f = forms_[slot];
    f = ResidualForms{};

    const IndexSet& own = unobserved_given_observed ? unobserved_ : observed_;
    const IndexSet& cond = unobserved_given_observed ? observed_ : unobserved_;
    const auto& pi = pop_->pi();
    const auto& gamma = pop_->gamma();

    if (cond.size() <= own.size()) {
        // Schur complement through the conditioning block of Var(W):
        // u'Vv = u'Var(W_own)v - (Cov(W_cond,W_own)u)' Var(W_cond)^{-1} (...)
        const IndexMoments& m = index_moments();
        const auto& sigma = pop_->cov().sigma();
        const Index n = static_cast<Index>(cond.size());
        Eigen::MatrixXd block(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index i = j; i < n; ++i) block(i, j) = sigma(cond[i] + 2, cond[j] + 2);
        Eigen::LLT<Eigen::MatrixXd> llt(block);
        if (llt.info() != Eigen::Success) return f;
        const Eigen::VectorXd& t_pi_own = unobserved_given_observed ? t_pi2_ : t_pi1_;
        const Eigen::VectorXd& t_g_own = unobserved_given_observed ? t_g2_ : t_g1_;
        Eigen::VectorXd y_pi = gather(t_pi_own, cond);
        Eigen::VectorXd y_g = gather(t_g_own, cond);
        llt.matrixL().solveInPlace(y_pi);
        llt.matrixL().solveInPlace(y_g);
        const double v_pi = unobserved_given_observed ? m.v_pi2 : m.v_pi1;
        const double v_g = unobserved_given_observed ? m.v_g2 : m.v_g1;
        const double c_pg = unobserved_given_observed ? m.c_pi2_g2 : m.c_pi1_g1;
        f.a = std::max(0.0, v_pi - y_pi.squaredNorm());
        f.b = c_pg - y_pi.dot(y_g);
        f.c = std::max(0.0, v_g - y_g.squaredNorm());
    } else {
        // Var(W_own^{perp W_cond}) = ((Var(W)^{-1})_{own,own})^{-1}.
        const auto& prec = pop_->precision();
        const Index n = static_cast<Index>(own.size());
        Eigen::MatrixXd block(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index i = j; i < n; ++i) block(i, j) = prec(own[i], own[j]);
        Eigen::LLT<Eigen::MatrixXd> llt(block);
        if (llt.info() != Eigen::Success) return f;
        Eigen::VectorXd z_pi = gather(pi, own);
        Eigen::VectorXd z_g = gather(gamma, own);
        llt.matrixL().solveInPlace(z_pi);
        llt.matrixL().solveInPlace(z_g);
        f.a = z_pi.squaredNorm();
        f.b = z_pi.dot(z_g);
        f.c = z_g.squaredNorm();
    }
    f.ok = true;
    return f;
}

ParamEval MaskEvaluator::compute(ParamId id) {
    const Population& p = *pop_;
    const double var_x = p.var_x();
    const double var_y = p.var_y();
    const double sx2 = p.x_resid_var();
    const double su2 = p.y_resid_var();
    const double pp = p.var_pi_index();
    const double gg = p.var_gamma_index();
    const double pg = p.cov_pi_gamma_index();

    // Residual variance of Y after projecting on X and the conditioning
    // side, given the own-side forms.
    auto var_y_given_x_and = [&](const ResidualForms& f) { return f.c - f.b * f.b / (f.a + sx2) + su2; };

    switch (id) {
        case ParamId::DeltaOrig: {
            const auto& m = index_moments();
            const double cov_x_g1 = m.c_pi1_g1 + m.c_pi2_g1;
            const double cov_x_g2 = m.c_pi1_g2 + m.c_pi2_g2;
            if (m.v_g1 <= kEps || m.v_g2 <= kEps || std::abs(cov_x_g1) <= kEps)
                return failed(id, Failure::ZeroDenominator);
            return ok(id, (cov_x_g2 / m.v_g2) / (cov_x_g1 / m.v_g1));
        }
        case ParamId::DeltaAcet: {
            const auto& m = index_moments();
            if (m.v_g1 <= kEps || m.v_g2 <= kEps) return failed(id, Failure::DegenerateIndex);
            const double cov_x_g1 = m.c_pi1_g1 + m.c_pi2_g1;
            const double cov_x_g2 = m.c_pi1_g2 + m.c_pi2_g2;
            const double res2 = m.v_g2 - m.c_g12 * m.c_g12 / m.v_g1;
            const double res1 = m.v_g1 - m.c_g12 * m.c_g12 / m.v_g2;
            if (res1 <= kEps || res2 <= kEps) return failed(id, Failure::DegenerateIndex);
            const double num = (cov_x_g2 - m.c_g12 / m.v_g1 * cov_x_g1) / res2;
            const double den_cov = cov_x_g1 - m.c_g12 / m.v_g2 * cov_x_g2;
            if (std::abs(den_cov) <= kEps) return failed(id, Failure::ZeroDenominator);
            return ok(id, num / (den_cov / res1));
        }
        case ParamId::RX: {
            const auto& m = index_moments();
            if (m.v_pi1 <= kEps) return failed(id, Failure::DegenerateIndex);
            return ok(id, std::sqrt(m.v_pi2 / m.v_pi1));
        }
        case ParamId::RY: {
            const auto& m = index_moments();
            if (m.v_g1 <= kEps) return failed(id, Failure::DegenerateIndex);
            return ok(id, std::sqrt(m.v_g2 / m.v_g1));
        }
        case ParamId::DeltaResid: {
            const auto& f = residual_forms(true);
            if (!f.ok) return failed(id, Failure::SingularSplit);
            const double den_var = gg - f.c;
            const double den_cov = pg - f.b;
            if (f.c <= kEps || den_var <= kEps || std::abs(den_cov) <= kEps)
                return failed(id, Failure::ZeroDenominator);
            return ok(id, (f.b / f.c) / (den_cov / den_var));
        }
        case ParamId::LambdaKrauth: {
            const auto& f = residual_forms(true);
            if (!f.ok) return failed(id, Failure::SingularSplit);
            const double den_var = gg - f.c;
            if (f.c <= kEps || den_var <= kEps) return failed(id, Failure::DegenerateIndex);
            const double den_cov = pg - f.b;
            if (std::abs(den_cov) <= kEps) return failed(id, Failure::ZeroDenominator);
            // The sqrt(Var X) factors cancel.
            return ok(id, (f.b / std::sqrt(f.c)) / (den_cov / std::sqrt(den_var)));
        }
        case ParamId::KX: {
            const auto& f = residual_forms(true);
            if (!f.ok) return failed(id, Failure::SingularSplit);
            const double r2_w1 = (pp - f.a) / var_x;
            if (r2_w1 <= kEps) return failed(id, Failure::ZeroDenominator);
            return ok(id, (f.a / var_x) / r2_w1);
        }
        case ParamId::KY: {
            const auto& f = residual_forms(true);
            if (!f.ok) return failed(id, Failure::SingularSplit);
            const double p_yx = p.cov_yx();
            const double beta = p.beta_long();
            const double resid_y_x = var_y - p_yx * p_yx / var_x;
            if (resid_y_x <= kEps) return failed(id, Failure::ZeroDenominator);
            const double den = 1.0 - var_y_given_x_and(f) / resid_y_x;
            // Projection of Y on (X, Z) with Z = W2^{perp W1}:
            // Cov(Z,X) = V pi2, Cov(Z,Y) = V (beta pi2 + g2).
            const double hvh = beta * beta * f.a + 2.0 * beta * f.b + f.c;
            const double pvh = beta * f.a + f.b;
            const double schur = var_x - f.a;
            const double explained = hvh + (p_yx - pvh) * (p_yx - pvh) / schur;
            const double num = 1.0 - (var_y - explained) / resid_y_x;
            if (den <= kEps) return failed(id, Failure::ZeroDenominator);
            return ok(id, num / den);
        }
        case ParamId::KXAlt: {
            const auto& f1 = residual_forms(true);
            const auto& f2 = residual_forms(false);
            if (!f1.ok || !f2.ok) return failed(id, Failure::SingularSplit);
            const double r2_w1 = (pp - f1.a) / var_x;
            const double r2_w2 = (pp - f2.a) / var_x;
            if (r2_w1 <= kEps) return failed(id, Failure::ZeroDenominator);
            return ok(id, r2_w2 / r2_w1);
        }
        case ParamId::KYAlt: {
            const auto& f1 = residual_forms(true);
            const auto& f2 = residual_forms(false);
            if (!f1.ok || !f2.ok) return failed(id, Failure::SingularSplit);
            const double r2_xw1 = 1.0 - var_y_given_x_and(f1) / var_y;
            const double r2_xw2 = 1.0 - var_y_given_x_and(f2) / var_y;
            if (r2_xw1 <= kEps) return failed(id, Failure::ZeroDenominator);
            return ok(id, r2_xw2 / r2_xw1);
        }
        case ParamId::KYAlt2: {
            const auto& f = residual_forms(true);
            if (!f.ok) return failed(id, Failure::SingularSplit);
            const double p_yx = p.cov_yx();
            const double resid_y_x = var_y - p_yx * p_yx / var_x;
            const double resid_y_xw1 = var_y_given_x_and(f);
            const double num = (resid_y_xw1 - su2) / var_y;
            const double den = (resid_y_x - resid_y_xw1) / var_y;
            if (den <= kEps) return failed(id, Failure::ZeroDenominator);
            return ok(id, num / den);
        }
    }
    return failed(id, Failure::ZeroDenominator);
}

void MaskEvaluator::evaluate_into(const SelectionMask& mask, std::span<const ParamId> ids, std::span<ParamEval> out) {
    require(out.size() >= ids.size(), ErrorCode::InvalidArgument, "output span too small");
    prepare(mask);
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = compute(ids[i]);
}

std::vector<ParamEval> MaskEvaluator::evaluate(const SelectionMask& mask, std::span<const ParamId> ids) {
    std::vector<ParamEval> out(ids.size());
    evaluate_into(mask, ids, out);
    return out;
}

std::vector<ParamEval> evaluate(const Population& pop, const SelectionMask& mask, std::span<const ParamId> ids) {
    MaskEvaluator ev(pop);
    return ev.evaluate(mask, ids);
}

ParamEval evaluate_one(const Population& pop, const SelectionMask& mask, ParamId id) {
    const ParamId ids[] = {id};
    return evaluate(pop, mask, ids).front();
}

ParamEval delta_orig(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::DeltaOrig); }
ParamEval delta_resid(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::DeltaResid); }
ParamEval delta_acet(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::DeltaAcet); }
ParamEval r_x(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::RX); }
ParamEval r_y(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::RY); }
ParamEval k_x(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::KX); }
ParamEval k_y(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::KY); }
ParamEval k_x_alt(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::KXAlt); }
ParamEval k_y_alt(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::KYAlt); }
ParamEval k_y_alt2(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::KYAlt2); }
ParamEval lambda_krauth(const Population& pop, const SelectionMask& mask) { return evaluate_one(pop, mask, ParamId::LambdaKrauth); }

}  // namespace covsamp
