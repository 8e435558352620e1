#include "covsamp/limits.hpp"

#include "covsamp/error.hpp"

#include <cmath>

namespace covsamp {

namespace {

void require_r(double r) { require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument, "r must be positive"); }

double r_form(double r, double c) {
    require_r(r);
    require(c >= 0.0, ErrorCode::InvalidArgument, "c must be nonnegative");
    return std::sqrt(r * (r + c) / (1.0 + r * c));
}

}  // namespace

double limit_r_x(double r, double c_pi) { return r_form(r, c_pi); }
double limit_r_y(double r, double c_gamma) { return r_form(r, c_gamma); }

double limit_delta_orig(double r, double c_gamma) {
    require_r(r);
    require(c_gamma >= 0.0, ErrorCode::InvalidArgument, "c must be nonnegative");
    const double den = r + c_gamma;
    require(den != 0.0, ErrorCode::ZeroDenominator, "r + c_gamma is zero");
    return (1.0 + r * c_gamma) / den;
}

double limit_delta_acet() noexcept { return 1.0; }

double limit_k_x(double r, double alpha, double d_ex) {
    require_r(r);
    require(alpha > -1.0, ErrorCode::InvalidArgument, "alpha must exceed -1");
    require(d_ex >= 1.0 - 1e-12, ErrorCode::InvalidArgument, "d_EX is at least 1");
    const double num = alpha * r * r + d_ex * r * (1.0 + r + alpha);
    const double den = alpha * ((1.0 + r) * (1.0 + alpha) + r) + d_ex * (1.0 + r + alpha);
    return num / den;
}

double delta_resid_finite_k(const Eigen::VectorXd& pi, const Eigen::VectorXd& gamma, double r) {
    require_r(r);
    require(pi.size() == gamma.size(), ErrorCode::InvalidArgument, "pi and gamma lengths differ");
    const double sp = pi.sum(), sg = gamma.sum();
    require(std::abs(sp) > 1e-8 && std::abs(sg) > 1e-8, ErrorCode::ZeroDenominator,
            "coefficient sums must be away from zero");
    const double kk = static_cast<double>(pi.size());
    const double lead = r * sp * sg * sg;
    const double num = lead + kk * pi.dot(gamma) * sg;
    const double den = lead + kk * sp * gamma.squaredNorm();
    require(den != 0.0, ErrorCode::ZeroDenominator, "delta_resid limit denominator is zero");
    return num / den;
}

double prop_c_value(StructureKind kind, double rho_or_alpha, double d) {
    switch (kind) {
        case StructureKind::MA1: {
            require(std::abs(rho_or_alpha) < 0.5, ErrorCode::InvalidParameter, "MA1 requires |rho| < 1/2");
            const double den = 1.0 + 2.0 * rho_or_alpha * d;
            require(den > 0.0, ErrorCode::InvalidParameter, "1 + 2 rho d must be positive");
            return 1.0 / den;
        }
        case StructureKind::AR1: {
            require(std::abs(rho_or_alpha) < 1.0, ErrorCode::InvalidParameter, "AR1 requires |rho| < 1");
            if (std::isinf(d) && d > 0) return 0.0;
            require(d > -1.0, ErrorCode::InvalidParameter, "d_AR must exceed -1");
            return 1.0 / (1.0 + d);
        }
        case StructureKind::Factor:
        case StructureKind::Exchangeable:
            return 0.0;
        case StructureKind::ExchangeableShrink: {
            require(rho_or_alpha > -1.0, ErrorCode::InvalidParameter, "alpha must exceed -1");
            require(d + rho_or_alpha > 0.0, ErrorCode::InvalidParameter, "d + alpha must be positive");
            return d / (d + rho_or_alpha);
        }
    }
    fail(ErrorCode::InvalidParameter, "unknown structure");
}

PropertyVerdict property_check(const std::function<double(double)>& curve, const std::vector<double>& r_grid) {
    bool below = false, above = false;
    for (double r : r_grid) {
        require_r(r);
        below = below || r < 1.0;
        above = above || r > 1.0;
    }
    require(below && above, ErrorCode::InsufficientGrid, "r grid must contain points below and above 1");
    PropertyVerdict v;
    v.consistent = std::abs(std::abs(curve(1.0)) - 1.0) <= 1e-9;
    v.monotone = true;
    for (double r : r_grid) {
        const double a = std::abs(curve(r));
        if ((r > 1.0 && !(a > 1.0)) || (r < 1.0 && !(a < 1.0))) v.monotone = false;
    }
    return v;
}

namespace {

struct Constants {
    double c_pi = 0.0, c_gamma = 0.0;
    double d_pi = 0.0, d_gamma = 0.0;
    bool have_d = false;
};

double structure_parameter(const Structure& s) {
    switch (kind_of(s)) {
        case StructureKind::MA1: return std::get<MA1>(s).rho;
        case StructureKind::AR1: return std::get<AR1>(s).rho;
        case StructureKind::Exchangeable: return std::get<Exchangeable>(s).rho;
        case StructureKind::ExchangeableShrink: return std::get<ExchangeableShrink>(s).alpha;
        case StructureKind::Factor: return 0.0;
    }
    return 0.0;
}

Constants constants(const DgpSpec& spec, Index k) {
    Constants c;
    const auto kind = kind_of(spec.structure);
    const double param = structure_parameter(spec.structure);
    if (kind == StructureKind::Factor || kind == StructureKind::Exchangeable) {
        c.c_pi = c.c_gamma = prop_c_value(kind, param, 0.0);
        if (kind == StructureKind::Factor) return c;
    }
    // A zero coefficient vector has no d constant; its c is then unused.
    auto one = [&](const Eigen::VectorXd& p, double& d, double& cv) {
        try {
            d = d_constant(kind, spec.structure, p);
            if (kind != StructureKind::Exchangeable) cv = prop_c_value(kind, param, d);
            return true;
        } catch (const Error&) {
            return false;
        }
    };
    const bool a = one(build_pi(spec, k), c.d_pi, c.c_pi);
    const bool b = one(build_gamma(spec, k), c.d_gamma, c.c_gamma);
    c.have_d = a && b;
    return c;
}

}  // namespace

std::optional<std::function<double(double)>> limit_curve(ParamId param, const DgpSpec& spec, Index k) {
    const auto kind = kind_of(spec.structure);
    const Constants c = constants(spec, k);
    switch (param) {
        case ParamId::RX: return [cp = c.c_pi](double r) { return limit_r_x(r, cp); };
        case ParamId::RY: return [cg = c.c_gamma](double r) { return limit_r_y(r, cg); };
        case ParamId::DeltaOrig: return [cg = c.c_gamma](double r) { return limit_delta_orig(r, cg); };
        case ParamId::DeltaAcet: return [](double) { return limit_delta_acet(); };
        case ParamId::KX:
            if (kind != StructureKind::ExchangeableShrink) return std::nullopt;
            return [a = structure_parameter(spec.structure), d = c.d_pi](double r) { return limit_k_x(r, a, d); };
        case ParamId::DeltaResid: {
            if (kind != StructureKind::Exchangeable) return std::nullopt;
            Eigen::VectorXd pi = build_pi(spec, k), gamma = build_gamma(spec, k);
            return [pi, gamma](double r) { return delta_resid_finite_k(pi, gamma, r); };
        }
        default:
            return std::nullopt;
    }
}

std::optional<LimitPrediction> predict_limit(ParamId param, const DgpSpec& spec, Index k, double r) {
    require_r(r);
    const auto curve = limit_curve(param, spec, k);
    if (!curve) return std::nullopt;
    const Constants c = constants(spec, k);
    LimitPrediction p;
    p.param = param;
    p.r = r;
    p.value = (*curve)(r);
    p.inputs["K"] = static_cast<double>(k);
    switch (param) {
        case ParamId::RX:
            p.inputs["c_pi"] = c.c_pi;
            p.source = "r_X limit";
            break;
        case ParamId::RY:
            p.inputs["c_gamma"] = c.c_gamma;
            p.source = "r_Y limit";
            break;
        case ParamId::DeltaOrig:
            p.inputs["c_gamma"] = c.c_gamma;
            p.source = "delta_orig limit";
            break;
        case ParamId::DeltaAcet:
            p.inputs["c_gamma"] = c.c_gamma;
            p.source = "delta_ACET limit (requires c_gamma > 0)";
            break;
        case ParamId::KX:
            p.inputs["alpha"] = structure_parameter(spec.structure);
            p.inputs["d_ex"] = c.d_pi;
            p.source = "k_X limit under shrinking exchangeable covariates";
            break;
        case ParamId::DeltaResid:
            p.source = "delta_resid leading-order value at finite K";
            break;
        default:
            break;
    }
    if (c.have_d) {
        p.inputs["d_pi"] = c.d_pi;
        p.inputs["d_gamma"] = c.d_gamma;
    }
    return p;
}

}  // namespace covsamp
