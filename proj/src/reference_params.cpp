#include "covsamp/params.hpp"

#include "covsamp/error.hpp"

#include <cmath>

namespace covsamp::reference {

namespace {

constexpr double kEps = 1e-14;

using functional::corr;
using functional::cov;
using functional::r_squared;
using functional::residualize;
using functional::residualize_all;
using functional::unit;
using functional::units;

struct Frame {
    const Eigen::MatrixXd& sigma;
    Index dim;
    Eigen::VectorXd x, y;
    Eigen::MatrixXd w1, w2, w, xw1, xw2, xw, xonly;
    Eigen::VectorXd g1, g2, p1, p2;  // index functionals gamma_1'W_1 etc.
};

Frame make_frame(const Population& pop, const SelectionMask& mask) {
    const auto& sigma = pop.cov().sigma();
    const Index dim = sigma.rows();
    Frame f{sigma, dim, unit(dim, 1), unit(dim, 0), {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    IndexSet obs, unobs, all;
    for (Index i = 0; i < mask.k(); ++i) {
        (mask.observed(i) ? obs : unobs).push_back(i + 2);
        all.push_back(i + 2);
    }
    f.w1 = units(dim, obs);
    f.w2 = units(dim, unobs);
    f.w = units(dim, all);
    auto with_x = [&](const IndexSet& s) {
        IndexSet t{1};
        t.insert(t.end(), s.begin(), s.end());
        return units(dim, t);
    };
    f.xw1 = with_x(obs);
    f.xw2 = with_x(unobs);
    f.xw = with_x(all);
    f.xonly = units(dim, {1});
    f.g1 = Eigen::VectorXd::Zero(dim);
    f.g2 = Eigen::VectorXd::Zero(dim);
    f.p1 = Eigen::VectorXd::Zero(dim);
    f.p2 = Eigen::VectorXd::Zero(dim);
    for (Index i = 0; i < mask.k(); ++i) {
        Eigen::VectorXd& g = mask.observed(i) ? f.g1 : f.g2;
        Eigen::VectorXd& p = mask.observed(i) ? f.p1 : f.p2;
        g(i + 2) = pop.gamma()(i);
        p(i + 2) = pop.pi()(i);
    }
    return f;
}

ParamEval value(ParamId id, double v) {
    if (!std::isfinite(v)) return {id, 0.0, Failure::ZeroDenominator};
    return {id, v, Failure::None};
}

ParamEval failed(ParamId id, Failure f) { return {id, 0.0, f}; }

// (g1 + phi)'W1 with phi = Var(W1)^{-1} Cov(W1, g2'W2), built explicitly.
Eigen::VectorXd adjusted_observed_index(const Frame& f) {
    const Eigen::MatrixXd var_w1 = f.w1.transpose() * f.sigma * f.w1;
    const Eigen::VectorXd cov_w1_g2 = f.w1.transpose() * f.sigma * f.g2;
    const Eigen::VectorXd phi = var_w1.ldlt().solve(cov_w1_g2);
    return f.g1 + f.w1 * phi;
}

}  // namespace

ParamEval evaluate(const Population& pop, const SelectionMask& mask, ParamId id) {
    require(mask.k() == pop.k(), ErrorCode::InvalidArgument, "mask length differs from K");
    require_design(mask.k(), mask.d1());
    const Frame f = make_frame(pop, mask);
    const auto& s = f.sigma;

    switch (id) {
        case ParamId::DeltaOrig: {
            const double v1 = cov(s, f.g1, f.g1), v2 = cov(s, f.g2, f.g2);
            const double c1 = cov(s, f.x, f.g1);
            if (v1 <= kEps || v2 <= kEps || std::abs(c1) <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, (cov(s, f.x, f.g2) / v2) / (c1 / v1));
        }
        case ParamId::DeltaResid: {
            const Eigen::VectorXd num_idx = residualize(s, f.g2, f.w1);
            const Eigen::VectorXd den_idx = adjusted_observed_index(f);
            const double vn = cov(s, num_idx, num_idx), vd = cov(s, den_idx, den_idx);
            const double cd = cov(s, f.x, den_idx);
            if (vn <= kEps || vd <= kEps || std::abs(cd) <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, (cov(s, f.x, num_idx) / vn) / (cd / vd));
        }
        case ParamId::DeltaAcet: {
            const double v1 = cov(s, f.g1, f.g1), v2 = cov(s, f.g2, f.g2);
            if (v1 <= kEps || v2 <= kEps) return failed(id, Failure::DegenerateIndex);
            const Eigen::VectorXd r2 = residualize(s, f.g2, f.g1);
            const Eigen::VectorXd r1 = residualize(s, f.g1, f.g2);
            const double vr1 = cov(s, r1, r1), vr2 = cov(s, r2, r2);
            if (vr1 <= kEps || vr2 <= kEps) return failed(id, Failure::DegenerateIndex);
            const double c1 = cov(s, f.x, r1);
            if (std::abs(c1) <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, (cov(s, f.x, r2) / vr2) / (c1 / vr1));
        }
        case ParamId::RX: {
            const double v1 = cov(s, f.p1, f.p1);
            if (v1 <= kEps) return failed(id, Failure::DegenerateIndex);
            return value(id, std::sqrt(cov(s, f.p2, f.p2) / v1));
        }
        case ParamId::RY: {
            const double v1 = cov(s, f.g1, f.g1);
            if (v1 <= kEps) return failed(id, Failure::DegenerateIndex);
            return value(id, std::sqrt(cov(s, f.g2, f.g2) / v1));
        }
        case ParamId::KX: {
            const double r2_w1 = r_squared(s, f.x, f.w1);
            if (r2_w1 <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, (r_squared(s, f.x, f.w) - r2_w1) / r2_w1);
        }
        case ParamId::KY: {
            const Eigen::MatrixXd z = residualize_all(s, f.w2, f.w1);
            const Eigen::VectorXd y_x = residualize(s, f.y, f.xonly);
            const double num = r_squared(s, y_x, residualize_all(s, z, f.xonly));
            const double den = r_squared(s, y_x, residualize_all(s, f.w1, f.xonly));
            if (den <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, num / den);
        }
        case ParamId::KXAlt: {
            const double r2_w1 = r_squared(s, f.x, f.w1);
            if (r2_w1 <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, r_squared(s, f.x, f.w2) / r2_w1);
        }
        case ParamId::KYAlt: {
            const double r2_xw1 = r_squared(s, f.y, f.xw1);
            if (r2_xw1 <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, r_squared(s, f.y, f.xw2) / r2_xw1);
        }
        case ParamId::KYAlt2: {
            const double r2_xw1 = r_squared(s, f.y, f.xw1);
            const double den = r2_xw1 - r_squared(s, f.y, f.xonly);
            if (den <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, (r_squared(s, f.y, f.xw) - r2_xw1) / den);
        }
        case ParamId::LambdaKrauth: {
            const Eigen::VectorXd num_idx = residualize(s, f.g2, f.w1);
            const Eigen::VectorXd den_idx = adjusted_observed_index(f);
            if (cov(s, num_idx, num_idx) <= kEps || cov(s, den_idx, den_idx) <= kEps)
                return failed(id, Failure::DegenerateIndex);
            const double cd = corr(s, f.x, den_idx);
            if (std::abs(cd) <= kEps) return failed(id, Failure::ZeroDenominator);
            return value(id, corr(s, f.x, num_idx) / cd);
        }
    }
    return failed(id, Failure::ZeroDenominator);
}

}  // namespace covsamp::reference
