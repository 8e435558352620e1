#include "covsamp/dgp.hpp"

#include "covsamp/error.hpp"
#include "covsamp/rng.hpp"
#include "covsamp/selection.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace covsamp {

namespace {

template <class... F>
struct overloaded : F... {
    using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

StructureKind kind_of(const Structure& s) noexcept {
    return static_cast<StructureKind>(s.index());
}

std::string_view to_string(StructureKind kind) noexcept {
    switch (kind) {
        case StructureKind::MA1: return "MA1";
        case StructureKind::AR1: return "AR1";
        case StructureKind::Factor: return "Factor";
        case StructureKind::Exchangeable: return "Exchangeable";
        case StructureKind::ExchangeableShrink: return "ExchangeableShrink";
    }
    return "?";
}

CoefScale default_scale(const Structure& s) noexcept {
    const auto kind = kind_of(s);
    return kind == StructureKind::Factor || kind == StructureKind::Exchangeable ? CoefScale::InvK
                                                                                : CoefScale::InvSqrtK;
}

void validate_structure(const Structure& s, Index k) {
    require(k >= 1, ErrorCode::InvalidParameter, "k must be positive");
    std::visit(overloaded{
                   [](const MA1& m) {
                       require(std::abs(m.rho) < 0.5, ErrorCode::InvalidParameter, "MA1 requires |rho| < 1/2");
                   },
                   [](const AR1& a) {
                       require(std::abs(a.rho) < 1.0, ErrorCode::InvalidParameter, "AR1 requires |rho| < 1");
                   },
                   [k](const Factor& f) {
                       require(f.sigma_e2 > 0.0, ErrorCode::InvalidParameter, "factor sigma_e2 must be positive");
                       require(f.loadings.cols() >= 1, ErrorCode::InvalidParameter, "factor needs at least one loading column");
                       require(f.loadings.rows() == k || f.loadings.rows() == 1, ErrorCode::InvalidParameter,
                               "factor loadings need k rows or a single broadcast row");
                   },
                   [](const Exchangeable& e) {
                       require(e.rho > 0.0 && e.rho < 1.0, ErrorCode::InvalidParameter,
                               "Exchangeable requires rho in (0, 1)");
                   },
                   [k](const ExchangeableShrink& e) {
                       require(e.alpha > -1.0 && e.alpha < static_cast<double>(k), ErrorCode::InvalidParameter,
                               "ExchangeableShrink requires alpha in (-1, K)");
                   },
               },
               s);
}

Eigen::MatrixXd build_cov(const Structure& s, Index k) {
    validate_structure(s, k);
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(k, k);
    std::visit(overloaded{
                   [&](const MA1& m) {
                       for (Index i = 0; i + 1 < k; ++i) out(i, i + 1) = out(i + 1, i) = m.rho;
                   },
                   [&](const AR1& a) {
                       for (Index i = 0; i < k; ++i)
                           for (Index j = 0; j < k; ++j)
                               out(i, j) = std::pow(a.rho, static_cast<double>(std::abs(i - j)));
                   },
                   [&](const Factor& f) {
                       const Eigen::MatrixXd l = f.loadings.rows() == k
                                                     ? f.loadings
                                                     : Eigen::MatrixXd(f.loadings.replicate(k, 1));
                       out = l * l.transpose();
                       out.diagonal().array() += f.sigma_e2;
                   },
                   [&](const Exchangeable& e) {
                       out.setConstant(e.rho);
                       out.diagonal().setOnes();
                   },
                   [&](const ExchangeableShrink& e) {
                       out.setConstant(e.alpha / static_cast<double>(k));
                       out.diagonal().setOnes();
                   },
               },
               s);
    return out;
}

Eigen::VectorXd build_coefficients(const CoefficientRule& rule, Index k, Equation eq, CoefScale scale) {
    require(k >= 2, ErrorCode::InvalidParameter, "coefficient rules need k >= 2");
    const double kk = static_cast<double>(k);
    const double unit = scale == CoefScale::InvK ? 1.0 / kk : 1.0 / std::sqrt(kk);
    Eigen::VectorXd out(k);
    std::visit(overloaded{
                   [&](const Flat& f) { out.setConstant(f.c * unit); },
                   [&](const Alternating& a) {
                       for (Index i = 0; i < k; ++i) out(i) = (i % 2 == 0 ? a.c : -a.c) * unit;
                   },
                   [&](const Corollary1& c) {
                       const double c_prime = c.target_c * (c.r + 2.0) - c.r;
                       for (Index i = 0; i < k; ++i) {
                           const bool even = (i + 1) % 2 == 0;
                           if (eq == Equation::Outcome)
                               out(i) = even ? 2.0 / kk : 0.0;
                           else
                               out(i) = (even ? c_prime : 2.0 - c_prime) / kk;
                       }
                   },
                   [&](const Explicit& e) {
                       out.setZero();
                       for (Index i = 0; i < k && i < static_cast<Index>(e.values.size()); ++i)
                           out(i) = e.values[static_cast<std::size_t>(i)];
                   },
               },
               rule);
    return out;
}

Eigen::VectorXd build_pi(const DgpSpec& spec, Index k) {
    return build_coefficients(spec.pi_rule, k, Equation::Treatment, default_scale(spec.structure));
}

Eigen::VectorXd build_gamma(const DgpSpec& spec, Index k) {
    return build_coefficients(spec.gamma_rule, k, Equation::Outcome, default_scale(spec.structure));
}

CovarianceModel assemble_covariance(const DgpSpec& spec, Index k) {
    require(spec.x_resid_var > 0.0 && spec.y_resid_var > 0.0, ErrorCode::InvalidParameter,
            "residual variances must be positive");
    const Eigen::MatrixXd var_w = build_cov(spec.structure, k);
    const Eigen::VectorXd pi = build_pi(spec, k);
    const Eigen::VectorXd gamma = build_gamma(spec, k);
    const double beta = spec.beta_long;

    const Eigen::VectorXd sp = var_w * pi;
    const Eigen::VectorXd sg = var_w * gamma;
    const double var_x = pi.dot(sp) + spec.x_resid_var;
    const double g_sp = gamma.dot(sp);

    Eigen::MatrixXd sigma(k + 2, k + 2);
    sigma.bottomRightCorner(k, k) = var_w;
    sigma(1, 1) = var_x;
    sigma.block(1, 2, 1, k) = sp.transpose();
    sigma.block(2, 1, k, 1) = sp;
    const Eigen::VectorXd cov_yw = beta * sp + sg;
    sigma.block(0, 2, 1, k) = cov_yw.transpose();
    sigma.block(2, 0, k, 1) = cov_yw;
    sigma(0, 1) = sigma(1, 0) = beta * var_x + g_sp;
    sigma(0, 0) = beta * beta * var_x + 2.0 * beta * g_sp + gamma.dot(sg) + spec.y_resid_var;
    return CovarianceModel(default_labels(k), std::move(sigma));
}

Population assemble_population(const DgpSpec& spec, Index k) { return Population(assemble_covariance(spec, k)); }

double c_constant(const Eigen::MatrixXd& var_w, const Eigen::VectorXd& p) {
    const double total = p.dot(var_w * p);
    require(total > 1e-14, ErrorCode::ZeroDenominator, "index variance is zero");
    return (p.array().square() * var_w.diagonal().array()).sum() / total;
}

CConstants c_constants(const DgpSpec& spec, Index k) {
    const Eigen::MatrixXd var_w = build_cov(spec.structure, k);
    return {c_constant(var_w, build_pi(spec, k)), c_constant(var_w, build_gamma(spec, k))};
}

double d_constant(StructureKind kind, const Structure& s, const Eigen::VectorXd& p) {
    const double sum_sq = p.squaredNorm();
    switch (kind) {
        case StructureKind::MA1: {
            require(sum_sq > 1e-14, ErrorCode::ZeroDenominator, "coefficients are zero");
            const Index k = p.size();
            return p.head(k - 1).dot(p.tail(k - 1)) / sum_sq;
        }
        case StructureKind::AR1: {
            require(sum_sq > 1e-14, ErrorCode::ZeroDenominator, "coefficients are zero");
            const double rho = std::get<AR1>(s).rho;
            // sum_{i != j} p_i p_j rho^|i-j| via the running sum
            // s_i = sum_{j<i} p_j rho^{i-j}.
            double run = 0.0, total = 0.0;
            for (Index i = 1; i < p.size(); ++i) {
                run = rho * (run + p(i - 1));
                total += p(i) * run;
            }
            return 2.0 * total / sum_sq;
        }
        case StructureKind::Exchangeable:
        case StructureKind::ExchangeableShrink: {
            const double sum = p.sum();
            require(sum * sum > 1e-14, ErrorCode::ZeroDenominator, "coefficients sum to zero");
            return static_cast<double>(p.size()) * sum_sq / (sum * sum);
        }
        case StructureKind::Factor:
            break;
    }
    fail(ErrorCode::InvalidArgument, "factor structures have no d constant");
}

std::optional<DConstants> d_constants(const DgpSpec& spec, Index k) {
    const auto kind = kind_of(spec.structure);
    if (kind == StructureKind::Factor) return std::nullopt;
    return DConstants{d_constant(kind, spec.structure, build_pi(spec, k)),
                      d_constant(kind, spec.structure, build_gamma(spec, k))};
}

bool AssumptionReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

Eigen::MatrixXd pair_covariances(const Eigen::MatrixXd& var_w, const Eigen::VectorXd& p) {
    return p.asDiagonal() * var_w * p.asDiagonal();
}

// Nonincreasing along the grid and strictly smaller at the end, or
// numerically zero throughout.
bool shrinking(const std::vector<double>& v) {
    if (v.size() < 2) return true;
    bool all_zero = true;
    for (double x : v) all_zero = all_zero && std::abs(x) <= 1e-18;
    if (all_zero) return true;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1] * (1.0 + 1e-9) + 1e-18) return false;
    return v.back() < v.front() * (1.0 - 1e-9);
}

std::string trajectory(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out;
}

}  // namespace

AssumptionReport validate_assumptions(const DgpSpec& spec, const std::vector<Index>& k_grid, double r) {
    require(!k_grid.empty(), ErrorCode::InvalidArgument, "empty K grid");
    require(r > 0.0, ErrorCode::InvalidArgument, "r must be positive");
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        require(k_grid[i] > k_grid[i - 1], ErrorCode::InvalidArgument, "K grid must be increasing");

    AssumptionReport report;
    report.r = r;
    const auto kind = kind_of(spec.structure);
    for (Index k : k_grid) {
        AssumptionPoint pt;
        pt.k = k;
        pt.d1 = std::clamp<Index>(static_cast<Index>(std::llround(static_cast<double>(k) / (1.0 + r))), 1, k - 1);
        const Index d2 = k - pt.d1;
        const Eigen::MatrixXd var_w = build_cov(spec.structure, k);
        const Eigen::VectorXd pi = build_pi(spec, k);
        const Eigen::VectorXd gamma = build_gamma(spec, k);
        const Eigen::VectorXd sp = var_w * pi;
        const Eigen::VectorXd sg = var_w * gamma;
        pt.var_pi_index = pi.dot(sp);
        pt.var_gamma_index = gamma.dot(sg);
        pt.cov_x_gamma_index = gamma.dot(sp);

        const Eigen::MatrixXd api = pair_covariances(var_w, pi);
        const Eigen::MatrixXd agamma = pair_covariances(var_w, gamma);
        pt.lln_pi_observed = quadratic_form_variance(api, pt.d1);
        pt.lln_pi_unobserved = quadratic_form_variance(api, d2);
        pt.lln_gamma_observed = quadratic_form_variance(agamma, pt.d1);
        pt.lln_gamma_unobserved = quadratic_form_variance(agamma, d2);

        pt.c_pi = pt.var_pi_index > 1e-14 ? c_constant(var_w, pi) : 0.0;
        pt.c_gamma = pt.var_gamma_index > 1e-14 ? c_constant(var_w, gamma) : 0.0;
        if (kind != StructureKind::Factor) {
            try {
                pt.d = DConstants{d_constant(kind, spec.structure, pi), d_constant(kind, spec.structure, gamma)};
            } catch (const Error&) {
                pt.d.reset();
            }
        }
        pt.outlier_x = (gamma.array() * sp.array()).square().sum();
        pt.outlier_index = (gamma.array() * sg.array()).square().sum();
        if (std::abs(pt.cov_x_gamma_index) < 0.05)
            report.warnings.push_back("K=" + std::to_string(k) + ": |Cov(X, gamma'W)| = " +
                                      fmt(std::abs(pt.cov_x_gamma_index)) + " < 0.05");
        report.points.push_back(std::move(pt));
    }

    auto column = [&](auto member) {
        std::vector<double> v;
        for (const auto& p : report.points) v.push_back(p.*member);
        return v;
    };
    constexpr double bound = 1e3;
    auto bounded = [&](const std::vector<double>& v) {
        for (double x : v)
            if (!(x > 1.0 / bound && x < bound)) return false;
        return true;
    };
    auto converging = [](const std::vector<double>& v) {
        for (std::size_t i = 2; i < v.size(); ++i)
            if (std::abs(v[i] - v[i - 1]) > std::abs(v[i - 1] - v[i - 2]) + 1e-12) return false;
        return true;
    };
    auto add = [&](std::string name, bool pass, const std::vector<double>& v) {
        report.checks.push_back({std::move(name), pass, trajectory(v)});
    };

    const auto vpi = column(&AssumptionPoint::var_pi_index);
    const auto vg = column(&AssumptionPoint::var_gamma_index);
    add("Var(pi'W) bounded", bounded(vpi), vpi);
    add("Var(gamma'W) bounded", bounded(vg), vg);
    for (auto [name, member] : {std::pair{"LLN pi observed", &AssumptionPoint::lln_pi_observed},
                                std::pair{"LLN pi unobserved", &AssumptionPoint::lln_pi_unobserved},
                                std::pair{"LLN gamma observed", &AssumptionPoint::lln_gamma_observed},
                                std::pair{"LLN gamma unobserved", &AssumptionPoint::lln_gamma_unobserved}}) {
        const auto v = column(member);
        add(name, shrinking(v), v);
    }
    const auto cpi = column(&AssumptionPoint::c_pi);
    const auto cg = column(&AssumptionPoint::c_gamma);
    add("c_pi converging", converging(cpi), cpi);
    add("c_gamma converging", converging(cg), cg);
    const auto ox = column(&AssumptionPoint::outlier_x);
    const auto oi = column(&AssumptionPoint::outlier_index);
    add("sum Cov(X, gamma_i W_i)^2 shrinking", shrinking(ox), ox);
    add("sum Cov(gamma'W, gamma_i W_i)^2 shrinking", shrinking(oi), oi);
    return report;
}

CovarianceModel random_covariance(Index k, std::uint64_t seed) {
    require(k >= 1, ErrorCode::InvalidArgument, "k must be positive");
    const Index dim = k + 2;
    const Index width = dim + 5;
    CounterRng rng(seed, 0);
    Eigen::MatrixXd b(dim, width);
    for (Index i = 0; i < dim; ++i)
        for (Index j = 0; j < width; ++j) {
            // Box-Muller; 1 - u keeps the log argument positive.
            const double u = 1.0 - rng.uniform01();
            const double v = rng.uniform01();
            b(i, j) = std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
        }
    Eigen::MatrixXd sigma = b * b.transpose() / static_cast<double>(width);
    sigma.diagonal().array() += 0.2;
    return CovarianceModel(default_labels(k), std::move(sigma));
}

}  // namespace covsamp
