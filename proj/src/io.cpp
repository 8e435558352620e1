#include "covsamp/io.hpp"

#include "covsamp/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace covsamp {

namespace {

template <class... F>
struct overloaded : F... {
    using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

const Json& field(const Json& j, const char* key) {
    require(j.is_object() && j.contains(key), ErrorCode::ConfigError, std::string("missing key '") + key + "'");
    return j.at(key);
}

double get_number(const Json& j, const char* key) {
    const Json& v = field(j, key);
    require(v.is_number(), ErrorCode::ConfigError, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const Json& j, const char* key, double fallback) {
    return j.contains(key) ? get_number(j, key) : fallback;
}

std::string get_string(const Json& j, const char* key) {
    const Json& v = field(j, key);
    require(v.is_string(), ErrorCode::ConfigError, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

Json rule_to_json(const CoefficientRule& rule) {
    return std::visit(overloaded{
                          [](const Flat& f) { return Json{{"rule", "Flat"}, {"c", f.c}}; },
                          [](const Alternating& a) { return Json{{"rule", "Alternating"}, {"c", a.c}}; },
                          [](const Corollary1& c) {
                              return Json{{"rule", "Corollary1"}, {"target_c", c.target_c}, {"r", c.r}};
                          },
                          [](const Explicit& e) { return Json{{"rule", "Explicit"}, {"values", e.values}}; },
                      },
                      rule);
}

CoefficientRule rule_from_json(const Json& j) {
    const std::string name = get_string(j, "rule");
    if (name == "Flat") return Flat{get_number_or(j, "c", 1.0)};
    if (name == "Alternating") return Alternating{get_number_or(j, "c", 1.0)};
    if (name == "Corollary1") return Corollary1{get_number_or(j, "target_c", 3.0), get_number_or(j, "r", 1.0)};
    if (name == "Explicit") {
        const Json& v = field(j, "values");
        require(v.is_array(), ErrorCode::ConfigError, "'values' must be an array");
        Explicit e;
        for (const auto& x : v) {
            require(x.is_number(), ErrorCode::ConfigError, "'values' must hold numbers");
            e.values.push_back(x.get<double>());
        }
        return e;
    }
    fail(ErrorCode::ConfigError, "unknown coefficient rule '" + name + "'");
}

Json structure_to_json(const Structure& s) {
    return std::visit(
        overloaded{
            [](const MA1& m) { return Json{{"type", "MA1"}, {"rho", m.rho}}; },
            [](const AR1& a) { return Json{{"type", "AR1"}, {"rho", a.rho}}; },
            [](const Factor& f) {
                Json rows = Json::array();
                for (Index i = 0; i < f.loadings.rows(); ++i) {
                    Json row = Json::array();
                    for (Index c = 0; c < f.loadings.cols(); ++c) row.push_back(f.loadings(i, c));
                    rows.push_back(std::move(row));
                }
                return Json{{"type", "Factor"}, {"loadings", rows}, {"sigma_e2", f.sigma_e2}};
            },
            [](const Exchangeable& e) { return Json{{"type", "Exchangeable"}, {"rho", e.rho}}; },
            [](const ExchangeableShrink& e) { return Json{{"type", "ExchangeableShrink"}, {"alpha", e.alpha}}; },
        },
        s);
}

Eigen::MatrixXd matrix_from_json(const Json& rows, const char* what) {
    require(rows.is_array() && !rows.empty(), ErrorCode::ConfigError, std::string(what) + " must be a nested array");
    const auto n = static_cast<Index>(rows.size());
    const auto m = static_cast<Index>(rows[0].size());
    Eigen::MatrixXd out(n, m);
    for (Index i = 0; i < n; ++i) {
        const Json& row = rows[static_cast<std::size_t>(i)];
        require(row.is_array() && static_cast<Index>(row.size()) == m, ErrorCode::ConfigError,
                std::string(what) + " rows must have equal length");
        for (Index c = 0; c < m; ++c) {
            const Json& x = row[static_cast<std::size_t>(c)];
            require(x.is_number(), ErrorCode::ConfigError, std::string(what) + " entries must be numbers");
            out(i, c) = x.get<double>();
        }
    }
    return out;
}

Structure structure_from_json(const Json& j) {
    const std::string type = get_string(j, "type");
    if (type == "MA1") return MA1{get_number(j, "rho")};
    if (type == "AR1") return AR1{get_number(j, "rho")};
    if (type == "Exchangeable") return Exchangeable{get_number(j, "rho")};
    if (type == "ExchangeableShrink") return ExchangeableShrink{get_number(j, "alpha")};
    if (type == "Factor")
        return Factor{matrix_from_json(field(j, "loadings"), "loadings"), get_number_or(j, "sigma_e2", 1.0)};
    fail(ErrorCode::ConfigError, "unknown structure type '" + type + "'");
}

}  // namespace

Json to_json(const DgpSpec& spec) {
    return Json{{"structure", structure_to_json(spec.structure)},
                {"pi", rule_to_json(spec.pi_rule)},
                {"gamma", rule_to_json(spec.gamma_rule)},
                {"x_resid_var", spec.x_resid_var},
                {"y_resid_var", spec.y_resid_var},
                {"beta_long", spec.beta_long}};
}

DgpSpec dgp_from_json(const Json& j) {
    DgpSpec spec;
    spec.structure = structure_from_json(field(j, "structure"));
    if (j.contains("pi")) spec.pi_rule = rule_from_json(j.at("pi"));
    if (j.contains("gamma")) spec.gamma_rule = rule_from_json(j.at("gamma"));
    spec.x_resid_var = get_number_or(j, "x_resid_var", 1.0);
    spec.y_resid_var = get_number_or(j, "y_resid_var", 1.0);
    spec.beta_long = get_number_or(j, "beta_long", 1.0);
    return spec;
}

Json to_json(const CovarianceModel& cov) {
    Json rows = Json::array();
    for (Index i = 0; i < cov.dim(); ++i) {
        Json row = Json::array();
        for (Index c = 0; c < cov.dim(); ++c) row.push_back(cov.sigma()(i, c));
        rows.push_back(std::move(row));
    }
    return Json{{"labels", cov.labels()}, {"sigma", rows}};
}

CovarianceModel covariance_from_json(const Json& j) {
    const Json& labels = field(j, "labels");
    require(labels.is_array(), ErrorCode::ConfigError, "'labels' must be an array");
    std::vector<std::string> names;
    for (const auto& l : labels) {
        require(l.is_string(), ErrorCode::ConfigError, "labels must be strings");
        names.push_back(l.get<std::string>());
    }
    Eigen::MatrixXd sigma = matrix_from_json(field(j, "sigma"), "sigma");
    require(static_cast<Index>(names.size()) == sigma.rows(), ErrorCode::ConfigError,
            "label count does not match the covariance dimension");
    return CovarianceModel(std::move(names), std::move(sigma));
}

DatasetSpec dataset_from_json(const Json& j) {
    DatasetSpec spec;
    spec.path = get_string(j, "path");
    spec.outcome = get_string(j, "outcome");
    spec.treatment = get_string(j, "treatment");
    for (const auto& c : field(j, "covariates")) spec.covariates.push_back(c.get<std::string>());
    if (j.contains("fixed_effects"))
        for (const auto& c : j.at("fixed_effects")) spec.fixed_effects.push_back(c.get<std::string>());
    if (j.contains("weight") && !j.at("weight").is_null()) spec.weight = get_string(j, "weight");
    return spec;
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const DistributionSummary& s) {
    Json failures = Json::object();
    for (std::size_t i = 0; i < failure_codes.size(); ++i)
        failures[std::string(to_string(failure_codes[i]))] = s.failures[i];
    Json edges = Json::array();
    for (double e : s.histogram.edges) edges.push_back(number(e));
    return Json{{"param", to_string(s.param)},
                {"d1", s.d1},
                {"abs_applied", s.abs_applied},
                {"count", s.count},
                {"failures", failures},
                {"min", number(s.min)},
                {"q25", number(s.q25)},
                {"median", number(s.median)},
                {"q75", number(s.q75)},
                {"max", number(s.max)},
                {"mean", number(s.mean)},
                {"sd", number(s.sd)},
                {"frac_leq_1", number(s.frac_leq_benchmark)},
                {"benchmark", s.benchmark},
                {"quantiles", s.exact_quantiles ? "exact" : "sketch"},
                {"histogram", Json{{"edges", edges}, {"counts", s.histogram.counts}}}};
}

Json to_json(const AssumptionReport& report) {
    Json points = Json::array();
    for (const auto& p : report.points) {
        Json pt{{"k", p.k},
                {"d1", p.d1},
                {"var_pi_index", number(p.var_pi_index)},
                {"var_gamma_index", number(p.var_gamma_index)},
                {"cov_x_gamma_index", number(p.cov_x_gamma_index)},
                {"lln_pi_observed", number(p.lln_pi_observed)},
                {"lln_pi_unobserved", number(p.lln_pi_unobserved)},
                {"lln_gamma_observed", number(p.lln_gamma_observed)},
                {"lln_gamma_unobserved", number(p.lln_gamma_unobserved)},
                {"c_pi", number(p.c_pi)},
                {"c_gamma", number(p.c_gamma)},
                {"outlier_x", number(p.outlier_x)},
                {"outlier_index", number(p.outlier_index)}};
        if (p.d) {
            pt["d_pi"] = number(p.d->d_pi);
            pt["d_gamma"] = number(p.d->d_gamma);
        } else {
            pt["d_pi"] = nullptr;
            pt["d_gamma"] = nullptr;
        }
        points.push_back(std::move(pt));
    }
    Json checks = Json::array();
    for (const auto& c : report.checks)
        checks.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"trajectory", c.detail}});
    return Json{{"r", report.r},
                {"all_pass", report.all_pass()},
                {"points", points},
                {"checks", checks},
                {"warnings", report.warnings}};
}

Json to_json(const ConvergencePoint& p) {
    return Json{{"param", to_string(p.param)},
                {"k", p.k},
                {"d1", p.d1},
                {"r_target", p.r_target},
                {"r_realized", p.r_realized},
                {"n", p.n},
                {"mc_mean", number(p.mc_mean)},
                {"mc_sd", number(p.mc_sd)},
                {"mc_median", number(p.mc_median)},
                {"predicted_limit", p.predicted_limit ? number(*p.predicted_limit) : Json(nullptr)},
                {"abs_gap", p.abs_gap ? number(*p.abs_gap) : Json(nullptr)}};
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_histograms_csv(std::ostream& out, const std::vector<DistributionSummary>& summaries) {
    out << "param,d1,bin,lower,upper,count\n";
    for (const auto& s : summaries) {
        const auto& h = s.histogram;
        for (std::size_t b = 0; b < h.counts.size(); ++b)
            out << to_string(s.param) << ',' << s.d1 << ',' << b << ',' << format_double(h.edges[b]) << ','
                << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
    }
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "param,d1,frac_leq_benchmark,successes\n";
    for (const auto& r : rows)
        out << to_string(r.param) << ',' << r.d1 << ',' << format_double(r.frac_leq_benchmark) << ',' << r.successes
            << '\n';
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::ConfigError, "cannot write " + path);
    out << text;
}

}  // namespace covsamp
