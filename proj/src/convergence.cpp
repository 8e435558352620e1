#include "covsamp/engine.hpp"
#include "covsamp/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace covsamp {

std::vector<ConvergencePoint> convergence_study(const DgpSpec& spec, const std::vector<Index>& k_grid, double r,
                                                const ConvergenceOptions& opts) {
    require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument, "r must be positive");
    require(!k_grid.empty(), ErrorCode::InvalidArgument, "empty K grid");
    require(!opts.params.empty(), ErrorCode::InvalidArgument, "no parameters requested");
    std::vector<ConvergencePoint> out;
    for (Index k : k_grid) {
        require(k >= 2, ErrorCode::InvalidArgument, "K must be at least 2");
        const Index d1 =
            std::clamp<Index>(static_cast<Index>(std::llround(static_cast<double>(k) / (1.0 + r))), 1, k - 1);
        const double r_realized = static_cast<double>(k - d1) / static_cast<double>(d1);
        const Population pop = assemble_population(spec, k);

        EngineOptions eo;
        eo.params = opts.params;
        eo.abs = opts.abs;
        eo.workers = opts.workers;
        const auto summaries = monte_carlo_distribution(pop, d1, opts.n_draws, opts.seed, eo);
        for (const auto& s : summaries) {
            ConvergencePoint pt;
            pt.param = s.param;
            pt.k = k;
            pt.d1 = d1;
            pt.r_target = r;
            pt.r_realized = r_realized;
            pt.n = s.successes();
            pt.mc_mean = s.mean;
            pt.mc_sd = s.sd;
            pt.mc_median = s.median;
            if (auto pred = predict_limit(s.param, spec, k, r_realized)) {
                pt.predicted_limit = pred->value;
                pt.abs_gap = std::abs(s.mean - pred->value);
            }
            out.push_back(pt);
        }
    }
    return out;
}

std::vector<EmpiricalVerdict> empirical_property_report(const std::vector<ConvergencePoint>& points) {
    std::set<Index> ks;
    for (const auto& p : points) ks.insert(p.k);
    require(ks.size() >= 2, ErrorCode::InsufficientGrid, "verdicts need a K grid of at least two points");

    std::map<ParamId, std::vector<const ConvergencePoint*>> by_param;
    for (const auto& p : points) by_param[p.param].push_back(&p);

    std::vector<EmpiricalVerdict> out;
    for (const auto& [param, pts] : by_param) {
        Index k_max = 0;
        for (const auto* p : pts) k_max = std::max(k_max, p->k);
        const ConvergencePoint *low = nullptr, *equal = nullptr, *high = nullptr;
        for (const auto* p : pts) {
            if (p->k != k_max) continue;
            if (p->r_target < 1.0) low = p;
            if (p->r_target == 1.0) equal = p;
            if (p->r_target > 1.0) high = p;
        }
        require(low && equal && high, ErrorCode::InsufficientGrid,
                std::string("studies at r < 1, r = 1 and r > 1 are required for ") + std::string(to_string(param)));
        auto margin = [](const ConvergencePoint& p) {
            const double se = p.n > 0 ? 3.0 * p.mc_sd / std::sqrt(static_cast<double>(p.n)) : 0.0;
            return std::max(se, 0.02);
        };
        EmpiricalVerdict v{param, k_max};
        v.margin_at_1 = margin(*equal);
        v.consistent = std::abs(std::abs(equal->mc_mean) - 1.0) <= v.margin_at_1;
        v.monotone = std::abs(low->mc_mean) < 1.0 - margin(*low) && std::abs(high->mc_mean) > 1.0 + margin(*high);
        out.push_back(v);
    }
    return out;
}

}  // namespace covsamp
