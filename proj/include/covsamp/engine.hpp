#pragma once

// Covariate sampling distributions by exact enumeration or Monte Carlo.

#include "covsamp/dgp.hpp"
#include "covsamp/limits.hpp"
#include "covsamp/summary.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace covsamp {

struct EngineOptions {
    std::vector<ParamId> params{default_params.begin(), default_params.end()};
    /// Overrides the per-parameter |.| default when set.
    std::optional<bool> abs;
    std::uint64_t cap = default_enumeration_cap;
    /// OpenMP threads; 0 uses the runtime default.
    int workers = 0;
    SummaryOptions summary;
    /// Masks per task. Results do not depend on it beyond floating-point
    /// merge order, and never on the worker count.
    std::uint64_t exact_chunk = 4096;
    std::uint64_t mc_chunk = 16;
    /// Called with the number of masks processed so far.
    std::function<void(std::uint64_t done, std::uint64_t total)> progress;
};

bool apply_abs(ParamId id, const EngineOptions& opts) noexcept;

std::vector<DistributionSummary> exact_distribution(const Population& pop, Index d1, const EngineOptions& opts = {});

std::vector<DistributionSummary> monte_carlo_distribution(const Population& pop, Index d1, std::uint64_t n_draws,
                                                          std::uint64_t seed, const EngineOptions& opts = {});

/// Single-threaded versions with one accumulator and no chunking; the
/// reference for tests and the benchmark.
namespace serial {
std::vector<DistributionSummary> exact_distribution(const Population& pop, Index d1, const EngineOptions& opts = {});
std::vector<DistributionSummary> monte_carlo_distribution(const Population& pop, Index d1, std::uint64_t n_draws,
                                                          std::uint64_t seed, const EngineOptions& opts = {});
}  // namespace serial

/// One CSV row per mask: rank or draw, mask bits, then signed values
/// (empty cell for failures) and failure codes.
void write_audit(std::ostream& out, const Population& pop, Index d1, const EngineOptions& opts,
                 std::optional<std::uint64_t> n_draws = std::nullopt, std::uint64_t seed = 0);

struct BenchmarkRow {
    ParamId param;
    Index d1;
    double frac_leq_benchmark;
    std::uint64_t successes;
};

/// Share of masks at or below the benchmark per (param, d1), in input order.
std::vector<BenchmarkRow> benchmark_table(const std::vector<DistributionSummary>& summaries);

struct ConvergencePoint {
    ParamId param = ParamId::RX;
    Index k = 0;
    Index d1 = 0;
    double r_target = 1.0;
    double r_realized = 1.0;
    std::uint64_t n = 0;  // successful draws
    double mc_mean = 0.0, mc_sd = 0.0, mc_median = 0.0;
    std::optional<double> predicted_limit;
    std::optional<double> abs_gap;
};

struct ConvergenceOptions {
    std::vector<ParamId> params{default_params.begin(), default_params.end()};
    std::uint64_t n_draws = 400;
    std::uint64_t seed = 1;
    int workers = 0;
    std::optional<bool> abs;
};

/// Monte Carlo means along a K grid with d1 = round(K / (1 + r)), each
/// paired with the analytic limit at the realized r (finite-K constants).
std::vector<ConvergencePoint> convergence_study(const DgpSpec& spec, const std::vector<Index>& k_grid, double r,
                                                const ConvergenceOptions& opts = {});

struct EmpiricalVerdict {
    ParamId param;
    Index k;
    bool consistent = false;
    bool monotone = false;
    double margin_at_1 = 0.0;
};

/// Empirical consistency / monotonicity at the largest K of a set of
/// studies covering r < 1, r = 1 and r > 1. Consistent when
/// ||mean| - 1| <= margin at r = 1; monotone when the means sit beyond
/// 1 +- margin on the correct side. margin = max(3 sd / sqrt(n), 0.02).
std::vector<EmpiricalVerdict> empirical_property_report(const std::vector<ConvergencePoint>& points);

}  // namespace covsamp
