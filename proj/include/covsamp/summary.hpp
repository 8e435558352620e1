#pragma once

// Mergeable summaries of a parameter's covariate sampling distribution.

#include "covsamp/params.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace covsamp {

struct SummaryOptions {
    double benchmark = 1.0;
    int bins = 60;
    /// Values kept verbatim up to this many; beyond it a compactor sketch
    /// takes over and quantiles become approximate.
    std::uint64_t retention_cap = 10'000'000;
    std::size_t sketch_capacity = 32768;
};

struct Histogram {
    std::vector<double> edges;  // bins + 1
    std::vector<std::uint64_t> counts;
};

struct DistributionSummary {
    ParamId param = ParamId::RX;
    Index d1 = 0;
    bool abs_applied = false;
    std::uint64_t count = 0;  // successes + failures
    std::array<std::uint64_t, failure_codes.size()> failures{};
    // NaN when there are no successes.
    double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
    double mean = 0.0, sd = 0.0;
    double frac_leq_benchmark = 0.0;
    double benchmark = 1.0;
    bool exact_quantiles = true;
    Histogram histogram;

    std::uint64_t successes() const noexcept;
    std::uint64_t failure_total() const noexcept;
};

/// Deterministic multi-level compactor. Each level holds up to `capacity`
/// items of weight 2^level; a full level is sorted and every other item
/// (alternating offset) is promoted. Rank error is at most
/// levels * n / capacity.
class QuantileSketch {
public:
    explicit QuantileSketch(std::size_t capacity = 32768);

    void add(double v);
    void merge(const QuantileSketch& other);
    std::uint64_t weight() const noexcept { return weight_; }
    std::size_t levels() const noexcept { return levels_.size(); }

    /// Items and their weights, sorted by value.
    std::vector<std::pair<double, std::uint64_t>> weighted_items() const;
    double quantile(double p) const;

private:
    void compact(std::size_t level);

    std::size_t capacity_;
    std::vector<std::vector<double>> levels_;
    std::vector<bool> offset_;
    std::uint64_t weight_ = 0;
};

/// Streaming accumulator for one parameter. Moments use Welford updates
/// merged with Chan's formula; the data are retained verbatim until the
/// retention cap and sketched beyond it.
class Accumulator {
public:
    explicit Accumulator(const SummaryOptions& opts = {});

    void add(double v);
    void add_failure(Failure f);
    void add(const ParamEval& e, bool apply_abs);
    void merge(const Accumulator& other);

    std::uint64_t successes() const noexcept { return n_; }
    DistributionSummary finalize(ParamId param, Index d1, bool abs_applied) const;

private:
    void spill();

    SummaryOptions opts_;
    std::uint64_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
    double min_ = 0.0, max_ = 0.0;
    std::uint64_t leq_ = 0;
    std::array<std::uint64_t, failure_codes.size()> failures_{};
    std::vector<double> values_;
    bool sketched_ = false;
    QuantileSketch sketch_;
};

/// Summary of a finished list of values (exact mode).
DistributionSummary summary_stats(ParamId param, Index d1, const std::vector<double>& values, bool abs_applied,
                                  const SummaryOptions& opts = {});

/// Type-7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace covsamp
