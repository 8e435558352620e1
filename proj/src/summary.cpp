#include "covsamp/summary.hpp"

#include "covsamp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace covsamp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::uint64_t DistributionSummary::failure_total() const noexcept {
    std::uint64_t t = 0;
    for (auto f : failures) t += f;
    return t;
}

std::uint64_t DistributionSummary::successes() const noexcept { return count - failure_total(); }

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return kNaN;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

QuantileSketch::QuantileSketch(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 2)) {}

void QuantileSketch::add(double v) {
    if (levels_.empty()) {
        levels_.emplace_back();
        offset_.push_back(false);
    }
    levels_[0].push_back(v);
    ++weight_;
    if (levels_[0].size() >= capacity_) compact(0);
}

void QuantileSketch::compact(std::size_t level) {
    while (level < levels_.size() && levels_[level].size() >= capacity_) {
        if (level + 1 == levels_.size()) {
            levels_.emplace_back();
            offset_.push_back(false);
        }
        auto& buf = levels_[level];
        std::sort(buf.begin(), buf.end());
        // An odd item stays behind so total weight is preserved exactly.
        std::size_t keep = buf.size() % 2;
        const double leftover = keep ? buf.back() : 0.0;
        const std::size_t even = buf.size() - keep;
        const std::size_t start = offset_[level] ? 1 : 0;
        offset_[level] = !offset_[level];
        auto& up = levels_[level + 1];
        for (std::size_t i = start; i < even; i += 2) up.push_back(buf[i]);
        buf.clear();
        if (keep) buf.push_back(leftover);
        ++level;
    }
}

void QuantileSketch::merge(const QuantileSketch& other) {
    if (other.levels_.size() > levels_.size()) {
        levels_.resize(other.levels_.size());
        offset_.resize(other.levels_.size(), false);
    }
    for (std::size_t l = 0; l < other.levels_.size(); ++l)
        levels_[l].insert(levels_[l].end(), other.levels_[l].begin(), other.levels_[l].end());
    weight_ += other.weight_;
    for (std::size_t l = 0; l < levels_.size(); ++l)
        if (levels_[l].size() >= capacity_) compact(l);
}

std::vector<std::pair<double, std::uint64_t>> QuantileSketch::weighted_items() const {
    std::vector<std::pair<double, std::uint64_t>> items;
    for (std::size_t l = 0; l < levels_.size(); ++l)
        for (double v : levels_[l]) items.emplace_back(v, std::uint64_t{1} << l);
    std::sort(items.begin(), items.end());
    return items;
}

double QuantileSketch::quantile(double p) const {
    const auto items = weighted_items();
    if (items.empty()) return kNaN;
    std::uint64_t total = 0;
    for (const auto& it : items) total += it.second;
    const double target = p * static_cast<double>(total - 1);
    double cum = 0.0;
    for (const auto& it : items) {
        cum += static_cast<double>(it.second);
        if (cum > target) return it.first;
    }
    return items.back().first;
}

Accumulator::Accumulator(const SummaryOptions& opts) : opts_(opts), sketch_(opts.sketch_capacity) {}

void Accumulator::add(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
    if (n_ == 1) {
        min_ = max_ = v;
    } else {
        min_ = std::min(min_, v);
        max_ = std::max(max_, v);
    }
    if (v <= opts_.benchmark) ++leq_;
    if (sketched_) {
        sketch_.add(v);
    } else {
        values_.push_back(v);
        if (values_.size() > opts_.retention_cap) spill();
    }
}

void Accumulator::add_failure(Failure f) {
    for (std::size_t i = 0; i < failure_codes.size(); ++i)
        if (failure_codes[i] == f) ++failures_[i];
}

void Accumulator::add(const ParamEval& e, bool apply_abs) {
    if (e.ok())
        add(apply_abs ? std::abs(e.value) : e.value);
    else
        add_failure(e.failure);
}

void Accumulator::spill() {
    sketched_ = true;
    for (double v : values_) sketch_.add(v);
    values_.clear();
    values_.shrink_to_fit();
}

void Accumulator::merge(const Accumulator& other) {
    for (std::size_t i = 0; i < failures_.size(); ++i) failures_[i] += other.failures_[i];
    if (other.n_ == 0) return;
    if (n_ == 0) {
        min_ = other.min_;
        max_ = other.max_;
    } else {
        min_ = std::min(min_, other.min_);
        max_ = std::max(max_, other.max_);
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    n_ += other.n_;
    leq_ += other.leq_;

    if (!sketched_ && !other.sketched_ && values_.size() + other.values_.size() <= opts_.retention_cap) {
        values_.insert(values_.end(), other.values_.begin(), other.values_.end());
        return;
    }
    if (!sketched_) spill();
    if (other.sketched_) {
        sketch_.merge(other.sketch_);
    } else {
        for (double v : other.values_) sketch_.add(v);
    }
}

namespace {

Histogram make_histogram(double lo, double hi, int bins) {
    Histogram h;
    bins = std::max(bins, 1);
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    return h;
}

void bin(Histogram& h, double v, std::uint64_t w) {
    const double lo = h.edges.front(), hi = h.edges.back();
    const auto bins = static_cast<double>(h.counts.size());
    auto i = static_cast<std::ptrdiff_t>(std::floor((v - lo) / (hi - lo) * bins));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(h.counts.size()) - 1);
    h.counts[static_cast<std::size_t>(i)] += w;
}

}  // namespace

DistributionSummary Accumulator::finalize(ParamId param, Index d1, bool abs_applied) const {
    DistributionSummary s;
    s.param = param;
    s.d1 = d1;
    s.abs_applied = abs_applied;
    s.failures = failures_;
    s.count = n_ + s.failure_total();
    s.benchmark = opts_.benchmark;
    s.exact_quantiles = !sketched_;
    if (n_ == 0) {
        s.min = s.q25 = s.median = s.q75 = s.max = s.mean = s.sd = s.frac_leq_benchmark = kNaN;
        s.histogram = make_histogram(0.0, 0.0, opts_.bins);
        return s;
    }
    s.min = min_;
    s.max = max_;
    s.mean = mean_;
    s.sd = std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_)));
    s.frac_leq_benchmark = static_cast<double>(leq_) / static_cast<double>(n_);
    s.histogram = make_histogram(min_, max_, opts_.bins);
    if (!sketched_) {
        std::vector<double> sorted = values_;
        std::sort(sorted.begin(), sorted.end());
        s.q25 = quantile_sorted(sorted, 0.25);
        s.median = quantile_sorted(sorted, 0.5);
        s.q75 = quantile_sorted(sorted, 0.75);
        for (double v : sorted) bin(s.histogram, v, 1);
    } else {
        s.q25 = sketch_.quantile(0.25);
        s.median = sketch_.quantile(0.5);
        s.q75 = sketch_.quantile(0.75);
        // Histogram counts from the sketch are approximate but sum to n.
        for (const auto& [v, w] : sketch_.weighted_items()) bin(s.histogram, v, w);
    }
    return s;
}

DistributionSummary summary_stats(ParamId param, Index d1, const std::vector<double>& values, bool abs_applied,
                                  const SummaryOptions& opts) {
    Accumulator acc(opts);
    for (double v : values) acc.add(abs_applied ? std::abs(v) : v);
    return acc.finalize(param, d1, abs_applied);
}

}  // namespace covsamp
