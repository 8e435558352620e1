#include "covsamp/engine.hpp"

#include "covsamp/error.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <ostream>

namespace covsamp {

bool apply_abs(ParamId id, const EngineOptions& opts) noexcept { return opts.abs.value_or(abs_by_default(id)); }

namespace {

// Chunks are processed in parallel but merged strictly in chunk order, so
// the result depends only on the chunk size, never on the worker count.
constexpr std::uint64_t kBatchChunks = 128;

using ChunkWork = std::function<void(std::uint64_t begin, std::uint64_t end, MaskEvaluator& ev,
                                     std::vector<ParamEval>& scratch, std::vector<Accumulator>& accs)>;

void check_params(const EngineOptions& opts) {
    require(!opts.params.empty(), ErrorCode::InvalidArgument, "no parameters requested");
}

std::vector<DistributionSummary> finish(const std::vector<Accumulator>& accs, Index d1, const EngineOptions& opts) {
    std::vector<DistributionSummary> out;
    out.reserve(accs.size());
    for (std::size_t i = 0; i < accs.size(); ++i)
        out.push_back(accs[i].finalize(opts.params[i], d1, apply_abs(opts.params[i], opts)));
    return out;
}

void record(const std::vector<ParamEval>& evals, std::vector<Accumulator>& accs, const EngineOptions& opts) {
    for (std::size_t i = 0; i < evals.size(); ++i) accs[i].add(evals[i], apply_abs(opts.params[i], opts));
}

std::vector<DistributionSummary> drive(const Population& pop, Index d1, const EngineOptions& opts,
                                       std::uint64_t total, std::uint64_t chunk, const ChunkWork& work) {
    check_params(opts);
    require(chunk >= 1, ErrorCode::InvalidArgument, "chunk size must be positive");
    const std::size_t np = opts.params.size();
    const int threads = opts.workers > 0 ? opts.workers : omp_get_max_threads();
    const std::uint64_t n_chunks = (total + chunk - 1) / chunk;
    std::vector<Accumulator> totals(np, Accumulator(opts.summary));

    for (std::uint64_t b0 = 0; b0 < n_chunks; b0 += kBatchChunks) {
        const std::uint64_t b1 = std::min(n_chunks, b0 + kBatchChunks);
        std::vector<std::vector<Accumulator>> parts(b1 - b0);
        std::exception_ptr error;
#pragma omp parallel num_threads(threads)
        {
            MaskEvaluator ev(pop);
            std::vector<ParamEval> scratch(np);
#pragma omp for schedule(dynamic, 1)
            for (std::int64_t c = static_cast<std::int64_t>(b0); c < static_cast<std::int64_t>(b1); ++c) {
                try {
                    auto& accs = parts[static_cast<std::size_t>(c) - b0];
                    accs.assign(np, Accumulator(opts.summary));
                    const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
                    work(begin, std::min(total, begin + chunk), ev, scratch, accs);
                } catch (...) {
#pragma omp critical(covsamp_engine_error)
                    if (!error) error = std::current_exception();
                }
            }
        }
        if (error) std::rethrow_exception(error);
        for (auto& part : parts)
            for (std::size_t i = 0; i < np; ++i) totals[i].merge(part[i]);
        if (opts.progress) opts.progress(std::min(total, b1 * chunk), total);
    }
    return finish(totals, d1, opts);
}

}  // namespace

std::vector<DistributionSummary> exact_distribution(const Population& pop, Index d1, const EngineOptions& opts) {
    require_design(pop.k(), d1);
    const MaskEnumerator en(pop.k(), d1, opts.cap);
    return drive(pop, d1, opts, en.count(), opts.exact_chunk,
                 [&](std::uint64_t begin, std::uint64_t end, MaskEvaluator& ev, std::vector<ParamEval>& scratch,
                     std::vector<Accumulator>& accs) {
                     for (auto cur = en.range(begin, end); !cur.done(); cur.advance()) {
                         ev.evaluate_into(cur.mask(), opts.params, scratch);
                         record(scratch, accs, opts);
                     }
                 });
}

std::vector<DistributionSummary> monte_carlo_distribution(const Population& pop, Index d1, std::uint64_t n_draws,
                                                          std::uint64_t seed, const EngineOptions& opts) {
    require_design(pop.k(), d1);
    require(n_draws >= 1, ErrorCode::InvalidArgument, "n_draws must be at least 1");
    const Index k = pop.k();
    return drive(pop, d1, opts, n_draws, opts.mc_chunk,
                 [&](std::uint64_t begin, std::uint64_t end, MaskEvaluator& ev, std::vector<ParamEval>& scratch,
                     std::vector<Accumulator>& accs) {
                     for (std::uint64_t draw = begin; draw < end; ++draw) {
                         ev.evaluate_into(sample_mask(k, d1, seed, draw), opts.params, scratch);
                         record(scratch, accs, opts);
                     }
                 });
}

namespace serial {

std::vector<DistributionSummary> exact_distribution(const Population& pop, Index d1, const EngineOptions& opts) {
    require_design(pop.k(), d1);
    check_params(opts);
    const MaskEnumerator en(pop.k(), d1, opts.cap);
    MaskEvaluator ev(pop);
    std::vector<ParamEval> scratch(opts.params.size());
    std::vector<Accumulator> accs(opts.params.size(), Accumulator(opts.summary));
    for (auto cur = en.all(); !cur.done(); cur.advance()) {
        ev.evaluate_into(cur.mask(), opts.params, scratch);
        record(scratch, accs, opts);
    }
    return finish(accs, d1, opts);
}

std::vector<DistributionSummary> monte_carlo_distribution(const Population& pop, Index d1, std::uint64_t n_draws,
                                                          std::uint64_t seed, const EngineOptions& opts) {
    require_design(pop.k(), d1);
    require(n_draws >= 1, ErrorCode::InvalidArgument, "n_draws must be at least 1");
    check_params(opts);
    MaskEvaluator ev(pop);
    std::vector<ParamEval> scratch(opts.params.size());
    std::vector<Accumulator> accs(opts.params.size(), Accumulator(opts.summary));
    for (std::uint64_t draw = 0; draw < n_draws; ++draw) {
        ev.evaluate_into(sample_mask(pop.k(), d1, seed, draw), opts.params, scratch);
        record(scratch, accs, opts);
    }
    return finish(accs, d1, opts);
}

}  // namespace serial

void write_audit(std::ostream& out, const Population& pop, Index d1, const EngineOptions& opts,
                 std::optional<std::uint64_t> n_draws, std::uint64_t seed) {
    require_design(pop.k(), d1);
    check_params(opts);
    out << (n_draws ? "draw" : "rank") << ",d1,mask";
    for (ParamId id : opts.params) out << ',' << to_string(id);
    for (ParamId id : opts.params) out << ',' << to_string(id) << "_failure";
    out << '\n';
    const auto old_precision = out.precision(17);
    MaskEvaluator ev(pop);
    std::vector<ParamEval> scratch(opts.params.size());
    auto row = [&](std::uint64_t index, const SelectionMask& mask) {
        ev.evaluate_into(mask, opts.params, scratch);
        out << index << ',' << d1 << ',' << mask.to_string();
        for (const auto& e : scratch) {
            out << ',';
            if (e.ok()) out << e.value;
        }
        for (const auto& e : scratch) out << ',' << (e.ok() ? "" : to_string(e.failure));
        out << '\n';
    };
    if (n_draws) {
        for (std::uint64_t draw = 0; draw < *n_draws; ++draw) row(draw, sample_mask(pop.k(), d1, seed, draw));
    } else {
        const MaskEnumerator en(pop.k(), d1, opts.cap);
        for (auto cur = en.all(); !cur.done(); cur.advance()) row(cur.rank(), cur.mask());
    }
    out.precision(old_precision);
}

std::vector<BenchmarkRow> benchmark_table(const std::vector<DistributionSummary>& summaries) {
    std::vector<BenchmarkRow> rows;
    rows.reserve(summaries.size());
    for (const auto& s : summaries) rows.push_back({s.param, s.d1, s.frac_leq_benchmark, s.successes()});
    return rows;
}

}  // namespace covsamp
