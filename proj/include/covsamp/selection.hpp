#pragma once

// Uniform design over covariate subsets of fixed size: masks, ranked
// enumeration, counter-seeded sampling, and exact design moments.

#include "covsamp/projection.hpp"
#include "covsamp/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace covsamp {

/// Observed/unobserved indicator over K covariates (1 = observed).
class SelectionMask {
public:
    SelectionMask() = default;
    explicit SelectionMask(std::vector<std::uint8_t> bits);
    static SelectionMask from_indices(Index k, const IndexSet& observed);
    /// Bit i of `word` is covariate i; k <= 64.
    static SelectionMask from_word(std::uint64_t word, Index k);
    /// "1100" style, covariate 0 first.
    static SelectionMask parse(const std::string& text);

    Index k() const noexcept { return static_cast<Index>(bits_.size()); }
    Index d1() const noexcept { return d1_; }
    Index d2() const noexcept { return k() - d1_; }
    bool observed(Index i) const noexcept { return bits_[static_cast<std::size_t>(i)] != 0; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    IndexSet observed_indices() const;
    IndexSet unobserved_indices() const;
    SelectionMask complement() const;
    std::string to_string() const;

    bool operator==(const SelectionMask&) const = default;

private:
    std::vector<std::uint8_t> bits_;
    Index d1_ = 0;
};

enum class SelectionRegime { MoreObserved, EqualSelection, MoreUnobserved };

std::string_view to_string(SelectionRegime regime) noexcept;

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept;

inline constexpr std::uint64_t default_enumeration_cap = 1'000'000'000ull;

/// Throws InvalidArgument unless 1 <= d1 <= k-1.
void require_design(Index k, Index d1);

/// Masks with popcount d1 ordered by the integer value of their bit
/// pattern (covariate 0 is the least significant bit). Rank r maps to a
/// mask through the combinatorial number system, so a worker can start
/// anywhere without walking the prefix.
class MaskEnumerator {
public:
    /// Throws Overflow when C(k, d1) exceeds `cap`.
    MaskEnumerator(Index k, Index d1, std::uint64_t cap = default_enumeration_cap);

    std::uint64_t count() const noexcept { return count_; }
    Index k() const noexcept { return k_; }
    Index d1() const noexcept { return d1_; }

    SelectionMask unrank(std::uint64_t rank) const;
    std::uint64_t rank(const SelectionMask& mask) const;

    /// Sequential cursor over ranks [begin, end).
    class Cursor {
    public:
        const SelectionMask& mask() const noexcept { return mask_; }
        std::uint64_t rank() const noexcept { return rank_; }
        bool done() const noexcept { return rank_ >= end_; }
        void advance();

    private:
        friend class MaskEnumerator;
        Cursor(const MaskEnumerator& owner, std::uint64_t begin, std::uint64_t end);
        void sync_mask();

        Index k_;
        IndexSet positions_;  // increasing bit positions of the current mask
        SelectionMask mask_;
        std::uint64_t rank_;
        std::uint64_t end_;
    };

    Cursor range(std::uint64_t begin, std::uint64_t end) const;
    Cursor all() const { return range(0, count_); }

    /// Materializes every mask; intended for small k.
    std::vector<SelectionMask> collect() const;

private:
    Index k_;
    Index d1_;
    std::uint64_t count_;
};

/// Uniform draw over size-d1 subsets via a partial Fisher-Yates shuffle.
SelectionMask sample_mask(Index k, Index d1, CounterRng& rng);

/// The mask used for Monte Carlo draw `draw` under `seed`.
SelectionMask sample_mask(Index k, Index d1, std::uint64_t seed, std::uint64_t draw);

/// (E[S_i], E[S_i S_j]) for i != j.
std::pair<double, double> inclusion_moments(Index k, Index d1);

/// Exact Var_S(sum_i S_i xi_i) under the uniform design.
double finite_pop_variance(const Eigen::VectorXd& xi, Index d1);

/// Exact Var_S(sum_ij S_i S_j a_ij) for symmetric a, from the fourth-order
/// inclusion moments of the design. O(K^2).
double quadratic_form_variance(const Eigen::MatrixXd& a, Index d1);

/// E_S[sum_ij S_i S_j a_ij].
double quadratic_form_mean(const Eigen::MatrixXd& a, Index d1);

SelectionRegime classify_regime(Index d1, Index d2);

}  // namespace covsamp
