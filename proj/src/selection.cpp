#include "covsamp/selection.hpp"

#include "covsamp/error.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace covsamp {

SelectionMask::SelectionMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b = b ? 1 : 0;
    d1_ = static_cast<Index>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SelectionMask SelectionMask::from_indices(Index k, const IndexSet& observed) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(k), 0);
    for (Index i : observed) {
        require(i >= 0 && i < k, ErrorCode::InvalidArgument, "observed index out of range");
        require(bits[static_cast<std::size_t>(i)] == 0, ErrorCode::InvalidArgument, "duplicate observed index");
        bits[static_cast<std::size_t>(i)] = 1;
    }
    return SelectionMask(std::move(bits));
}

SelectionMask SelectionMask::from_word(std::uint64_t word, Index k) {
    require(k >= 0 && k <= 64, ErrorCode::InvalidArgument, "word masks hold at most 64 covariates");
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) bits[static_cast<std::size_t>(i)] = (word >> i) & 1u;
    return SelectionMask(std::move(bits));
}

SelectionMask SelectionMask::parse(const std::string& text) {
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
        require(c == '0' || c == '1', ErrorCode::InvalidArgument, "mask text must be 0/1 characters");
        bits.push_back(c == '1');
    }
    return SelectionMask(std::move(bits));
}

IndexSet SelectionMask::observed_indices() const {
    IndexSet out;
    out.reserve(static_cast<std::size_t>(d1_));
    for (Index i = 0; i < k(); ++i)
        if (observed(i)) out.push_back(i);
    return out;
}

IndexSet SelectionMask::unobserved_indices() const {
    IndexSet out;
    out.reserve(static_cast<std::size_t>(d2()));
    for (Index i = 0; i < k(); ++i)
        if (!observed(i)) out.push_back(i);
    return out;
}

SelectionMask SelectionMask::complement() const {
    std::vector<std::uint8_t> bits(bits_.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bits_[i] ? 0 : 1;
    return SelectionMask(std::move(bits));
}

std::string SelectionMask::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) s[i] = '1';
    return s;
}

std::string_view to_string(SelectionRegime regime) noexcept {
    switch (regime) {
        case SelectionRegime::MoreObserved: return "MoreObserved";
        case SelectionRegime::EqualSelection: return "EqualSelection";
        case SelectionRegime::MoreUnobserved: return "MoreUnobserved";
    }
    return "?";
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 acc = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // acc * (n - k + i) / i stays integral at every step.
        acc = acc * (n - k + i) / i;
        if (acc > UINT64_MAX) return UINT64_MAX;
    }
    return static_cast<std::uint64_t>(acc);
}

void require_design(Index k, Index d1) {
    require(k >= 2, ErrorCode::InvalidArgument, "design needs at least two covariates");
    require(d1 >= 1 && d1 <= k - 1, ErrorCode::InvalidArgument,
            "d1 must lie in [1, K-1] (got d1=" + std::to_string(d1) + ", K=" + std::to_string(k) + ")");
}

MaskEnumerator::MaskEnumerator(Index k, Index d1, std::uint64_t cap) : k_(k), d1_(d1) {
    require_design(k, d1);
    count_ = binomial(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(d1));
    if (count_ > cap) {
        fail(ErrorCode::Overflow, "C(" + std::to_string(k) + "," + std::to_string(d1) +
                                      ") exceeds the enumeration cap of " + std::to_string(cap) +
                                      "; use Monte Carlo sampling instead");
    }
}

SelectionMask MaskEnumerator::unrank(std::uint64_t rank) const {
    require(rank < count_, ErrorCode::InvalidArgument, "rank out of range");
    IndexSet positions(static_cast<std::size_t>(d1_));
    // Greedy combinadic: largest c with C(c, i) <= remaining rank.
    std::uint64_t remaining = rank;
    Index upper = k_;
    for (Index i = d1_; i >= 1; --i) {
        Index c = upper - 1;
        while (binomial(static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i)) > remaining) --c;
        positions[static_cast<std::size_t>(i - 1)] = c;
        remaining -= binomial(static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i));
        upper = c;
    }
    return SelectionMask::from_indices(k_, positions);
}

std::uint64_t MaskEnumerator::rank(const SelectionMask& mask) const {
    require(mask.k() == k_ && mask.d1() == d1_, ErrorCode::InvalidArgument, "mask does not match enumerator");
    std::uint64_t r = 0;
    Index i = 1;
    for (Index c = 0; c < k_; ++c) {
        if (mask.observed(c)) {
            r += binomial(static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i));
            ++i;
        }
    }
    return r;
}

MaskEnumerator::Cursor::Cursor(const MaskEnumerator& owner, std::uint64_t begin, std::uint64_t end)
    : k_(owner.k_), rank_(begin), end_(end) {
    if (begin < end) {
        mask_ = owner.unrank(begin);
        positions_ = mask_.observed_indices();
    }
}

void MaskEnumerator::Cursor::sync_mask() {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(k_), 0);
    for (Index p : positions_) bits[static_cast<std::size_t>(p)] = 1;
    mask_ = SelectionMask(std::move(bits));
}

void MaskEnumerator::Cursor::advance() {
    ++rank_;
    if (rank_ >= end_) return;
    // Colex successor: bump the first position that can move right and
    // pack everything below it to the bottom.
    const std::size_t d = positions_.size();
    std::size_t j = 0;
    while (j + 1 < d && positions_[j] + 1 == positions_[j + 1]) ++j;
    ++positions_[j];
    for (std::size_t i = 0; i < j; ++i) positions_[i] = static_cast<Index>(i);
    sync_mask();
}

MaskEnumerator::Cursor MaskEnumerator::range(std::uint64_t begin, std::uint64_t end) const {
    require(begin <= end && end <= count_, ErrorCode::InvalidArgument, "rank range out of bounds");
    return Cursor(*this, begin, end);
}

std::vector<SelectionMask> MaskEnumerator::collect() const {
    std::vector<SelectionMask> out;
    out.reserve(static_cast<std::size_t>(count_));
    for (auto cur = all(); !cur.done(); cur.advance()) out.push_back(cur.mask());
    return out;
}

SelectionMask sample_mask(Index k, Index d1, CounterRng& rng) {
    require_design(k, d1);
    IndexSet idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < d1; ++i) {
        const auto j = i + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(k - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(d1));
    return SelectionMask::from_indices(k, idx);
}

SelectionMask sample_mask(Index k, Index d1, std::uint64_t seed, std::uint64_t draw) {
    CounterRng rng(seed, draw);
    return sample_mask(k, d1, rng);
}

std::pair<double, double> inclusion_moments(Index k, Index d1) {
    require_design(k, d1);
    const double kk = static_cast<double>(k);
    const double d = static_cast<double>(d1);
    return {d / kk, d * (d - 1.0) / (kk * (kk - 1.0))};
}

double finite_pop_variance(const Eigen::VectorXd& xi, Index d1) {
    const Index k = xi.size();
    require_design(k, d1);
    const double mean = xi.mean();
    const double ss = (xi.array() - mean).square().sum();
    const double d2 = static_cast<double>(k - d1);
    return static_cast<double>(d1) * d2 / (static_cast<double>(k) * static_cast<double>(k - 1)) * ss;
}

namespace {

// P(S_{i1} = ... = S_{ib} = 1) for b distinct indices.
double joint_inclusion(Index k, Index d1, int b) {
    if (b > k) return 0.0;
    double p = 1.0;
    for (int m = 0; m < b; ++m) p *= static_cast<double>(d1 - m) / static_cast<double>(k - m);
    return p;
}

using Partition = std::array<int, 4>;

// Set partitions of the four positions (i, j, k, l) of a_ij * a_kl, as
// restricted growth strings.
constexpr std::array<Partition, 15> kPartitions{{
    {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}, {0, 0, 1, 1}, {0, 0, 1, 2},
    {0, 1, 0, 0}, {0, 1, 0, 1}, {0, 1, 0, 2}, {0, 1, 1, 0}, {0, 1, 1, 1},
    {0, 1, 1, 2}, {0, 1, 2, 0}, {0, 1, 2, 1}, {0, 1, 2, 2}, {0, 1, 2, 3},
}};

int block_count(const Partition& p) { return *std::max_element(p.begin(), p.end()) + 1; }

// tau is coarser than or equal to pi.
bool coarsens(const Partition& tau, const Partition& pi) {
    for (int x = 0; x < 4; ++x)
        for (int y = x + 1; y < 4; ++y)
            if (pi[x] == pi[y] && tau[x] != tau[y]) return false;
    return true;
}

// Moebius function of the partition lattice on [pi, tau].
double moebius(const Partition& pi, const Partition& tau) {
    static constexpr std::array<double, 5> signed_factorial{1.0, -1.0, 2.0, -6.0, 24.0};
    std::array<int, 4> merged{};
    std::array<bool, 4> seen{};
    for (int x = 0; x < 4; ++x) {
        if (!seen[static_cast<std::size_t>(pi[x])]) {
            seen[static_cast<std::size_t>(pi[x])] = true;
            ++merged[static_cast<std::size_t>(tau[x])];
        }
    }
    double mu = 1.0;
    for (int m : merged)
        if (m > 0) mu *= signed_factorial[static_cast<std::size_t>(m - 1)];
    return mu;
}

}  // namespace

double quadratic_form_mean(const Eigen::MatrixXd& a, Index d1) {
    const Index k = a.rows();
    require(a.cols() == k, ErrorCode::InvalidArgument, "matrix must be square");
    require_design(k, d1);
    const double diag = a.diagonal().sum();
    const double total = a.sum();
    return joint_inclusion(k, d1, 1) * diag + joint_inclusion(k, d1, 2) * (total - diag);
}

double quadratic_form_variance(const Eigen::MatrixXd& a, Index d1) {
    const Index k = a.rows();
    require(a.cols() == k, ErrorCode::InvalidArgument, "matrix must be square");
    require_design(k, d1);

    const Eigen::VectorXd row = a.rowwise().sum();
    const Eigen::VectorXd diag = a.diagonal();
    const double t = row.sum();
    const double d = diag.sum();
    const double r2 = row.squaredNorm();
    const double frob = a.squaredNorm();
    const double dr = diag.dot(row);
    const double d2 = diag.squaredNorm();

    // Sums of a_ij a_kl with the positions in each block tied together and
    // blocks left unconstrained (a symmetric).
    auto unconstrained = [&](const Partition& p) -> double {
        const bool ij = p[0] == p[1], kl = p[2] == p[3];
        const int blocks = block_count(p);
        if (blocks == 1) return d2;
        if (blocks == 4) return t * t;
        if (blocks == 2) {
            if (ij && kl) return d * d;      // {i,j}{k,l}
            if (!ij && !kl) return frob;     // {i,k}{j,l} or {i,l}{j,k}
            return dr;                       // a triple plus a singleton
        }
        // blocks == 3: exactly one tied pair
        if (ij || kl) return d * t;
        return r2;
    };

    std::array<double, 15> u{};
    for (std::size_t s = 0; s < kPartitions.size(); ++s) u[s] = unconstrained(kPartitions[s]);

    double second_moment = 0.0;
    for (const auto& pi : kPartitions) {
        double distinct = 0.0;
        for (std::size_t s = 0; s < kPartitions.size(); ++s) {
            if (coarsens(kPartitions[s], pi)) distinct += moebius(pi, kPartitions[s]) * u[s];
        }
        second_moment += joint_inclusion(k, d1, block_count(pi)) * distinct;
    }
    const double mean = quadratic_form_mean(a, d1);
    return std::max(0.0, second_moment - mean * mean);
}

SelectionRegime classify_regime(Index d1, Index d2) {
    require(d1 >= 1 && d2 >= 1, ErrorCode::InvalidArgument, "d1 and d2 must be positive");
    if (d1 == d2) return SelectionRegime::EqualSelection;
    return d2 > d1 ? SelectionRegime::MoreUnobserved : SelectionRegime::MoreObserved;
}

}  // namespace covsamp
