#include "covsamp/error.hpp"
#include "covsamp/selection.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <set>

using namespace covsamp;

TEST_CASE("mask basics") {
    auto m = SelectionMask::parse("1100");
    CHECK(m.d1() == 2);
    CHECK(m.observed(0));
    CHECK(!m.observed(2));
    CHECK(m.complement().to_string() == "0011");
    CHECK(m.observed_indices() == IndexSet{0, 1});
    CHECK(SelectionMask::from_word(0b0011, 4) == m);
    CHECK_THROWS_AS(SelectionMask::parse("10x"), Error);
}

TEST_CASE("binomial counts") {
    CHECK(binomial(4, 2) == 6);
    CHECK(binomial(22, 11) == 705432);
    CHECK(binomial(22, 19) == 1540);
    CHECK(binomial(30, 15) == 155117520);
    CHECK(binomial(200, 100) == UINT64_MAX);
}

TEST_CASE("enumerator covers every mask once in order") {
    MaskEnumerator e(10, 4);
    CHECK(e.count() == 210);
    std::set<std::string> seen;
    std::uint64_t prev = 0;
    std::uint64_t n = 0;
    for (auto c = e.all(); !c.done(); c.advance()) {
        const auto& m = c.mask();
        CHECK(m.d1() == 4);
        CHECK(e.rank(m) == c.rank());
        CHECK(e.unrank(c.rank()) == m);
        std::uint64_t word = 0;
        for (Index i = 0; i < 10; ++i)
            if (m.observed(i)) word |= 1ull << i;
        if (n > 0) CHECK(word > prev);
        prev = word;
        seen.insert(m.to_string());
        ++n;
    }
    CHECK(n == 210);
    CHECK(seen.size() == 210);

    // a mid-range cursor agrees with the full walk
    auto c = e.range(100, 105);
    for (std::uint64_t r = 100; r < 105; ++r, c.advance()) CHECK(c.mask() == e.unrank(r));
    CHECK(c.done());
}

TEST_CASE("enumerator overflow and design checks") {
    try {
        MaskEnumerator e(40, 20);
        FAIL("expected overflow");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::Overflow);
    }
    CHECK_THROWS_AS(MaskEnumerator(30, 15, 1000), Error);
    CHECK_THROWS_AS(require_design(5, 0), Error);
    CHECK_THROWS_AS(require_design(5, 5), Error);
}

TEST_CASE("sampling is uniform and reproducible") {
    CHECK(sample_mask(12, 5, 9, 3) == sample_mask(12, 5, 9, 3));
    std::vector<int> hits(8, 0);
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) {
        auto m = sample_mask(8, 3, 11, static_cast<std::uint64_t>(i));
        CHECK(m.d1() == 3);
        for (Index j = 0; j < 8; ++j) hits[static_cast<std::size_t>(j)] += m.observed(j);
    }
    for (int h : hits) CHECK(std::abs(h / double(draws) - 3.0 / 8.0) < 0.015);
}

TEST_CASE("inclusion moments and finite population variance") {
    auto [p1, p2] = inclusion_moments(2, 1);
    CHECK(p1 == doctest::Approx(0.5));
    CHECK(p2 == doctest::Approx(0.0));
    auto [q1, q2] = inclusion_moments(22, 11);
    CHECK(q1 == doctest::Approx(0.5));
    CHECK(q2 == doctest::Approx(110.0 / 462.0));

    CHECK(finite_pop_variance(Eigen::Vector2d(1, 0), 1) == doctest::Approx(0.25));
    CHECK(std::abs(finite_pop_variance(Eigen::VectorXd::Constant(6, 2.0), 3)) < 1e-14);

    std::mt19937_64 gen(7);
    Eigen::VectorXd xi = testing::random_vec(10, gen);
    MaskEnumerator e(10, 4);
    double s1 = 0, s2 = 0;
    for (auto c = e.all(); !c.done(); c.advance()) {
        double t = 0;
        for (Index i = 0; i < 10; ++i)
            if (c.mask().observed(i)) t += xi(i);
        s1 += t;
        s2 += t * t;
    }
    const double n = double(e.count());
    CHECK(finite_pop_variance(xi, 4) == doctest::Approx(s2 / n - (s1 / n) * (s1 / n)).epsilon(1e-12));
}

TEST_CASE("quadratic form moments match enumeration") {
    std::mt19937_64 gen(13);
    const Index k = 8, d1 = 3;
    Eigen::MatrixXd a = testing::random_pd(k, gen);
    MaskEnumerator e(k, d1);
    double s1 = 0, s2 = 0;
    for (auto c = e.all(); !c.done(); c.advance()) {
        auto idx = c.mask().observed_indices();
        double t = gather(a, idx, idx).sum();
        s1 += t;
        s2 += t * t;
    }
    const double n = double(e.count());
    CHECK(quadratic_form_mean(a, d1) == doctest::Approx(s1 / n).epsilon(1e-12));
    CHECK(quadratic_form_variance(a, d1) == doctest::Approx(s2 / n - (s1 / n) * (s1 / n)).epsilon(1e-10));
}

TEST_CASE("regimes") {
    CHECK(classify_regime(11, 11) == SelectionRegime::EqualSelection);
    CHECK(classify_regime(19, 3) == SelectionRegime::MoreObserved);
    CHECK(classify_regime(3, 19) == SelectionRegime::MoreUnobserved);
}
