#include "covsamp/params.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace covsamp;

namespace {

Population diagonal_instance() {
    Eigen::VectorXd pi(4), gamma(4);
    pi << 0.1, 0.2, 0.3, 0.4;
    gamma << 0.4, 0.3, 0.2, 0.1;
    return testing::make_population(Eigen::MatrixXd::Identity(4, 4), pi, gamma);
}

double value(const Population& pop, const SelectionMask& m, ParamId id) {
    auto e = evaluate_one(pop, m, id);
    REQUIRE(e.ok());
    return e.value;
}

}  // namespace

TEST_CASE("names round trip") {
    for (ParamId id : all_params) CHECK(parse_param_id(to_string(id)) == id);
    CHECK(!parse_param_id("nope"));
}

TEST_CASE("diagonal instance hand values") {
    auto pop = diagonal_instance();
    auto m = SelectionMask::parse("1100");
    CHECK(value(pop, m, ParamId::DeltaOrig) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(value(pop, m, ParamId::DeltaResid) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(value(pop, m, ParamId::DeltaAcet) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(value(pop, m, ParamId::RX) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(value(pop, m, ParamId::KX) == doctest::Approx(5.0).epsilon(1e-12));
    // no covariance between W1 and W2, so the alternative k_X agrees
    CHECK(value(pop, m, ParamId::KXAlt) == doctest::Approx(value(pop, m, ParamId::KX)).epsilon(1e-12));
}

TEST_CASE("diagonal instance partial R squared oracle for k_Y") {
    auto pop = diagonal_instance();
    auto m = SelectionMask::parse("1100");
    const auto& cov = pop.cov();
    // W1 and W2 are uncorrelated here, so W2^{perp W1} is W2 itself
    const double num = partial_r_squared(cov, 0, {4, 5}, {1});
    const double den = partial_r_squared(cov, 0, {2, 3}, {1});
    CHECK(value(pop, m, ParamId::KY) == doctest::Approx(num / den).epsilon(1e-10));
}

TEST_CASE("residualized delta can vanish while the original does not") {
    Eigen::MatrixXd vw(2, 2);
    vw << 1, 0.5, 0.5, 1;
    auto pop = testing::make_population(vw, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1));
    auto m = SelectionMask::parse("10");
    CHECK(std::abs(value(pop, m, ParamId::DeltaResid)) < 1e-12);
    CHECK(value(pop, m, ParamId::DeltaOrig) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gamma on unobserved block uncorrelated with X gives zero delta") {
    Eigen::VectorXd pi(4), gamma(4);
    pi << 1, 1, 0, 0;
    gamma << 1, 1, 1, 1;
    auto pop = testing::make_population(Eigen::MatrixXd::Identity(4, 4), pi, gamma);
    CHECK(std::abs(value(pop, SelectionMask::parse("1100"), ParamId::DeltaOrig)) < 1e-14);
}

TEST_CASE("degenerate indices are failure codes, not NaN") {
    auto pop = testing::make_population(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Ones(4),
                                        Eigen::VectorXd::Zero(4));
    for (ParamId id : all_params) {
        auto e = evaluate_one(pop, SelectionMask::parse("1100"), id);
        if (!e.ok()) CHECK(e.failure != Failure::None);
        else CHECK(std::isfinite(e.value));
    }
    auto e = evaluate_one(pop, SelectionMask::parse("1100"), ParamId::DeltaOrig);
    CHECK(!e.ok());
}

TEST_CASE("fast evaluator agrees with the reference definitions") {
    std::mt19937_64 gen(17);
    for (int rep = 0; rep < 25; ++rep) {
        const Index k = 2 + static_cast<Index>(gen() % 9);
        auto pop = testing::make_population(testing::random_pd(k, gen), testing::random_vec(k, gen),
                                            testing::random_vec(k, gen), 0.8, 1.1, 0.7);
        MaskEvaluator ev(pop);
        for (Index d1 = 1; d1 < k; ++d1) {
            auto m = testing::random_mask(k, d1, gen);
            auto batch = ev.evaluate(m, all_params);
            for (std::size_t i = 0; i < all_params.size(); ++i) {
                auto ref = reference::evaluate(pop, m, all_params[i]);
                CAPTURE(to_string(all_params[i]));
                CAPTURE(m.to_string());
                REQUIRE(ref.ok() == batch[i].ok());
                if (ref.ok())
                    CHECK(batch[i].value == doctest::Approx(ref.value).epsilon(1e-9).scale(1.0));
                auto single = evaluate_one(pop, m, all_params[i]);
                CHECK(single.ok() == batch[i].ok());
                if (single.ok()) CHECK(single.value == batch[i].value);
            }
        }
    }
}

TEST_CASE("empty id list") {
    auto pop = diagonal_instance();
    CHECK(evaluate(pop, SelectionMask::parse("1100"), {}).empty());
}

TEST_CASE("reciprocal swap and scale invariance") {
    std::mt19937_64 gen(23);
    const Index k = 7;
    Eigen::MatrixXd vw = testing::random_pd(k, gen);
    Eigen::VectorXd pi = testing::random_vec(k, gen), gamma = testing::random_vec(k, gen);
    auto pop = testing::make_population(vw, pi, gamma);
    Eigen::MatrixXd s = pop.cov().sigma();
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(k + 2);
    scale(0) = 3.0;
    scale(1) = 2.0;
    Population scaled(CovarianceModel(default_labels(k), scale.asDiagonal() * s * scale.asDiagonal()));
    auto m = testing::random_mask(k, 3, gen);
    for (ParamId id : {ParamId::RX, ParamId::RY, ParamId::DeltaOrig, ParamId::DeltaAcet})
        CHECK(value(pop, m, id) * value(pop, m.complement(), id) == doctest::Approx(1.0).epsilon(1e-10));
    for (ParamId id : all_params)
        CHECK(value(scaled, m, id) == doctest::Approx(value(pop, m, id)).epsilon(1e-10));
}
