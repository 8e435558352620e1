#include "covsamp/error.hpp"
#include "covsamp/population.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace covsamp;

namespace {

CovarianceModel small_model(const Eigen::Matrix2d& vw, const Eigen::Vector2d& cxw) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4) * 4.0;
    s.block(2, 2, 2, 2) = vw;
    s.block(2, 1, 2, 1) = cxw;
    s.block(1, 2, 1, 2) = cxw.transpose();
    return CovarianceModel(default_labels(2), s);
}

}  // namespace

TEST_CASE("projection on identity predictors returns the covariances") {
    auto m = small_model(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.1, 0.2));
    auto p = project(m, 1, {2, 3});
    CHECK(p.coefficients(0) == doctest::Approx(0.1));
    CHECK(p.coefficients(1) == doctest::Approx(0.2));
}

TEST_CASE("projection solves the normal equations") {
    Eigen::Matrix2d vw;
    vw << 1, 0.5, 0.5, 1;
    auto m = small_model(vw, Eigen::Vector2d(1, 0.5));
    auto p = project(m, 1, {2, 3});
    CHECK(p.coefficients(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(p.coefficients(1)) < 1e-12);
}

TEST_CASE("projecting a variable on itself is rejected") {
    auto m = small_model(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.1, 0.2));
    CHECK_THROWS_AS(project(m, 1, {1}), Error);
}

TEST_CASE("schur complement") {
    Eigen::MatrixXd vw(2, 2);
    vw << 1, 0.5, 0.5, 1;
    auto r = residual_covariance(vw, {1}, {0});
    CHECK(r(0, 0) == doctest::Approx(0.75));

    Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(3, 3);
    ident(0, 0) = 2.0;
    auto same = residual_covariance(ident, {0}, {1, 2});
    CHECK(same(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("exchangeable residual covariance closed form") {
    const double rho = 0.5;
    Eigen::MatrixXd vw = Eigen::MatrixXd::Constant(4, 4, rho);
    vw.diagonal().setOnes();
    auto r = residual_covariance(vw, {2, 3}, {0, 1});
    Eigen::MatrixXd expect = Eigen::MatrixXd::Constant(2, 2, 1.0 / 6.0);
    expect.diagonal().array() += 0.5;
    CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial R squared") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
    s(0, 1) = s(1, 0) = 0.6;
    CovarianceModel m({"Y", "X", "W1"}, s);
    CHECK(partial_r_squared(m, 0, {1}, {}) == doctest::Approx(0.36));
    CHECK(partial_r_squared(m, 0, {2}, {1}) == doctest::Approx(0.0));
}

TEST_CASE("covariance model validation") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
    s(0, 1) = 0.1;
    CHECK_THROWS_AS(CovarianceModel(default_labels(1), s), Error);
    Eigen::MatrixXd sing = Eigen::MatrixXd::Ones(3, 3);
    try {
        CovarianceModel(default_labels(1), sing);
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotPositiveDefinite);
    }
    CHECK_THROWS_AS(CovarianceModel({"Y", "X", "X"}, Eigen::MatrixXd::Identity(3, 3)), Error);
}

TEST_CASE("population recovers structural coefficients") {
    std::mt19937_64 gen(3);
    const Index k = 6;
    Eigen::MatrixXd vw = testing::random_pd(k, gen);
    Eigen::VectorXd pi = testing::random_vec(k, gen), gamma = testing::random_vec(k, gen);
    auto pop = testing::make_population(vw, pi, gamma, 0.7, 1.3, 0.9);
    CHECK(pop.beta_long() == doctest::Approx(0.7).epsilon(1e-10));
    CHECK((pop.pi() - pi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pop.gamma() - gamma).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(pop.x_resid_var() == doctest::Approx(1.3).epsilon(1e-10));
    CHECK(pop.y_resid_var() == doctest::Approx(0.9).epsilon(1e-10));
    CHECK((pop.precision() * vw - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("beta_medium and ovb") {
    std::mt19937_64 gen(5);
    const Index k = 5;
    Eigen::MatrixXd vw = testing::random_pd(k, gen);
    auto pop = testing::make_population(vw, testing::random_vec(k, gen), testing::random_vec(k, gen), 0.4);
    auto all = SelectionMask::from_word(0b11111, k);
    auto none = SelectionMask::from_word(0, k);
    CHECK(beta_medium(pop, all) == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(std::abs(ovb(pop, all)) < 1e-10);
    CHECK(beta_medium(pop, none) == doctest::Approx(pop.cov_yx() / pop.var_x()).epsilon(1e-10));

    // independent solve for a half mask
    auto half = SelectionMask::from_word(0b00101, k);
    const auto& s = pop.cov().sigma();
    IndexSet pred{1, 2, 4};
    Eigen::MatrixXd a = gather(s, pred, pred);
    Eigen::VectorXd b = gather(s, pred, IndexSet{0});
    Eigen::VectorXd coef = a.fullPivLu().solve(b);
    CHECK(beta_medium(pop, half) == doctest::Approx(coef(0)).epsilon(1e-10));

    auto no_gamma = testing::make_population(vw, testing::random_vec(k, gen), Eigen::VectorXd::Zero(k));
    CHECK(std::abs(ovb(no_gamma, half)) < 1e-10);
}
