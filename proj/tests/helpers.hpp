#pragma once

#include "covsamp/population.hpp"

#include <algorithm>
#include <random>

namespace testing {

using covsamp::Index;

// (Y, X, W) covariance from the structural pieces.
inline covsamp::Population make_population(const Eigen::MatrixXd& var_w, const Eigen::VectorXd& pi,
                                           const Eigen::VectorXd& gamma, double beta = 1.0, double sx = 1.0,
                                           double sy = 1.0) {
    const Index k = var_w.rows();
    Eigen::MatrixXd s(k + 2, k + 2);
    const Eigen::VectorXd vp = var_w * pi;
    const Eigen::VectorXd vg = var_w * gamma;
    const double var_x = pi.dot(vp) + sx;
    const double cov_yx = beta * var_x + gamma.dot(vp);
    const double var_y = beta * beta * var_x + 2.0 * beta * gamma.dot(vp) + gamma.dot(vg) + sy;
    s(0, 0) = var_y;
    s(1, 1) = var_x;
    s(0, 1) = s(1, 0) = cov_yx;
    s.block(2, 2, k, k) = var_w;
    s.block(2, 1, k, 1) = vp;
    s.block(1, 2, 1, k) = vp.transpose();
    s.block(2, 0, k, 1) = beta * vp + vg;
    s.block(0, 2, 1, k) = (beta * vp + vg).transpose();
    return covsamp::Population(covsamp::CovarianceModel(covsamp::default_labels(k), s));
}

inline Eigen::MatrixXd random_pd(Index k, std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd b(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) b(i, j) = n(gen);
    return b * b.transpose() / static_cast<double>(k) + 0.3 * Eigen::MatrixXd::Identity(k, k);
}

inline Eigen::VectorXd random_vec(Index k, std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd v(k);
    for (Index i = 0; i < k; ++i) v(i) = n(gen);
    return v;
}

inline covsamp::SelectionMask random_mask(Index k, Index d1, std::mt19937_64& gen) {
    std::vector<Index> idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    idx.resize(static_cast<std::size_t>(d1));
    std::sort(idx.begin(), idx.end());
    return covsamp::SelectionMask::from_indices(k, idx);
}

}  // namespace testing
