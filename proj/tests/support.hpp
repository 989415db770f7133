#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sdr/data.hpp"
#include "sdr/random.hpp"
#include "sdr/simulation.hpp"

namespace sdr::fixture {

inline Eigen::MatrixXd random_matrix(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

/// Well-conditioned random nonsingular matrix.
inline Eigen::MatrixXd random_nonsingular(RandomStream& rng, Eigen::Index p) {
    while (true) {
        Eigen::MatrixXd A = random_matrix(rng, p, p) + 2.0 * Eigen::MatrixXd::Identity(p, p);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        const auto& sv = svd.singularValues();
        if (sv(p - 1) > 0.05 * sv(0)) return A;
    }
}

/// Correlated predictors and a nonlinear two-index response.
inline Dataset random_regression(RandomStream& rng, Eigen::Index n, Eigen::Index p) {
    const Eigen::MatrixXd L = random_nonsingular(rng, p);
    Eigen::MatrixXd X = random_matrix(rng, n, p) * L.transpose();
    for (Eigen::Index j = 0; j < p; ++j) X.col(j).array() += rng.uniform(-3.0, 3.0);
    const Eigen::VectorXd b1 = random_matrix(rng, p, 1);
    const Eigen::VectorXd b2 = random_matrix(rng, p, 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = X.row(i).dot(b1) / std::sqrt(static_cast<double>(p));
        const double v = X.row(i).dot(b2) / std::sqrt(static_cast<double>(p));
        y(i) = std::sin(u) + 0.3 * v * v + 0.5 * rng.normal();
    }
    return Dataset(std::move(X), std::move(y), default_names(p));
}

inline Eigen::Index uniform_int(RandomStream& rng, Eigen::Index lo, Eigen::Index hi) {
    return lo + static_cast<Eigen::Index>(std::floor(rng.uniform() * static_cast<double>(hi - lo + 1)));
}

}  // namespace sdr::fixture
