#pragma once

// Sample moments, symmetric inverse square roots and the Z-scale transform.

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "sdr/config.hpp"
#include "sdr/data.hpp"
#include "sdr/error.hpp"

namespace sdr {

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
struct SymEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Symmetric eigendecomposition with descending eigenvalues. Each eigenvector
/// is signed so that its entry of largest magnitude is positive.
inline SymEigen sym_eigen(const Eigen::MatrixXd& S) {
    const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw SingularError("eigendecomposition failed", INFINITY);
    const auto k = S.rows();
    SymEigen out{solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::Index arg = 0;
        out.vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (out.vectors(arg, j) < 0) out.vectors.col(j) *= -1.0;
    }
    return out;
}

/// Eigenvalues only, descending.
inline Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& S) {
    const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().reverse();
}

namespace detail {

inline void require_pd(const Eigen::VectorXd& values, const Tolerances& tol, const char* what) {
    const double top = values(0);
    const double bottom = values(values.size() - 1);
    if (!(top > 0.0) || bottom <= tol.pd_relative * top) {
        const double cond = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
        throw SingularError(std::string(what) + " is singular or nearly so (condition estimate " +
                                std::to_string(cond) + ")",
                            cond);
    }
}

}  // namespace detail

/// S^(-1/2) for symmetric positive-definite S.
inline Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& S, const Tolerances& tol = kDefaultTolerances) {
    if (S.rows() != S.cols() || S.rows() == 0) throw ArgumentError("sym_inv_sqrt needs a square matrix");
    const auto eig = sym_eigen(S);
    detail::require_pd(eig.values, tol, "matrix");
    const Eigen::VectorXd scale = eig.values.cwiseSqrt().cwiseInverse();
    return eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
}

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // divisor n
};

inline Moments sample_moments(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw ArgumentError("sample_moments needs at least 2 rows");
    Moments m;
    m.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - m.mean.transpose();
    m.cov = centered.transpose() * centered / static_cast<double>(X.rows());
    m.cov = 0.5 * (m.cov + m.cov.transpose());
    return m;
}

/// Predictors on the Z scale together with the moments that produced them.
struct StandardizedSample {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd cov_inv;
    Eigen::MatrixXd cov_inv_sqrt;
    Eigen::MatrixXd Z;  // n x p, rows in observation order

    Eigen::Index n() const noexcept { return Z.rows(); }
    Eigen::Index p() const noexcept { return Z.cols(); }
};

namespace detail {

// Best-effort description of which predictors make the covariance singular.
inline std::string describe_singularity(const Dataset& data, const SymEigen& eig) {
    const auto& X = data.X();
    const Eigen::VectorXd var = (X.rowwise() - X.colwise().mean()).colwise().squaredNorm().transpose() /
                                static_cast<double>(data.n());
    const double vmax = var.maxCoeff();
    std::string constant;
    for (Eigen::Index j = 0; j < var.size(); ++j)
        if (var(j) <= 1e-12 * std::max(vmax, 1e-300))
            constant += (constant.empty() ? "" : ", ") + data.names()[static_cast<std::size_t>(j)];
    if (!constant.empty()) return "near-constant predictor(s): " + constant;
    const Eigen::VectorXd v = eig.vectors.col(eig.vectors.cols() - 1);
    const double vabs = v.cwiseAbs().maxCoeff();
    std::string involved;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (std::abs(v(j)) > 0.1 * vabs)
            involved += (involved.empty() ? "" : ", ") + data.names()[static_cast<std::size_t>(j)];
    return "collinear predictor set: " + involved;
}

}  // namespace detail

/// Z_i = cov^(-1/2) (X_i - mean), with the divisor-n sample covariance.
inline StandardizedSample standardize(const Dataset& data, const Tolerances& tol = kDefaultTolerances) {
    auto m = sample_moments(data.X());
    const auto eig = sym_eigen(m.cov);
    try {
        detail::require_pd(eig.values, tol, "predictor covariance");
    } catch (const SingularError& e) {
        throw SingularError(std::string(e.what()) + "; " + detail::describe_singularity(data, eig),
                            e.condition());
    }
    StandardizedSample s;
    const Eigen::VectorXd inv_sqrt = eig.values.cwiseSqrt().cwiseInverse();
    s.cov_inv_sqrt = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
    s.cov_inv = eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose();
    s.Z = (data.X().rowwise() - m.mean.transpose()) * s.cov_inv_sqrt;
    s.mean = std::move(m.mean);
    s.cov = std::move(m.cov);
    return s;
}

}  // namespace sdr
