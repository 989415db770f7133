#pragma once

// Coordinate hypotheses P_H S = 0 and their orthonormal Z-scale bases.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/config.hpp"
#include "sdr/error.hpp"
#include "sdr/sir.hpp"
#include "sdr/standardize.hpp"

namespace sdr {

/// H = Span(alpha_x) in the original predictor scale.
struct CoordinateHypothesis {
    Eigen::MatrixXd alpha_x;  // p x r, full column rank
    std::string description;

    Eigen::Index p() const noexcept { return alpha_x.rows(); }
    Eigen::Index r() const noexcept { return alpha_x.cols(); }
};

/// Arbitrary full-rank p x r basis.
inline CoordinateHypothesis hypothesis_from_matrix(Eigen::MatrixXd alpha_x, std::string description = "matrix",
                                                   const Tolerances& tol = kDefaultTolerances) {
    if (alpha_x.cols() < 1 || alpha_x.rows() < 1) throw ArgumentError("hypothesis basis is empty");
    if (alpha_x.cols() > alpha_x.rows())
        throw ArgumentError("hypothesis has more columns than predictors");
    if (!alpha_x.allFinite()) throw ArgumentError("hypothesis basis has non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(alpha_x);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(sv.size() - 1) <= tol.rank_relative * sv(0))
        throw ArgumentError("hypothesis basis is not of full column rank");
    return {std::move(alpha_x), std::move(description)};
}

/// H spanned by the coordinate axes of the chosen predictors (0-based positions).
inline CoordinateHypothesis predictor_subset(const std::vector<Eigen::Index>& indices, Eigen::Index p) {
    if (indices.empty()) throw ArgumentError("empty predictor set");
    const std::set<Eigen::Index> unique(indices.begin(), indices.end());
    if (unique.size() != indices.size()) throw ArgumentError("repeated predictor in hypothesis");
    Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(indices.size()));
    std::string description = "predictors {";
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto j = indices[k];
        if (j < 0 || j >= p)
            throw ArgumentError("predictor index " + std::to_string(j) + " out of range [0, " +
                                std::to_string(p) + ")");
        alpha(j, static_cast<Eigen::Index>(k)) = 1.0;
        description += (k ? "," : "") + std::to_string(j);
    }
    description += "}";
    return {std::move(alpha), std::move(description)};
}

/// Orthonormal basis of the estimated hypothesis subspace on the Z scale.
struct HypothesisBasisZ {
    Eigen::MatrixXd alpha_hat;  // p x r, alpha_hat^T alpha_hat = I
    Eigen::MatrixXd P;
    Eigen::MatrixXd Q;

    Eigen::Index r() const noexcept { return alpha_hat.cols(); }
};

/// alpha_hat = cov^(-1/2) alpha_x (alpha_x^T cov^(-1) alpha_x)^(-1/2).
inline HypothesisBasisZ to_z_basis(const CoordinateHypothesis& hyp, const StandardizedSample& sample,
                                   const Tolerances& tol = kDefaultTolerances) {
    if (hyp.p() != sample.p())
        throw ArgumentError("hypothesis has " + std::to_string(hyp.p()) + " rows but there are " +
                            std::to_string(sample.p()) + " predictors");
    const Eigen::MatrixXd inner = hyp.alpha_x.transpose() * sample.cov_inv * hyp.alpha_x;
    Eigen::MatrixXd inner_inv_sqrt;
    try {
        inner_inv_sqrt = sym_inv_sqrt(inner, tol);
    } catch (const SingularError& e) {
        throw ArgumentError(std::string("hypothesis basis is rank deficient after standardization: ") +
                            e.what());
    }
    HypothesisBasisZ b;
    b.alpha_hat = sample.cov_inv_sqrt * hyp.alpha_x * inner_inv_sqrt;
    b.P = b.alpha_hat * b.alpha_hat.transpose();
    b.P = 0.5 * (b.P + b.P.transpose());
    b.Q = Eigen::MatrixXd::Identity(sample.p(), sample.p()) - b.P;
    return b;
}

struct ProjectedSpectrum {
    Eigen::VectorXd lambdas;  // eigenvalues of Q M Q, descending
    Eigen::MatrixXd F;        // Gamma0^T Q Gamma0
    Eigen::MatrixXd G;        // Gamma0^T P Gamma0
};

inline ProjectedSpectrum projected_spectrum(const SirFit& fit, const HypothesisBasisZ& basis) {
    if (basis.P.rows() != fit.p()) throw ArgumentError("hypothesis and fit disagree on p");
    ProjectedSpectrum out;
    out.lambdas = sym_eigenvalues(basis.Q * fit.M * basis.Q);
    out.F = fit.Gamma0.transpose() * basis.Q * fit.Gamma0;
    out.G = fit.Gamma0.transpose() * basis.P * fit.Gamma0;
    return out;
}

}  // namespace sdr
