#pragma once

// Covariance estimators behind the reference distributions of the coordinate
// and dimension tests.
//
// Stacking convention: vec() stacks columns, so vec(alpha_hat^T Zn) runs the
// hypothesis coordinate fastest and the slice slowest. Every Kronecker product
// below is written (slice factor) x (hypothesis or predictor factor) to match.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/config.hpp"
#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/hypothesis.hpp"
#include "sdr/sir.hpp"
#include "sdr/standardize.hpp"

namespace sdr {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

/// OLS residuals of each slice indicator J_y regressed on X with an intercept.
struct IndicatorResiduals {
    Eigen::MatrixXd eps;   // n x h
    Eigen::MatrixXd beta;  // p x h
};

inline IndicatorResiduals indicator_residuals(const Dataset& data, const SlicedResponse& slices) {
    const auto n = data.n();
    if (slices.n() != n) throw ArgumentError("slice labels do not match sample size");
    Eigen::MatrixXd Jc = -Eigen::MatrixXd::Ones(n, 1) * slices.props.transpose();
    for (Eigen::Index i = 0; i < n; ++i) Jc(i, slices.labels[static_cast<std::size_t>(i)]) += 1.0;
    const Eigen::MatrixXd Xc = data.X().rowwise() - data.X().colwise().mean();
    // QR on the centered design, not the normal equations, to avoid squaring its condition number.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
    qr.setThreshold(1e-10);
    if (qr.rank() < Xc.cols()) throw SingularError("singular design in indicator regression", INFINITY);
    IndicatorResiduals out;
    out.beta = qr.solve(Jc);
    out.eps = Jc - Xc * out.beta;
    return out;
}

enum class WeightKind {
    marginal_general,
    marginal_constrained,
    conditional_general,
    conditional_constrained,
    dim_general,
    dim_constrained_prime,
};

inline const char* to_string(WeightKind k) {
    switch (k) {
        case WeightKind::marginal_general: return "marginal_general";
        case WeightKind::marginal_constrained: return "marginal_constrained";
        case WeightKind::conditional_general: return "conditional_general";
        case WeightKind::conditional_constrained: return "conditional_constrained";
        case WeightKind::dim_general: return "dim_general";
        case WeightKind::dim_constrained_prime: return "dim_constrained_prime";
    }
    return "unknown";
}

/// Symmetric PSD covariance whose eigenvalues weight a chi-squared mixture.
struct WeightMatrix {
    Eigen::MatrixXd omega;
    WeightKind kind;
};

/// Descending eigenvalues of a covariance matrix with tiny negatives clamped
/// to zero. Larger negatives mean the estimator is broken, so they abort.
inline std::vector<double> clamped_eigenvalues(const Eigen::MatrixXd& omega, const char* label,
                                               const Tolerances& tol = kDefaultTolerances) {
    const Eigen::VectorXd ev = sym_eigenvalues(omega);
    std::vector<double> out(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -tol.psd_clamp) {
            std::ostringstream msg;
            msg << label << " has eigenvalue " << ev(i) << " below -" << tol.psd_clamp << " ("
                << omega.rows() << "x" << omega.cols() << ", max asymmetry "
                << (omega - omega.transpose()).cwiseAbs().maxCoeff() << ", spectrum "
                << ev.transpose() << ")";
            throw SingularError(msg.str(), INFINITY);
        }
        out[static_cast<std::size_t>(i)] = std::max(ev(i), 0.0);
    }
    return out;
}

inline std::vector<double> weights(const WeightMatrix& w, const Tolerances& tol = kDefaultTolerances) {
    return clamped_eigenvalues(w.omega, to_string(w.kind), tol);
}

/// (1/n) sum_i (D^-1 e_i e_i^T D^-1) kron (alpha^T Z_i Z_i^T alpha), hr x hr.
inline WeightMatrix omega_h_general(const IndicatorResiduals& res, const StandardizedSample& sample,
                                    const HypothesisBasisZ& basis, const SlicedResponse& slices) {
    const auto n = sample.n();
    const auto h = static_cast<Eigen::Index>(slices.h);
    const auto r = basis.r();
    for (Eigen::Index y = 0; y < h; ++y)
        if (!(slices.roots(y) > 0.0)) throw ArgumentError("empty slice in omega_h_general");
    const Eigen::MatrixXd scaled = res.eps * slices.roots.cwiseInverse().asDiagonal();  // n x h
    const Eigen::MatrixXd proj = sample.Z * basis.alpha_hat;                          // n x r
    // Row i of W is kron(scaled_i, proj_i); Omega = W^T W / n.
    Eigen::MatrixXd W(n, h * r);
    for (Eigen::Index y = 0; y < h; ++y)
        W.middleCols(y * r, r) = proj.array().colwise() * scaled.col(y).array();
    Eigen::MatrixXd omega = W.transpose() * W / static_cast<double>(n);
    omega = 0.5 * (omega + omega.transpose());
    return {std::move(omega), WeightKind::marginal_general};
}

/// Q_g - Zn^T Zn, the h x h core of the constrained marginal covariance.
inline Eigen::MatrixXd constrained_core(const SirFit& fit, const SlicedResponse& slices) {
    const auto h = static_cast<Eigen::Index>(slices.h);
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(h, h) - slices.roots * slices.roots.transpose() -
                           fit.Zn.transpose() * fit.Zn;
    return 0.5 * (core + core.transpose());
}

/// (Q_g - Zn^T Zn) kron I_r.
inline WeightMatrix omega_h_constrained(const SirFit& fit, const SlicedResponse& slices, Eigen::Index r) {
    if (r < 1) throw ArgumentError("hypothesis dimension must be positive");
    return {kron(constrained_core(fit, slices), Eigen::MatrixXd::Identity(r, r)),
            WeightKind::marginal_constrained};
}

/// (Psi1^T kron I_r) Omega_H (Psi1 kron I_r).
inline WeightMatrix omega_hd_general(const WeightMatrix& omega_h, const Eigen::MatrixXd& psi1, Eigen::Index r) {
    if (r < 1 || omega_h.omega.rows() != psi1.rows() * r)
        throw ArgumentError("omega_hd_general: dimension mismatch");
    const Eigen::MatrixXd T = kron(psi1, Eigen::MatrixXd::Identity(r, r));
    Eigen::MatrixXd out = T.transpose() * omega_h.omega * T;
    out = 0.5 * (out + out.transpose());
    return {std::move(out), WeightKind::conditional_general};
}

/// (I_d - diag(lambda_1..d)) kron I_r.
inline WeightMatrix omega_hd_constrained(const Eigen::VectorXd& lambdas_head, Eigen::Index r,
                                         const Tolerances& tol = kDefaultTolerances) {
    if (r < 1) throw ArgumentError("hypothesis dimension must be positive");
    for (Eigen::Index j = 0; j < lambdas_head.size(); ++j)
        if (lambdas_head(j) > 1.0 + tol.lambda_overshoot)
            throw SingularError("SIR eigenvalue " + std::to_string(lambdas_head(j)) +
                                    " exceeds 1; predictor whitening failed upstream",
                                INFINITY);
    const Eigen::VectorXd core = (1.0 - lambdas_head.array()).matrix();
    return {kron(core.asDiagonal().toDenseMatrix(), Eigen::MatrixXd::Identity(r, r)),
            WeightKind::conditional_constrained};
}

/// Estimated asymptotic covariance of sqrt(n) vec(Zn), as an h x h array of
/// p x p blocks built from within-slice covariances (divisor n_s).
inline Eigen::MatrixXd delta_hat(const StandardizedSample& sample, const SlicedResponse& slices) {
    const auto p = sample.p();
    const auto h = static_cast<Eigen::Index>(slices.h);
    const auto means = slice_means(sample, slices).means;
    std::vector<Eigen::MatrixXd> within(static_cast<std::size_t>(h), Eigen::MatrixXd::Zero(p, p));
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
        const int s = slices.labels[static_cast<std::size_t>(i)];
        const Eigen::VectorXd dev = (sample.Z.row(i) - means.row(s)).transpose();
        within[static_cast<std::size_t>(s)] += dev * dev.transpose();
    }
    for (Eigen::Index s = 0; s < h; ++s) {
        const auto ns = slices.counts[static_cast<std::size_t>(s)];
        if (ns < 2)
            throw ArgumentError("slice " + std::to_string(s + 1) +
                                " has fewer than 2 observations; within-slice covariance undefined");
        within[static_cast<std::size_t>(s)] /= static_cast<double>(ns);
    }
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
    Eigen::MatrixXd delta(h * p, h * p);
    for (Eigen::Index t = 0; t < h; ++t) {
        for (Eigen::Index s = 0; s < h; ++s) {
            const auto& St = within[static_cast<std::size_t>(t)];
            const auto& Ss = within[static_cast<std::size_t>(s)];
            if (t == s)
                delta.block(t * p, s * p, p, p) = I * slices.props(s) + (1.0 - 2.0 * slices.props(s)) * Ss;
            else
                delta.block(t * p, s * p, p, p) = slices.roots(t) * slices.roots(s) * (I - St - Ss);
        }
    }
    return 0.5 * (delta + delta.transpose());
}

/// Eigenvalues of (Psi0^T kron F Gamma0^T) Delta (Psi0 kron Gamma0 F), descending;
/// F defaults to the identity, giving the marginal dimension-test weights.
inline std::vector<double> dim_test_weights(const Eigen::MatrixXd& delta, const SirFit& fit,
                                            const std::optional<Eigen::MatrixXd>& F = std::nullopt,
                                            const Tolerances& tol = kDefaultTolerances) {
    const auto p = fit.p();
    const auto h = fit.h();
    if (delta.rows() != h * p || delta.cols() != h * p)
        throw ArgumentError("dim_test_weights: Delta must be hp x hp");
    Eigen::MatrixXd right = fit.Gamma0;
    if (F) {
        if (F->rows() != p - fit.d || F->cols() != p - fit.d)
            throw ArgumentError("dim_test_weights: F must be (p-d) x (p-d)");
        right = fit.Gamma0 * *F;
    }
    const Eigen::MatrixXd T = kron(fit.Psi0, right);
    return clamped_eigenvalues(T.transpose() * delta * T, F ? "dim_constrained_prime" : "dim_general", tol);
}

}  // namespace sdr
