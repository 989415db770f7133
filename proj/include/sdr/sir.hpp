#pragma once

// Sliced inverse regression as a least-squares fit: slice means, the kernel
// M = Zn Zn^T, its spectrum, and the SVD factors of Zn.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/config.hpp"
#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/standardize.hpp"

namespace sdr {

struct SliceMeans {
    Eigen::MatrixXd means;  // h x p, row y = mean of Z over slice y
    Eigen::MatrixXd Zn;     // p x h, column y = sqrt(f_y) * mean_y
};

inline SliceMeans slice_means(const StandardizedSample& sample, const SlicedResponse& slices) {
    if (slices.n() != sample.n()) throw ArgumentError("slice labels do not match sample size");
    const auto h = slices.h;
    const auto p = sample.p();
    SliceMeans out{Eigen::MatrixXd::Zero(h, p), Eigen::MatrixXd(p, h)};
    for (Eigen::Index i = 0; i < sample.n(); ++i)
        out.means.row(slices.labels[static_cast<std::size_t>(i)]) += sample.Z.row(i);
    for (int y = 0; y < h; ++y) {
        const auto count = slices.counts[static_cast<std::size_t>(y)];
        if (count == 0) throw ArgumentError("empty slice " + std::to_string(y + 1));
        out.means.row(y) /= static_cast<double>(count);
        out.Zn.col(y) = slices.roots(y) * out.means.row(y).transpose();
    }
    return out;
}

/// Least-squares SIR fit at working dimension d. The eigenvectors of M and the
/// directions gamma_hat are basis representatives: any rotation within an
/// eigenspace gives the same fit.
struct SirFit {
    Eigen::MatrixXd slice_means;  // h x p
    Eigen::MatrixXd Zn;           // p x h
    Eigen::MatrixXd M;            // p x p
    Eigen::VectorXd lambdas;      // descending
    Eigen::MatrixXd vecs;         // p x p
    Eigen::MatrixXd psi;          // h x h right singular vectors of Zn, matched to vecs
    Eigen::Index rank = 0;        // count of nonzero singular values
    int d = 0;

    Eigen::MatrixXd gamma_hat;    // p x d
    Eigen::MatrixXd rho_hat;      // h x d, row y = gamma_hat^T mean_y
    Eigen::MatrixXd Gamma1, Gamma0;
    Eigen::MatrixXd Psi1, Psi0;
    Eigen::VectorXd Ds;           // first d singular values
    std::vector<std::string> warnings;

    Eigen::Index p() const noexcept { return M.rows(); }
    Eigen::Index h() const noexcept { return Zn.cols(); }

    /// Same spectrum, different working dimension.
    SirFit with_dimension(int new_d, const Tolerances& tol = kDefaultTolerances) const {
        const auto max_d = std::min<Eigen::Index>(p(), h() - 1);
        if (new_d < 0 || new_d > max_d)
            throw ArgumentError("dimension " + std::to_string(new_d) + " outside [0, " +
                                std::to_string(max_d) + "]");
        SirFit f = *this;
        f.d = new_d;
        f.warnings.clear();
        f.gamma_hat = vecs.leftCols(new_d);
        f.rho_hat = slice_means * f.gamma_hat;
        f.Gamma1 = f.gamma_hat;
        f.Gamma0 = vecs.rightCols(p() - new_d);
        f.Psi1 = psi.leftCols(new_d);
        f.Psi0 = psi.rightCols(h() - new_d);
        f.Ds = lambdas.head(new_d).cwiseMax(0.0).cwiseSqrt();
        if (new_d >= 1 && new_d < p() && lambdas(new_d - 1) - lambdas(new_d) < tol.eigengap_warn)
            f.warnings.push_back("eigenvalue gap at dimension " + std::to_string(new_d) +
                                 " is below tolerance; the SIR subspace is ill-determined");
        if (new_d > rank)
            f.warnings.push_back("working dimension exceeds the numerical rank of Zn");
        return f;
    }
};

inline SirFit fit_sir(const SliceMeans& sm, int d, const Tolerances& tol = kDefaultTolerances) {
    SirFit f;
    f.slice_means = sm.means;
    f.Zn = sm.Zn;
    f.M = sm.Zn * sm.Zn.transpose();
    // Eigenpairs of M from the SVD of Zn: squaring singular values keeps
    // round-off at eps * lambda_1, where sqrt(eig(M)) would inflate it to sqrt(eps).
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.Zn, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto p = f.M.rows();
    const auto h = f.Zn.cols();
    const auto& sv = svd.singularValues();
    f.lambdas = Eigen::VectorXd::Zero(p);
    f.lambdas.head(sv.size()) = sv.array().square().matrix();
    f.vecs = svd.matrixU();
    f.psi = svd.matrixV();
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::Index arg = 0;
        f.vecs.col(j).cwiseAbs().maxCoeff(&arg);
        if (f.vecs(arg, j) < 0) {
            f.vecs.col(j) *= -1.0;
            if (j < h) f.psi.col(j) *= -1.0;
        }
    }
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(0) > 0.0 && sv(rank) > tol.singular_relative * sv(0)) ++rank;
    f.rank = rank;
    return f.with_dimension(d, tol);
}

/// Sum over observations of ||Z_i - mean_{slice(i)}||^2.
inline double within_slice_ss(const StandardizedSample& sample, const SlicedResponse& slices,
                              const Eigen::MatrixXd& means) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < sample.n(); ++i)
        ss += (sample.Z.row(i) - means.row(slices.labels[static_cast<std::size_t>(i)])).squaredNorm();
    return ss;
}

/// Residual sum of squares of the rank-m least-squares fit.
inline double residual_rss(const SirFit& fit, const StandardizedSample& sample,
                           const SlicedResponse& slices, int m) {
    if (m < 0 || m > fit.p()) throw ArgumentError("dimension out of range for residual_rss");
    const double n = static_cast<double>(sample.n());
    return within_slice_ss(sample, slices, fit.slice_means) + n * fit.lambdas.tail(fit.p() - m).sum();
}

}  // namespace sdr
