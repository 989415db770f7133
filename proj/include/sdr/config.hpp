#pragma once

namespace sdr {

/// Numerical thresholds shared by every module.
struct Tolerances {
    /// Relative eigenvalue floor for positive-definite gates (min/max).
    double pd_relative = 1e-10;
    /// Relative singular-value floor for a full-rank hypothesis basis.
    double rank_relative = 1e-10;
    /// Negative eigenvalues of weight matrices above this magnitude abort.
    double psd_clamp = 1e-8;
    /// Weights below this fraction of the largest weight leave a mixture.
    double mixture_drop_relative = 1e-12;
    /// Eigen-gap below which the working SIR subspace is ill-determined.
    double eigengap_warn = 1e-8;
    /// Largest admissible SIR eigenvalue overshoot above 1.
    double lambda_overshoot = 1e-6;
    /// Singular values below this fraction of the largest count as zero.
    double singular_relative = 1e-10;
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace sdr
