#pragma once

// Marginal dimension tests, marginal and conditional coordinate tests, the
// constrained dimension statistic, sequential dimension estimation and
// backward elimination.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/chisq_mix.hpp"
#include "sdr/config.hpp"
#include "sdr/covariance.hpp"
#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/hypothesis.hpp"
#include "sdr/sir.hpp"
#include "sdr/standardize.hpp"

namespace sdr {

enum class Variant { general, constrained };
enum class Calibration { satterthwaite, monte_carlo };

inline const char* to_string(Variant v) { return v == Variant::general ? "general" : "constrained"; }
inline const char* to_string(Calibration c) {
    return c == Calibration::satterthwaite ? "satterthwaite" : "mc";
}

struct TestOptions {
    Variant variant = Variant::general;
    Calibration calibration = Calibration::satterthwaite;
    std::int64_t mc_draws = 100000;
    std::uint64_t seed = 0;
    Tolerances tol{};
};

/// Null reference distribution of a statistic.
struct Reference {
    enum class Kind { chisq, mixture, structural };
    Kind kind = Kind::chisq;
    int df = 0;                   // chisq
    std::vector<double> weights;  // mixture
    int term_df = 1;              // degrees of freedom of every mixture term

    static Reference chisq(int df) { return {Kind::chisq, df, {}, 1}; }
    static Reference mixture(std::vector<double> w, int term_df) {
        return {Kind::mixture, 0, std::move(w), term_df};
    }
    static Reference structural() { return {Kind::structural, 0, {}, 1}; }
};

struct TestResult {
    std::string test;
    double statistic = 0.0;
    Reference reference;
    std::optional<double> p_value;     // empty for a structural rejection
    std::optional<double> p_value_se;  // Monte Carlo calibration only
    Variant variant = Variant::general;
    Calibration calibration = Calibration::satterthwaite;
    struct Meta {
        Eigen::Index n = 0, p = 0, h = 0;
        std::optional<int> d;
        std::optional<Eigen::Index> r;
        std::string hypothesis;
        std::vector<std::string> warnings;
    } meta;

    bool structural_rejection() const noexcept { return reference.kind == Reference::Kind::structural; }

    /// p-value with a structural rejection counted as 0.
    double p_or_zero() const noexcept { return p_value.value_or(0.0); }
};

/// Everything the tests share for one (data, slicing) pair.
class SirAnalysis {
public:
    SirAnalysis(Dataset data, SlicedResponse slices, const Tolerances& tol = kDefaultTolerances)
        : data_(std::move(data)), slices_(std::move(slices)), tol_(tol) {
        if (slices_.n() != data_.n()) throw ArgumentError("slices do not match the dataset");
        sample_ = standardize(data_, tol_);
        means_ = slice_means(sample_, slices_);
        base_ = fit_sir(means_, 0, tol_);
        residuals_ = indicator_residuals(data_, slices_);
    }

    SirAnalysis(Dataset data, int h, const Tolerances& tol = kDefaultTolerances)
        : SirAnalysis(data, slice_response(data.y(), h), tol) {}

    const Dataset& data() const noexcept { return data_; }
    const SlicedResponse& slices() const noexcept { return slices_; }
    const StandardizedSample& sample() const noexcept { return sample_; }
    const SliceMeans& means() const noexcept { return means_; }
    const IndicatorResiduals& residuals() const noexcept { return residuals_; }
    const Tolerances& tol() const noexcept { return tol_; }
    const Eigen::VectorXd& lambdas() const noexcept { return base_.lambdas; }
    Eigen::Index n() const noexcept { return data_.n(); }
    Eigen::Index p() const noexcept { return data_.p(); }
    int h() const noexcept { return slices_.h; }

    SirFit fit(int d) const { return base_.with_dimension(d, tol_); }

    const Eigen::MatrixXd& delta() const {
        if (!delta_) delta_ = delta_hat(sample_, slices_);
        return *delta_;
    }

    HypothesisBasisZ basis(const CoordinateHypothesis& hyp) const { return to_z_basis(hyp, sample_, tol_); }

    /// n * sum_{j>m} lambda_j.
    double dimension_statistic(int m) const {
        return static_cast<double>(n()) * base_.lambdas.tail(p() - m).sum();
    }

private:
    Dataset data_;
    SlicedResponse slices_;
    Tolerances tol_;
    StandardizedSample sample_;
    SliceMeans means_;
    SirFit base_;
    IndicatorResiduals residuals_;
    mutable std::optional<Eigen::MatrixXd> delta_;
};

namespace detail {

inline TestResult make_result(const SirAnalysis& a, std::string test, double statistic, Variant variant,
                              const TestOptions& opts) {
    TestResult r;
    r.test = std::move(test);
    r.statistic = std::max(statistic, 0.0);
    r.variant = variant;
    r.calibration = opts.calibration;
    r.meta.n = a.n();
    r.meta.p = a.p();
    r.meta.h = a.h();
    r.meta.warnings = a.slices().warnings;
    return r;
}

inline void calibrate_mixture(TestResult& r, std::vector<double> weights, int term_df, const TestOptions& opts) {
    const auto mix = ChiSqMixture::from_weights(weights, term_df);
    if (opts.calibration == Calibration::monte_carlo) {
        const auto est = mc_pvalue(mix, r.statistic, opts.mc_draws, opts.seed);
        r.p_value = est.p;
        r.p_value_se = est.se;
    } else {
        r.p_value = satterthwaite_pvalue(mix, r.statistic, opts.tol.mixture_drop_relative);
    }
    r.reference = Reference::mixture(std::move(weights), term_df);
}

inline void calibrate_chisq(TestResult& r, int df) {
    if (df < 1) throw ArgumentError("reference chi-squared would have no degrees of freedom");
    r.reference = Reference::chisq(df);
    r.p_value = chisq_survival(df, r.statistic);
}

inline void require_conditional(const SirAnalysis& a, int d) {
    const auto max_d = std::min<Eigen::Index>(a.p() - 1, a.h() - 1);
    if (d < 1 || d > max_d)
        throw ArgumentError("dimension " + std::to_string(d) + " outside [1, " + std::to_string(max_d) + "]");
}

}  // namespace detail

/// Sequential test of d = m against d > m, statistic n * sum_{j>m} lambda_j.
inline TestResult marginal_dim_test(const SirAnalysis& a, int m, const TestOptions& opts = {}) {
    if (m < 0 || m >= a.p()) throw ArgumentError("hypothesized dimension must lie in [0, p)");
    if (a.h() < m + 2) throw ArgumentError("need more than m + 1 slices for the dimension test");
    auto r = detail::make_result(a, "marginal_dimension", a.dimension_statistic(m), opts.variant, opts);
    r.meta.d = m;
    if (opts.variant == Variant::constrained) {
        detail::calibrate_chisq(r, static_cast<int>((a.p() - m) * (a.h() - m - 1)));
    } else {
        const auto fit = a.fit(m);
        detail::calibrate_mixture(r, dim_test_weights(a.delta(), fit, std::nullopt, a.tol()), 1, opts);
    }
    return r;
}

struct DimensionEstimate {
    int d = 0;
    bool capped = false;
    std::vector<TestResult> trace;
};

/// Tests m = 0, 1, ... and stops at the first non-rejection.
inline DimensionEstimate estimate_dim(const SirAnalysis& a, double alpha, const TestOptions& opts = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    DimensionEstimate est;
    const int last = static_cast<int>(std::min<Eigen::Index>(a.p() - 1, a.h() - 2));
    for (int m = 0; m <= last; ++m) {
        est.trace.push_back(marginal_dim_test(a, m, opts));
        if (est.trace.back().p_or_zero() > alpha) {
            est.d = m;
            return est;
        }
    }
    est.d = static_cast<int>(std::min<Eigen::Index>(a.p(), a.h() - 1));
    est.capped = true;
    return est;
}

/// T_n(H) = n trace(P M P), no dimension assumed.
inline TestResult marginal_coord_test(const SirAnalysis& a, const CoordinateHypothesis& hyp,
                                      const TestOptions& opts = {}) {
    const auto basis = a.basis(hyp);
    const auto base = a.fit(0);
    const double stat = static_cast<double>(a.n()) * (basis.P * base.M * basis.P).trace();
    auto r = detail::make_result(a, "marginal_coordinate", stat, opts.variant, opts);
    r.meta.r = hyp.r();
    r.meta.hypothesis = hyp.description;
    if (opts.variant == Variant::general) {
        const auto omega = omega_h_general(a.residuals(), a.sample(), basis, a.slices());
        detail::calibrate_mixture(r, weights(omega, a.tol()), 1, opts);
    } else {
        const auto core = constrained_core(base, a.slices());
        detail::calibrate_mixture(r, clamped_eigenvalues(core, "marginal_constrained", a.tol()),
                                  static_cast<int>(hyp.r()), opts);
    }
    return r;
}

namespace detail {

inline TestResult structural(TestResult r) {
    r.reference = Reference::structural();
    r.p_value.reset();
    r.meta.warnings.push_back("hypothesis dimension exceeds p - d; the hypothesis is certainly false");
    return r;
}

}  // namespace detail

/// T_n(H|d) = n sum_{j<=d} (lambda_j - lambda'_j), d treated as known.
inline TestResult conditional_coord_test(const SirAnalysis& a, const CoordinateHypothesis& hyp, int d,
                                         const TestOptions& opts = {}) {
    detail::require_conditional(a, d);
    const auto fit = a.fit(d);
    const auto basis = a.basis(hyp);
    const auto proj = projected_spectrum(fit, basis);
    const double n = static_cast<double>(a.n());
    const double stat = n * (fit.lambdas.head(d).sum() - proj.lambdas.head(d).sum());
    auto r = detail::make_result(a, "conditional_coordinate", stat, opts.variant, opts);
    r.meta.d = d;
    r.meta.r = hyp.r();
    r.meta.hypothesis = hyp.description;
    r.meta.warnings.insert(r.meta.warnings.end(), fit.warnings.begin(), fit.warnings.end());
    if (hyp.r() > a.p() - d) return detail::structural(std::move(r));
    if (opts.variant == Variant::general) {
        const auto omega_h = omega_h_general(a.residuals(), a.sample(), basis, a.slices());
        const auto omega = omega_hd_general(omega_h, fit.Psi1, hyp.r());
        detail::calibrate_mixture(r, weights(omega, a.tol()), 1, opts);
    } else {
        const auto omega = omega_hd_constrained(fit.lambdas.head(d), 1, a.tol());
        detail::calibrate_mixture(r, weights(omega, a.tol()), static_cast<int>(hyp.r()), opts);
    }
    return r;
}

/// T'_n(d) = n sum_{j>d} lambda'_j, the dimension statistic under the coordinate constraint.
inline TestResult constrained_dim_test(const SirAnalysis& a, const CoordinateHypothesis& hyp, int d,
                                       const TestOptions& opts = {}) {
    detail::require_conditional(a, d);
    const auto fit = a.fit(d);
    const auto basis = a.basis(hyp);
    const auto proj = projected_spectrum(fit, basis);
    const double stat = static_cast<double>(a.n()) * proj.lambdas.tail(a.p() - d).sum();
    auto r = detail::make_result(a, "constrained_dimension", stat, opts.variant, opts);
    r.meta.d = d;
    r.meta.r = hyp.r();
    r.meta.hypothesis = hyp.description;
    if (hyp.r() > a.p() - d) return detail::structural(std::move(r));
    if (hyp.r() == a.p() - d) throw ArgumentError("T'(d) is identically zero when r = p - d");
    if (a.h() < d + 2) throw ArgumentError("need more than d + 1 slices");
    if (opts.variant == Variant::constrained) {
        detail::calibrate_chisq(r, static_cast<int>((a.p() - d - hyp.r()) * (a.h() - d - 1)));
    } else {
        detail::calibrate_mixture(r, dim_test_weights(a.delta(), fit, proj.F, a.tol()), 1, opts);
    }
    return r;
}

/// T_n(d) - T'_n(d) against chi^2(r(h - d - 1)).
inline TestResult diff_test(const SirAnalysis& a, const CoordinateHypothesis& hyp, int d,
                            const TestOptions& opts = {}) {
    detail::require_conditional(a, d);
    const auto fit = a.fit(d);
    const auto basis = a.basis(hyp);
    const auto proj = projected_spectrum(fit, basis);
    const double n = static_cast<double>(a.n());
    const double stat = a.dimension_statistic(d) - n * proj.lambdas.tail(a.p() - d).sum();
    auto r = detail::make_result(a, "dimension_difference", stat, Variant::constrained, opts);
    r.meta.d = d;
    r.meta.r = hyp.r();
    r.meta.hypothesis = hyp.description;
    if (hyp.r() > a.p() - d) return detail::structural(std::move(r));
    if (a.h() < d + 2) throw ArgumentError("need more than d + 1 slices");
    detail::calibrate_chisq(r, static_cast<int>(hyp.r() * (a.h() - d - 1)));
    return r;
}

// Convenience overloads on raw (data, slices).

inline TestResult marginal_dim_test(const Dataset& data, const SlicedResponse& slices, int m,
                                    const TestOptions& opts = {}) {
    return marginal_dim_test(SirAnalysis(data, slices, opts.tol), m, opts);
}

inline TestResult marginal_coord_test(const Dataset& data, const SlicedResponse& slices,
                                      const CoordinateHypothesis& hyp, const TestOptions& opts = {}) {
    return marginal_coord_test(SirAnalysis(data, slices, opts.tol), hyp, opts);
}

inline TestResult conditional_coord_test(const Dataset& data, const SlicedResponse& slices,
                                         const CoordinateHypothesis& hyp, int d, const TestOptions& opts = {}) {
    return conditional_coord_test(SirAnalysis(data, slices, opts.tol), hyp, d, opts);
}

inline TestResult constrained_dim_test(const Dataset& data, const SlicedResponse& slices,
                                       const CoordinateHypothesis& hyp, int d, const TestOptions& opts = {}) {
    return constrained_dim_test(SirAnalysis(data, slices, opts.tol), hyp, d, opts);
}

inline TestResult diff_test(const Dataset& data, const SlicedResponse& slices, const CoordinateHypothesis& hyp,
                            int d, const TestOptions& opts = {}) {
    return diff_test(SirAnalysis(data, slices, opts.tol), hyp, d, opts);
}

inline DimensionEstimate estimate_dim(const Dataset& data, const SlicedResponse& slices, double alpha,
                                      const TestOptions& opts = {}) {
    return estimate_dim(SirAnalysis(data, slices, opts.tol), alpha, opts);
}

enum class SelectionMode { marginal, conditional };

inline const char* to_string(SelectionMode m) {
    return m == SelectionMode::marginal ? "marginal" : "conditional";
}

struct EliminationRound {
    int round = 0;
    std::vector<std::string> predictors;  // those tested this round
    std::vector<double> p_values;         // aligned with predictors
    std::optional<int> d;                 // conditional mode
    bool used_marginal_fallback = false;  // conditional mode with estimated d = 0
    std::optional<std::string> removed;
};

struct EliminationResult {
    std::vector<EliminationRound> rounds;
    std::vector<std::string> removed;   // in removal order
    std::vector<std::string> retained;  // in original column order
};

/// Repeatedly drops the single predictor with the largest p-value above alpha.
/// In conditional mode the dimension is re-estimated every round; when it is
/// estimated as 0 the round uses marginal coordinate tests instead.
inline EliminationResult backward_elimination(const Dataset& data, int h, double alpha, SelectionMode mode,
                                              const TestOptions& opts = {}) {
    if (data.p() < 2) throw ArgumentError("backward elimination needs at least 2 predictors");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    const auto slices = slice_response(data.y(), h);
    std::vector<Eigen::Index> active(static_cast<std::size_t>(data.p()));
    for (Eigen::Index j = 0; j < data.p(); ++j) active[static_cast<std::size_t>(j)] = j;

    EliminationResult result;
    for (int round = 1; !active.empty(); ++round) {
        const auto current = data.select(active);
        const SirAnalysis a(current, slices, opts.tol);
        EliminationRound info;
        info.round = round;
        std::optional<int> d;
        if (mode == SelectionMode::conditional) {
            const auto est = estimate_dim(a, alpha, opts);
            d = std::min<int>(est.d, static_cast<int>(std::min<Eigen::Index>(a.p(), a.h() - 1)));
            info.d = d;
            if (*d == 0) info.used_marginal_fallback = true;
        }
        for (Eigen::Index j = 0; j < current.p(); ++j) {
            const auto hyp = predictor_subset({j}, current.p());
            TestResult t;
            if (!d || *d == 0)
                t = marginal_coord_test(a, hyp, opts);
            else if (*d > a.p() - 1)
                t = detail::structural(detail::make_result(a, "conditional_coordinate", 0.0, opts.variant, opts));
            else
                t = conditional_coord_test(a, hyp, *d, opts);
            info.predictors.push_back(current.names()[static_cast<std::size_t>(j)]);
            info.p_values.push_back(t.p_or_zero());
        }
        std::size_t worst = 0;
        for (std::size_t k = 1; k < info.p_values.size(); ++k)
            if (info.p_values[k] > info.p_values[worst]) worst = k;
        if (info.p_values[worst] > alpha) {
            info.removed = info.predictors[worst];
            result.removed.push_back(*info.removed);
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
        }
        const bool stop = !info.removed;
        result.rounds.push_back(std::move(info));
        if (stop) break;
    }
    for (auto j : active) result.retained.push_back(data.names()[static_cast<std::size_t>(j)]);
    return result;
}

}  // namespace sdr
