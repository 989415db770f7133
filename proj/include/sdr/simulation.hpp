#pragma once

// Synthetic regressions Y = X1 + e and Y = X1 / (0.5 + (X2 + 1.5)^2) + e,
// replicated level and power experiments, and the OLS t-test comparator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/hypothesis.hpp"
#include "sdr/inference.hpp"
#include "sdr/random.hpp"

namespace sdr {

enum class Model { linear22, ratio23 };
enum class PredictorDist { std_normal, chisq4, t5, uniform };
enum class ErrorKind { gaussian, scaled_chisq, hetero };

inline const char* to_string(Model m) { return m == Model::linear22 ? "linear22" : "ratio23"; }

inline const char* to_string(PredictorDist d) {
    switch (d) {
        case PredictorDist::std_normal: return "std_normal";
        case PredictorDist::chisq4: return "chisq4";
        case PredictorDist::t5: return "t5";
        case PredictorDist::uniform: return "uniform";
    }
    return "unknown";
}

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::gaussian: return "gaussian";
        case ErrorKind::scaled_chisq: return "scaled_chisq";
        case ErrorKind::hetero: return "hetero";
    }
    return "unknown";
}

struct ErrorSpec {
    ErrorKind kind = ErrorKind::gaussian;
    double sigma = 0.2;  // gaussian
    int D = 10;          // scaled_chisq
    double tau = 0.0;    // hetero
};

struct ModelSpec {
    Model model = Model::linear22;
    Eigen::Index n = 200;
    Eigen::Index p = 5;
    PredictorDist predictors = PredictorDist::std_normal;
    ErrorSpec error;
    std::uint64_t seed = 1;

    void validate() const {
        if (p < (model == Model::ratio23 ? 2 : 1))
            throw ArgumentError(std::string(to_string(model)) + " needs more predictors");
        if (n <= p + 1) throw ArgumentError("n must exceed p + 1");
        if (error.kind == ErrorKind::gaussian && !(error.sigma >= 0.0))
            throw ArgumentError("error sigma must be nonnegative");
        if (error.kind == ErrorKind::scaled_chisq && error.D < 1)
            throw ArgumentError("chi-squared error needs D >= 1");
        if (error.kind == ErrorKind::hetero && !std::isfinite(error.tau))
            throw ArgumentError("hetero error needs a finite tau");
    }
};

inline std::vector<std::string> default_names(Eigen::Index p) {
    std::vector<std::string> names;
    for (Eigen::Index j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

/// One draw of the model; replication i should use stream i.
inline Dataset gen_dataset(const ModelSpec& spec, std::uint64_t stream = 0) {
    spec.validate();
    RandomStream rng(spec.seed, stream);
    Eigen::MatrixXd X(spec.n, spec.p);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        for (Eigen::Index j = 0; j < spec.p; ++j) {
            switch (spec.predictors) {
                case PredictorDist::std_normal: X(i, j) = rng.normal(); break;
                case PredictorDist::chisq4: X(i, j) = rng.chisq(4); break;
                case PredictorDist::t5: X(i, j) = rng.student_t(5); break;
                case PredictorDist::uniform: X(i, j) = rng.uniform(-2.0, 2.0); break;
            }
        }
    }
    Eigen::VectorXd y(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        double e = 0.0;
        switch (spec.error.kind) {
            case ErrorKind::gaussian: e = spec.error.sigma * rng.normal(); break;
            case ErrorKind::scaled_chisq: {
                const double D = spec.error.D;
                e = 6.4 * (rng.chisq(spec.error.D) - D) / std::sqrt(2.0 * D);
                break;
            }
            case ErrorKind::hetero: e = std::exp(spec.error.tau * X(i, 0)) * rng.normal(); break;
        }
        const double mean = spec.model == Model::linear22
                                ? X(i, 0)
                                : X(i, 0) / (0.5 + (X(i, 1) + 1.5) * (X(i, 1) + 1.5));
        y(i) = mean + e;
    }
    return Dataset(std::move(X), std::move(y), default_names(spec.p));
}

struct OlsTTest {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

/// Two-sided t-test of the coefficient of predictor j (0-based) in the OLS
/// fit of y on X with an intercept.
inline OlsTTest ols_t_test(const Dataset& data, Eigen::Index j) {
    const auto n = data.n();
    const auto p = data.p();
    if (j < 0 || j >= p) throw ArgumentError("predictor index out of range");
    if (n <= p + 1) throw ArgumentError("t-test needs n > p + 1");
    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = data.X();
    const Eigen::MatrixXd gram = A.transpose() * A;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd diag = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || diag.minCoeff() <= 1e-12 * diag.maxCoeff())
        throw SingularError("singular design in OLS fit", INFINITY);
    const Eigen::VectorXd beta = ldlt.solve(A.transpose() * data.y());
    const double rss = (data.y() - A * beta).squaredNorm();
    OlsTTest out;
    out.df = static_cast<double>(n - p - 1);
    const double s2 = rss / out.df;
    const double var = s2 * ldlt.solve(Eigen::VectorXd::Unit(p + 1, j + 1))(j + 1);
    if (!(var > 0.0)) {
        out.statistic = beta(j + 1) == 0.0 ? 0.0 : INFINITY;
        out.p_value = beta(j + 1) == 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.statistic = beta(j + 1) / std::sqrt(var);
    const boost::math::students_t dist(out.df);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.statistic))));
    return out;
}

enum class SimTest { marginal_coord, conditional_coord, marginal_dim, constrained_dim, dim_difference };

inline const char* to_string(SimTest t) {
    switch (t) {
        case SimTest::marginal_coord: return "marginal_coord";
        case SimTest::conditional_coord: return "conditional_coord";
        case SimTest::marginal_dim: return "marginal_dim";
        case SimTest::constrained_dim: return "constrained_dim";
        case SimTest::dim_difference: return "dim_difference";
    }
    return "unknown";
}

struct ExperimentConfig {
    ModelSpec spec;
    SimTest test = SimTest::marginal_coord;
    Variant variant = Variant::general;
    int d = 1;                          // dimension for conditional tests, m for the dimension test
    std::optional<Eigen::Index> target; // tested predictor (0-based); default last for level, first for power
    int reps = 1000;
    int h = 5;
    std::vector<double> levels{0.01, 0.05, 0.10, 0.15};
    int threads = 1;
    bool keep_results = false;
    TestOptions options{};
};

struct ExperimentResult {
    int reps = 0;
    std::vector<double> levels;
    std::vector<double> rejection;
    std::vector<double> se;
    std::vector<double> p_values;      // per replication, in replication order
    std::vector<TestResult> results;   // when keep_results is set

    // Power experiments only.
    std::vector<double> t_rejection;
    std::vector<double> t_se;
    std::vector<double> corr_quantile_levels;
    std::vector<double> corr_ols;  // quantiles of |corr(X_target, OLS fitted values)|
    std::vector<double> corr_sir;  // quantiles of |corr(X_target, first SIR predictor)|
};

namespace detail {

struct Replicate {
    TestResult result;
    double t_p = 1.0;
    double corr_ols = 0.0;
    double corr_sir = 0.0;
};

inline double abs_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    const double denom = ac.norm() * bc.norm();
    return denom > 0.0 ? std::abs(ac.dot(bc)) / denom : 0.0;
}

inline TestResult run_selected(const SirAnalysis& a, const ExperimentConfig& cfg, Eigen::Index target) {
    TestOptions opts = cfg.options;
    opts.variant = cfg.variant;
    const auto hyp = predictor_subset({target}, a.p());
    switch (cfg.test) {
        case SimTest::marginal_coord: return marginal_coord_test(a, hyp, opts);
        case SimTest::conditional_coord: return conditional_coord_test(a, hyp, cfg.d, opts);
        case SimTest::marginal_dim: return marginal_dim_test(a, cfg.d, opts);
        case SimTest::constrained_dim: return constrained_dim_test(a, hyp, cfg.d, opts);
        case SimTest::dim_difference: return diff_test(a, hyp, cfg.d, opts);
    }
    throw ArgumentError("unknown test");
}

inline Replicate replicate(const ExperimentConfig& cfg, Eigen::Index target, bool power, std::uint64_t i) {
    const auto data = gen_dataset(cfg.spec, i);
    const SirAnalysis a(data, cfg.h, cfg.options.tol);
    Replicate out;
    out.result = run_selected(a, cfg, target);
    if (power) {
        out.t_p = ols_t_test(data, target).p_value;
        Eigen::MatrixXd A(data.n(), data.p() + 1);
        A.col(0).setOnes();
        A.rightCols(data.p()) = data.X();
        const Eigen::VectorXd fitted = A * A.colPivHouseholderQr().solve(data.y());
        const Eigen::VectorXd x = data.X().col(target);
        out.corr_ols = abs_corr(x, fitted);
        const Eigen::VectorXd eta = a.sample().cov_inv_sqrt * a.fit(1).gamma_hat.col(0);
        out.corr_sir = abs_corr(x, data.X() * eta);
    }
    return out;
}

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::vector<double> fractions_at(const std::vector<double>& p, const std::vector<double>& levels,
                                        std::vector<double>& se) {
    std::vector<double> frac;
    se.clear();
    for (double level : levels) {
        std::size_t count = 0;
        for (double v : p) count += v <= level;
        const double f = static_cast<double>(count) / static_cast<double>(p.size());
        frac.push_back(f);
        se.push_back(std::sqrt(f * (1.0 - f) / static_cast<double>(p.size())));
    }
    return frac;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool power) {
    cfg.spec.validate();
    if (cfg.reps < 100) throw ArgumentError("experiments need at least 100 replications");
    const Eigen::Index target = cfg.target.value_or(power ? 0 : cfg.spec.p - 1);
    if (target < 0 || target >= cfg.spec.p) throw ArgumentError("target predictor out of range");

    std::vector<Replicate> reps(static_cast<std::size_t>(cfg.reps));
    const int workers = std::max(1, std::min(cfg.threads, cfg.reps));
    auto work = [&](int w) {
        for (int i = w; i < cfg.reps; i += workers)
            reps[static_cast<std::size_t>(i)] = replicate(cfg, target, power, static_cast<std::uint64_t>(i));
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    work(w);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        pool.clear();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    ExperimentResult out;
    out.reps = cfg.reps;
    out.levels = cfg.levels;
    std::vector<double> t_p, c_ols, c_sir;
    for (auto& r : reps) {
        out.p_values.push_back(r.result.p_or_zero());
        if (power) {
            t_p.push_back(r.t_p);
            c_ols.push_back(r.corr_ols);
            c_sir.push_back(r.corr_sir);
        }
        if (cfg.keep_results) out.results.push_back(std::move(r.result));
    }
    out.rejection = fractions_at(out.p_values, cfg.levels, out.se);
    if (power) {
        out.t_rejection = fractions_at(t_p, cfg.levels, out.t_se);
        out.corr_quantile_levels = {0.05, 0.5, 0.95};
        for (double q : out.corr_quantile_levels) {
            out.corr_ols.push_back(quantile(c_ols, q));
            out.corr_sir.push_back(quantile(c_sir, q));
        }
    }
    return out;
}

}  // namespace detail

/// Rejection fractions of the selected test on a predictor outside the mean function.
inline ExperimentResult level_experiment(const ExperimentConfig& cfg) { return detail::run_experiment(cfg, false); }

/// Rejection fractions of the selected test and the t-test on an active predictor,
/// plus quantiles of the absolute correlations of X_target with the OLS fit and
/// with the first SIR predictor.
inline ExperimentResult power_experiment(const ExperimentConfig& cfg) { return detail::run_experiment(cfg, true); }

}  // namespace sdr
