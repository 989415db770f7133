#pragma once

// Chi-squared and weighted chi-squared mixture tail probabilities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sdr/error.hpp"
#include "sdr/random.hpp"

namespace sdr {

namespace detail {

inline constexpr double kGammaEps = 1e-15;
inline constexpr int kGammaMaxIter = 100000;

// Regularized lower incomplete gamma P(a, x) by its power series; x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < kGammaMaxIter; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued fraction; x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double f = d;
    for (int i = 1; i < kGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < kGammaEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * f;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw ArgumentError("gamma_q needs a > 0");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return std::clamp(1.0 - detail::gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(detail::gamma_q_fraction(a, x), 0.0, 1.0);
}

/// P(chi^2(df) > t); df may be non-integer.
inline double chisq_survival(double df, double t) {
    if (!(df > 0.0)) throw ArgumentError("chi-squared degrees of freedom must be positive");
    if (t <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * t);
}

/// sum_i weight_i * chi^2_i(df_i) with independent terms.
struct ChiSqMixture {
    struct Term {
        double weight;
        int df;
    };
    std::vector<Term> terms;

    /// One term per weight, all with the same degrees of freedom.
    static ChiSqMixture from_weights(const std::vector<double>& weights, int df = 1) {
        ChiSqMixture m;
        for (double w : weights) m.terms.push_back({std::max(w, 0.0), df});
        return m;
    }

    std::vector<double> weights() const {
        std::vector<double> w;
        for (const auto& t : terms) w.push_back(t.weight);
        return w;
    }

    double mean() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.weight * t.df;
        return s;
    }

    /// Half the variance: sum w^2 b.
    double half_variance() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.weight * t.weight * t.df;
        return s;
    }

    /// Copy without terms whose weight is below relative * (largest weight).
    ChiSqMixture pruned(double relative = 1e-12) const {
        double top = 0.0;
        for (const auto& t : terms) top = std::max(top, t.weight);
        ChiSqMixture m;
        for (const auto& t : terms)
            if (t.df > 0 && t.weight > relative * top && t.weight > 0.0) m.terms.push_back(t);
        return m;
    }
};

/// Two-moment scaled chi-squared approximation s * chi^2(nu) to the mixture tail.
inline double satterthwaite_pvalue(const ChiSqMixture& mix, double t, double drop_relative = 1e-12) {
    if (t <= 0.0) return 1.0;
    const auto m = mix.pruned(drop_relative);
    if (m.terms.empty()) return 0.0;
    const double m1 = m.mean();
    const double m2 = m.half_variance();
    const double scale = m2 / m1;
    const double nu = m1 * m1 / m2;
    return chisq_survival(nu, t / scale);
}

struct McEstimate {
    double p = 0.0;
    double se = 0.0;
};

namespace detail {
inline constexpr std::int64_t kMcStreamDraws = 1 << 16;
}

/// Monte Carlo tail estimate; draws are split into fixed-size seeded streams.
inline McEstimate mc_pvalue(const ChiSqMixture& mix, double t, std::int64_t draws, std::uint64_t seed) {
    if (draws < 1000) throw ArgumentError("Monte Carlo calibration needs at least 1000 draws");
    const auto m = mix.pruned();
    std::int64_t exceed = 0;
    const std::int64_t streams = (draws + detail::kMcStreamDraws - 1) / detail::kMcStreamDraws;
    for (std::int64_t s = 0; s < streams; ++s) {
        RandomStream rng(seed, static_cast<std::uint64_t>(s));
        const auto count = std::min(detail::kMcStreamDraws, draws - s * detail::kMcStreamDraws);
        for (std::int64_t k = 0; k < count; ++k) {
            double value = 0.0;
            for (const auto& term : m.terms) value += term.weight * rng.chisq(term.df);
            if (value > t) ++exceed;
        }
    }
    McEstimate est;
    est.p = static_cast<double>(exceed) / static_cast<double>(draws);
    est.se = std::sqrt(est.p * (1.0 - est.p) / static_cast<double>(draws));
    return est;
}

/// Pre-drawn chi^2(1) variates shared across many mixtures (common random
/// numbers). A term with df b consumes b consecutive columns.
class MonteCarloBank {
public:
    MonteCarloBank(std::int64_t draws, int columns, std::uint64_t seed)
        : draws_(draws), columns_(columns), values_(static_cast<std::size_t>(draws * columns)) {
        if (draws < 1000) throw ArgumentError("Monte Carlo calibration needs at least 1000 draws");
        for (int c = 0; c < columns; ++c) {
            RandomStream rng(seed, static_cast<std::uint64_t>(c));
            for (std::int64_t k = 0; k < draws; ++k) {
                const double z = rng.normal();
                values_[static_cast<std::size_t>(c * draws + k)] = z * z;
            }
        }
    }

    std::int64_t draws() const noexcept { return draws_; }

    McEstimate pvalue(const ChiSqMixture& mix, double t) const {
        const auto m = mix.pruned();
        int needed = 0;
        for (const auto& term : m.terms) needed += term.df;
        if (needed > columns_)
            throw ArgumentError("mixture needs " + std::to_string(needed) + " bank columns, have " +
                                std::to_string(columns_));
        std::vector<double> sum(static_cast<std::size_t>(draws_), 0.0);
        int col = 0;
        for (const auto& term : m.terms) {
            for (int b = 0; b < term.df; ++b, ++col) {
                const double* src = &values_[static_cast<std::size_t>(col * draws_)];
                for (std::int64_t k = 0; k < draws_; ++k) sum[static_cast<std::size_t>(k)] += term.weight * src[k];
            }
        }
        std::int64_t exceed = 0;
        for (double v : sum) exceed += v > t;
        McEstimate est;
        est.p = static_cast<double>(exceed) / static_cast<double>(draws_);
        est.se = std::sqrt(est.p * (1.0 - est.p) / static_cast<double>(draws_));
        return est;
    }

private:
    std::int64_t draws_;
    int columns_;
    std::vector<double> values_;
};

}  // namespace sdr
