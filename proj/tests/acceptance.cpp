// Acceptance suite: one pass/fail line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdr/sdr.hpp"
#include "support.hpp"

using namespace sdr;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [FAIL]");
    }
};

std::string f4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

// Each Monte Carlo criterion uses its own fixed master seed.
constexpr std::uint64_t kSeedBase = 20030601;

ExperimentConfig level_design(SimTest test, Variant variant) {
    ExperimentConfig c;
    c.spec.model = Model::linear22;
    c.spec.n = 200;
    c.spec.p = 5;
    c.spec.error = {ErrorKind::gaussian, 0.2, 10, 0.0};
    c.test = test;
    c.variant = variant;
    c.d = 1;
    c.reps = 1000;
    c.h = 5;
    c.keep_results = true;
    return c;
}

ExperimentConfig power_design(ErrorSpec error, SimTest test) {
    ExperimentConfig c;
    c.spec.model = Model::linear22;
    c.spec.n = 200;
    c.spec.p = 5;
    c.spec.error = error;
    c.test = test;
    c.variant = Variant::general;
    c.d = 1;
    c.target = 0;
    c.reps = 1000;
    c.keep_results = true;
    return c;
}

std::string level_text(const ExperimentResult& r, std::size_t k) {
    return f4(r.rejection[k]) + " (se " + f4(r.se[k]) + ")";
}

// Mixture references collected for the calibration criterion.
std::vector<TestResult> g_mixtures;

void collect(const ExperimentResult& r) {
    for (const auto& t : r.results)
        if (t.reference.kind == Reference::Kind::mixture) g_mixtures.push_back(t);
}

Outcome criterion1() {
    Outcome o;
    auto c = level_design(SimTest::marginal_coord, Variant::general);
    c.spec.seed = kSeedBase + 1;
    const auto r = level_experiment(c);
    collect(r);
    o.check(within(r.rejection[1], 0.053, 0.02), "5% level " + level_text(r, 1) + " vs 0.053 +/- 0.02");
    o.check(within(r.rejection[0], 0.010, 0.01), "1% level " + level_text(r, 0) + " vs 0.010 +/- 0.01");
    return o;
}

Outcome criterion2() {
    Outcome o;
    auto c = level_design(SimTest::marginal_dim, Variant::constrained);
    c.spec.seed = kSeedBase + 2;
    const auto r = level_experiment(c);
    const bool df_ok = std::all_of(r.results.begin(), r.results.end(), [](const TestResult& t) {
        return t.reference.kind == Reference::Kind::chisq && t.reference.df == 12;
    });
    o.check(df_ok, "reference chisq(12) in every replication");
    o.check(within(r.rejection[1], 0.049, 0.02), "5% level " + level_text(r, 1) + " vs 0.049 +/- 0.02");
    return o;
}

Outcome criterion3() {
    Outcome o;
    auto c = level_design(SimTest::constrained_dim, Variant::constrained);
    c.spec.seed = kSeedBase + 3;
    const auto rf = level_experiment(c);
    c.test = SimTest::dim_difference;
    const auto rg = level_experiment(c);
    auto all_df = [](const ExperimentResult& r, int df) {
        return std::all_of(r.results.begin(), r.results.end(), [df](const TestResult& t) {
            return t.reference.kind == Reference::Kind::chisq && t.reference.df == df;
        });
    };
    o.check(all_df(rf, 9), "T' reference chisq(9)");
    o.check(all_df(rg, 3), "difference reference chisq(3)");
    o.check(within(rf.rejection[1], 0.048, 0.02), "T' 5% level " + level_text(rf, 1) + " vs 0.048 +/- 0.02");
    o.check(within(rg.rejection[1], 0.049, 0.02), "difference 5% level " + level_text(rg, 1) + " vs 0.049 +/- 0.02");
    return o;
}

Outcome criterion4() {
    Outcome o;
    ExperimentConfig c;
    c.spec.model = Model::ratio23;
    c.spec.n = 800;
    c.spec.p = 10;
    c.spec.error = {ErrorKind::gaussian, 0.2, 10, 0.0};
    c.spec.seed = kSeedBase + 4;
    c.test = SimTest::marginal_coord;
    c.reps = 1000;
    c.keep_results = true;
    c.variant = Variant::general;
    const auto rg = level_experiment(c);
    c.variant = Variant::constrained;
    const auto rc = level_experiment(c);
    collect(rg);
    collect(rc);
    o.check(within(rg.rejection[1], 0.058, 0.02), "general 5% level " + level_text(rg, 1) + " vs 0.058 +/- 0.02");
    o.check(within(rc.rejection[1], 0.059, 0.02),
            "constrained 5% level " + level_text(rc, 1) + " vs 0.059 +/- 0.02");
    return o;
}

Outcome criterion5() {
    Outcome o;
    auto c = power_design({ErrorKind::gaussian, 6.4, 10, 0.0}, SimTest::marginal_coord);
    c.spec.seed = kSeedBase + 5;
    const auto rm = power_experiment(c);
    c.test = SimTest::conditional_coord;
    const auto rc = power_experiment(c);
    collect(rm);
    collect(rc);
    o.check(within(rm.t_rejection[1], 0.583, 0.05), "t power " + f4(rm.t_rejection[1]) + " vs 0.583 +/- 0.05");
    o.check(within(rm.rejection[1], 0.364, 0.05), "marginal power " + f4(rm.rejection[1]) + " vs 0.364 +/- 0.05");
    o.check(within(rc.rejection[1], 0.469, 0.05),
            "conditional power " + f4(rc.rejection[1]) + " vs 0.469 +/- 0.05");
    return o;
}

Outcome criterion6() {
    Outcome o;
    auto c = power_design({ErrorKind::scaled_chisq, 0.0, 2, 0.0}, SimTest::marginal_coord);
    c.spec.seed = kSeedBase + 6;
    const auto r = power_experiment(c);
    collect(r);
    o.check(within(r.rejection[1], 0.928, 0.04), "marginal power " + f4(r.rejection[1]) + " vs 0.928 +/- 0.04");
    o.check(within(r.t_rejection[1], 0.594, 0.05), "t power " + f4(r.t_rejection[1]) + " vs 0.594 +/- 0.05");
    return o;
}

Outcome criterion7() {
    Outcome o;
    auto c = power_design({ErrorKind::hetero, 0.0, 10, 1.5}, SimTest::marginal_coord);
    c.spec.seed = kSeedBase + 7;
    const auto r = power_experiment(c);
    collect(r);
    o.check(r.rejection[1] >= 0.99, "marginal power " + f4(r.rejection[1]) + " >= 0.99");
    o.check(within(r.t_rejection[1], 0.630, 0.05), "t power " + f4(r.t_rejection[1]) + " vs 0.630 +/- 0.05");
    return o;
}

// Random corpus shared by criteria 8-10.
struct Instance {
    Dataset data;
    CoordinateHypothesis hyp;
    int d;
};

std::vector<Instance> corpus() {
    std::vector<Instance> out;
    RandomStream rng(kSeedBase + 8, 0);
    while (out.size() < 100) {
        const auto n = fixture::uniform_int(rng, 50, 500);
        const auto p = fixture::uniform_int(rng, 3, 8);
        const auto r = fixture::uniform_int(rng, 1, p - 1);
        auto data = fixture::random_regression(rng, n, p);
        auto hyp = hypothesis_from_matrix(fixture::random_matrix(rng, p, r), "random");
        const int d = static_cast<int>(fixture::uniform_int(rng, 1, std::min<Eigen::Index>(p - r, 3)));
        out.push_back({std::move(data), std::move(hyp), d});
    }
    return out;
}

// n sum_y f_y nu_y^T a (a^T S^-1 a)^-1 a^T nu_y with nu_y = S^-1 (xbar_y - xbar), from raw data.
double nu_form(const Dataset& data, const SlicedResponse& s, const Eigen::MatrixXd& a) {
    const auto n = data.n();
    const Eigen::RowVectorXd xbar = data.X().colwise().mean();
    const Eigen::MatrixXd Xc = data.X().rowwise() - xbar;
    const Eigen::MatrixXd S = Xc.transpose() * Xc / static_cast<double>(n);
    const Eigen::MatrixXd Sinv = S.inverse();
    const Eigen::MatrixXd mid = a * (a.transpose() * Sinv * a).inverse() * a.transpose();
    double total = 0.0;
    for (int y = 0; y < s.h; ++y) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.p());
        for (Eigen::Index i = 0; i < n; ++i)
            if (s.labels[static_cast<std::size_t>(i)] == y) mean += Xc.row(i).transpose();
        mean /= s.counts[static_cast<std::size_t>(y)];
        const Eigen::VectorXd nu = Sinv * mean;
        total += s.props(y) * nu.dot(mid * nu);
    }
    return static_cast<double>(n) * total;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

Outcome criterion8(const std::vector<Instance>& cases) {
    Outcome o;
    double worst = 0.0;
    for (const auto& c : cases) {
        const SirAnalysis a(c.data, 5);
        const auto basis = a.basis(c.hyp);
        const double n = static_cast<double>(a.n());
        const double trace_form = n * (basis.P * a.fit(0).M * basis.P).trace();
        const Eigen::MatrixXd v = basis.alpha_hat.transpose() * a.means().Zn;
        const double vec_form = n * v.squaredNorm();
        const double nu = nu_form(c.data, a.slices(), c.hyp.alpha_x);
        worst = std::max({worst, rel(trace_form, vec_form), rel(trace_form, nu)});
    }
    o.check(worst <= 1e-8, "max relative disagreement " + sci(worst) + " over 100 datasets (<= 1e-8)");
    return o;
}

Outcome criterion9(const std::vector<Instance>& cases) {
    Outcome o;
    double worst = 0.0;
    int order_violations = 0;
    for (const auto& c : cases) {
        const SirAnalysis a(c.data, 5);
        const auto tm = marginal_coord_test(a, c.hyp).statistic;
        const auto tc = conditional_coord_test(a, c.hyp, c.d).statistic;
        const auto td = a.dimension_statistic(c.d);
        const auto diff = diff_test(a, c.hyp, c.d).statistic;
        const auto proj = projected_spectrum(a.fit(c.d), a.basis(c.hyp));
        const double tprime = static_cast<double>(a.n()) * proj.lambdas.tail(a.p() - c.d).sum();
        worst = std::max(worst, rel(tc, tm - diff));
        worst = std::max(worst, rel(diff, td - tprime));
        // T' is only offered as a test when r < p - d.
        if (c.hyp.r() < a.p() - c.d) worst = std::max(worst, rel(tprime, constrained_dim_test(a, c.hyp, c.d).statistic));
        const double slack = 1e-10 * std::max(1.0, tm);
        // Statistics may dip below zero by round-off (reported values are clamped).
        if (!(tprime >= -1e-10 && tprime <= td + slack && tc >= 0.0 && tc <= tm + slack)) ++order_violations;
    }
    o.check(worst <= 1e-8, "max relative recomposition error " + sci(worst) + " (<= 1e-8)");
    o.check(order_violations == 0, std::to_string(order_violations) + " ordering violations");
    return o;
}

Outcome criterion10(const std::vector<Instance>& cases) {
    Outcome o;
    double tail = 0.0, lam_lo = 0.0, lam_hi = 0.0, delta_h = 0.0, beta_err = 0.0;
    for (const auto& c : cases) {
        const SirAnalysis a(c.data, 5);
        const auto fit = a.fit(c.d);
        const auto proj = projected_spectrum(fit, a.basis(c.hyp));
        tail = std::max(tail, proj.lambdas.tail(c.hyp.r()).cwiseAbs().maxCoeff());
        lam_lo = std::min(lam_lo, fit.lambdas.minCoeff());
        lam_hi = std::max(lam_hi, fit.lambdas.maxCoeff());
        const auto core = sym_eigenvalues(constrained_core(fit, a.slices()));
        delta_h = std::max(delta_h, std::abs(core(core.size() - 1)));
        const auto& res = a.residuals();
        for (int y = 0; y < a.h(); ++y) {
            const Eigen::VectorXd expected =
                a.slices().props(y) * a.sample().cov_inv_sqrt * a.means().means.row(y).transpose();
            beta_err = std::max(beta_err, (res.beta.col(y) - expected).cwiseAbs().maxCoeff());
        }
    }
    o.check(tail < 1e-10, "last r projected eigenvalues max " + sci(tail) + " (< 1e-10)");
    o.check(lam_lo >= 0.0 && lam_hi <= 1.0 + 1e-8, "lambda range [" + sci(lam_lo) + ", " + f4(lam_hi) + "]");
    o.check(delta_h <= 1e-8, "smallest constrained-core eigenvalue " + sci(delta_h) + " (<= 1e-8)");
    o.check(beta_err <= 1e-9, "indicator slope identity error " + sci(beta_err) + " (<= 1e-9)");
    return o;
}

Outcome criterion11() {
    Outcome o;
    RandomStream rng(kSeedBase + 11, 0);
    double worst_stat = 0.0, worst_p = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = fixture::uniform_int(rng, 80, 400);
        const auto p = fixture::uniform_int(rng, 3, 7);
        const auto r = fixture::uniform_int(rng, 1, p - 1);
        const auto data = fixture::random_regression(rng, n, p);
        const auto hyp = hypothesis_from_matrix(fixture::random_matrix(rng, p, r), "random");
        const int d = static_cast<int>(fixture::uniform_int(rng, 1, std::min<Eigen::Index>(p - r, 3)));
        const int m = static_cast<int>(fixture::uniform_int(rng, 0, std::min<Eigen::Index>(p - 1, 3)));

        const Eigen::MatrixXd A = fixture::random_nonsingular(rng, p);
        const Eigen::RowVectorXd b = fixture::random_matrix(rng, 1, p);
        const Eigen::MatrixXd Xm = (data.X() * A.transpose()).rowwise() + b;
        const auto mapped = data.with_predictors(Xm);
        const auto hyp_m = hypothesis_from_matrix(A * hyp.alpha_x, "mapped");

        const SirAnalysis a0(data, 5);
        const SirAnalysis a1(mapped, 5);
        for (auto variant : {Variant::general, Variant::constrained}) {
            TestOptions opts;
            opts.variant = variant;
            std::vector<std::pair<TestResult, TestResult>> pairs{
                {marginal_dim_test(a0, m, opts), marginal_dim_test(a1, m, opts)},
                {marginal_coord_test(a0, hyp, opts), marginal_coord_test(a1, hyp_m, opts)},
                {conditional_coord_test(a0, hyp, d, opts), conditional_coord_test(a1, hyp_m, d, opts)},
                {diff_test(a0, hyp, d, opts), diff_test(a1, hyp_m, d, opts)},
            };
            if (r < p - d) pairs.emplace_back(constrained_dim_test(a0, hyp, d, opts), constrained_dim_test(a1, hyp_m, d, opts));
            for (const auto& [x, y] : pairs) {
                worst_stat = std::max(worst_stat, std::abs(x.statistic - y.statistic));
                worst_p = std::max(worst_p, std::abs(x.p_or_zero() - y.p_or_zero()));
            }
        }
    }
    o.check(worst_stat <= 1e-7, "max statistic change " + sci(worst_stat) + " (<= 1e-7)");
    o.check(worst_p <= 1e-7, "max p-value change " + sci(worst_p) + " (<= 1e-7)");
    return o;
}

Outcome criterion12() {
    Outcome o;
    int columns = 1;
    for (const auto& t : g_mixtures) {
        int need = 0;
        for (const auto& term : ChiSqMixture::from_weights(t.reference.weights, t.reference.term_df).pruned().terms)
            need += term.df;
        columns = std::max(columns, need);
    }
    const MonteCarloBank bank(1000000, columns, kSeedBase + 12);
    double worst = 0.0;
    std::size_t over = 0;
    for (const auto& t : g_mixtures) {
        const auto mix = ChiSqMixture::from_weights(t.reference.weights, t.reference.term_df);
        const double sat = satterthwaite_pvalue(mix, t.statistic);
        const double mc = bank.pvalue(mix, t.statistic).p;
        const double gap = std::abs(sat - mc);
        worst = std::max(worst, gap);
        over += gap > 0.02;
    }
    o.check(!g_mixtures.empty(), std::to_string(g_mixtures.size()) + " mixtures from criteria 1-7");
    o.check(worst <= 0.02, "max |Satterthwaite - MC(1e6)| " + f4(worst) + " (<= 0.02), " + std::to_string(over) +
                               " above");
    return o;
}

}  // namespace

int main() {
    const auto cases = corpus();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 level, marginal general (linear model)", criterion1},
        {"2 level, dimension test chisq(12)", criterion2},
        {"3 level, T' chisq(9) and difference chisq(3)", criterion3},
        {"4 level at p = 10 (ratio model, n = 800)", criterion4},
        {"5 power, gaussian sigma = 6.4", criterion5},
        {"6 power, chi-squared error D = 2", criterion6},
        {"7 power, heteroscedastic tau = 1.5", criterion7},
        {"8 three forms of the marginal statistic", [&] { return criterion8(cases); }},
        {"9 conditional decomposition and ordering", [&] { return criterion9(cases); }},
        {"10 spectral structure", [&] { return criterion10(cases); }},
        {"11 affine invariance", criterion11},
        {"12 Satterthwaite vs Monte Carlo", criterion12},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail.str() << " ("
                  << f4(secs) << " s)" << std::endl;
        failed += !o.pass;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failed ? 1 : 0;
}
