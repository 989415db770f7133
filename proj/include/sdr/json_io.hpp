#pragma once

// JSON and aligned-text rendering of fits, test results and experiments;
// hypothesis and experiment-config parsing.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sdr/covariance.hpp"
#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/hypothesis.hpp"
#include "sdr/inference.hpp"
#include "sdr/simulation.hpp"
#include "sdr/sir.hpp"

namespace sdr {

using json = nlohmann::json;

namespace detail {

inline json to_json_vector(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json rows_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

inline json cols_json(const Eigen::MatrixXd& m) { return rows_json(m.transpose()); }

}  // namespace detail

inline json to_json(const TestResult& r) {
    json ref;
    switch (r.reference.kind) {
        case Reference::Kind::chisq:
            ref = {{"type", "chisq"}, {"df", r.reference.df}};
            break;
        case Reference::Kind::mixture:
            ref = {{"type", "mixture"}, {"weights", r.reference.weights}, {"term_df", r.reference.term_df}};
            break;
        case Reference::Kind::structural:
            ref = {{"type", "structural"}};
            break;
    }
    json meta = {{"test", r.test}, {"n", r.meta.n}, {"p", r.meta.p}, {"h", r.meta.h},
                 {"calibration", to_string(r.calibration)}};
    if (r.meta.d) meta["d"] = *r.meta.d;
    if (r.meta.r) meta["r"] = *r.meta.r;
    if (!r.meta.hypothesis.empty()) meta["hypothesis"] = r.meta.hypothesis;
    meta["warnings"] = r.meta.warnings;
    if (r.p_value_se) meta["p_value_se"] = *r.p_value_se;
    json out = {{"statistic", r.statistic}, {"reference", ref}, {"variant", to_string(r.variant)}, {"meta", meta}};
    out["p_value"] = r.p_value ? json(*r.p_value) : json(nullptr);
    return out;
}

inline json to_json(const SirFit& f) {
    return {{"lambdas", detail::to_json_vector(f.lambdas)},
            {"directions", detail::cols_json(f.vecs)},
            {"slice_means", detail::rows_json(f.slice_means)},
            {"d", f.d},
            {"rank", f.rank},
            {"warnings", f.warnings}};
}

inline json to_json(const WeightMatrix& w) {
    return {{"kind", to_string(w.kind)}, {"omega", detail::rows_json(w.omega)}};
}

inline json to_json(const DimensionEstimate& e) {
    json trace = json::array();
    for (const auto& t : e.trace) trace.push_back(to_json(t));
    return {{"d", e.d}, {"capped", e.capped}, {"tests", trace}};
}

inline json to_json(const EliminationResult& r, SelectionMode mode) {
    json rounds = json::array();
    for (const auto& round : r.rounds) {
        json pv = json::object();
        for (std::size_t k = 0; k < round.predictors.size(); ++k) pv[round.predictors[k]] = round.p_values[k];
        json j = {{"round", round.round}, {"p_values", pv}, {"predictors", round.predictors}};
        j["removed"] = round.removed ? json(*round.removed) : json(nullptr);
        if (round.d) j["d"] = *round.d;
        if (mode == SelectionMode::conditional) j["marginal_fallback"] = round.used_marginal_fallback;
        rounds.push_back(std::move(j));
    }
    return {{"mode", to_string(mode)}, {"rounds", rounds}, {"removed", r.removed}, {"retained", r.retained}};
}

inline json to_json(const ModelSpec& s) {
    json err = {{"kind", to_string(s.error.kind)}};
    switch (s.error.kind) {
        case ErrorKind::gaussian: err["sigma"] = s.error.sigma; break;
        case ErrorKind::scaled_chisq: err["D"] = s.error.D; break;
        case ErrorKind::hetero: err["tau"] = s.error.tau; break;
    }
    return {{"model", to_string(s.model)}, {"n", s.n}, {"p", s.p},
            {"predictors", to_string(s.predictors)}, {"error", err}, {"seed", s.seed}};
}

inline json to_json(const ExperimentConfig& c) {
    json out = {{"spec", to_json(c.spec)}, {"test", to_string(c.test)}, {"variant", to_string(c.variant)},
                {"d", c.d}, {"reps", c.reps}, {"h", c.h}, {"levels", c.levels}};
    if (c.target) out["target"] = *c.target + 1;
    return out;
}

inline json to_json(const ExperimentResult& r) {
    json out = {{"reps", r.reps}, {"levels", r.levels}, {"rejection", r.rejection}, {"se", r.se}};
    if (!r.t_rejection.empty()) {
        out["t_rejection"] = r.t_rejection;
        out["t_se"] = r.t_se;
        out["corr_quantile_levels"] = r.corr_quantile_levels;
        out["corr_ols"] = r.corr_ols;
        out["corr_sir"] = r.corr_sir;
    }
    return out;
}

// ---- parsing ----

namespace detail {

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> values, const char* what) {
    for (E v : values)
        if (s == to_string(v)) return v;
    throw ArgumentError(std::string("unknown ") + what + " \"" + s + "\"");
}

}  // namespace detail

inline Variant variant_from(const std::string& s) {
    return detail::enum_from(s, {Variant::general, Variant::constrained}, "variant");
}

inline SimTest sim_test_from(const std::string& s) {
    return detail::enum_from(s,
                             {SimTest::marginal_coord, SimTest::conditional_coord, SimTest::marginal_dim,
                              SimTest::constrained_dim, SimTest::dim_difference},
                             "test");
}

/// {"vars": ["name", ...]} or {"alpha_x": [[...], ...]} (p rows of r entries).
inline CoordinateHypothesis hypothesis_from_json(const json& j, const Dataset& data) {
    if (j.contains("vars")) {
        std::vector<Eigen::Index> idx;
        std::string desc;
        for (const auto& v : j.at("vars")) {
            const auto name = v.get<std::string>();
            const auto pos = data.index_of(name);
            if (!pos) throw ArgumentError("unknown predictor \"" + name + "\"");
            idx.push_back(*pos);
            desc += (desc.empty() ? "" : ",") + name;
        }
        auto hyp = predictor_subset(idx, data.p());
        hyp.description = desc;
        return hyp;
    }
    if (j.contains("alpha_x")) {
        const auto& rows = j.at("alpha_x");
        if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != data.p())
            throw ArgumentError("alpha_x must have one row per predictor");
        const auto r = rows.at(0).size();
        Eigen::MatrixXd alpha(data.p(), static_cast<Eigen::Index>(r));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != r) throw ArgumentError("alpha_x rows differ in length");
            for (std::size_t k = 0; k < r; ++k)
                alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
        }
        return hypothesis_from_matrix(std::move(alpha), "alpha_x");
    }
    throw ArgumentError("hypothesis needs \"vars\" or \"alpha_x\"");
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("invalid JSON in \"" + path + "\": " + e.what());
    }
}

/// Experiment config mirroring ModelSpec; absent keys keep their defaults.
/// "target" is 1-based.
inline ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("spec")) {
            const auto& s = j.at("spec");
            if (s.contains("model"))
                c.spec.model = detail::enum_from(s.at("model").get<std::string>(), {Model::linear22, Model::ratio23},
                                                 "model");
            if (s.contains("n")) c.spec.n = s.at("n").get<Eigen::Index>();
            if (s.contains("p")) c.spec.p = s.at("p").get<Eigen::Index>();
            if (s.contains("predictors"))
                c.spec.predictors = detail::enum_from(
                    s.at("predictors").get<std::string>(),
                    {PredictorDist::std_normal, PredictorDist::chisq4, PredictorDist::t5, PredictorDist::uniform},
                    "predictor distribution");
            if (s.contains("seed")) c.spec.seed = s.at("seed").get<std::uint64_t>();
            if (s.contains("error")) {
                const auto& e = s.at("error");
                if (e.contains("kind"))
                    c.spec.error.kind = detail::enum_from(
                        e.at("kind").get<std::string>(),
                        {ErrorKind::gaussian, ErrorKind::scaled_chisq, ErrorKind::hetero}, "error kind");
                if (e.contains("sigma")) c.spec.error.sigma = e.at("sigma").get<double>();
                if (e.contains("D")) c.spec.error.D = e.at("D").get<int>();
                if (e.contains("tau")) c.spec.error.tau = e.at("tau").get<double>();
            }
        }
        if (j.contains("test")) c.test = sim_test_from(j.at("test").get<std::string>());
        if (j.contains("variant")) c.variant = variant_from(j.at("variant").get<std::string>());
        if (j.contains("d")) c.d = j.at("d").get<int>();
        if (j.contains("reps")) c.reps = j.at("reps").get<int>();
        if (j.contains("h")) c.h = j.at("h").get<int>();
        if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
        if (j.contains("target")) c.target = j.at("target").get<Eigen::Index>() - 1;
        if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("bad experiment config: ") + e.what());
    }
    return c;
}

// ---- text tables ----

inline std::string fmt6(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

/// Left-aligned first column, right-aligned others.
inline std::string render_table(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& r) {
        for (std::size_t k = 0; k < r.size() && k < width.size(); ++k) width[k] = std::max(width[k], r[k].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& r) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) out << "  ";
            if (k == 0)
                out << std::left << std::setw(static_cast<int>(width[k])) << r[k];
            else
                out << std::right << std::setw(static_cast<int>(width[k])) << r[k];
        }
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out.str();
}

inline std::string reference_text(const TestResult& r) {
    switch (r.reference.kind) {
        case Reference::Kind::chisq: return "chisq(" + std::to_string(r.reference.df) + ")";
        case Reference::Kind::mixture:
            return "mixture of " + std::to_string(r.reference.weights.size()) + " x chisq(" +
                   std::to_string(r.reference.term_df) + ")";
        case Reference::Kind::structural: return "structural";
    }
    return "";
}

inline std::string p_text(const TestResult& r) { return r.p_value ? fmt6(*r.p_value) : "reject (r > p - d)"; }

inline std::string render_text(const TestResult& r) {
    std::ostringstream out;
    out << r.test << " (" << to_string(r.variant) << ")";
    if (!r.meta.hypothesis.empty()) out << ", H = " << r.meta.hypothesis;
    if (r.meta.d) out << ", d = " << *r.meta.d;
    out << "\n";
    out << render_table({"statistic", "reference", "p-value"}, {{fmt6(r.statistic), reference_text(r), p_text(r)}});
    for (const auto& w : r.meta.warnings) out << "warning: " << w << "\n";
    return out.str();
}

inline std::string render_text(const DimensionEstimate& e) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : e.trace)
        rows.push_back({std::to_string(*t.meta.d), fmt6(t.statistic), reference_text(t), p_text(t)});
    std::ostringstream out;
    out << render_table({"m", "statistic", "reference", "p-value"}, rows);
    out << "estimated d = " << e.d << (e.capped ? " (capped: every test rejected)" : "") << "\n";
    if (!e.trace.empty())
        for (const auto& w : e.trace.front().meta.warnings) out << "warning: " << w << "\n";
    return out.str();
}

inline std::string render_text(const EliminationResult& r, SelectionMode mode) {
    std::ostringstream out;
    for (const auto& round : r.rounds) {
        out << "round " << round.round;
        if (round.d) out << ", d = " << *round.d << (round.used_marginal_fallback ? " (marginal tests)" : "");
        out << "\n";
        std::vector<std::vector<std::string>> rows;
        for (std::size_t k = 0; k < round.predictors.size(); ++k)
            rows.push_back({round.predictors[k], fmt6(round.p_values[k])});
        out << render_table({"predictor", "p-value"}, rows);
        out << "removed: " << (round.removed ? *round.removed : std::string("none")) << "\n\n";
    }
    out << "mode: " << to_string(mode) << "\nretained:";
    for (const auto& name : r.retained) out << " " << name;
    if (r.retained.empty()) out << " (none)";
    out << "\n";
    return out.str();
}

inline std::string render_text(const ExperimentResult& r) {
    std::vector<std::string> header{"test"};
    for (double l : r.levels) header.push_back(fmt6(100.0 * l) + "%");
    std::vector<std::vector<std::string>> rows;
    auto row = [&](const char* name, const std::vector<double>& v, const std::vector<double>& se) {
        std::vector<std::string> cells{name};
        for (std::size_t k = 0; k < v.size(); ++k) cells.push_back(fmt6(v[k]) + " (" + fmt6(se[k]) + ")");
        rows.push_back(std::move(cells));
    };
    row("sdr", r.rejection, r.se);
    if (!r.t_rejection.empty()) row("t", r.t_rejection, r.t_se);
    std::ostringstream out;
    out << "rejection fractions over " << r.reps << " replications (standard errors)\n";
    out << render_table(header, rows);
    if (!r.corr_ols.empty()) {
        std::vector<std::string> ch{"|corr| with X"};
        for (double q : r.corr_quantile_levels) ch.push_back("c" + fmt6(q));
        std::vector<std::vector<std::string>> crows;
        auto crow = [&](const char* name, const std::vector<double>& v) {
            std::vector<std::string> cells{name};
            for (double x : v) cells.push_back(fmt6(x));
            crows.push_back(std::move(cells));
        };
        crow("OLS fit", r.corr_ols);
        crow("first SIR predictor", r.corr_sir);
        out << "\n" << render_table(ch, crows);
    }
    return out.str();
}

}  // namespace sdr
