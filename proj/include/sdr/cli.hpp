#pragma once

// Command-line front end. run() is the whole program; tools/sdrtest.cpp only
// forwards argv to it.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/inference.hpp"
#include "sdr/json_io.hpp"
#include "sdr/simulation.hpp"

namespace sdr::cli {

struct Config {
    std::string data;
    std::string response = "y";
    int slices = 5;
    std::vector<std::string> vars;
    std::string hypothesis_file;
    std::optional<int> dim;
    std::string variant = "general";
    double alpha = 0.05;
    std::string calibration = "satterthwaite";
    std::int64_t draws = 100000;
    std::optional<std::uint64_t> seed;
    std::string format = "table";
    std::string mode = "marginal";
    std::string out;

    // simulate / generate
    std::string config_file;
    std::string model = "linear22";
    Eigen::Index n = 200;
    Eigen::Index p = 5;
    std::string predictors = "std_normal";
    std::string error = "gaussian";
    double sigma = 0.2;
    int D = 10;
    double tau = 0.0;
    std::string test = "marginal_coord";
    int d = 1;
    std::optional<Eigen::Index> target;
    int reps = 1000;
    int threads = 1;
};

namespace detail {

inline std::uint64_t resolve_seed(const Config& c) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("SDR_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ArgumentError(std::string("SDR_SEED is not an unsigned integer: ") + env);
        }
    }
    return 0;
}

inline TestOptions options(const Config& c) {
    TestOptions o;
    o.variant = variant_from(c.variant);
    o.calibration = c.calibration == "mc" ? Calibration::monte_carlo : Calibration::satterthwaite;
    o.mc_draws = c.draws;
    o.seed = resolve_seed(c);
    return o;
}

inline Dataset load(const Config& c) { return load_csv(c.data, c.response); }

inline std::optional<CoordinateHypothesis> hypothesis(const Config& c, const Dataset& data) {
    if (!c.hypothesis_file.empty()) return hypothesis_from_json(read_json_file(c.hypothesis_file), data);
    if (c.vars.empty()) return std::nullopt;
    return hypothesis_from_json(json{{"vars", c.vars}}, data);
}

inline void emit(std::ostream& out, const Config& c, const json& j, const std::string& text) {
    if (c.format == "json")
        out << j.dump(2) << "\n";
    else
        out << text;
}

inline int cmd_slice(const Config& c, std::ostream& out) {
    const auto data = load(c);
    const auto s = slice_response(data.y(), c.slices);
    if (c.out.empty()) {
        write_csv(out, data, &s.labels);
    } else {
        save_csv(c.out, data, &s.labels);
    }
    return 0;
}

inline int cmd_fit(const Config& c, std::ostream& out) {
    const SirAnalysis a(load(c), c.slices);
    const auto fit = a.fit(c.dim.value_or(0));
    std::ostringstream text;
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index j = 0; j < fit.lambdas.size(); ++j) {
        std::vector<std::string> row{std::to_string(j + 1), fmt6(fit.lambdas(j))};
        for (Eigen::Index k = 0; k < fit.p(); ++k) row.push_back(fmt6(fit.vecs(k, j)));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"j", "lambda"};
    for (const auto& name : a.data().names()) header.push_back(name);
    text << "eigenvalues and Z-scale directions (basis representatives)\n" << render_table(header, rows);
    for (const auto& w : fit.warnings) text << "warning: " << w << "\n";
    emit(out, c, to_json(fit), text.str());
    return 0;
}

inline int cmd_dim(const Config& c, std::ostream& out) {
    const SirAnalysis a(load(c), c.slices);
    const auto est = estimate_dim(a, c.alpha, options(c));
    emit(out, c, to_json(est), render_text(est));
    return 0;
}

inline int cmd_coord(const Config& c, std::ostream& out) {
    const auto data = load(c);
    const SirAnalysis a(data, c.slices);
    const auto opts = options(c);
    auto run_one = [&](const CoordinateHypothesis& hyp) {
        return c.dim ? conditional_coord_test(a, hyp, *c.dim, opts) : marginal_coord_test(a, hyp, opts);
    };
    if (const auto hyp = hypothesis(c, data)) {
        const auto r = run_one(*hyp);
        emit(out, c, to_json(r), render_text(r));
        return 0;
    }
    json tests = json::array();
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> warnings;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        auto hyp = predictor_subset({j}, data.p());
        hyp.description = data.names()[static_cast<std::size_t>(j)];
        const auto r = run_one(hyp);
        tests.push_back(to_json(r));
        rows.push_back({hyp.description, fmt6(r.statistic), p_text(r)});
        if (warnings.empty()) warnings = r.meta.warnings;
    }
    std::ostringstream text;
    text << (c.dim ? "conditional coordinate tests, d = " + std::to_string(*c.dim) : std::string("marginal coordinate tests"))
         << " (" << c.variant << ")\n"
         << render_table({"predictor", "statistic", "p-value"}, rows);
    for (const auto& w : warnings) text << "warning: " << w << "\n";
    emit(out, c, json{{"tests", tests}}, text.str());
    return 0;
}

inline int cmd_select(const Config& c, std::ostream& out) {
    const auto mode = c.mode == "conditional" ? SelectionMode::conditional : SelectionMode::marginal;
    const auto r = backward_elimination(load(c), c.slices, c.alpha, mode, options(c));
    emit(out, c, to_json(r, mode), render_text(r, mode));
    return 0;
}

inline ExperimentConfig experiment(const Config& c, const CLI::App& sub) {
    ExperimentConfig e;
    if (!c.config_file.empty()) e = experiment_from_json(read_json_file(c.config_file));
    auto given = [&](const char* name) {
        const auto* opt = sub.get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--model"))
        e.spec.model = sdr::detail::enum_from(c.model, {Model::linear22, Model::ratio23}, "model");
    if (given("--n")) e.spec.n = c.n;
    if (given("--p")) e.spec.p = c.p;
    if (given("--predictors"))
        e.spec.predictors = sdr::detail::enum_from(
            c.predictors, {PredictorDist::std_normal, PredictorDist::chisq4, PredictorDist::t5, PredictorDist::uniform},
            "predictor distribution");
    if (given("--error"))
        e.spec.error.kind = sdr::detail::enum_from(
            c.error, {ErrorKind::gaussian, ErrorKind::scaled_chisq, ErrorKind::hetero}, "error kind");
    if (given("--sigma")) e.spec.error.sigma = c.sigma;
    if (given("--D")) e.spec.error.D = c.D;
    if (given("--tau")) e.spec.error.tau = c.tau;
    if (given("--test")) e.test = sim_test_from(c.test);
    if (given("--variant")) e.variant = variant_from(c.variant);
    if (given("--d")) e.d = c.d;
    if (given("--target")) e.target = *c.target - 1;
    if (given("--reps")) e.reps = c.reps;
    if (given("--slices")) e.h = c.slices;
    if (given("--threads")) e.threads = c.threads;
    if (given("--seed") || std::getenv("SDR_SEED")) e.spec.seed = resolve_seed(c);
    return e;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Config c;
    CLI::App app{"Coordinate hypothesis tests for sliced inverse regression"};
    app.require_subcommand(1);

    auto data_opts = [&](CLI::App* s) {
        s->add_option("--data", c.data, "CSV file with a header row")->required();
        s->add_option("--response", c.response, "response column")->capture_default_str();
        s->add_option("--slices,-H", c.slices, "number of slices")->check(CLI::Range(2, 1 << 30))->capture_default_str();
        s->add_option("--format", c.format, "table or json")
            ->check(CLI::IsMember({"table", "json"}))
            ->capture_default_str();
    };
    auto test_opts = [&](CLI::App* s) {
        s->add_option("--variant", c.variant, "general or constrained")
            ->check(CLI::IsMember({"general", "constrained"}))
            ->capture_default_str();
        s->add_option("--calibration", c.calibration, "satterthwaite or mc")
            ->check(CLI::IsMember({"satterthwaite", "mc"}))
            ->capture_default_str();
        s->add_option("--draws", c.draws, "Monte Carlo draws")->check(CLI::Range(std::int64_t{1000}, std::int64_t{1} << 40));
        s->add_option("--seed", c.seed, "seed (falls back to SDR_SEED)");
    };
    const auto open_unit = CLI::Validator(
        [](std::string& s) -> std::string {
            try {
                const double v = std::stod(s);
                return v > 0.0 && v < 1.0 ? "" : "must lie strictly between 0 and 1";
            } catch (const std::exception&) {
                return "not a number";
            }
        },
        "(0,1)");

    auto* slice = app.add_subcommand("slice", "print the data with a 1-based slice column");
    data_opts(slice);
    slice->add_option("--out", c.out, "write to a file instead of stdout");

    auto* fit = app.add_subcommand("fit", "SIR spectrum and directions");
    data_opts(fit);
    fit->add_option("--dim", c.dim, "working dimension")->check(CLI::NonNegativeNumber);

    auto* dim = app.add_subcommand("dim", "sequential dimension tests");
    data_opts(dim);
    test_opts(dim);
    dim->add_option("--alpha", c.alpha, "level")->check(open_unit)->capture_default_str();

    auto* coord = app.add_subcommand("coord", "marginal, or with --dim conditional, coordinate tests");
    data_opts(coord);
    test_opts(coord);
    auto* vars = coord->add_option("--vars", c.vars, "predictors forming H")->delimiter(',');
    coord->add_option("--hypothesis", c.hypothesis_file, "JSON file with \"vars\" or \"alpha_x\"")
        ->check(CLI::ExistingFile)
        ->excludes(vars);
    coord->add_option("--dim", c.dim, "assumed dimension")->check(CLI::PositiveNumber);

    auto* select = app.add_subcommand("select", "backward elimination");
    data_opts(select);
    test_opts(select);
    select->add_option("--alpha", c.alpha, "level")->check(open_unit)->capture_default_str();
    select->add_option("--mode", c.mode, "marginal or conditional")
        ->check(CLI::IsMember({"marginal", "conditional"}))
        ->capture_default_str();

    auto model_opts = [&](CLI::App* s) {
        s->add_option("--model", c.model)->check(CLI::IsMember({"linear22", "ratio23"}));
        s->add_option("--n", c.n)->check(CLI::PositiveNumber);
        s->add_option("--p", c.p)->check(CLI::PositiveNumber);
        s->add_option("--predictors", c.predictors)->check(CLI::IsMember({"std_normal", "chisq4", "t5", "uniform"}));
        s->add_option("--error", c.error)->check(CLI::IsMember({"gaussian", "scaled_chisq", "hetero"}));
        s->add_option("--sigma", c.sigma)->check(CLI::NonNegativeNumber);
        s->add_option("--D", c.D)->check(CLI::PositiveNumber);
        s->add_option("--tau", c.tau);
        s->add_option("--seed", c.seed, "seed (falls back to SDR_SEED)");
    };

    auto* simulate = app.add_subcommand("simulate", "level or power experiment");
    simulate->require_subcommand(1);
    std::vector<CLI::App*> sims;
    for (const char* kind : {"level", "power"}) {
        auto* s = simulate->add_subcommand(kind, std::string(kind) + " experiment");
        s->add_option("--config", c.config_file, "experiment JSON")->check(CLI::ExistingFile);
        model_opts(s);
        s->add_option("--test", c.test)
            ->check(CLI::IsMember(
                {"marginal_coord", "conditional_coord", "marginal_dim", "constrained_dim", "dim_difference"}));
        s->add_option("--variant", c.variant)->check(CLI::IsMember({"general", "constrained"}));
        s->add_option("--d", c.d, "dimension for conditional tests, m for marginal_dim")->check(CLI::NonNegativeNumber);
        s->add_option("--target", c.target, "tested predictor, 1-based")->check(CLI::PositiveNumber);
        s->add_option("--reps", c.reps)->check(CLI::Range(100, 1 << 30));
        s->add_option("--slices,-H", c.slices)->check(CLI::Range(2, 1 << 30));
        s->add_option("--threads", c.threads)->check(CLI::PositiveNumber);
        s->add_option("--format", c.format)->check(CLI::IsMember({"table", "json"}));
        sims.push_back(s);
    }

    auto* generate = app.add_subcommand("generate", "write one simulated dataset as CSV");
    model_opts(generate);
    generate->add_option("--out", c.out, "write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << "usage: sdrtest {slice|fit|dim|coord|select|simulate level|simulate power|generate} [options]; "
               "see --help\n";
        return 2;
    }

    try {
        if (*slice) return detail::cmd_slice(c, out);
        if (*fit) return detail::cmd_fit(c, out);
        if (*dim) return detail::cmd_dim(c, out);
        if (*coord) return detail::cmd_coord(c, out);
        if (*select) return detail::cmd_select(c, out);
        for (auto* s : sims) {
            if (!*s) continue;
            const auto cfg = detail::experiment(c, *s);
            const bool power = s->get_name() == "power";
            const auto r = power ? power_experiment(cfg) : level_experiment(cfg);
            std::ostringstream text;
            text << to_string(cfg.spec.model) << ", n = " << cfg.spec.n << ", p = " << cfg.spec.p << ", "
                 << to_string(cfg.test) << " (" << to_string(cfg.variant) << ")\n"
                 << render_text(r);
            detail::emit(out, c, json{{"config", to_json(cfg)}, {"result", to_json(r)}}, text.str());
            return 0;
        }
        if (*generate) {
            const auto data = gen_dataset(detail::experiment(c, *generate).spec, 0);
            if (c.out.empty())
                write_csv(out, data);
            else
                save_csv(c.out, data);
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace sdr::cli
