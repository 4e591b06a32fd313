#include "mbf/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbf/bench.hpp"
#include "mbf/config.hpp"
#include "mbf/forecast.hpp"
#include "mbf/io.hpp"
#include "mbf/synthetic.hpp"

namespace mbf {

namespace {

constexpr const char* kReportSchemaVersion = "1.0";

struct Options {
    std::string input;
    std::string config;
    std::string output = "-";
    std::string json;
    std::size_t lookfront = 1;
    std::optional<std::uint64_t> seed;
    bool freeze_denoise = false;
    std::size_t jobs = 1;
};

RunConfig resolve_config(const Options& opt) {
    RunConfig cfg = opt.config.empty() ? default_config() : load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.freeze_denoise) cfg.forecast.freeze_denoise = true;
    validate(cfg);
    return cfg;
}

struct Provenance {
    std::string version = MBF_VERSION;
    std::uint64_t seed = 0;
    std::string config_sha256;
};

Provenance provenance(const RunConfig& cfg) {
    return Provenance{MBF_VERSION, cfg.seed, sha256_hex(to_ini(cfg))};
}

std::string comment_block(const Provenance& p, const std::vector<std::pair<std::string, std::string>>& extra) {
    std::string out = "# mbf " + p.version + "\n# seed = " + std::to_string(p.seed) +
                      "\n# config_sha256 = " + p.config_sha256 + "\n";
    for (const auto& [k, v] : extra) out += "# " + k + " = " + v + "\n";
    return out;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

// Checks that the series supports the window and neighbour counts at its shortest training length.
void check_data_fit(const RunConfig& cfg, std::size_t length, std::size_t components) {
    const auto& k = cfg.forecast.k;
    if (k.size() != 1 && k.size() != components) {
        throw ConfigError("forecast.k", "has " + std::to_string(k.size()) + " entries for " +
                                            std::to_string(components) + " components");
    }
    if (cfg.window >= length) {
        throw ConfigError("window.size", "window " + std::to_string(cfg.window) +
                                             " needs a series longer than " + std::to_string(length));
    }
    const std::size_t history = length - cfg.window;
    const std::size_t kmax = *std::max_element(k.begin(), k.end());
    if (kmax > history) {
        throw ConfigError("forecast.k", "k = " + std::to_string(kmax) + " exceeds the " +
                                            std::to_string(history) + " available neighbours");
    }
}

std::vector<std::string> column_names(const std::vector<std::string>& header, std::size_t p) {
    if (header.size() == p) return header;
    std::vector<std::string> names;
    for (std::size_t c = 1; c <= p; ++c) names.push_back("z" + std::to_string(c));
    return names;
}

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json("auto");
}

nlohmann::json config_json(const RunConfig& cfg) {
    using nlohmann::json;
    const auto& s = cfg.synthetic;
    return json{
        {"seed", cfg.seed},
        {"window", {{"size", cfg.window}, {"standardize", cfg.forecast.standardize}}},
        {"forecast",
         {{"k", cfg.forecast.k}, {"tau", cfg.forecast.tau}, {"freeze_denoise", cfg.forecast.freeze_denoise}}},
        {"denoiser",
         {{"kind", std::holds_alternative<NoDenoise>(cfg.forecast.denoiser) ? "none"
                                                                             : denoiser_name(cfg.forecast.denoiser)}}},
        {"same",
         {{"dim", cfg.same.dim},
          {"iterations", cfg.same.iterations},
          {"h0", optional_json(cfg.same.h0)},
          {"tau0", cfg.same.tau0},
          {"decay", cfg.same.decay},
          {"gamma", cfg.same.gamma}}},
        {"ldmm",
         {{"h_sq", optional_json(cfg.ldmm.h_sq)},
          {"lambda", optional_json(cfg.ldmm.lambda)},
          {"mu", cfg.ldmm.mu},
          {"max_iters", cfg.ldmm.max_iters},
          {"rel_tol", cfg.ldmm.rel_tol},
          {"ridge", cfg.ldmm.ridge},
          {"bandwidth_scale", cfg.ldmm.bandwidth_scale}}},
        {"synthetic",
         {{"manifold", to_string(s.manifold)},
          {"length", s.length},
          {"sigma", s.noise.sigma},
          {"distribution", s.noise.distribution == NoiseDistribution::gaussian ? "gaussian" : "bounded-uniform"},
          {"persistence", s.noise.persistence},
          {"mixing", s.circle.mixing == Mixing::ergodic ? "ergodic" : "periodic"},
          {"kappa", s.circle.kappa},
          {"rotation", s.circle.rotation},
          {"jitter", s.circle.jitter},
          {"ar_coeffs", s.ar_coeffs},
          {"graph_gain", s.graph_gain}}},
        {"backtest",
         {{"lookfronts", cfg.backtest.lookfronts},
          {"holdout", cfg.backtest.holdout},
          {"methods", cfg.backtest.methods},
          {"source", cfg.backtest.source}}},
        {"ratestudy", {{"lengths", cfg.ratestudy.lengths}, {"trials", cfg.ratestudy.trials}}},
    };
}

int cmd_forecast(const Options& opt, std::ostream& out) {
    if (opt.lookfront < 1) throw ConfigError("--lookfront", "must be at least 1");
    const RunConfig cfg = resolve_config(opt);
    const CsvTable table = read_csv(opt.input);
    const TimeSeries series(table.values);
    check_data_fit(cfg, series.length(), series.components());

    const Forecast fc = predict(series, cfg.window, cfg.forecast, opt.lookfront);
    std::ostringstream text;
    text << comment_block(provenance(cfg),
                          {{"denoiser", std::holds_alternative<NoDenoise>(cfg.forecast.denoiser)
                                            ? "none"
                                            : denoiser_name(cfg.forecast.denoiser)},
                           {"lookfront", std::to_string(opt.lookfront)},
                           {"uniform_fallbacks", std::to_string(fc.diagnostics.uniform_fallbacks)},
                           {"same_projector_fallbacks", std::to_string(fc.diagnostics.same_projector_fallbacks)}});
    write_csv(text, fc.values, column_names(table.header, series.components()));
    emit(opt.output, text.str(), out);
    return kExitOk;
}

int cmd_backtest(const Options& opt, std::ostream& out) {
    const RunConfig cfg = resolve_config(opt);
    std::string source;
    std::optional<TimeSeries> series;
    if (cfg.backtest.source == "synthetic") {
        const SyntheticSample sample =
            make_generator(cfg.synthetic)(cfg.synthetic.length, derive_seed(cfg.seed, "generator"));
        series = forecast_series(sample);
        source = "synthetic:" + to_string(cfg.synthetic.manifold);
    } else {
        if (opt.input.empty()) throw ConfigError("--input", "required when backtest.source = input");
        series = read_series(opt.input);
        source = std::filesystem::path(opt.input).filename().string();
    }
    if (cfg.backtest.holdout >= series->length()) {
        throw ConfigError("backtest.holdout", "leaves no training data");
    }
    check_data_fit(cfg, series->length() - cfg.backtest.holdout, series->components());

    std::vector<MethodSpec> methods;
    for (const auto& name : cfg.backtest.methods) {
        methods.push_back(MethodSpec{name, cfg.window, method_forecast(cfg, name)});
    }
    BacktestOptions bo;
    bo.lookfronts = cfg.backtest.lookfronts;
    bo.holdout = cfg.backtest.holdout;
    bo.seed = cfg.seed;
    bo.jobs = opt.jobs;
    const ForecastReport report = backtest(*series, methods, bo);

    std::ostringstream csv;
    csv << "lookfront,method,component,rmse\n";
    for (const auto& row : report.rows) {
        csv << row.lookfront << ',' << row.method << ',' << row.component << ',' << format_number(row.rmse) << '\n';
    }

    // One JSON row per (lookfront, method) with the per-component errors, like a results table.
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < report.rows.size(); i += report.components) {
        std::vector<double> errs;
        for (std::size_t c = 0; c < report.components; ++c) errs.push_back(report.rows[i + c].rmse);
        rows.push_back({{"lookfront", report.rows[i].lookfront}, {"method", report.rows[i].method}, {"rmse", errs}});
    }
    const Provenance prov = provenance(cfg);
    const nlohmann::json doc{
        {"schema_version", kReportSchemaVersion},
        {"config", config_json(cfg)},
        {"rows", rows},
        {"provenance",
         {{"version", prov.version},
          {"seed", prov.seed},
          {"config_sha256", prov.config_sha256},
          {"source", source},
          {"origins", report.origins},
          {"components", report.components}}},
    };

    emit(opt.output, csv.str(), out);
    std::string json_path = opt.json;
    if (json_path.empty() && opt.output != "-") {
        json_path = std::filesystem::path(opt.output).replace_extension(".json").string();
    }
    if (!json_path.empty()) emit(json_path, doc.dump(2) + "\n", out);
    return kExitOk;
}

int cmd_ratestudy(const Options& opt, std::ostream& out) {
    const RunConfig cfg = resolve_config(opt);
    const auto rows = denoise_error_curve(make_generator(cfg.synthetic), cfg.ratestudy.lengths, cfg.forecast.denoiser,
                                          cfg.ratestudy.trials, derive_seed(cfg.seed, "generator"), opt.jobs);
    std::ostringstream text;
    text << comment_block(provenance(cfg),
                          {{"manifold", to_string(cfg.synthetic.manifold)},
                           {"denoiser", std::holds_alternative<NoDenoise>(cfg.forecast.denoiser)
                                            ? "none"
                                            : denoiser_name(cfg.forecast.denoiser)},
                           {"trials", std::to_string(cfg.ratestudy.trials)}});
    text << "T,mean_sq_dist,std\n";
    for (const auto& r : rows) {
        text << r.length << ',' << format_number(r.mean_sq_dist) << ',' << format_number(r.std) << '\n';
    }
    emit(opt.output, text.str(), out);
    return kExitOk;
}

void print_chain(const std::exception& e, std::ostream& err, int depth) {
    err << (depth == 0 ? "mbf: error: " : "  caused by: ") << e.what() << '\n';
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        print_chain(inner, err, depth + 1);
    } catch (...) {
    }
}

}  // namespace

int classify_exception(const std::exception& e) {
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        return classify_exception(inner);
    } catch (...) {
        return kExitFailure;
    }
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IoError*>(&e)) return kExitParse;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
        dynamic_cast<const CLI::Error*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const ContractViolation*>(&e)) return kExitNumeric;
    return kExitFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Manifold-denoised nearest-neighbour forecasting"};
    app.set_version_flag("--version", std::string(MBF_VERSION));
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "INI configuration file");
        sub->add_option("--output", opt.output, "Output path, '-' for standard output");
        sub->add_option("--seed", opt.seed, "Overrides the configured seed");
        sub->add_option("--jobs", opt.jobs, "Parallel width")->check(CLI::PositiveNumber);
        sub->add_flag("--freeze-denoise", opt.freeze_denoise, "Denoise once instead of at every recursive step");
    };

    auto* forecast = app.add_subcommand("forecast", "Forecast the next steps of a CSV series");
    forecast->add_option("--input", opt.input, "Series CSV, one column per component")->required();
    forecast->add_option("--lookfront", opt.lookfront, "Number of steps ahead");
    add_common(forecast);

    auto* bt = app.add_subcommand("backtest", "Rolling-origin RMSE report");
    bt->add_option("--input", opt.input, "Series CSV (when backtest.source = input)");
    bt->add_option("--json", opt.json, "JSON report path (default: output with .json extension)");
    add_common(bt);

    auto* rs = app.add_subcommand("ratestudy", "Denoising error against series length");
    add_common(rs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "mbf: error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*forecast) return cmd_forecast(opt, out);
        if (*bt) return cmd_backtest(opt, out);
        return cmd_ratestudy(opt, out);
    } catch (const std::exception& e) {
        print_chain(e, err, 0);
        return classify_exception(e);
    }
}

}  // namespace mbf
