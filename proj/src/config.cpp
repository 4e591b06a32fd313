#include "mbf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "mbf/io.hpp"

namespace mbf {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"window", {"size", "standardize"}},
        {"forecast", {"k", "tau", "freeze_denoise"}},
        {"denoiser", {"kind"}},
        {"same", {"dim", "iterations", "h0", "tau0", "decay", "gamma"}},
        {"ldmm", {"h_sq", "lambda", "mu", "max_iters", "rel_tol", "ridge", "bandwidth_scale"}},
        {"synthetic",
         {"manifold", "length", "sigma", "distribution", "persistence", "mixing", "kappa", "rotation", "jitter",
          "ar_coeffs", "graph_gain"}},
        {"backtest", {"lookfronts", "holdout", "methods", "source"}},
        {"ratestudy", {"lengths", "trials"}},
    };
    return keys;
}

std::string trimmed(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

double to_double(const std::string& field, const std::string& text) {
    const std::string t = trimmed(text);
    double v = 0.0;
    const char* begin = t.data() + (!t.empty() && t.front() == '+');
    const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || std::isnan(v)) {
        throw ConfigError(field, "expected a number, got '" + t + "'");
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& field, const std::string& text) {
    const std::string t = trimmed(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ConfigError(field, "expected a nonnegative integer, got '" + t + "'");
    }
    return v;
}

bool to_bool(const std::string& field, const std::string& text) {
    const std::string t = trimmed(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(field, "expected true or false, got '" + t + "'");
}

std::vector<std::string> to_list(const std::string& field, const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trimmed(item);
        if (item.empty()) throw ConfigError(field, "empty list entry");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError(field, "list is empty");
    return out;
}

std::optional<double> to_optional(const std::string& field, const std::string& text) {
    if (trimmed(text) == "auto") return std::nullopt;
    return to_double(field, text);
}

template <class F>
void wrap(const std::string& field, F&& check) {
    try {
        check();
    } catch (const InvalidArgument& e) {
        throw ConfigError(field, e.what());
    }
}

// Denoiser checks name the key as the first word of their message ("same.tau0 must ...").
template <class F>
void wrap_section(const std::string& section, F&& check) {
    try {
        check();
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        const std::string first = msg.substr(0, msg.find(' '));
        throw ConfigError(first.rfind(section + ".", 0) == 0 ? first : section, msg);
    }
}

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

std::string join_numbers(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + std::to_string(values[i]);
    return out;
}

std::string optional_text(const std::optional<double>& v) {
    return v ? format_number(*v) : "auto";
}

void apply(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
    const std::string field = section.empty() ? key : section + "." + key;
    auto sizes = [&] {
        std::vector<std::size_t> out;
        for (const auto& item : to_list(field, value)) out.push_back(to_unsigned(field, item));
        return out;
    };
    auto num = [&] { return to_double(field, value); };
    auto count = [&] { return static_cast<std::size_t>(to_unsigned(field, value)); };

    if (section.empty()) {
        if (key != "seed") throw ConfigError(field, "unknown key");
        cfg.seed = to_unsigned(field, value);
        return;
    }
    const auto& keys = known_keys();
    const auto it = keys.find(section);
    if (it == keys.end()) throw ConfigError(section, "unknown section");
    if (!it->second.count(key)) throw ConfigError(field, "unknown key");

    if (section == "window") {
        if (key == "size") cfg.window = count();
        if (key == "standardize") cfg.forecast.standardize = to_bool(field, value);
    } else if (section == "forecast") {
        if (key == "k") cfg.forecast.k = sizes();
        if (key == "tau") cfg.forecast.tau = num();
        if (key == "freeze_denoise") cfg.forecast.freeze_denoise = to_bool(field, value);
    } else if (section == "denoiser") {
        const std::string kind = trimmed(value);
        if (kind == "none" || kind == "knn") {
            cfg.forecast.denoiser = NoDenoise{};
        } else if (kind == "same") {
            cfg.forecast.denoiser = SameConfig{};
        } else if (kind == "ldmm") {
            cfg.forecast.denoiser = LdmmConfig{};
        } else {
            throw ConfigError(field, "expected none, same or ldmm, got '" + kind + "'");
        }
    } else if (section == "same") {
        if (key == "dim") cfg.same.dim = count();
        if (key == "iterations") cfg.same.iterations = count();
        if (key == "h0") cfg.same.h0 = to_optional(field, value);
        if (key == "tau0") cfg.same.tau0 = num();
        if (key == "decay") cfg.same.decay = num();
        if (key == "gamma") cfg.same.gamma = num();
    } else if (section == "ldmm") {
        if (key == "h_sq") cfg.ldmm.h_sq = to_optional(field, value);
        if (key == "lambda") cfg.ldmm.lambda = to_optional(field, value);
        if (key == "mu") cfg.ldmm.mu = num();
        if (key == "max_iters") cfg.ldmm.max_iters = count();
        if (key == "rel_tol") cfg.ldmm.rel_tol = num();
        if (key == "ridge") cfg.ldmm.ridge = num();
        if (key == "bandwidth_scale") cfg.ldmm.bandwidth_scale = num();
    } else if (section == "synthetic") {
        auto& s = cfg.synthetic;
        if (key == "manifold") wrap(field, [&] { s.manifold = parse_manifold_tag(trimmed(value)); });
        if (key == "length") s.length = count();
        if (key == "sigma") {
            s.noise.sigma.clear();
            for (const auto& item : to_list(field, value)) s.noise.sigma.push_back(to_double(field, item));
        }
        if (key == "distribution") {
            const std::string d = trimmed(value);
            if (d == "gaussian") {
                s.noise.distribution = NoiseDistribution::gaussian;
            } else if (d == "bounded-uniform") {
                s.noise.distribution = NoiseDistribution::bounded_uniform;
            } else {
                throw ConfigError(field, "expected gaussian or bounded-uniform, got '" + d + "'");
            }
        }
        if (key == "persistence") s.noise.persistence = num();
        if (key == "mixing") wrap(field, [&] { s.circle.mixing = parse_mixing(trimmed(value)); });
        if (key == "kappa") s.circle.kappa = num();
        if (key == "rotation") s.circle.rotation = num();
        if (key == "jitter") s.circle.jitter = num();
        if (key == "ar_coeffs") {
            s.ar_coeffs.clear();
            for (const auto& item : to_list(field, value)) s.ar_coeffs.push_back(to_double(field, item));
        }
        if (key == "graph_gain") s.graph_gain = num();
    } else if (section == "backtest") {
        if (key == "lookfronts") cfg.backtest.lookfronts = sizes();
        if (key == "holdout") cfg.backtest.holdout = count();
        if (key == "methods") cfg.backtest.methods = to_list(field, value);
        if (key == "source") cfg.backtest.source = trimmed(value);
    } else if (section == "ratestudy") {
        if (key == "lengths") cfg.ratestudy.lengths = sizes();
        if (key == "trials") cfg.ratestudy.trials = count();
    }
}

// The [denoiser] selection carries the parameters of the matching section.
void sync_denoiser(RunConfig& cfg) {
    if (std::holds_alternative<SameConfig>(cfg.forecast.denoiser)) cfg.forecast.denoiser = cfg.same;
    if (std::holds_alternative<LdmmConfig>(cfg.forecast.denoiser)) cfg.forecast.denoiser = cfg.ldmm;
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error("config error at '" + field + "': " + message), field_(std::move(field)) {}

RunConfig default_config() {
    RunConfig cfg;
    cfg.window = 11;
    cfg.forecast.k = {9};
    cfg.forecast.tau = 20.0;
    cfg.same.iterations = 21;
    cfg.ldmm.mu = 1500.0;
    cfg.ldmm.max_iters = 7;
    return cfg;
}

void validate(const RunConfig& cfg) {
    require(cfg.window >= 1, "window.size", "must be at least 1");
    require(!cfg.forecast.k.empty(), "forecast.k", "needs at least one entry");
    require(std::all_of(cfg.forecast.k.begin(), cfg.forecast.k.end(), [](std::size_t k) { return k >= 1; }),
            "forecast.k", "entries must be at least 1");
    require(cfg.forecast.tau > 0.0, "forecast.tau", "must be positive");
    wrap_section("same", [&] { cfg.same.validate(); });
    wrap_section("ldmm", [&] { cfg.ldmm.validate(); });

    const auto& s = cfg.synthetic;
    require(s.length >= 2, "synthetic.length", "must be at least 2");
    wrap("synthetic.sigma", [&] { s.noise.validate(); });
    require(s.noise.sigma.size() == 1 || s.noise.sigma.size() == s.length, "synthetic.sigma",
            "needs one entry or one per time step");
    require(s.circle.kappa > 0.0, "synthetic.kappa", "must be positive");
    require(std::isfinite(s.circle.rotation), "synthetic.rotation", "must be finite");
    require(s.circle.jitter >= 0.0 && std::isfinite(s.circle.jitter), "synthetic.jitter",
            "must be finite and nonnegative");
    require(!s.ar_coeffs.empty() && s.ar_coeffs.size() < s.length, "synthetic.ar_coeffs",
            "order must be positive and below the length");
    require(std::isfinite(s.graph_gain), "synthetic.graph_gain", "must be finite");

    const auto& b = cfg.backtest;
    require(!b.lookfronts.empty() &&
                std::all_of(b.lookfronts.begin(), b.lookfronts.end(), [](std::size_t m) { return m >= 1; }),
            "backtest.lookfronts", "entries must be at least 1");
    require(b.holdout >= *std::max_element(b.lookfronts.begin(), b.lookfronts.end()), "backtest.holdout",
            "must be at least the largest lookfront");
    require(!b.methods.empty(), "backtest.methods", "needs at least one method");
    std::set<std::string> seen;
    for (const auto& m : b.methods) {
        require(m == "knn" || m == "same" || m == "ldmm", "backtest.methods",
                "unknown method '" + m + "' (expected knn, same or ldmm)");
        require(seen.insert(m).second, "backtest.methods", "duplicate method '" + m + "'");
    }
    require(b.source == "input" || b.source == "synthetic", "backtest.source", "expected input or synthetic");

    const auto& r = cfg.ratestudy;
    require(!r.lengths.empty() && std::is_sorted(r.lengths.begin(), r.lengths.end()) &&
                std::adjacent_find(r.lengths.begin(), r.lengths.end()) == r.lengths.end(),
            "ratestudy.lengths", "must be strictly increasing");
    require(r.lengths.front() >= 2, "ratestudy.lengths", "lengths must be at least 2");
    require(r.trials >= 1, "ratestudy.trials", "must be at least 1");
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("<file>", "line " + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig cfg = default_config();
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            apply(cfg, "", name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) {
            if (!leaf.empty()) throw ConfigError(name + "." + key, "nested keys are not supported");
            apply(cfg, name, key, leaf.data());
        }
    }
    sync_denoiser(cfg);
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    return parse_config(in);
}

ForecastConfig method_forecast(const RunConfig& cfg, const std::string& method) {
    ForecastConfig out = cfg.forecast;
    if (method == "knn") {
        out.denoiser = NoDenoise{};
    } else if (method == "same") {
        out.denoiser = cfg.same;
    } else if (method == "ldmm") {
        out.denoiser = cfg.ldmm;
    } else {
        throw ConfigError("backtest.methods", "unknown method '" + method + "'");
    }
    return out;
}

SampleGenerator make_generator(const SyntheticConfig& cfg) {
    switch (cfg.manifold) {
        case ManifoldTag::circle:
            return [cfg](std::size_t length, std::uint64_t seed) {
                return gen_circle_chain(cfg.circle, length, cfg.noise, seed);
            };
        case ManifoldTag::line_subspace:
            return [cfg](std::size_t length, std::uint64_t seed) {
                return gen_ar(cfg.ar_coeffs, length, cfg.noise, seed);
            };
        case ManifoldTag::graph_of_g:
            return [cfg](std::size_t length, std::uint64_t seed) {
                const double gain = cfg.graph_gain;
                const SmoothMap g = [gain](const Vector& u) -> Vector { return gain * u.array().sin().matrix(); };
                return gen_central_subspace(Eigen::MatrixXd::Ones(1, 1), g, length, cfg.noise, seed);
            };
    }
    throw ConfigError("synthetic.manifold", "unsupported manifold");
}

TimeSeries forecast_series(const SyntheticSample& sample) {
    if (const auto* graph = std::get_if<GraphManifold>(&sample.manifold)) {
        return TimeSeries(sample.observed.values().rightCols(graph->phi.rows()));
    }
    return sample.observed;
}

std::string to_ini(const RunConfig& cfg) {
    std::ostringstream out;
    const auto& s = cfg.synthetic;
    std::vector<std::string> sigma;
    for (double v : s.noise.sigma) sigma.push_back(format_number(v));
    std::vector<std::string> coeffs;
    for (double v : s.ar_coeffs) coeffs.push_back(format_number(v));
    auto join = [](const std::vector<std::string>& items) {
        std::string r;
        for (std::size_t i = 0; i < items.size(); ++i) r += (i ? ", " : "") + items[i];
        return r;
    };

    out << "seed = " << cfg.seed << "\n\n";
    out << "[window]\nsize = " << cfg.window << "\nstandardize = " << (cfg.forecast.standardize ? "true" : "false")
        << "\n\n";
    out << "[forecast]\nk = " << join_numbers(cfg.forecast.k) << "\ntau = " << format_number(cfg.forecast.tau)
        << "\nfreeze_denoise = " << (cfg.forecast.freeze_denoise ? "true" : "false") << "\n\n";
    out << "[denoiser]\nkind = " << (std::holds_alternative<NoDenoise>(cfg.forecast.denoiser)
                                          ? "none"
                                          : denoiser_name(cfg.forecast.denoiser))
        << "\n\n";
    out << "[same]\ndim = " << cfg.same.dim << "\niterations = " << cfg.same.iterations
        << "\nh0 = " << optional_text(cfg.same.h0) << "\ntau0 = " << format_number(cfg.same.tau0)
        << "\ndecay = " << format_number(cfg.same.decay) << "\ngamma = " << format_number(cfg.same.gamma)
        << "\n\n";
    out << "[ldmm]\nh_sq = " << optional_text(cfg.ldmm.h_sq) << "\nlambda = " << optional_text(cfg.ldmm.lambda)
        << "\nmu = " << format_number(cfg.ldmm.mu) << "\nmax_iters = " << cfg.ldmm.max_iters
        << "\nrel_tol = " << format_number(cfg.ldmm.rel_tol) << "\nridge = " << format_number(cfg.ldmm.ridge)
        << "\nbandwidth_scale = " << format_number(cfg.ldmm.bandwidth_scale) << "\n\n";
    out << "[synthetic]\nmanifold = " << to_string(s.manifold) << "\nlength = " << s.length
        << "\nsigma = " << join(sigma) << "\ndistribution = "
        << (s.noise.distribution == NoiseDistribution::gaussian ? "gaussian" : "bounded-uniform")
        << "\npersistence = " << format_number(s.noise.persistence)
        << "\nmixing = " << (s.circle.mixing == Mixing::ergodic ? "ergodic" : "periodic")
        << "\nkappa = " << format_number(s.circle.kappa) << "\nrotation = " << format_number(s.circle.rotation)
        << "\njitter = " << format_number(s.circle.jitter) << "\nar_coeffs = " << join(coeffs)
        << "\ngraph_gain = " << format_number(s.graph_gain) << "\n\n";
    out << "[backtest]\nlookfronts = " << join_numbers(cfg.backtest.lookfronts)
        << "\nholdout = " << cfg.backtest.holdout << "\nmethods = " << join(cfg.backtest.methods)
        << "\nsource = " << cfg.backtest.source << "\n\n";
    out << "[ratestudy]\nlengths = " << join_numbers(cfg.ratestudy.lengths) << "\ntrials = " << cfg.ratestudy.trials
        << "\n";
    return out.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

}  // namespace mbf
