#ifndef NCOPT_CONFIG_HPP
#define NCOPT_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "asymptotics.hpp"
#include "densities.hpp"
#include "models.hpp"
#include "theory.hpp"

namespace ncopt {

/// Invalid user configuration; `field` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Shortest decimal string that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, const std::string& field) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || s.empty()) throw ConfigError(field, "not a number: '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_count(std::string_view s, const std::string& field) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || s.empty())
        throw ConfigError(field, "not a non-negative integer: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model spec: "mean:<theta>", "variance:<theta>", "correlation:<theta>".

inline ModelKind parse_model_kind(std::string_view s, const std::string& field = "model") {
    if (s == "mean") return ModelKind::GaussianMean;
    if (s == "variance") return ModelKind::GaussianVariance;
    if (s == "correlation") return ModelKind::GaussianCorrelation;
    throw ConfigError(field, "unknown model kind '" + std::string(s) + "' (expected mean|variance|correlation)");
}

inline ScalarModel parse_model_spec(std::string_view spec) {
    const auto parts = split(spec, ':');
    if (parts.size() != 2) throw ConfigError("model", "expected <kind>:<theta>, got '" + std::string(spec) + "'");
    const auto kind = parse_model_kind(parts[0]);
    const double theta = parse_number(parts[1], "model");
    try {
        return ScalarModel(kind, theta);
    } catch (const DomainError& e) {
        throw ConfigError("model", e.what());
    }
}

inline std::string format_model_spec(const ScalarModel& m) {
    return std::string(to_string(m.kind())) + ":" + format_number(m.theta());
}

// ---------------------------------------------------------------------------
// Noise spec:
//   data                       p_n = p_d
//   same-family:<theta>        same family as the model at theta
//   histogram:<lo>:<hi>:<K>    uniform histogram, K bins per axis
//   histogram:@<path>          histogram read from CSV
//   theory:<mse|kl>:<all-noise|all-data>

struct NoiseSpec {
    enum class Kind { Data, SameFamily, Histogram, HistogramFile, Theory };
    Kind kind = Kind::Data;
    double param = 0.0;
    double lo = -6.0;
    double hi = 6.0;
    std::size_t bins = 64;
    std::string path;
    Objective objective = Objective::MSE;
    Regime regime = Regime::AllNoise;

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

inline Objective parse_objective(std::string_view s, const std::string& field = "objective") {
    if (s == "mse") return Objective::MSE;
    if (s == "kl") return Objective::KL;
    throw ConfigError(field, "expected mse|kl, got '" + std::string(s) + "'");
}

inline Regime parse_regime(std::string_view s, const std::string& field = "noise") {
    if (s == "all-noise") return Regime::AllNoise;
    if (s == "all-data") return Regime::AllData;
    throw ConfigError(field, "expected all-noise|all-data, got '" + std::string(s) + "'");
}

inline NoiseSpec parse_noise_spec(std::string_view spec) {
    NoiseSpec n;
    if (spec == "data") return n;
    const auto colon = spec.find(':');
    const std::string head(spec.substr(0, colon));
    const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (head == "same-family") {
        n.kind = NoiseSpec::Kind::SameFamily;
        n.param = parse_number(rest, "noise");
        return n;
    }
    if (head == "histogram") {
        if (!rest.empty() && rest.front() == '@') {
            n.kind = NoiseSpec::Kind::HistogramFile;
            n.path = std::string(rest.substr(1));
            if (n.path.empty()) throw ConfigError("noise", "histogram file path is empty");
            return n;
        }
        const auto parts = split(rest, ':');
        if (parts.size() != 3) throw ConfigError("noise", "expected histogram:<lo>:<hi>:<bins>");
        n.kind = NoiseSpec::Kind::Histogram;
        n.lo = parse_number(parts[0], "noise");
        n.hi = parse_number(parts[1], "noise");
        n.bins = parse_count(parts[2], "noise");
        if (!(n.lo < n.hi) || n.bins == 0) throw ConfigError("noise", "histogram needs lo < hi and bins > 0");
        return n;
    }
    if (head == "theory") {
        const auto parts = split(rest, ':');
        if (parts.size() != 2) throw ConfigError("noise", "expected theory:<mse|kl>:<all-noise|all-data>");
        n.kind = NoiseSpec::Kind::Theory;
        n.objective = parse_objective(parts[0], "noise");
        n.regime = parse_regime(parts[1]);
        return n;
    }
    throw ConfigError("noise", "unknown noise spec '" + std::string(spec) + "'");
}

inline std::string format_noise_spec(const NoiseSpec& n) {
    switch (n.kind) {
    case NoiseSpec::Kind::Data: return "data";
    case NoiseSpec::Kind::SameFamily: return "same-family:" + format_number(n.param);
    case NoiseSpec::Kind::Histogram:
        return "histogram:" + format_number(n.lo) + ":" + format_number(n.hi) + ":" + std::to_string(n.bins);
    case NoiseSpec::Kind::HistogramFile: return "histogram:@" + n.path;
    case NoiseSpec::Kind::Theory:
        return "theory:" + std::string(to_string(n.objective)) + ":" + std::string(to_string(n.regime));
    }
    return {};
}

struct TheoryOptions {
    std::optional<double> eps1;
    double eps2 = 1e-6;
    std::optional<double> left_mass;
};

/// Materializes a noise spec for a model. Theory noises are tabulated on
/// `grid`; histograms are 1-D or 2-D to match the model.
inline NoiseDensity build_noise(const NoiseSpec& spec, const ScalarModel& model, const Grid& grid,
                                const TheoryOptions& theory = {}) {
    switch (spec.kind) {
    case NoiseSpec::Kind::Data: return NoiseDensity(model);
    case NoiseSpec::Kind::SameFamily:
        if (!in_domain(model.kind(), spec.param))
            throw ConfigError("noise", "same-family parameter out of domain: " + format_number(spec.param));
        return NoiseDensity(model.with_theta(spec.param));
    case NoiseSpec::Kind::Histogram: return NoiseDensity(uniform_histogram(model.dim(), spec.lo, spec.hi, spec.bins));
    case NoiseSpec::Kind::HistogramFile: {
        std::ifstream in(spec.path);
        if (!in) throw ConfigError("noise", "cannot open histogram file '" + spec.path + "'");
        auto h = read_histogram_csv(in);
        if (h.dim() != model.dim()) throw ConfigError("noise", "histogram dimension does not match the model");
        return NoiseDensity(std::move(h));
    }
    case NoiseSpec::Kind::Theory:
        if (spec.regime == Regime::AllNoise) return NoiseDensity(optimal_noise_all_noise(model, spec.objective, grid).density);
        return NoiseDensity(
            optimal_noise_all_data(model, spec.objective, theory.eps1, theory.eps2, grid, theory.left_mass).density);
    }
    throw ConfigError("noise", "unsupported noise spec");
}

// ---------------------------------------------------------------------------
// Run configuration: flat key=value text with the same keys as the CLI flags.

struct RunConfig {
    std::string model = "mean:0";
    std::string noise = "data";
    std::optional<double> nu;
    std::optional<double> proportion;
    double T = 1000.0;
    std::optional<std::size_t> grid_n;
    std::optional<double> grid_range;
    std::uint64_t seed = 1;
    std::size_t replicates = 200;
    std::string out = ".";
    unsigned threads = 1;
    std::string objective = "mse";
    std::optional<double> eps1;
    double eps2 = 1e-6;
    std::optional<double> left_mass;
    std::size_t bins = 0;
    std::size_t max_iter = 200;
    double gtol = 1e-7;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    /// nu from --nu or --proportion (default 1).
    double ratio() const {
        if (nu) return *nu;
        if (proportion) return *proportion / (1.0 - *proportion);
        return 1.0;
    }
};

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {"model",  "noise",      "nu",       "proportion", "T",
                                                  "grid-n", "grid-range", "seed",     "replicates", "out",
                                                  "threads", "objective", "eps1",     "eps2",       "left-mass",
                                                  "bins",   "max-iter",   "gtol"};
    return keys;
}

/// Sets one key from its textual value, validating the domain.
inline void apply_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    auto positive = [&](double v) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive and finite");
        return v;
    };
    if (key == "model") {
        parse_model_spec(value);
        c.model = value;
    } else if (key == "noise") {
        parse_noise_spec(value);
        c.noise = value;
    } else if (key == "nu") {
        c.nu = positive(parse_number(value, key));
    } else if (key == "proportion") {
        const double p = parse_number(value, key);
        if (!(p > 0.0 && p < 1.0)) throw ConfigError(key, "must lie in (0, 1)");
        c.proportion = p;
    } else if (key == "T") {
        const double t = parse_number(value, key);
        if (!(t >= 1.0) || !std::isfinite(t)) throw ConfigError(key, "budget must be >= 1");
        c.T = t;
    } else if (key == "grid-n") {
        const auto n = parse_count(value, key);
        if (n < 3 || n % 2 == 0) throw ConfigError(key, "must be odd and >= 3");
        c.grid_n = n;
    } else if (key == "grid-range") {
        c.grid_range = positive(parse_number(value, key));
    } else if (key == "seed") {
        c.seed = parse_count(value, key);
    } else if (key == "replicates") {
        c.replicates = parse_count(value, key);
        if (c.replicates < 2) throw ConfigError(key, "must be >= 2");
    } else if (key == "out") {
        if (value.empty()) throw ConfigError(key, "must not be empty");
        c.out = value;
    } else if (key == "threads") {
        const auto t = parse_count(value, key);
        if (t < 1 || t > 1024) throw ConfigError(key, "must be between 1 and 1024");
        c.threads = static_cast<unsigned>(t);
    } else if (key == "objective") {
        parse_objective(value, key);
        c.objective = value;
    } else if (key == "eps1") {
        c.eps1 = positive(parse_number(value, key));
    } else if (key == "eps2") {
        c.eps2 = positive(parse_number(value, key));
    } else if (key == "left-mass") {
        const double a = parse_number(value, key);
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
        c.left_mass = a;
    } else if (key == "bins") {
        c.bins = parse_count(value, key);
    } else if (key == "max-iter") {
        c.max_iter = parse_count(value, key);
    } else if (key == "gtol") {
        c.gtol = positive(parse_number(value, key));
    } else {
        throw ConfigError(key, "unknown configuration key");
    }
}

inline RunConfig parse_config_text(std::string_view text) {
    RunConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        apply_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

inline std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    auto kv = [&](const char* k, const std::string& v) { os << k << '=' << v << '\n'; };
    kv("model", c.model);
    kv("noise", c.noise);
    if (c.nu) kv("nu", format_number(*c.nu));
    if (c.proportion) kv("proportion", format_number(*c.proportion));
    kv("T", format_number(c.T));
    if (c.grid_n) kv("grid-n", std::to_string(*c.grid_n));
    if (c.grid_range) kv("grid-range", format_number(*c.grid_range));
    kv("seed", std::to_string(c.seed));
    kv("replicates", std::to_string(c.replicates));
    kv("out", c.out);
    kv("threads", std::to_string(c.threads));
    kv("objective", c.objective);
    if (c.eps1) kv("eps1", format_number(*c.eps1));
    kv("eps2", format_number(c.eps2));
    if (c.left_mass) kv("left-mass", format_number(*c.left_mass));
    kv("bins", std::to_string(c.bins));
    kv("max-iter", std::to_string(c.max_iter));
    kv("gtol", format_number(c.gtol));
    return os.str();
}

/// Quadrature grid for a configuration: default_grid unless overridden.
inline Grid config_grid(const RunConfig& c, const ScalarModel& model) {
    return default_grid(model, c.grid_n.value_or(0), c.grid_range.value_or(8.0));
}

}  // namespace ncopt

#endif  // NCOPT_CONFIG_HPP
