// ncopt: command-line front end.
//
//   ncopt <subcommand> [--config FILE] [--model SPEC] [--noise SPEC] ...
//
// Exit codes: 0 ok, 2 invalid configuration or usage, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ncopt/io.hpp"
#include "ncopt/ncopt.hpp"

namespace fs = std::filesystem;
using namespace ncopt;
using nlohmann::json;

namespace {

struct Context {
    RunConfig cfg;
    fs::path out;

    ScalarModel model() const { return parse_model_spec(cfg.model); }
    Objective objective() const { return parse_objective(cfg.objective); }
    Grid grid(const ScalarModel& m) const { return config_grid(cfg, m); }
    TheoryOptions theory() const { return {cfg.eps1, cfg.eps2, cfg.left_mass}; }
    NoiseDensity noise(const ScalarModel& m) const {
        return build_noise(parse_noise_spec(cfg.noise), m, grid(m), theory());
    }
    void write(const std::string& name, const std::string& content) const { write_atomic(out / name, content); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// File first, then flags. Setting nu or proportion by flag clears the other.
RunConfig merge_config(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& flags) {
    RunConfig c = config_path.empty() ? RunConfig{} : parse_config_text(read_file(config_path));
    if (c.nu && c.proportion) throw ConfigError("proportion", "give either nu or proportion, not both");
    for (const auto& [key, value] : flags) {
        apply_config_value(c, key, value);
        if (key == "nu") c.proportion.reset();
        if (key == "proportion") c.nu.reset();
    }
    return c;
}

std::string two_column(const std::string& header, const std::vector<double>& x, const std::vector<double>& y) {
    std::ostringstream os;
    os << header << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) os << csv_number(x[i]) << ',' << csv_number(y[i]) << '\n';
    return os.str();
}

std::string tabulated_curve(const TabulatedDensity& t, std::size_t stride = 1) {
    std::ostringstream os;
    os << "x,density\n";
    const auto& g = t.grid();
    for (std::size_t i = 0; i < g.size(); i += stride)
        os << csv_number(g.nodes[i][0]) << ',' << csv_number(t.values()[i]) << '\n';
    return os.str();
}

std::string histogram_text(const HistogramDensity& h) {
    std::ostringstream os;
    write_histogram_csv(os, h);
    return os.str();
}

json points_json(const std::vector<Point>& pts, int dim) {
    json a = json::array();
    for (const auto& p : pts) a.push_back(dim == 1 ? json(p[0]) : json::array({p[0], p[1]}));
    return a;
}

/// Default starting histogram: uniform bins over +-6 data standard deviations
/// (1-D) or +-4 (2-D).
HistogramDensity initial_histogram(const Context& ctx, const ScalarModel& m) {
    const auto spec = parse_noise_spec(ctx.cfg.noise);
    if (spec.kind == NoiseSpec::Kind::Histogram || spec.kind == NoiseSpec::Kind::HistogramFile) {
        auto n = build_noise(spec, m, ctx.grid(m));
        return n.histogram();
    }
    if (m.dim() == 1) {
        const std::size_t bins = ctx.cfg.bins ? ctx.cfg.bins : 48;
        return uniform_histogram(1, m.center() - 6.0 * m.scale(), m.center() + 6.0 * m.scale(), bins);
    }
    return uniform_histogram(2, -4.0, 4.0, ctx.cfg.bins ? ctx.cfg.bins : 16);
}

CgOptions cg_options(const RunConfig& c) {
    CgOptions o;
    o.max_iter = c.max_iter;
    o.gtol = c.gtol;
    return o;
}

std::vector<ScalarModel> study_models() {
    return {ScalarModel(ModelKind::GaussianMean, 0.0), ScalarModel(ModelKind::GaussianVariance, 1.0),
            ScalarModel(ModelKind::GaussianCorrelation, 0.3)};
}

std::string tag(const ScalarModel& m) { return std::string(to_string(m.kind())); }

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_mse(const Context& ctx) {
    const auto m = ctx.model();
    const auto mp = generalized_moments(m, ctx.noise(m), ctx.cfg.ratio(), ctx.grid(m), ctx.cfg.threads);
    const auto rep = efficiency_report(m, ctx.cfg.noise, mp, ctx.cfg.T);
    const auto text = json_text(to_json(rep));
    ctx.write("mse.json", text);
    std::cout << text;
    return 0;
}

int cmd_sweep_noise(const Context& ctx) {
    const auto m = ctx.model();
    const auto r = sweep_parametric_noise(m, ctx.cfg.ratio(), ctx.cfg.T, default_noise_axis(m), ctx.objective(),
                                          ctx.grid(m), ctx.cfg.threads);
    ctx.write("sweep_noise.csv", sweep_csv(r));
    ctx.write("sweep_noise.json", json_text(to_json(r)));
    std::cout << json_text(to_json(r));
    return 0;
}

int cmd_sweep_proportion(const Context& ctx) {
    const auto m = ctx.model();
    const Grid g = ctx.grid(m);
    const auto r = optimize_proportion(m, ctx.noise(m), ctx.cfg.T, ctx.objective(), g, 197, 0.01, 0.99, ctx.cfg.threads);
    ctx.write("sweep_proportion.csv", sweep_csv(r));
    ctx.write("sweep_proportion.json", json_text(to_json(r)));
    std::cout << json_text(to_json(r));
    return 0;
}

int cmd_optimize_histogram(const Context& ctx) {
    const auto m = ctx.model();
    const auto init = initial_histogram(ctx, m);
    const auto fit = optimize_histogram(m, ctx.cfg.ratio(), ctx.cfg.T, init, ctx.objective(), ctx.grid(m),
                                        cg_options(ctx.cfg));
    HistogramObjective f(m, init, ctx.cfg.ratio(), ctx.cfg.T, ctx.objective(), ctx.grid(m).step());
    json j = to_json(fit.trace);
    j["objective_value"] = f.value(fit.histogram.logits());
    j["bins"] = init.bin_count();
    ctx.write("histogram.csv", histogram_text(fit.histogram));
    ctx.write("histogram_trace.csv", trace_csv(fit.trace));
    ctx.write("histogram.json", json_text(j));
    std::cout << json_text(j);
    return 0;
}

int cmd_theory_noise(const Context& ctx) {
    const auto m = ctx.model();
    auto spec = parse_noise_spec(ctx.cfg.noise);
    if (spec.kind != NoiseSpec::Kind::Theory) {
        spec.kind = NoiseSpec::Kind::Theory;
        spec.objective = ctx.objective();
        spec.regime = Regime::AllNoise;
    }
    const Grid g = ctx.grid(m);
    const TheoreticalNoise t = spec.regime == Regime::AllNoise
                                   ? optimal_noise_all_noise(m, spec.objective, g)
                                   : optimal_noise_all_data(m, spec.objective, ctx.cfg.eps1, ctx.cfg.eps2, g,
                                                            ctx.cfg.left_mass);
    const auto candidates = t.regime == Regime::AllData ? t.candidates : dirac_candidates(m, spec.objective, g);
    json j = {{"objective", to_string(t.objective)},
              {"regime", to_string(t.regime)},
              {"eps1", t.eps1},
              {"eps2", t.eps2},
              {"dirac_candidates", points_json(candidates, m.dim())}};
    std::ostringstream os;
    if (m.dim() == 1) os << tabulated_curve(t.density);
    else write_tabulated_csv(os, t.density);
    ctx.write("theory_noise.csv", os.str());
    ctx.write("theory_noise.json", json_text(j));
    std::cout << json_text(j);
    return 0;
}

int cmd_simulate(const Context& ctx) {
    const auto m = ctx.model();
    SimulationOptions opt;
    opt.threads = ctx.cfg.threads;
    const double nu = ctx.cfg.ratio();
    const auto T = static_cast<std::size_t>(ctx.cfg.T);
    const auto r = empirical_mse(m, ctx.noise(m), nu, T, ctx.cfg.replicates, ctx.cfg.seed, opt);
    const SimulationLabel label{tag(m), m.theta(), ctx.cfg.noise, nu, T};
    ctx.write("simulate.csv", empirical_csv_header() + empirical_csv_row(r, label));
    ctx.write("simulate.json", json_text(to_json(r, label)));
    std::cout << json_text(to_json(r, label));
    return 0;
}

// ---------------------------------------------------------------------------
// Figure pipelines. Each writes gnuplot-ready CSVs into the output directory.

void figure_1(const Context& ctx) {
    const unsigned th = ctx.cfg.threads;
    {
        std::ostringstream os;
        os << "data_mean,noise_mean_low,noise_mean_high\n";
        for (double mu : linspace(-2.0, 2.0, 9)) {
            const ScalarModel m(ModelKind::GaussianMean, mu);
            const auto r = sweep_parametric_noise(m, 1.0, ctx.cfg.T, default_noise_axis(m), Objective::MSE,
                                                  default_grid(m), th);
            const double lo = r.local_minima.empty() ? r.argmin : r.local_minima.front().at;
            const double hi = r.local_minima.empty() ? r.argmin : r.local_minima.back().at;
            os << csv_number(mu) << ',' << csv_number(lo) << ',' << csv_number(hi) << '\n';
        }
        ctx.write("fig1_mean.csv", os.str());
    }
    {
        std::vector<double> x = linspace(0.5, 5.0, 10), y;
        for (double v : x) {
            const ScalarModel m(ModelKind::GaussianVariance, v);
            y.push_back(sweep_parametric_noise(m, 1.0, ctx.cfg.T, default_noise_axis(m), Objective::MSE,
                                               default_grid(m), th)
                            .argmin);
        }
        ctx.write("fig1_variance.csv", two_column("data_variance,noise_variance", x, y));
    }
    {
        std::vector<double> x = linspace(-0.9, 0.9, 19), y;
        for (double rho : x) {
            const ScalarModel m(ModelKind::GaussianCorrelation, rho);
            y.push_back(sweep_parametric_noise(m, 1.0, ctx.cfg.T, default_noise_axis(m), Objective::MSE,
                                               default_grid(m), th)
                            .argmin);
        }
        ctx.write("fig1_correlation.csv", two_column("data_correlation,noise_correlation", x, y));
    }
}

/// Optimized histograms at three ratios plus the two limit theories.
void figure_2(const Context& ctx, const ScalarModel& m, const std::string& prefix) {
    const Grid g = default_grid(m);
    const auto init = uniform_histogram(1, m.center() - 6.0 * m.scale(), m.center() + 6.0 * m.scale(),
                                        ctx.cfg.bins ? ctx.cfg.bins : 48);
    for (const auto& [nu, name] : {std::pair{0.01, "nu0.01"}, std::pair{1.0, "nu1"}, std::pair{100.0, "nu100"}}) {
        const auto fit = optimize_histogram(m, nu, 1.0, init, Objective::MSE, g, cg_options(ctx.cfg));
        ctx.write(prefix + "_histogram_" + name + ".csv", histogram_text(fit.histogram));
    }
    ctx.write(prefix + "_theory_all_noise.csv", tabulated_curve(optimal_noise_all_noise(m, Objective::MSE, g).density, 5));
    const auto all_data = optimal_noise_all_data(m, Objective::MSE, ctx.cfg.eps1, ctx.cfg.eps2, g, ctx.cfg.left_mass);
    ctx.write(prefix + "_theory_all_data.csv", tabulated_curve(all_data.density, 5));
    ctx.write(prefix + "_dirac_candidates.json",
              json_text({{"candidates", points_json(all_data.candidates, 1)}, {"eps1", all_data.eps1}}));
}

void figure_3(const Context& ctx) {
    const auto init = uniform_histogram(2, -4.0, 4.0, ctx.cfg.bins ? ctx.cfg.bins : 20);
    const Grid overlay = build_grid(2, -4.0, 4.0, 81);
    struct Panel {
        double rho, nu;
        const char* name;
    };
    for (const auto& p : {Panel{0.0, 1.0, "rho0_nu1"}, Panel{0.3, 0.01, "rho0.3_nu0.01"}, Panel{0.3, 1.0, "rho0.3_nu1"},
                          Panel{0.3, 100.0, "rho0.3_nu100"}}) {
        const ScalarModel m(ModelKind::GaussianCorrelation, p.rho);
        const auto fit = optimize_histogram(m, p.nu, 1.0, init, Objective::MSE, default_grid(m), cg_options(ctx.cfg));
        ctx.write(std::string("fig3_histogram_") + p.name + ".csv", histogram_text(fit.histogram));
    }
    const ScalarModel m(ModelKind::GaussianCorrelation, 0.3);
    std::ostringstream a, b;
    write_tabulated_csv(a, optimal_noise_all_noise(m, Objective::MSE, overlay).density);
    write_tabulated_csv(b, optimal_noise_all_data(m, Objective::MSE, ctx.cfg.eps1, ctx.cfg.eps2, overlay).density);
    ctx.write("fig3_theory_all_noise_rho0.3.csv", a.str());
    ctx.write("fig3_theory_all_data_rho0.3.csv", b.str());
}

void figure_4(const Context& ctx) {
    for (const auto& m : study_models()) {
        const Grid g = default_grid(m);
        const double T = ctx.cfg.T;
        const auto sweep = sweep_parametric_noise(m, 1.0, T, default_noise_axis(m), Objective::MSE, g, ctx.cfg.threads);
        const double best = sweep.argmin;
        const NoiseDensity data(m), param(m.with_theta(best)),
            thm(optimal_noise_all_noise(m, Objective::MSE, g).density);
        const auto a = optimize_proportion(m, data, T, Objective::MSE, g, 197, 0.01, 0.99, ctx.cfg.threads);
        const auto b = optimize_proportion(m, param, T, Objective::MSE, g, 197, 0.01, 0.99, ctx.cfg.threads);
        const auto c = optimize_proportion(m, thm, T, Objective::MSE, g, 197, 0.01, 0.99, ctx.cfg.threads);
        std::ostringstream os;
        os << "proportion,data_noise,parametric_noise,optimal_noise,cramer_rao\n";
        for (std::size_t i = 0; i < a.axis.size(); ++i) {
            const double nu = proportion_to_nu(a.axis[i]);
            os << csv_number(a.axis[i]) << ',' << csv_number(a.values[i]) << ',' << csv_number(b.values[i]) << ','
               << csv_number(c.values[i]) << ','
               << csv_number(1.0 / (data_budget(T, nu) * m.fisher_information())) << '\n';
        }
        ctx.write("fig4_" + tag(m) + ".csv", os.str());
    }
}

void figure_5(const Context& ctx) {
    for (const auto& m : study_models()) {
        const Grid g = default_grid(m);
        std::vector<double> axis;
        switch (m.kind()) {
        case ModelKind::GaussianMean: axis = linspace(-3.0, 3.0, 61); break;
        case ModelKind::GaussianVariance: axis = linspace(0.25, 6.0, 47); break;
        case ModelKind::GaussianCorrelation: axis = linspace(-0.9, 0.9, 37); break;
        }
        std::ostringstream os;
        os << "noise_param,optimal_proportion,min_mse\n";
        for (double p : axis) {
            const auto r = optimize_proportion(m, NoiseDensity(m.with_theta(p)), ctx.cfg.T, Objective::MSE, g, 197, 0.01,
                                               0.99, ctx.cfg.threads);
            os << csv_number(p) << ',' << csv_number(r.argmin) << ',' << csv_number(r.min_value) << '\n';
        }
        ctx.write("fig5_" + tag(m) + ".csv", os.str());
    }
}

void figure_s1(const Context& ctx) {
    for (const auto& m : study_models()) {
        const auto r = sweep_parametric_noise(m, ctx.cfg.ratio(), ctx.cfg.T, default_noise_axis(m), Objective::MSE,
                                              default_grid(m), ctx.cfg.threads);
        ctx.write("figS1_" + tag(m) + ".csv", sweep_csv(r));
    }
}

void figure_s6(const Context& ctx) {
    const ScalarModel m(ModelKind::GaussianMean, 0.0);
    const Grid g = default_grid(m);
    const auto curve = sweep_parametric_noise(m, 1.0, ctx.cfg.T, linspace(-4.0, 4.0, 161), Objective::KL, g,
                                              ctx.cfg.threads);
    ctx.write("figS6_predicted.csv", two_column("noise_mean,predicted_kl", curve.axis, curve.values));
    std::ostringstream os;
    os << "noise_mean,empirical_kl,kl_se,predicted_kl\n";
    SimulationOptions opt;
    opt.threads = ctx.cfg.threads;
    const auto T = static_cast<std::size_t>(ctx.cfg.T);
    std::uint64_t k = 0;
    for (double mu : linspace(-3.0, 3.0, 7)) {
        const auto r = empirical_kl(m, NoiseDensity(m.with_theta(mu)), 1.0, T, ctx.cfg.replicates,
                                    derive_seed(ctx.cfg.seed, k++), opt);
        os << csv_number(mu) << ',' << csv_number(r.mean_kl) << ',' << csv_number(r.kl_std_error) << ','
           << csv_number(r.predicted_kl) << '\n';
    }
    ctx.write("figS6_empirical.csv", os.str());
}

int cmd_reproduce(const Context& ctx, const std::string& figure) {
    if (figure == "1") figure_1(ctx);
    else if (figure == "2a") figure_2(ctx, ScalarModel(ModelKind::GaussianVariance, 1.0), "fig2a");
    else if (figure == "2b") figure_2(ctx, ScalarModel(ModelKind::GaussianMean, 0.0), "fig2b");
    else if (figure == "3") figure_3(ctx);
    else if (figure == "4") figure_4(ctx);
    else if (figure == "5") figure_5(ctx);
    else if (figure == "S1") figure_s1(ctx);
    else if (figure == "S6") figure_s6(ctx);
    else throw ConfigError("figure", "unknown figure '" + figure + "' (expected 1|2a|2b|3|4|5|S1|S6)");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-distribution analysis for noise-contrastive estimation"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, std::string>> flags;  // in config_keys() order
    std::string figure;

    const std::vector<std::pair<std::string, std::string>> subcommands = {
        {"mse", "asymptotic MSE, KL and Cramer-Rao bound for one configuration"},
        {"sweep-noise", "objective over the same-family noise parameter"},
        {"sweep-proportion", "objective over the noise proportion at fixed budget"},
        {"optimize-histogram", "optimize histogram noise by conjugate gradient"},
        {"theory-noise", "closed-form optimal noise in the all-noise or all-data limit"},
        {"simulate", "replicated finite-sample NCE fits"},
        {"reproduce-figure", "run a preconfigured figure pipeline"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : subcommands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key=value file; flags override it");
        for (const auto& key : config_keys()) sub->add_option("--" + key, values[key]);
        if (name == "reproduce-figure") sub->add_option("figure", figure, "1|2a|2b|3|4|5|S1|S6")->required();
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    CLI::App* active = nullptr;
    for (auto* s : subs)
        if (s->parsed()) active = s;
    try {
        for (const auto& key : config_keys())
            if (active->count("--" + key)) flags.emplace_back(key, values[key]);
        Context ctx{merge_config(config_path, flags), {}};
        ctx.out = ctx.cfg.out;
        // Validate every referenced spec before any work is done.
        (void)ctx.model();
        parse_noise_spec(ctx.cfg.noise);
        const std::string name = active->get_name();
        if (name == "mse") return cmd_mse(ctx);
        if (name == "sweep-noise") return cmd_sweep_noise(ctx);
        if (name == "sweep-proportion") return cmd_sweep_proportion(ctx);
        if (name == "optimize-histogram") return cmd_optimize_histogram(ctx);
        if (name == "theory-noise") return cmd_theory_noise(ctx);
        if (name == "simulate") return cmd_simulate(ctx);
        return cmd_reproduce(ctx, figure);
    } catch (const ConfigError& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
