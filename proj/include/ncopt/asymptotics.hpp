#ifndef NCOPT_ASYMPTOTICS_HPP
#define NCOPT_ASYMPTOTICS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "densities.hpp"
#include "models.hpp"
#include "quadrature.hpp"

namespace ncopt {

enum class Objective { MSE, KL };

inline std::string_view to_string(Objective o) { return o == Objective::MSE ? "mse" : "kl"; }

class DegeneracyError : public NumericError {
public:
    using NumericError::NumericError;
};

inline constexpr double kDegenerateI = 1e-12;

/// 1 - D(x) = nu p_n / (p_d + nu p_n), the weight the optimal discriminator
/// leaves on the score. Zero where both densities vanish.
inline double discriminator_weight(double p_data, double p_noise, double nu) {
    const double np = nu * p_noise;
    const double denom = p_data + np;
    return denom > 0.0 ? np / denom : 0.0;
}

inline double discriminator_weight(const Point& x, const ScalarModel& model, const NoiseDensity& noise, double nu) {
    return discriminator_weight(model.density(x), noise.eval(x), nu);
}

/// Integrand samples for the generalized moments: every entry is one
/// quadrature term with its weight, the data density, the score, and the
/// noise density at the node. For histogram noise the table is built on a
/// bin-aligned grid and `bin` records the histogram bin of each term, so that
/// nodes on a bin edge appear once per adjacent bin (piecewise trapezoid).
struct MomentTable {
    std::vector<double> weight;
    std::vector<double> p_data;
    std::vector<double> score;
    std::vector<double> p_noise;
    std::vector<std::size_t> bin;

    std::size_t size() const { return weight.size(); }
};

namespace detail {

struct AxisTerm {
    double x;
    double w;
    std::size_t bin;
};

// Per-bin trapezoid nodes with spacing at most h.
inline std::vector<AxisTerm> aligned_axis(const std::vector<double>& edges, double h) {
    std::vector<AxisTerm> out;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        const auto s = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / h - 1e-9)));
        const double step = (b - a) / static_cast<double>(s);
        for (std::size_t i = 0; i <= s; ++i) {
            const double x = i == s ? b : a + step * static_cast<double>(i);
            const double w = (i == 0 || i == s) ? 0.5 * step : step;
            out.push_back({x, w, k});
        }
    }
    return out;
}

}  // namespace detail

/// Table on a histogram's own bin-aligned grid, refined so that the spacing
/// does not exceed the reference grid's spacing. Data mass outside the
/// histogram box contributes nothing because 1 - D vanishes there.
inline MomentTable histogram_moment_table(const ScalarModel& model, const HistogramDensity& hist, double max_step) {
    if (hist.dim() != model.dim()) throw std::invalid_argument("histogram and model dimensions differ");
    MomentTable t;
    const auto ax = detail::aligned_axis(hist.x_edges(), max_step);
    auto push = [&](const Point& p, double w, std::size_t bin) {
        t.weight.push_back(w);
        t.p_data.push_back(model.density(p));
        t.score.push_back(model.score(p));
        t.p_noise.push_back(hist.bin_densities()[bin]);
        t.bin.push_back(bin);
    };
    if (hist.dim() == 1) {
        for (const auto& a : ax) push({a.x, 0.0}, a.w, a.bin);
        return t;
    }
    const auto ay = detail::aligned_axis(hist.y_edges(), max_step);
    const std::size_t ky = hist.bins_y();
    for (const auto& a : ax) {
        for (const auto& b : ay) push({a.x, b.x}, a.w * b.w, a.bin * ky + b.bin);
    }
    return t;
}

/// Refreshes the noise column of a histogram table after the logits change.
inline void update_histogram_noise(MomentTable& t, const HistogramDensity& hist) {
    for (std::size_t j = 0; j < t.size(); ++j) t.p_noise[j] = hist.bin_densities()[t.bin[j]];
}

inline MomentTable moment_table(const ScalarModel& model, const NoiseDensity& noise, const Grid& grid,
                                unsigned threads = 1) {
    if (noise.dim() != model.dim() || grid.dim != model.dim())
        throw std::invalid_argument("model, noise and grid dimensions differ");
    if (noise.is_histogram()) return histogram_moment_table(model, noise.histogram(), grid.step());
    MomentTable t;
    const std::size_t n = grid.size();
    t.weight = grid.weights;
    t.p_data.resize(n);
    t.score.resize(n);
    t.p_noise.resize(n);
    parallel_for((n + kChunk - 1) / kChunk, threads, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            const Point& p = grid.nodes[i];
            t.p_data[i] = model.density(p);
            t.score[i] = model.score(p);
            t.p_noise[i] = noise.eval(p);
        }
    });
    return t;
}

/// Generalized score mean m and second moment I at noise-data ratio nu.
struct MomentPair {
    double m = 0.0;
    double I = 0.0;
    double nu = 1.0;
};

inline MomentPair generalized_moments(const MomentTable& t, double nu, unsigned threads = 1) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("nu must be positive and finite");
    const double m = ordered_sum(
        t.size(),
        [&](std::size_t j) { return t.weight[j] * t.score[j] * discriminator_weight(t.p_data[j], t.p_noise[j], nu) * t.p_data[j]; },
        threads);
    const double I = ordered_sum(
        t.size(),
        [&](std::size_t j) {
            const double g = t.score[j];
            return t.weight[j] * g * g * discriminator_weight(t.p_data[j], t.p_noise[j], nu) * t.p_data[j];
        },
        threads);
    if (!std::isfinite(m) || !std::isfinite(I)) throw NumericError("non-finite generalized moments");
    if (I <= kDegenerateI)
        throw DegeneracyError("generalized score moment I = " + std::to_string(I) +
                              " is degenerate: the noise does not overlap the informative region");
    return {m, I, nu};
}

inline MomentPair generalized_moments(const ScalarModel& model, const NoiseDensity& noise, double nu, const Grid& grid,
                                      unsigned threads = 1) {
    return generalized_moments(moment_table(model, noise, grid, threads), nu, threads);
}

/// Sigma = 1/I - ((nu+1)/nu) m^2 / I^2, so that MSE = (nu+1)/T * Sigma.
inline double asymptotic_covariance(const MomentPair& mp) {
    if (!(mp.I > 0.0)) throw DegeneracyError("asymptotic covariance needs I > 0");
    const double sigma = 1.0 / mp.I - ((mp.nu + 1.0) / mp.nu) * mp.m * mp.m / (mp.I * mp.I);
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw NumericError("asymptotic covariance is not positive (" + std::to_string(sigma) +
                           "); quadrature has broken down");
    return sigma;
}

inline double asymptotic_mse(double T, const MomentPair& mp) {
    if (!(T >= 1.0)) throw std::invalid_argument("budget T must be >= 1");
    return (mp.nu + 1.0) / T * asymptotic_covariance(mp);
}

/// Expected KL(p_d, p_theta_hat) = Sigma I_F / (2 T_d) with T_d = T / (1 + nu).
inline double asymptotic_kl(double T, const MomentPair& mp, double fisher) {
    if (!(T >= 1.0)) throw std::invalid_argument("budget T must be >= 1");
    if (!(fisher > 0.0)) throw std::invalid_argument("Fisher information must be positive");
    return asymptotic_covariance(mp) * fisher * (1.0 + mp.nu) / (2.0 * T);
}

inline double objective_value(Objective obj, double T, const MomentPair& mp, double fisher) {
    return obj == Objective::MSE ? asymptotic_mse(T, mp) : asymptotic_kl(T, mp, fisher);
}

inline double cramer_rao_mse(double T_d, double fisher) {
    if (!(T_d >= 1.0)) throw std::invalid_argument("T_d must be >= 1");
    if (!(fisher > 0.0)) throw std::invalid_argument("Fisher information must be positive");
    return 1.0 / (T_d * fisher);
}

inline double data_budget(double T, double nu) { return T / (1.0 + nu); }

/// MSE gaps in the all-noise limit.
///   delta_data = MSE(p_n = p_d) - Cramer-Rao = E[(g / I_F)^2] / T
///   delta_opt  = MSE(p_n = optimal) - Cramer-Rao = (E|g| / I_F)^2 / T
///   difference = delta_data - delta_opt = Var(|g| / I_F) / T >= 0
struct AllNoiseGaps {
    double delta_data = 0.0;
    double delta_opt = 0.0;
    double difference = 0.0;
};

inline AllNoiseGaps mse_gaps_all_noise(const ScalarModel& model, const Grid& grid, double T) {
    if (!(T >= 1.0)) throw std::invalid_argument("budget T must be >= 1");
    const double fi = model.fisher_information();
    const double first = integrate(grid, [&](const Point& p) { return std::abs(model.score(p)) / fi * model.density(p); });
    const double second = integrate(grid, [&](const Point& p) {
        const double a = model.score(p) / fi;
        return a * a * model.density(p);
    });
    const double var = integrate(grid, [&](const Point& p) {
        const double d = std::abs(model.score(p)) / fi - first;
        return d * d * model.density(p);
    });
    return {second / T, first * first / T, var / T};
}

/// Asymptotic efficiency summary for one (model, noise, nu, T) configuration.
struct EfficiencyReport {
    std::string model;
    double theta = 0.0;
    std::string noise;
    double T = 0.0;
    double nu = 0.0;
    double mse = 0.0;
    double kl = 0.0;
    double cramer_rao = 0.0;
    double sigma = 0.0;
    double m = 0.0;
    double I = 0.0;
};

inline EfficiencyReport efficiency_report(const ScalarModel& model, std::string noise_label, const MomentPair& mp,
                                          double T) {
    EfficiencyReport r;
    r.model = std::string(to_string(model.kind()));
    r.theta = model.theta();
    r.noise = std::move(noise_label);
    r.T = T;
    r.nu = mp.nu;
    r.sigma = asymptotic_covariance(mp);
    r.mse = asymptotic_mse(T, mp);
    r.kl = asymptotic_kl(T, mp, model.fisher_information());
    r.cramer_rao = cramer_rao_mse(std::max(1.0, data_budget(T, mp.nu)), model.fisher_information());
    r.m = mp.m;
    r.I = mp.I;
    return r;
}

}  // namespace ncopt

#endif  // NCOPT_ASYMPTOTICS_HPP
