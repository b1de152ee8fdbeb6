#ifndef NCOPT_SIMULATE_HPP
#define NCOPT_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "asymptotics.hpp"
#include "densities.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace ncopt {

/// SplitMix64 finalizer; derives independent stream seeds from (seed, counter).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// KL(p_{theta_true} || p_{theta_hat}) in closed form.
inline double gaussian_kl(ModelKind kind, double theta_true, double theta_hat) {
    switch (kind) {
    case ModelKind::GaussianMean: {
        const double d = theta_hat - theta_true;
        return 0.5 * d * d;
    }
    case ModelKind::GaussianVariance: {
        const double r = theta_true / theta_hat;
        return 0.5 * (r - 1.0 - std::log(r));
    }
    case ModelKind::GaussianCorrelation: {
        const double a = theta_true, b = theta_hat;
        const double sb = 1.0 - b * b;
        return 0.5 * ((2.0 - 2.0 * a * b) / sb - 2.0 + std::log(sb / (1.0 - a * a)));
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

struct NceRun {
    std::size_t T_d = 0;
    std::size_t T_n = 0;
    std::uint64_t seed = 0;
    double theta_hat = 0.0;
    double objective_value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr double kExpClip = 700.0;

// log(sigma(r)) and log(1 - sigma(r)) without overflow.
inline double log_sigmoid(double r) { return r >= 0.0 ? -std::log1p(std::exp(-r)) : r - std::log1p(std::exp(r)); }
inline double sigmoid(double r) {
    if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
    const double e = std::exp(r);
    return e / (1.0 + e);
}

struct NceTerms {
    double value = 0.0;
    double grad = 0.0;
    double hess = 0.0;
};

class NceProblem {
public:
    NceProblem(const std::vector<Point>& data, const std::vector<Point>& noise_points, ModelKind kind,
               const NoiseDensity& noise)
        : data_(data), noise_(noise_points), kind_(kind) {
        const double nu = static_cast<double>(noise_points.size()) / static_cast<double>(data.size());
        auto log_nu_pn = [&](const Point& p) {
            const double pn = noise.eval(p);
            return pn > 0.0 ? std::log(nu * pn) : -std::numeric_limits<double>::infinity();
        };
        data_lnp_.reserve(data.size());
        for (const auto& p : data) data_lnp_.push_back(log_nu_pn(p));
        noise_lnp_.reserve(noise_points.size());
        for (const auto& p : noise_points) noise_lnp_.push_back(log_nu_pn(p));
    }

    ModelKind kind() const { return kind_; }

    NceTerms eval(double theta) const {
        NceTerms t;
        CompensatedSum v, g, h;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const double r = std::clamp(family::log_density(kind_, theta, data_[i]) - data_lnp_[i], -kExpClip, kExpClip);
            const double s = sigmoid(r);
            const double sc = family::score(kind_, theta, data_[i]);
            v.add(log_sigmoid(r));
            g.add((1.0 - s) * sc);
            h.add((1.0 - s) * family::score_derivative(kind_, theta, data_[i]) - s * (1.0 - s) * sc * sc);
        }
        for (std::size_t i = 0; i < noise_.size(); ++i) {
            const double r = std::clamp(family::log_density(kind_, theta, noise_[i]) - noise_lnp_[i], -kExpClip, kExpClip);
            const double s = sigmoid(r);
            const double sc = family::score(kind_, theta, noise_[i]);
            v.add(log_sigmoid(-r));
            g.add(-s * sc);
            h.add(-s * family::score_derivative(kind_, theta, noise_[i]) - s * (1.0 - s) * sc * sc);
        }
        t.value = v.value();
        t.grad = g.value();
        t.hess = h.value();
        return t;
    }

    std::size_t size() const { return data_.size() + noise_.size(); }

private:
    const std::vector<Point>& data_;
    const std::vector<Point>& noise_;
    ModelKind kind_;
    std::vector<double> data_lnp_;
    std::vector<double> noise_lnp_;
};

// A step from theta toward the domain boundary in direction `dir`, growing
// with k; never leaves the domain.
inline double bracket_step(ModelKind kind, double theta, int dir, int k) {
    const double grow = std::ldexp(1.0, k);
    switch (kind) {
    case ModelKind::GaussianMean: return theta + dir * 0.05 * grow;
    case ModelKind::GaussianVariance: return dir > 0 ? theta * (1.0 + 0.05 * grow) : theta / (1.0 + 0.05 * grow);
    case ModelKind::GaussianCorrelation: {
        const double edge = dir > 0 ? 1.0 : -1.0;
        const double frac = std::min(1.0 - 1e-12, 0.05 * grow);
        return theta + (edge - theta) * frac;
    }
    }
    return theta;
}

}  // namespace detail

/// Maximizes the NCE classification log-likelihood over the scalar parameter
/// by Newton's method safeguarded with bisection on a sign-change bracket of
/// the derivative. Converged when |dJ/dtheta| / N <= 1e-10.
inline NceRun nce_fit(const std::vector<Point>& data, const std::vector<Point>& noise_points, ModelKind kind,
                      const NoiseDensity& noise, double init_theta, std::size_t max_iter = 200) {
    if (data.empty() || noise_points.empty()) throw std::invalid_argument("NCE needs data and noise samples");
    if (!in_domain(kind, init_theta)) throw DomainError("initial parameter out of domain");
    const detail::NceProblem problem(data, noise_points, kind, noise);
    const double gtol = 1e-10 * static_cast<double>(problem.size());

    NceRun run;
    run.T_d = data.size();
    run.T_n = noise_points.size();

    double best_theta = init_theta;
    auto t0 = problem.eval(init_theta);
    double best_value = t0.value;
    auto track = [&](double th, const detail::NceTerms& t) {
        if (t.value > best_value) {
            best_value = t.value;
            best_theta = th;
        }
    };
    if (std::abs(t0.grad) <= gtol) {
        run.theta_hat = init_theta;
        run.objective_value = t0.value;
        run.converged = true;
        return run;
    }

    // Bracket a decreasing sign change of the derivative: grad(a) > 0 > grad(b).
    const int dir = t0.grad > 0.0 ? 1 : -1;
    double a = init_theta, b = init_theta;
    double ga = t0.grad;
    bool bracketed = false;
    std::size_t iters = 0;
    for (int k = 0; k < 60 && iters < max_iter; ++k, ++iters) {
        const double next = detail::bracket_step(kind, a, dir, k);
        if (!in_domain(kind, next) || next == a) break;
        const auto t = problem.eval(next);
        track(next, t);
        if (std::abs(t.grad) <= gtol) {
            run.theta_hat = next;
            run.objective_value = t.value;
            run.iterations = iters + 1;
            run.converged = true;
            return run;
        }
        if ((t.grad > 0.0) != (ga > 0.0)) {
            b = next;
            bracketed = true;
            break;
        }
        a = next;
        ga = t.grad;
    }
    if (!bracketed) {
        run.theta_hat = best_theta;
        run.objective_value = best_value;
        run.iterations = iters;
        return run;
    }
    // grad(lo) > 0 > grad(hi); lo < hi when moving right, lo > hi when moving left.
    double lo = dir > 0 ? a : b;
    double hi = dir > 0 ? b : a;
    double x = 0.5 * (a + b);
    for (; iters < max_iter; ++iters) {
        const auto t = problem.eval(x);
        track(x, t);
        if (std::abs(t.grad) <= gtol) {
            run.theta_hat = x;
            run.objective_value = t.value;
            run.iterations = iters + 1;
            run.converged = true;
            return run;
        }
        if (t.grad > 0.0) lo = x;
        else hi = x;
        double next = std::numeric_limits<double>::quiet_NaN();
        if (t.hess < 0.0) next = x - t.grad / t.hess;
        const double left = std::min(lo, hi), right = std::max(lo, hi);
        if (!(next > left && next < right)) next = 0.5 * (lo + hi);
        if (std::abs(right - left) <= 1e-15 * std::max(1.0, std::abs(x))) {
            run.theta_hat = x;
            run.objective_value = t.value;
            run.iterations = iters + 1;
            run.converged = true;
            return run;
        }
        x = next;
    }
    run.theta_hat = best_theta;
    run.objective_value = best_value;
    run.iterations = iters;
    return run;
}

struct EmpiricalReport {
    std::size_t replicates = 0;
    std::size_t failures = 0;
    double mean_sq_error = 0.0;
    double std_error = 0.0;
    double mean_kl = 0.0;
    double kl_std_error = 0.0;
    double asymptotic_prediction = 0.0;
    double predicted_kl = 0.0;
    std::size_t T_d = 0;
    std::size_t T_n = 0;
};

struct SimulationOptions {
    unsigned threads = 1;
    double max_failure_rate = 0.05;
};

/// Replicated NCE fits at budget T = T_d + T_n, T_d = round(T / (1 + nu)).
/// Each replicate draws data and noise from seeds derived from (seed, r).
inline EmpiricalReport empirical_mse(const ScalarModel& model, const NoiseDensity& noise, double nu, std::size_t T,
                                     std::size_t replicates, std::uint64_t seed, const SimulationOptions& opt = {}) {
    if (replicates < 2) throw std::invalid_argument("empirical estimates need at least 2 replicates");
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    const auto T_d = static_cast<std::size_t>(std::llround(static_cast<double>(T) / (1.0 + nu)));
    if (T_d < 1 || T_d >= T) throw std::invalid_argument("budget too small for the requested ratio");
    const std::size_t T_n = T - T_d;

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> sq(replicates, nan), kl(replicates, nan);
    parallel_for(replicates, opt.threads, [&](std::size_t r) {
        const auto data = model.sample(T_d, derive_seed(seed, 2 * r));
        const auto noise_pts = noise.sample(T_n, derive_seed(seed, 2 * r + 1));
        const auto run = nce_fit(data, noise_pts, model.kind(), noise, model.theta());
        if (!run.converged) return;
        const double d = run.theta_hat - model.theta();
        sq[r] = d * d;
        kl[r] = gaussian_kl(model.kind(), model.theta(), run.theta_hat);
    });

    EmpiricalReport rep;
    rep.replicates = replicates;
    rep.T_d = T_d;
    rep.T_n = T_n;
    CompensatedSum s1, s2, k1, k2;
    std::size_t ok = 0;
    for (std::size_t r = 0; r < replicates; ++r) {
        if (!std::isfinite(sq[r])) {
            ++rep.failures;
            continue;
        }
        ++ok;
        s1.add(sq[r]);
        s2.add(sq[r] * sq[r]);
        k1.add(kl[r]);
        k2.add(kl[r] * kl[r]);
    }
    if (static_cast<double>(rep.failures) > opt.max_failure_rate * static_cast<double>(replicates))
        throw NumericError(std::to_string(rep.failures) + " of " + std::to_string(replicates) +
                           " NCE fits failed to converge");
    if (ok < 2) throw NumericError("fewer than two converged replicates");
    const double n = static_cast<double>(ok);
    auto mean_se = [n](const CompensatedSum& a, const CompensatedSum& b, double& mean, double& se) {
        mean = a.value() / n;
        const double var = std::max(0.0, (b.value() - n * mean * mean) / (n - 1.0));
        se = std::sqrt(var / n);
    };
    mean_se(s1, s2, rep.mean_sq_error, rep.std_error);
    mean_se(k1, k2, rep.mean_kl, rep.kl_std_error);

    const auto mp = generalized_moments(model, noise, nu, default_grid(model), opt.threads);
    rep.asymptotic_prediction = asymptotic_mse(static_cast<double>(T), mp);
    rep.predicted_kl = asymptotic_kl(static_cast<double>(T), mp, model.fisher_information());
    return rep;
}

/// Same replication as empirical_mse; the KL fields carry the comparison with
/// the asymptotic expected KL.
inline EmpiricalReport empirical_kl(const ScalarModel& model, const NoiseDensity& noise, double nu, std::size_t T,
                                    std::size_t replicates, std::uint64_t seed, const SimulationOptions& opt = {}) {
    return empirical_mse(model, noise, nu, T, replicates, seed, opt);
}

}  // namespace ncopt

#endif  // NCOPT_SIMULATE_HPP
