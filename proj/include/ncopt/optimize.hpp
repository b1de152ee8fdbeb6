#ifndef NCOPT_OPTIMIZE_HPP
#define NCOPT_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "asymptotics.hpp"
#include "densities.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace ncopt {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Golden-section minimization on [a, b]. Returns (x, f(x)).
template <class F>
std::pair<double, double> golden_section_minimize(F&& f, double a, double b, double tol = 1e-6) {
    constexpr double invphi = 0.6180339887498948482;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (std::abs(b - a) > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

struct LocalMinimum {
    double at = 0.0;
    double value = 0.0;
};

struct SweepResult {
    std::vector<double> axis;
    std::vector<double> values;
    double argmin = kNaN;
    double min_value = kNaN;
    std::vector<LocalMinimum> local_minima;
    /// Axis indices whose evaluation failed (degenerate or out of domain).
    std::vector<std::size_t> failures;
};

namespace detail {

/// Strict interior local minima of the finite values, each refined by golden
/// section on its two neighbouring cells. The global minimum is the best
/// refined local minimum, or the best grid point if none is interior.
template <class F>
void finish_sweep(SweepResult& r, F&& f, double tol) {
    const auto& v = r.values;
    const std::size_t n = v.size();
    auto finite = [&](std::size_t i) { return std::isfinite(v[i]); };
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!finite(i) || !finite(i - 1) || !finite(i + 1)) continue;
        if (v[i] < v[i - 1] && v[i] <= v[i + 1] && !(v[i] == v[i + 1] && i + 2 < n && v[i + 2] <= v[i])) {
            auto [x, fx] = golden_section_minimize(f, r.axis[i - 1], r.axis[i + 1], tol);
            if (!(fx <= v[i])) {
                x = r.axis[i];
                fx = v[i];
            }
            r.local_minima.push_back({x, fx});
        }
    }
    r.min_value = kInf;
    for (const auto& lm : r.local_minima) {
        if (lm.value < r.min_value) {
            r.min_value = lm.value;
            r.argmin = lm.at;
        }
    }
    if (r.local_minima.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (finite(i) && v[i] < r.min_value) {
                r.min_value = v[i];
                r.argmin = r.axis[i];
            }
        }
    }
    if (!std::isfinite(r.min_value)) throw NumericError("sweep produced no finite objective value");
}

}  // namespace detail

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

/// Default noise-parameter axis for the same-family sweep: data mean +- 5
/// (step 0.01), variance ratio 0.05..10.05 (step 0.01), correlation
/// -0.99..0.99 (step 0.01).
inline std::vector<double> default_noise_axis(const ScalarModel& model) {
    switch (model.kind()) {
    case ModelKind::GaussianMean: return linspace(model.theta() - 5.0, model.theta() + 5.0, 1001);
    case ModelKind::GaussianVariance: return linspace(0.05 * model.theta(), 10.05 * model.theta(), 1001);
    case ModelKind::GaussianCorrelation: return linspace(-0.99, 0.99, 199);
    }
    return {};
}

/// Objective with p_n = same family at `noise_theta`; NaN if degenerate or
/// outside the family's domain.
inline double parametric_objective(const ScalarModel& model, double noise_theta, double nu, double T, Objective obj,
                                   const Grid& grid, unsigned threads = 1) {
    if (!in_domain(model.kind(), noise_theta)) return kNaN;
    try {
        const auto mp = generalized_moments(model, NoiseDensity(model.with_theta(noise_theta)), nu, grid, threads);
        return objective_value(obj, T, mp, model.fisher_information());
    } catch (const NumericError&) {
        return kNaN;
    }
}

inline SweepResult sweep_parametric_noise(const ScalarModel& model, double nu, double T,
                                          const std::vector<double>& param_grid, Objective obj, const Grid& grid,
                                          unsigned threads = 1, double tol = 1e-6) {
    if (param_grid.size() < 3) throw std::invalid_argument("parameter grid needs at least 3 points");
    SweepResult r;
    r.axis = param_grid;
    r.values.assign(param_grid.size(), kNaN);
    parallel_for(param_grid.size(), threads, [&](std::size_t i) {
        r.values[i] = parametric_objective(model, param_grid[i], nu, T, obj, grid);
    });
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (!std::isfinite(r.values[i])) r.failures.push_back(i);
    }
    auto f = [&](double p) {
        const double v = parametric_objective(model, p, nu, T, obj, grid, threads);
        return std::isfinite(v) ? v : kInf;
    };
    detail::finish_sweep(r, f, tol);
    return r;
}

inline double proportion_to_nu(double pi) { return pi / (1.0 - pi); }
inline double nu_to_proportion(double nu) { return nu / (1.0 + nu); }

/// Sweeps the noise proportion pi = nu / (1 + nu) over [lo, hi] at a fixed
/// total budget T and refines the best point by golden section.
inline SweepResult optimize_proportion(const ScalarModel& model, const NoiseDensity& noise, double T, Objective obj,
                                       const Grid& grid, std::size_t points = 197, double lo = 0.01, double hi = 0.99,
                                       unsigned threads = 1, double tol = 1e-8) {
    const MomentTable table = moment_table(model, noise, grid, threads);
    const double fi = model.fisher_information();
    auto eval = [&](double pi) {
        try {
            return objective_value(obj, T, generalized_moments(table, proportion_to_nu(pi)), fi);
        } catch (const NumericError&) {
            return kNaN;
        }
    };
    SweepResult r;
    r.axis = linspace(lo, hi, points);
    r.values.assign(points, kNaN);
    parallel_for(points, threads, [&](std::size_t i) { r.values[i] = eval(r.axis[i]); });
    for (std::size_t i = 0; i < points; ++i) {
        if (!std::isfinite(r.values[i])) r.failures.push_back(i);
    }
    detail::finish_sweep(r, [&](double pi) {
        const double v = eval(pi);
        return std::isfinite(v) ? v : kInf;
    }, tol);
    return r;
}

// ---------------------------------------------------------------------------
// Histogram noise: discretized objective and its exact gradient in logits.

/// Asymptotic MSE (or KL) as a smooth function of histogram logits. The
/// quadrature is the bin-aligned table of histogram_moment_table, so the
/// discretized objective is a closed-form composition of softmax, the bin
/// densities, m, I and Sigma, and is differentiated exactly.
class HistogramObjective {
public:
    HistogramObjective(const ScalarModel& model, HistogramDensity shape, double nu, double T, Objective obj,
                       double max_step)
        : shape_(std::move(shape)), nu_(nu), T_(T), obj_(obj), fisher_(model.fisher_information()),
          table_(histogram_moment_table(model, shape_, max_step)) {
        if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
        if (!(T >= 1.0)) throw std::invalid_argument("budget T must be >= 1");
    }

    std::size_t size() const { return shape_.bin_count(); }
    const HistogramDensity& shape() const { return shape_; }

    /// Objective value; +inf if the configuration is degenerate.
    double value(const std::vector<double>& logits) const {
        std::vector<double> unused;
        return evaluate(logits, unused, false);
    }

    double value_and_gradient(const std::vector<double>& logits, std::vector<double>& grad) const {
        return evaluate(logits, grad, true);
    }

private:
    double evaluate(const std::vector<double>& logits, std::vector<double>& grad, bool want_grad) const {
        const std::size_t K = size();
        if (logits.size() != K) throw std::invalid_argument("logit vector has wrong length");
        const auto s = softmax(logits);
        const double f = shape_.floor();
        const double norm = 1.0 + static_cast<double>(K) * f;
        std::vector<double> c(K);
        for (std::size_t k = 0; k < K; ++k) c[k] = (s[k] + f) / (shape_.bin_area(k) * norm);

        CompensatedSum m_acc, i_acc;
        for (std::size_t j = 0; j < table_.size(); ++j) {
            const double u = discriminator_weight(table_.p_data[j], c[table_.bin[j]], nu_);
            const double base = table_.weight[j] * table_.score[j] * u * table_.p_data[j];
            m_acc.add(base);
            i_acc.add(base * table_.score[j]);
        }
        const double m = m_acc.value();
        const double I = i_acc.value();
        const double k_ratio = (nu_ + 1.0) / nu_;
        const double sigma = 1.0 / I - k_ratio * m * m / (I * I);
        if (!(I > kDegenerateI) || !(sigma > 0.0) || !std::isfinite(sigma)) {
            if (want_grad) grad.assign(K, kNaN);
            return kInf;
        }
        const double scale = (nu_ + 1.0) / T_ * (obj_ == Objective::KL ? 0.5 * fisher_ : 1.0);
        const double value = scale * sigma;
        if (!want_grad) return value;

        const double d_m = scale * (-2.0 * k_ratio * m / (I * I));
        const double d_I = scale * (-1.0 / (I * I) + 2.0 * k_ratio * m * m / (I * I * I));
        std::vector<double> d_c(K, 0.0);
        for (std::size_t j = 0; j < table_.size(); ++j) {
            const double pd = table_.p_data[j];
            if (pd <= 0.0) continue;
            const double g = table_.score[j];
            const double cb = c[table_.bin[j]];
            const double denom = pd + nu_ * cb;
            const double du_dc = nu_ * pd / (denom * denom);
            d_c[table_.bin[j]] += table_.weight[j] * pd * (d_m * g + d_I * g * g) * du_dc;
        }
        // Chain through c_k = (s_k + floor) / (area_k * norm) and the softmax.
        double sg = 0.0;
        std::vector<double> d_s(K);
        for (std::size_t k = 0; k < K; ++k) {
            d_s[k] = d_c[k] / (shape_.bin_area(k) * norm);
            sg += s[k] * d_s[k];
        }
        grad.resize(K);
        for (std::size_t k = 0; k < K; ++k) grad[k] = s[k] * (d_s[k] - sg);
        return value;
    }

    HistogramDensity shape_;
    double nu_;
    double T_;
    Objective obj_;
    double fisher_;
    MomentTable table_;
};

/// Exact gradient of the discretized objective with respect to the logits of
/// `noise`. The grid sets the maximum quadrature spacing.
inline std::vector<double> mse_gradient_logits(const ScalarModel& model, const HistogramDensity& noise, double nu,
                                               double T, const Grid& grid, Objective obj = Objective::MSE) {
    HistogramObjective f(model, noise, nu, T, obj, grid.step());
    std::vector<double> g;
    f.value_and_gradient(noise.logits(), g);
    return g;
}

// ---------------------------------------------------------------------------
// Nonlinear conjugate gradient.

struct OptimizerTrace {
    std::size_t iterations = 0;
    std::vector<double> objective_history;
    std::vector<double> gradient_norm_history;
    bool converged = false;
};

struct CgOptions {
    std::size_t max_iter = 200;
    double gtol = 1e-7;
    double c1 = 1e-4;
    double c2 = 0.1;
    std::size_t max_line_search = 40;
};

/// f(x, grad) -> value; must fill grad. Non-finite values reject the trial step.
using ValueAndGradient = std::function<double(const std::vector<double>&, std::vector<double>&)>;

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double inf_norm(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

struct LineSearchResult {
    bool ok = false;
    double alpha = 0.0;
    double f = 0.0;
    std::vector<double> x;
    std::vector<double> g;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db); NaN if
// the interpolant has no usable minimizer.
inline double cubic_min(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return kNaN;
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom == 0.0) return kNaN;
    return b - (b - a) * (db + d2 - d1) / denom;
}

/// Strong-Wolfe line search (bracketing phase followed by zoom with
/// safeguarded cubic interpolation).
inline LineSearchResult strong_wolfe(const ValueAndGradient& fun, const std::vector<double>& x0, double f0,
                                     const std::vector<double>& g0, const std::vector<double>& dir, double alpha0,
                                     const CgOptions& opt) {
    const double dphi0 = dot(g0, dir);
    struct Trial {
        double alpha, f, dphi;
        std::vector<double> x, g;
    };
    auto evaluate = [&](double alpha) {
        Trial t{alpha, 0.0, 0.0, x0, {}};
        for (std::size_t i = 0; i < x0.size(); ++i) t.x[i] += alpha * dir[i];
        t.f = fun(t.x, t.g);
        t.dphi = std::isfinite(t.f) ? dot(t.g, dir) : kNaN;
        return t;
    };
    auto armijo = [&](const Trial& t) { return std::isfinite(t.f) && t.f <= f0 + opt.c1 * t.alpha * dphi0; };
    auto curvature = [&](const Trial& t) { return std::abs(t.dphi) <= -opt.c2 * dphi0; };
    auto accept = [](Trial t) { return LineSearchResult{true, t.alpha, t.f, std::move(t.x), std::move(t.g)}; };

    std::size_t evals = 0;
    auto zoom = [&](Trial lo, Trial hi) -> LineSearchResult {
        // lo satisfies Armijo with the lowest value so far; hi brackets it.
        while (evals < opt.max_line_search) {
            const double a = lo.alpha, b = hi.alpha;
            const double width = std::abs(b - a);
            if (width <= 1e-16 * std::max(1.0, std::abs(a))) break;
            double alpha = std::isfinite(hi.f) ? cubic_min(a, lo.f, lo.dphi, b, hi.f, hi.dphi) : kNaN;
            const double lo_b = std::min(a, b) + 0.1 * width, hi_b = std::max(a, b) - 0.1 * width;
            if (!std::isfinite(alpha) || alpha < lo_b || alpha > hi_b) alpha = 0.5 * (a + b);
            Trial t = evaluate(alpha);
            ++evals;
            if (!armijo(t) || t.f >= lo.f) {
                hi = std::move(t);
            } else {
                if (curvature(t)) return accept(std::move(t));
                if (t.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(t);
            }
        }
        // Out of budget: a positive lo still gives sufficient decrease.
        if (lo.alpha > 0.0) return accept(std::move(lo));
        return {};
    };

    Trial prev{0.0, f0, dphi0, x0, g0};
    double alpha = alpha0;
    for (std::size_t i = 0; evals < opt.max_line_search; ++i) {
        Trial t = evaluate(alpha);
        ++evals;
        if (!armijo(t) || (i > 0 && t.f >= prev.f)) return zoom(std::move(prev), std::move(t));
        if (curvature(t)) return accept(std::move(t));
        if (t.dphi >= 0.0) return zoom(std::move(t), std::move(prev));
        prev = std::move(t);
        alpha *= 2.0;
    }
    if (prev.alpha > 0.0) return accept(std::move(prev));
    return {};
}

}  // namespace detail

/// Polak-Ribiere (PR+) nonlinear conjugate gradient with a strong-Wolfe line
/// search. Restarts along steepest descent when the PR coefficient is
/// negative or the direction is not a descent direction; converged when the
/// gradient infinity-norm is at most gtol.
inline OptimizerTrace minimize_cg(const ValueAndGradient& fun, std::vector<double>& x, const CgOptions& opt = {}) {
    OptimizerTrace trace;
    std::vector<double> g;
    double f = fun(x, g);
    if (!std::isfinite(f)) throw NumericError("conjugate gradient started at a non-finite objective");
    trace.objective_history.push_back(f);
    trace.gradient_norm_history.push_back(detail::inf_norm(g));
    if (detail::inf_norm(g) <= opt.gtol) {
        trace.converged = true;
        return trace;
    }
    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
    double f_prev = kNaN;
    bool steepest = true;
    while (trace.iterations < opt.max_iter) {
        const double slope = detail::dot(g, d);
        double alpha0 = 1.0 / std::max(1e-300, std::sqrt(detail::dot(d, d)));
        if (std::isfinite(f_prev)) {
            const double guess = 1.01 * 2.0 * (f - f_prev) / slope;
            if (guess > 0.0 && std::isfinite(guess)) alpha0 = std::min(1.0, guess);
        }
        auto ls = detail::strong_wolfe(fun, x, f, g, d, alpha0, opt);
        if (!ls.ok || !(ls.f <= f)) {
            if (steepest) break;
            for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
            steepest = true;
            f_prev = kNaN;
            continue;
        }
        double beta = 0.0;
        const double gg = detail::dot(g, g);
        for (std::size_t i = 0; i < g.size(); ++i) beta += ls.g[i] * (ls.g[i] - g[i]);
        beta = std::max(0.0, beta / gg);
        x = std::move(ls.x);
        f_prev = f;
        f = ls.f;
        g = std::move(ls.g);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i] + beta * d[i];
        steepest = beta == 0.0;
        if (detail::dot(g, d) >= 0.0) {
            for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
            steepest = true;
        }
        ++trace.iterations;
        trace.objective_history.push_back(f);
        trace.gradient_norm_history.push_back(detail::inf_norm(g));
        if (detail::inf_norm(g) <= opt.gtol) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

struct HistogramFit {
    HistogramDensity histogram;
    OptimizerTrace trace;
};

/// Optimizes histogram logits for the asymptotic MSE (or KL) at ratio nu.
inline HistogramFit optimize_histogram(const ScalarModel& model, double nu, double T, const HistogramDensity& init,
                                       Objective obj, const Grid& grid, const CgOptions& opt = {}) {
    HistogramObjective objective(model, init, nu, T, obj, grid.step());
    std::vector<double> z = init.logits();
    ValueAndGradient fun = [&](const std::vector<double>& x, std::vector<double>& g) {
        return objective.value_and_gradient(x, g);
    };
    if (opt.max_iter == 0) {
        OptimizerTrace trace;
        std::vector<double> g;
        trace.objective_history.push_back(fun(z, g));
        trace.gradient_norm_history.push_back(detail::inf_norm(g));
        trace.converged = detail::inf_norm(g) <= opt.gtol;
        return {init, std::move(trace)};
    }
    auto trace = minimize_cg(fun, z, opt);
    return {init.with_logits(std::move(z)), std::move(trace)};
}

}  // namespace ncopt

#endif  // NCOPT_OPTIMIZE_HPP
