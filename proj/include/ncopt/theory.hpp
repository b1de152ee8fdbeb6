#ifndef NCOPT_THEORY_HPP
#define NCOPT_THEORY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "asymptotics.hpp"
#include "densities.hpp"
#include "models.hpp"
#include "quadrature.hpp"

namespace ncopt {

enum class Regime { AllNoise, AllData };

inline std::string_view to_string(Regime r) { return r == Regime::AllNoise ? "all-noise" : "all-data"; }

struct TheoreticalNoise {
    Objective objective = Objective::MSE;
    Regime regime = Regime::AllNoise;
    double eps1 = 0.0;
    double eps2 = 0.0;
    TabulatedDensity density;
    std::vector<Point> candidates;
};

/// Regularized all-data weight tr((g g^T + eps Id)^{-1})^{-1} for a
/// d-dimensional parameter, evaluated exactly via Sherman-Morrison:
///     (d / eps - |g|^2 / (eps^2 + eps |g|^2))^{-1}.
/// For d = 1 this is |g|^2 + eps.
inline double regularized_weight(double g_norm_sq, int d, double eps) {
    if (d == 1) return g_norm_sq + eps;
    return 1.0 / (static_cast<double>(d) / eps - g_norm_sq / (eps * eps + eps * g_norm_sq));
}

/// Third-order expansion of regularized_weight in eps for d > 1:
///     eps/(d-1) - eps^2/(|g|^2 (d-1)^2) + eps^3 d/(|g|^4 (d-1)^3).
inline double regularized_weight_series(double g_norm_sq, int d, double eps) {
    const double dm1 = static_cast<double>(d - 1);
    return eps / dm1 - eps * eps / (g_norm_sq * dm1 * dm1) +
           eps * eps * eps * static_cast<double>(d) / (g_norm_sq * g_norm_sq * dm1 * dm1 * dm1);
}

/// Noise minimizing the asymptotic MSE (or expected KL) in the all-noise and
/// perturbation limits: p_n proportional to p_d |g| / I_F^k with k = 1 for MSE
/// and k = 1/2 for KL. For a scalar parameter both are p_d |g| after
/// normalization.
inline TheoreticalNoise optimal_noise_all_noise(const ScalarModel& model, Objective objective, const Grid& grid) {
    if (grid.dim != model.dim()) throw std::invalid_argument("grid and model dimensions differ");
    const double fi = model.fisher_information();
    const double scale = objective == Objective::MSE ? 1.0 / fi : 1.0 / std::sqrt(fi);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point& p = grid.nodes[i];
        values[i] = model.density(p) * std::abs(model.score(p)) * scale;
    }
    return {objective, Regime::AllNoise, 0.0, 0.0, TabulatedDensity(grid, std::move(values), Interpolation::Linear), {}};
}

/// The function whose maximizers carry the all-data optimal noise:
/// p_d(x) (|g|^2 + eps2) for MSE and p_d(x) sqrt(|g|^2 + eps2) for KL.
inline double all_data_objective(const ScalarModel& model, Objective objective, const Point& p, double eps2 = 0.0) {
    const double g = model.score(p);
    const double w = regularized_weight(g * g, 1, eps2);
    return model.density(p) * (objective == Objective::MSE ? w : std::sqrt(w));
}

namespace detail {

template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    constexpr double invphi = 0.6180339887498948482;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (std::abs(b - a) > tol) {
        if (fc > fd) {
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
    return 0.5 * (a + b);
}

}  // namespace detail

/// Maximizers of p_d(xi) w(xi): the global-argmax set of the grid values,
/// each refined by golden-section search to 1e-8. Returned sorted.
inline std::vector<Point> dirac_candidates(const ScalarModel& model, Objective objective, const Grid& grid,
                                           double rel_tie = 1e-6) {
    if (grid.dim != model.dim()) throw std::invalid_argument("grid and model dimensions differ");
    constexpr double tol = 1e-10;
    const std::size_t n = grid.n_per_axis;
    const double h = grid.step();
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = all_data_objective(model, objective, grid.nodes[i]);
    const double vmax = *std::max_element(v.begin(), v.end());
    auto f = [&](const Point& p) { return all_data_objective(model, objective, p); };

    std::vector<std::pair<Point, double>> found;
    auto is_local_max = [&](std::size_t idx) {
        if (grid.dim == 1) {
            const bool left = idx == 0 || v[idx] >= v[idx - 1];
            const bool right = idx + 1 == n || v[idx] > v[idx + 1];
            return left && right;
        }
        const std::size_t i = idx / n, j = idx % n;
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const auto ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
                if (ii < 0 || jj < 0 || ii >= static_cast<long>(n) || jj >= static_cast<long>(n)) continue;
                const double w = v[static_cast<std::size_t>(ii) * n + static_cast<std::size_t>(jj)];
                // Ties broken toward the lexicographically first node.
                if (w > v[idx] || (w == v[idx] && (di < 0 || (di == 0 && dj < 0)))) return false;
            }
        }
        return true;
    };
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        if (!is_local_max(idx)) continue;
        Point p = grid.nodes[idx];
        if (grid.dim == 1) {
            const double lo = std::max(grid.lo, p[0] - h), hi = std::min(grid.hi, p[0] + h);
            p[0] = detail::golden_max([&](double x) { return f({x, 0.0}); }, lo, hi, tol);
        } else {
            for (int sweep = 0; sweep < 60; ++sweep) {
                const Point before = p;
                p[0] = detail::golden_max([&](double x) { return f({x, p[1]}); }, std::max(grid.lo, p[0] - h),
                                          std::min(grid.hi, p[0] + h), tol);
                p[1] = detail::golden_max([&](double y) { return f({p[0], y}); }, std::max(grid.lo, p[1] - h),
                                          std::min(grid.hi, p[1] + h), tol);
                if (std::abs(p[0] - before[0]) < tol && std::abs(p[1] - before[1]) < tol) break;
            }
        }
        found.emplace_back(p, f(p));
    }
    double best = vmax;
    for (const auto& [p, fv] : found) best = std::max(best, fv);
    std::vector<Point> out;
    for (const auto& [p, fv] : found) {
        if (fv >= best * (1.0 - rel_tie)) out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Softmax relaxation of the all-data optimal noise:
///     p_n proportional to exp(p_d(x) w_eps2(x) / eps1)
/// with w = |g|^2 (MSE) or |g| (KL), regularized by eps2. eps1 defaults to
/// 0.01 times the maximum of the objective on the grid.
///
/// `left_mass`, when given for a 1-D model with two candidates, reallocates
/// the mass between the half-lines on either side of the data center.
inline TheoreticalNoise optimal_noise_all_data(const ScalarModel& model, Objective objective, std::optional<double> eps1,
                                               double eps2, const Grid& grid,
                                               std::optional<double> left_mass = std::nullopt) {
    if (grid.dim != model.dim()) throw std::invalid_argument("grid and model dimensions differ");
    if (!(eps2 > 0.0)) throw std::invalid_argument("eps2 must be positive");
    std::vector<double> h(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) h[i] = all_data_objective(model, objective, grid.nodes[i], eps2);
    const double hmax = *std::max_element(h.begin(), h.end());
    const double temperature = eps1.value_or(0.01 * hmax);
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("eps1 must be positive");

    std::vector<double> values(grid.size());
    bool spread = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        values[i] = std::exp((h[i] - hmax) / temperature);
        if (values[i] < std::numeric_limits<double>::min()) values[i] = 0.0;
        if (values[i] > 0.0 && h[i] < hmax) spread = true;
    }
    if (!spread) {
        throw NumericError("softmax relaxation underflows at eps1 = " + std::to_string(temperature) +
                           ": every node but the maximizer has zero weight; use a larger eps1");
    }
    if (left_mass) {
        if (model.dim() != 1) throw std::invalid_argument("mass allocation is only supported for 1-D models");
        const double a = std::clamp(*left_mass, 0.0, 1.0);
        const double c = model.center();
        double left = 0.0, right = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.nodes[i][0];
            const double wv = grid.weights[i] * values[i];
            if (x < c) left += wv;
            else if (x > c) right += wv;
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.nodes[i][0];
            if (x < c) values[i] = left > 0.0 ? values[i] * a / left : 0.0;
            else if (x > c) values[i] = right > 0.0 ? values[i] * (1.0 - a) / right : 0.0;
            else values[i] = 0.0;
        }
    }
    TheoreticalNoise out{objective, Regime::AllData, temperature, eps2,
                         TabulatedDensity(grid, std::move(values), Interpolation::Linear), {}};
    out.candidates = dirac_candidates(model, objective, grid);
    return out;
}

/// Mass of a density in each histogram bin, integrated with a fine per-bin
/// trapezoid rule (1-D).
template <class Density>
std::vector<double> bin_masses(Density&& density, const std::vector<double>& edges, std::size_t per_bin = 64) {
    std::vector<double> out(edges.size() - 1, 0.0);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        const double step = (b - a) / static_cast<double>(per_bin);
        double acc = 0.5 * (density(a) + density(b));
        for (std::size_t i = 1; i < per_bin; ++i) acc += density(a + step * static_cast<double>(i));
        out[k] = acc * step;
    }
    return out;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
    return 0.5 * tv;
}

}  // namespace ncopt

#endif  // NCOPT_THEORY_HPP
