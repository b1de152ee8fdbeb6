#ifndef NCOPT_DENSITIES_HPP
#define NCOPT_DENSITIES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "models.hpp"
#include "quadrature.hpp"

namespace ncopt {

inline constexpr double kDefaultFloor = 1e-8;

/// Numerically stable softmax.
inline std::vector<double> softmax(const std::vector<double>& z) {
    std::vector<double> s(z.size());
    if (z.empty()) return s;
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s[i] = std::exp(z[i] - zmax);
        total += s[i];
    }
    for (double& v : s) v /= total;
    return s;
}

/// Piecewise-constant density on a 1-D partition or a 2-D tensor partition.
///
/// Bin weights are parameterized by unconstrained logits through a softmax,
/// and every bin keeps a small floor mass:
///
///     mass_k = (softmax(logits)_k + floor) / (1 + K * floor)
///     density_k = mass_k / area_k
///
/// so the density integrates to exactly one and stays positive on the box.
/// In 2-D the logits are laid out row-major, index = i * K_y + j with i the
/// bin along the first coordinate.
class HistogramDensity {
public:
    HistogramDensity(std::vector<double> edges, std::vector<double> logits, double floor = kDefaultFloor)
        : HistogramDensity(1, std::move(edges), {}, std::move(logits), floor) {}

    HistogramDensity(std::vector<double> x_edges, std::vector<double> y_edges, std::vector<double> logits,
                     double floor = kDefaultFloor)
        : HistogramDensity(2, std::move(x_edges), std::move(y_edges), std::move(logits), floor) {}

    int dim() const { return dim_; }
    std::size_t bins_x() const { return x_edges_.size() - 1; }
    std::size_t bins_y() const { return dim_ == 2 ? y_edges_.size() - 1 : 1; }
    std::size_t bin_count() const { return bins_x() * bins_y(); }
    double floor() const { return floor_; }
    const std::vector<double>& x_edges() const { return x_edges_; }
    const std::vector<double>& y_edges() const { return y_edges_; }
    const std::vector<double>& logits() const { return logits_; }
    const std::vector<double>& masses() const { return masses_; }
    const std::vector<double>& bin_densities() const { return densities_; }

    double bin_area(std::size_t k) const {
        const std::size_t i = k / bins_y();
        const double wx = x_edges_[i + 1] - x_edges_[i];
        if (dim_ == 1) return wx;
        const std::size_t j = k % bins_y();
        return wx * (y_edges_[j + 1] - y_edges_[j]);
    }

    /// Bin index containing p, or npos outside the box. The upper box edge
    /// belongs to the last bin.
    std::size_t locate(const Point& p) const {
        const auto i = axis_bin(x_edges_, p[0]);
        if (i == npos) return npos;
        if (dim_ == 1) return i;
        const auto j = axis_bin(y_edges_, p[1]);
        if (j == npos) return npos;
        return i * bins_y() + j;
    }

    double eval(const Point& p) const {
        const auto k = locate(p);
        return k == npos ? 0.0 : densities_[k];
    }

    HistogramDensity with_logits(std::vector<double> logits) const {
        return dim_ == 1 ? HistogramDensity(x_edges_, std::move(logits), floor_)
                         : HistogramDensity(x_edges_, y_edges_, std::move(logits), floor_);
    }

    std::vector<Point> sample(std::size_t n, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> cdf(masses_.size());
        std::partial_sum(masses_.begin(), masses_.end(), cdf.begin());
        std::vector<Point> out(n);
        for (auto& p : out) {
            const double u = unif(rng) * cdf.back();
            auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            k = std::min(k, masses_.size() - 1);
            const std::size_t i = k / bins_y();
            p[0] = x_edges_[i] + unif(rng) * (x_edges_[i + 1] - x_edges_[i]);
            p[1] = 0.0;
            if (dim_ == 2) {
                const std::size_t j = k % bins_y();
                p[1] = y_edges_[j] + unif(rng) * (y_edges_[j + 1] - y_edges_[j]);
            }
        }
        return out;
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

private:
    HistogramDensity(int dim, std::vector<double> x_edges, std::vector<double> y_edges, std::vector<double> logits,
                     double floor)
        : dim_(dim), x_edges_(std::move(x_edges)), y_edges_(std::move(y_edges)), logits_(std::move(logits)),
          floor_(floor) {
        check_edges(x_edges_);
        if (dim_ == 2) check_edges(y_edges_);
        if (logits_.size() != bin_count()) {
            throw std::invalid_argument("histogram has " + std::to_string(bin_count()) + " bins but " +
                                        std::to_string(logits_.size()) + " logits");
        }
        if (!(floor_ > 0.0) || !std::isfinite(floor_)) throw std::invalid_argument("histogram floor must be positive");
        for (double z : logits_) {
            if (!std::isfinite(z)) throw std::invalid_argument("histogram logits must be finite");
        }
        const auto s = softmax(logits_);
        const double norm = 1.0 + static_cast<double>(bin_count()) * floor_;
        masses_.resize(s.size());
        densities_.resize(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) {
            masses_[k] = (s[k] + floor_) / norm;
            densities_[k] = masses_[k] / bin_area(k);
        }
    }

    static void check_edges(const std::vector<double>& e) {
        if (e.size() < 2) throw std::invalid_argument("histogram needs at least two edges");
        for (std::size_t i = 0; i + 1 < e.size(); ++i) {
            if (!(e[i] < e[i + 1]) || !std::isfinite(e[i]) || !std::isfinite(e[i + 1]))
                throw std::invalid_argument("histogram edges must be finite and strictly increasing");
        }
    }

    static std::size_t axis_bin(const std::vector<double>& e, double x) {
        if (!(x >= e.front() && x <= e.back())) return npos;
        if (x == e.back()) return e.size() - 2;
        return static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x) - e.begin()) - 1;
    }

    int dim_;
    std::vector<double> x_edges_;
    std::vector<double> y_edges_;
    std::vector<double> logits_;
    double floor_;
    std::vector<double> masses_;
    std::vector<double> densities_;
};

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    if (bins == 0 || !(lo < hi)) throw std::invalid_argument("uniform_edges needs lo < hi and bins > 0");
    std::vector<double> e(bins + 1);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + w * static_cast<double>(i);
    e.back() = hi;
    return e;
}

/// Normalized histogram from edges and logits.
inline HistogramDensity histogram_from_weights(std::vector<double> edges, std::vector<double> logits,
                                               double floor = kDefaultFloor) {
    return HistogramDensity(std::move(edges), std::move(logits), floor);
}

/// Uniform-logit histogram with K bins per axis on [-half_width, half_width]^dim.
inline HistogramDensity uniform_histogram(int dim, double lo, double hi, std::size_t bins_per_axis,
                                          double floor = kDefaultFloor) {
    auto e = uniform_edges(lo, hi, bins_per_axis);
    if (dim == 1) return HistogramDensity(e, std::vector<double>(bins_per_axis, 0.0), floor);
    return HistogramDensity(e, e, std::vector<double>(bins_per_axis * bins_per_axis, 0.0), floor);
}

enum class Interpolation { Nearest, Linear };

/// Density tabulated at the nodes of a Grid and normalized so that the grid's
/// trapezoid rule integrates it to one. Between nodes it is interpolated
/// (linear / bilinear, or nearest node); outside the grid range it is zero.
class TabulatedDensity {
public:
    TabulatedDensity(Grid grid, std::vector<double> values, Interpolation rule = Interpolation::Linear)
        : grid_(std::move(grid)), values_(std::move(values)), rule_(rule) {
        if (values_.size() != grid_.size()) throw std::invalid_argument("tabulated values do not match grid size");
        for (double v : values_) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("tabulated values must be finite and >= 0");
        }
        const double z = ordered_sum(values_.size(), [&](std::size_t i) { return grid_.weights[i] * values_[i]; });
        if (!(z > 0.0)) throw NumericError("tabulated density has zero mass");
        for (double& v : values_) v /= z;
    }

    int dim() const { return grid_.dim; }
    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    Interpolation rule() const { return rule_; }

    double eval(const Point& p) const {
        const double h = grid_.step();
        const std::size_t n = grid_.n_per_axis;
        auto locate = [&](double x, std::size_t& i, double& t) {
            if (!(x >= grid_.lo && x <= grid_.hi)) return false;
            const double u = (x - grid_.lo) / h;
            i = std::min(static_cast<std::size_t>(u), n - 2);
            t = std::clamp(u - static_cast<double>(i), 0.0, 1.0);
            return true;
        };
        std::size_t i = 0;
        double tx = 0.0;
        if (!locate(p[0], i, tx)) return 0.0;
        if (grid_.dim == 1) {
            if (rule_ == Interpolation::Nearest) return values_[tx < 0.5 ? i : i + 1];
            return (1.0 - tx) * values_[i] + tx * values_[i + 1];
        }
        std::size_t j = 0;
        double ty = 0.0;
        if (!locate(p[1], j, ty)) return 0.0;
        auto at = [&](std::size_t a, std::size_t b) { return values_[a * n + b]; };
        if (rule_ == Interpolation::Nearest) return at(tx < 0.5 ? i : i + 1, ty < 0.5 ? j : j + 1);
        return (1.0 - tx) * ((1.0 - ty) * at(i, j) + ty * at(i, j + 1)) +
               tx * ((1.0 - ty) * at(i + 1, j) + ty * at(i + 1, j + 1));
    }

    /// Exact draws from the linear / bilinear interpolant.
    std::vector<Point> sample(std::size_t n_samples, std::uint64_t seed) const {
        const std::size_t n = grid_.n_per_axis;
        const double h = grid_.step();
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        // Inverse CDF on [0,1] of a density linear from a to b.
        auto linear_draw = [](double a, double b, double u) {
            const double d = b - a;
            if (std::abs(d) <= 1e-12 * std::max(a, b)) return u;
            return std::clamp((-a + std::sqrt(std::max(0.0, a * a + u * (b * b - a * a)))) / d, 0.0, 1.0);
        };
        auto nearest_draw = [](double a, double b, double u) {
            const double left = 0.5 * a;
            const double total = left + 0.5 * b;
            if (total <= 0.0) return u;
            const double v = u * total;
            return v < left ? 0.5 * v / left : 0.5 + 0.5 * (v - left) / (0.5 * b);
        };
        auto draw = [&](double a, double b, double u) {
            return rule_ == Interpolation::Linear ? linear_draw(a, b, u) : nearest_draw(a, b, u);
        };
        std::vector<Point> out(n_samples);
        if (grid_.dim == 1) {
            std::vector<double> cdf(n - 1);
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                acc += values_[i] + values_[i + 1];
                cdf[i] = acc;
            }
            for (auto& p : out) {
                const double u = unif(rng) * cdf.back();
                auto i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                i = std::min(i, n - 2);
                p = {grid_.lo + h * (static_cast<double>(i) + draw(values_[i], values_[i + 1], unif(rng))), 0.0};
            }
            return out;
        }
        auto at = [&](std::size_t a, std::size_t b) { return values_[a * n + b]; };
        const std::size_t cells = (n - 1) * (n - 1);
        std::vector<double> cdf(cells);
        double acc = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t i = c / (n - 1), j = c % (n - 1);
            acc += at(i, j) + at(i, j + 1) + at(i + 1, j) + at(i + 1, j + 1);
            cdf[c] = acc;
        }
        for (auto& p : out) {
            const double u = unif(rng) * cdf.back();
            auto c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            c = std::min(c, cells - 1);
            const std::size_t i = c / (n - 1), j = c % (n - 1);
            const double f00 = at(i, j), f01 = at(i, j + 1), f10 = at(i + 1, j), f11 = at(i + 1, j + 1);
            double tx = 0.0, ty = 0.0;
            if (rule_ == Interpolation::Linear) {
                tx = linear_draw(f00 + f01, f10 + f11, unif(rng));
                ty = linear_draw((1 - tx) * f00 + tx * f10, (1 - tx) * f01 + tx * f11, unif(rng));
            } else {
                tx = nearest_draw(f00 + f01, f10 + f11, unif(rng));
                const bool left = tx < 0.5;
                ty = nearest_draw(left ? f00 : f10, left ? f01 : f11, unif(rng));
            }
            p = {grid_.lo + h * (static_cast<double>(i) + tx), grid_.lo + h * (static_cast<double>(j) + ty)};
        }
        return out;
    }

private:
    Grid grid_;
    std::vector<double> values_;
    Interpolation rule_;
};

/// Noise distribution p_n.
class NoiseDensity {
public:
    using Variant = std::variant<ScalarModel, HistogramDensity, TabulatedDensity>;

    NoiseDensity(ScalarModel m) : v_(std::move(m)) {}
    NoiseDensity(HistogramDensity h) : v_(std::move(h)) {}
    NoiseDensity(TabulatedDensity t) : v_(std::move(t)) {}

    const Variant& variant() const { return v_; }
    bool is_parametric() const { return std::holds_alternative<ScalarModel>(v_); }
    bool is_histogram() const { return std::holds_alternative<HistogramDensity>(v_); }
    bool is_tabulated() const { return std::holds_alternative<TabulatedDensity>(v_); }
    const ScalarModel& parametric() const { return std::get<ScalarModel>(v_); }
    const HistogramDensity& histogram() const { return std::get<HistogramDensity>(v_); }
    const TabulatedDensity& tabulated() const { return std::get<TabulatedDensity>(v_); }

    int dim() const {
        return std::visit([](const auto& d) { return d.dim(); }, v_);
    }

    double eval(const Point& p) const {
        return std::visit(
            [&](const auto& d) -> double {
                if constexpr (std::is_same_v<std::decay_t<decltype(d)>, ScalarModel>) {
                    return d.density(p);
                } else {
                    return d.eval(p);
                }
            },
            v_);
    }

    std::vector<Point> sample(std::size_t n, std::uint64_t seed) const {
        return std::visit([&](const auto& d) { return d.sample(n, seed); }, v_);
    }

private:
    Variant v_;
};

inline double density_eval(const NoiseDensity& noise, const Point& p) { return noise.eval(p); }

inline std::vector<Point> noise_sample(const NoiseDensity& noise, std::size_t n, std::uint64_t seed) {
    return noise.sample(n, seed);
}

// ---------------------------------------------------------------------------
// CSV serialization: `bin_lo,bin_hi,density` (1-D) or
// `x_lo,x_hi,y_lo,y_hi,density` (2-D).

inline void write_histogram_csv(std::ostream& os, const HistogramDensity& h) {
    os << std::setprecision(17);
    const auto& ex = h.x_edges();
    if (h.dim() == 1) {
        os << "bin_lo,bin_hi,density\n";
        for (std::size_t k = 0; k < h.bin_count(); ++k)
            os << ex[k] << ',' << ex[k + 1] << ',' << h.bin_densities()[k] << '\n';
        return;
    }
    const auto& ey = h.y_edges();
    os << "x_lo,x_hi,y_lo,y_hi,density\n";
    for (std::size_t k = 0; k < h.bin_count(); ++k) {
        const std::size_t i = k / h.bins_y(), j = k % h.bins_y();
        os << ex[i] << ',' << ex[i + 1] << ',' << ey[j] << ',' << ey[j + 1] << ',' << h.bin_densities()[k] << '\n';
    }
}

/// Tabulated densities are written as nearest-node cells: each node owns the
/// cell extending half a step to each side (clipped to the range), so the
/// cell masses equal the trapezoid weights times the node values.
inline void write_tabulated_csv(std::ostream& os, const TabulatedDensity& t) {
    os << std::setprecision(17);
    const Grid& g = t.grid();
    const double h = g.step();
    const std::size_t n = g.n_per_axis;
    auto cell = [&](std::size_t i, double& lo, double& hi) {
        const double c = g.lo + h * static_cast<double>(i);
        lo = i == 0 ? g.lo : c - 0.5 * h;
        hi = i + 1 == n ? g.hi : c + 0.5 * h;
    };
    double xl = 0, xh = 0, yl = 0, yh = 0;
    if (g.dim == 1) {
        os << "bin_lo,bin_hi,density\n";
        for (std::size_t i = 0; i < n; ++i) {
            cell(i, xl, xh);
            os << xl << ',' << xh << ',' << t.values()[i] << '\n';
        }
        return;
    }
    os << "x_lo,x_hi,y_lo,y_hi,density\n";
    for (std::size_t i = 0; i < n; ++i) {
        cell(i, xl, xh);
        for (std::size_t j = 0; j < n; ++j) {
            cell(j, yl, yh);
            os << xl << ',' << xh << ',' << yl << ',' << yh << ',' << t.values()[i * n + j] << '\n';
        }
    }
}

/// Reads a 1-D or 2-D histogram CSV back into a HistogramDensity. Bin densities
/// are converted to logits log(mass); the floor is applied on top, so a
/// round trip is exact only up to the floor mass.
inline HistogramDensity read_histogram_csv(std::istream& is, double floor = kDefaultFloor) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("empty histogram CSV");
    const bool two_d = line.rfind("x_lo", 0) == 0;
    if (!two_d && line.rfind("bin_lo", 0) != 0) throw std::invalid_argument("unrecognized histogram CSV header");
    std::vector<std::array<double, 5>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::array<double, 5> r{};
        std::stringstream ss(line);
        std::string cellv;
        std::size_t c = 0;
        while (std::getline(ss, cellv, ',') && c < 5) r[c++] = std::stod(cellv);
        if (c != (two_d ? 5u : 3u)) throw std::invalid_argument("malformed histogram CSV row: " + line);
        rows.push_back(r);
    }
    if (rows.empty()) throw std::invalid_argument("histogram CSV has no bins");
    auto to_logit = [](double mass) { return std::log(std::max(mass, 1e-300)); };
    if (!two_d) {
        std::vector<double> edges{rows.front()[0]}, logits;
        for (const auto& r : rows) {
            edges.push_back(r[1]);
            logits.push_back(to_logit(r[2] * (r[1] - r[0])));
        }
        return HistogramDensity(edges, logits, floor);
    }
    std::set<double> xs, ys;
    for (const auto& r : rows) {
        xs.insert(r[0]);
        xs.insert(r[1]);
        ys.insert(r[2]);
        ys.insert(r[3]);
    }
    std::vector<double> ex(xs.begin(), xs.end()), ey(ys.begin(), ys.end());
    if (rows.size() != (ex.size() - 1) * (ey.size() - 1))
        throw std::invalid_argument("2-D histogram CSV is not a full tensor partition");
    std::vector<double> logits(rows.size());
    for (const auto& r : rows) {
        const auto i = static_cast<std::size_t>(std::lower_bound(ex.begin(), ex.end(), r[0]) - ex.begin());
        const auto j = static_cast<std::size_t>(std::lower_bound(ey.begin(), ey.end(), r[2]) - ey.begin());
        logits[i * (ey.size() - 1) + j] = to_logit(r[4] * (r[1] - r[0]) * (r[3] - r[2]));
    }
    return HistogramDensity(ex, ey, logits, floor);
}

}  // namespace ncopt

#endif  // NCOPT_DENSITIES_HPP
