#ifndef NCOPT_QUADRATURE_HPP
#define NCOPT_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "models.hpp"
#include "parallel.hpp"

namespace ncopt {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Composite trapezoid grid on [lo, hi]^dim, uniform spacing.
struct Grid {
    int dim = 1;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n_per_axis = 0;
    std::vector<Point> nodes;
    std::vector<double> weights;

    double step() const { return (hi - lo) / static_cast<double>(n_per_axis - 1); }
    std::size_t size() const { return nodes.size(); }
    double volume() const { return dim == 1 ? hi - lo : (hi - lo) * (hi - lo); }
};

namespace detail {

inline std::vector<double> trapezoid_axis(double lo, double hi, std::size_t n, std::vector<double>& w) {
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> x(n);
    w.assign(n, h);
    for (std::size_t i = 0; i < n; ++i) {
        // Symmetric node placement keeps x_i == -x_{n-1-i} on symmetric ranges.
        x[i] = i < n / 2 ? lo + h * static_cast<double>(i) : hi - h * static_cast<double>(n - 1 - i);
    }
    if (n % 2 == 1 && lo == -hi) x[n / 2] = 0.0;
    w.front() = w.back() = 0.5 * h;
    return x;
}

}  // namespace detail

inline Grid build_grid(int dim, double lo, double hi, std::size_t n_per_axis) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("grid bounds must satisfy lo < hi");
    if (n_per_axis < 3 || n_per_axis % 2 == 0)
        throw std::invalid_argument("grid size per axis must be odd and >= 3");

    Grid grid;
    grid.dim = dim;
    grid.lo = lo;
    grid.hi = hi;
    grid.n_per_axis = n_per_axis;
    std::vector<double> w;
    const auto x = detail::trapezoid_axis(lo, hi, n_per_axis, w);
    if (dim == 1) {
        grid.nodes.reserve(n_per_axis);
        for (double xi : x) grid.nodes.push_back({xi, 0.0});
        grid.weights = w;
    } else {
        grid.nodes.reserve(n_per_axis * n_per_axis);
        grid.weights.reserve(n_per_axis * n_per_axis);
        for (std::size_t i = 0; i < n_per_axis; ++i) {
            for (std::size_t j = 0; j < n_per_axis; ++j) {
                grid.nodes.push_back({x[i], x[j]});
                grid.weights.push_back(w[i] * w[j]);
            }
        }
    }
    return grid;
}

/// Default grid for a data model: center +- 8 scale in 1-D (2001 nodes),
/// +-8 per axis in 2-D (201 per axis).
inline Grid default_grid(const ScalarModel& model, std::size_t n_per_axis = 0, double half_width = 8.0) {
    if (model.dim() == 2) {
        return build_grid(2, -half_width, half_width, n_per_axis ? n_per_axis : 201);
    }
    const double c = model.center();
    const double s = model.scale();
    return build_grid(1, c - half_width * s, c + half_width * s, n_per_axis ? n_per_axis : 2001);
}

/// Fixed-size chunks summed with compensation and combined in index order, so
/// the result does not depend on the number of worker threads.
inline constexpr std::size_t kChunk = 4096;

template <class Values>
double ordered_sum(std::size_t n, Values&& value_at, unsigned threads = 1) {
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(chunks, 0.0);
    parallel_for(chunks, threads, [&](std::size_t c) {
        CompensatedSum acc;
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) acc.add(value_at(i));
        partial[c] = acc.value();
    });
    CompensatedSum total;
    for (double p : partial) total.add(p);
    return total.value();
}

/// Sum of weight_k * f(node_k). Throws NumericError naming the first
/// non-finite node.
template <class F>
double integrate(const Grid& grid, F&& f, unsigned threads = 1) {
    std::vector<double> values(grid.size());
    parallel_for((grid.size() + kChunk - 1) / kChunk, threads, [&](std::size_t c) {
        const std::size_t end = std::min(grid.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) values[i] = f(grid.nodes[i]);
    });
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            std::ostringstream msg;
            msg << "non-finite integrand at node " << i << " (" << grid.nodes[i][0];
            if (grid.dim == 2) msg << ", " << grid.nodes[i][1];
            msg << ")";
            throw NumericError(msg.str());
        }
    }
    return ordered_sum(values.size(), [&](std::size_t i) { return grid.weights[i] * values[i]; }, threads);
}

}  // namespace ncopt

#endif  // NCOPT_QUADRATURE_HPP
