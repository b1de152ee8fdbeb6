#ifndef NCOPT_MODELS_HPP
#define NCOPT_MODELS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ncopt {

/// A point in R^1 or R^2. One-dimensional models ignore the second coordinate.
using Point = std::array<double, 2>;

enum class ModelKind { GaussianMean, GaussianVariance, GaussianCorrelation };

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::GaussianMean: return "mean";
    case ModelKind::GaussianVariance: return "variance";
    case ModelKind::GaussianCorrelation: return "correlation";
    }
    return "unknown";
}

inline int model_dim(ModelKind kind) { return kind == ModelKind::GaussianCorrelation ? 2 : 1; }

inline bool in_domain(ModelKind kind, double theta) {
    if (!std::isfinite(theta)) return false;
    switch (kind) {
    case ModelKind::GaussianMean: return true;
    case ModelKind::GaussianVariance: return theta > 0.0;
    case ModelKind::GaussianCorrelation: return std::abs(theta) < 1.0;
    }
    return false;
}

// Closed forms as functions of (theta, x). ScalarModel binds theta; the NCE fit
// needs them at arbitrary theta.
namespace family {

inline constexpr double kLog2Pi = 1.8378770664093454836;

inline double log_density(ModelKind kind, double theta, const Point& p) {
    const double x = p[0];
    switch (kind) {
    case ModelKind::GaussianMean: {
        const double d = x - theta;
        return -0.5 * kLog2Pi - 0.5 * d * d;
    }
    case ModelKind::GaussianVariance:
        return -0.5 * (kLog2Pi + std::log(theta)) - 0.5 * x * x / theta;
    case ModelKind::GaussianCorrelation: {
        const double y = p[1];
        const double s = 1.0 - theta * theta;
        const double q = x * x - 2.0 * theta * x * y + y * y;
        return -kLog2Pi - 0.5 * std::log(s) - 0.5 * q / s;
    }
    }
    return 0.0;
}

/// d/dtheta log p_theta(x).
inline double score(ModelKind kind, double theta, const Point& p) {
    const double x = p[0];
    switch (kind) {
    case ModelKind::GaussianMean: return x - theta;
    case ModelKind::GaussianVariance: return (x * x - theta) / (2.0 * theta * theta);
    case ModelKind::GaussianCorrelation: {
        const double y = p[1];
        const double s = 1.0 - theta * theta;
        const double q = x * x - 2.0 * theta * x * y + y * y;
        return (theta + x * y) / s - q * theta / (s * s);
    }
    }
    return 0.0;
}

/// d^2/dtheta^2 log p_theta(x).
inline double score_derivative(ModelKind kind, double theta, const Point& p) {
    const double x = p[0];
    switch (kind) {
    case ModelKind::GaussianMean: return -1.0;
    case ModelKind::GaussianVariance: return 0.5 / (theta * theta) - x * x / (theta * theta * theta);
    case ModelKind::GaussianCorrelation: {
        const double y = p[1];
        const double s = 1.0 - theta * theta;
        const double q = x * x - 2.0 * theta * x * y + y * y;
        const double s2 = s * s;
        return 1.0 / s + 2.0 * theta * theta / s2 + 4.0 * theta * x * y / s2 - q / s2 -
               4.0 * theta * theta * q / (s2 * s);
    }
    }
    return 0.0;
}

inline double fisher_information(ModelKind kind, double theta) {
    switch (kind) {
    case ModelKind::GaussianMean: return 1.0;
    case ModelKind::GaussianVariance: return 0.5 / (theta * theta);
    case ModelKind::GaussianCorrelation: {
        const double s = 1.0 - theta * theta;
        return (1.0 + theta * theta) / (s * s);
    }
    }
    return 0.0;
}

}  // namespace family

/// One-parameter Gaussian family evaluated at a fixed parameter value.
/// The parameter is validated once at construction.
class ScalarModel {
public:
    ScalarModel(ModelKind kind, double theta) : kind_(kind), theta_(theta) {
        if (!in_domain(kind, theta)) {
            throw DomainError(std::string(to_string(kind)) + " parameter out of domain: " +
                              std::to_string(theta));
        }
    }

    ModelKind kind() const { return kind_; }
    double theta() const { return theta_; }
    int dim() const { return model_dim(kind_); }

    double log_density(const Point& p) const { return family::log_density(kind_, theta_, p); }
    double density(const Point& p) const { return std::exp(log_density(p)); }
    double score(const Point& p) const { return family::score(kind_, theta_, p); }
    double fisher_information() const { return family::fisher_information(kind_, theta_); }

    /// Mean and per-axis standard deviation, used to size default grids.
    double center() const { return kind_ == ModelKind::GaussianMean ? theta_ : 0.0; }
    double scale() const { return kind_ == ModelKind::GaussianVariance ? std::sqrt(theta_) : 1.0; }

    ScalarModel with_theta(double theta) const { return ScalarModel(kind_, theta); }

    /// Exact i.i.d. draws. Deterministic for a fixed seed.
    std::vector<Point> sample(std::size_t n, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Point> out(n);
        switch (kind_) {
        case ModelKind::GaussianMean:
            for (auto& p : out) p = {theta_ + normal(rng), 0.0};
            break;
        case ModelKind::GaussianVariance: {
            const double sd = std::sqrt(theta_);
            for (auto& p : out) p = {sd * normal(rng), 0.0};
            break;
        }
        case ModelKind::GaussianCorrelation: {
            // Cholesky factor of [[1, rho], [rho, 1]].
            const double c = std::sqrt(1.0 - theta_ * theta_);
            for (auto& p : out) {
                const double z1 = normal(rng);
                const double z2 = normal(rng);
                p = {z1, theta_ * z1 + c * z2};
            }
            break;
        }
        }
        return out;
    }

    friend bool operator==(const ScalarModel&, const ScalarModel&) = default;

private:
    ModelKind kind_;
    double theta_;
};

}  // namespace ncopt

#endif  // NCOPT_MODELS_HPP
