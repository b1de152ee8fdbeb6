#include <gtest/gtest.h>

#include <cmath>

#include "ncopt/ncopt.hpp"

using namespace ncopt;

namespace {

// Logistic loss of the NCE discriminator, written out directly.
double nce_loss(const std::vector<Point>& x, const std::vector<Point>& y, ModelKind kind, const NoiseDensity& noise,
                double theta) {
    const double nu = static_cast<double>(y.size()) / static_cast<double>(x.size());
    auto r = [&](const Point& p) { return family::log_density(kind, theta, p) - std::log(nu * noise.eval(p)); };
    double loss = 0.0;
    for (const auto& p : x) loss += std::log1p(std::exp(-r(p)));
    for (const auto& p : y) loss += std::log1p(std::exp(r(p)));
    return loss;
}

}  // namespace

TEST(Simulate, DeriveSeedIsDeterministicAndSpreads) {
    EXPECT_EQ(derive_seed(1, 5), derive_seed(1, 5));
    EXPECT_NE(derive_seed(1, 5), derive_seed(1, 6));
    EXPECT_NE(derive_seed(1, 5), derive_seed(2, 5));
}

TEST(Simulate, GaussianKlMatchesQuadrature) {
    struct Case {
        ModelKind kind;
        double a, b;
    };
    for (const auto& c : {Case{ModelKind::GaussianMean, 0.3, -0.4}, Case{ModelKind::GaussianVariance, 1.0, 2.5},
                          Case{ModelKind::GaussianCorrelation, 0.5, 0.1}}) {
        const ScalarModel p(c.kind, c.a), q(c.kind, c.b);
        const double kl = integrate(default_grid(p), [&](const Point& x) {
            return p.density(x) * (p.log_density(x) - q.log_density(x));
        });
        EXPECT_NEAR(gaussian_kl(c.kind, c.a, c.b), kl, 1e-7) << to_string(c.kind);
    }
    EXPECT_EQ(gaussian_kl(ModelKind::GaussianVariance, 2.0, 2.0), 0.0);
}

TEST(Simulate, NceFitMinimizesLogisticLoss) {
    for (const auto& m : {ScalarModel(ModelKind::GaussianMean, 0.5), ScalarModel(ModelKind::GaussianVariance, 2.0),
                          ScalarModel(ModelKind::GaussianCorrelation, 0.4)}) {
        const NoiseDensity noise(m.kind() == ModelKind::GaussianVariance ? m.with_theta(4.0) : m);
        const auto x = m.sample(400, 1);
        const auto y = noise.sample(800, 2);
        const auto run = nce_fit(x, y, m.kind(), noise, m.theta());
        ASSERT_TRUE(run.converged) << to_string(m.kind());
        const double h = 1e-4;
        const double at = nce_loss(x, y, m.kind(), noise, run.theta_hat);
        EXPECT_LE(at, nce_loss(x, y, m.kind(), noise, run.theta_hat + h));
        EXPECT_LE(at, nce_loss(x, y, m.kind(), noise, run.theta_hat - h));
        EXPECT_NEAR(run.theta_hat, m.theta(), 0.5);
    }
}

TEST(Simulate, NceFitStartingFarAway) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const auto x = m.sample(500, 3);
    const auto y = m.sample(500, 4);
    const auto near = nce_fit(x, y, m.kind(), NoiseDensity(m), 1.0);
    const auto far = nce_fit(x, y, m.kind(), NoiseDensity(m), 20.0);
    ASSERT_TRUE(far.converged);
    EXPECT_NEAR(near.theta_hat, far.theta_hat, 1e-8);
}

TEST(Simulate, EmpiricalMseIsReproducibleAndThreadIndependent) {
    const ScalarModel m(ModelKind::GaussianMean, 0.0);
    SimulationOptions one, four;
    four.threads = 4;
    const auto a = empirical_mse(m, NoiseDensity(m), 1.0, 400, 50, 9, one);
    const auto b = empirical_mse(m, NoiseDensity(m), 1.0, 400, 50, 9, four);
    EXPECT_EQ(a.mean_sq_error, b.mean_sq_error);
    EXPECT_EQ(a.mean_kl, b.mean_kl);
    EXPECT_EQ(a.T_d, 200u);
    EXPECT_EQ(a.T_n, 200u);
    EXPECT_NEAR(a.asymptotic_prediction, 4.0 / 400.0, 1e-10);
    const auto c = empirical_mse(m, NoiseDensity(m), 1.0, 400, 50, 10, one);
    EXPECT_NE(a.mean_sq_error, c.mean_sq_error);
}

TEST(Simulate, EmpiricalMseAgreesWithAsymptoticsForSameFamilyNoise) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const auto r = empirical_mse(m, NoiseDensity(m.with_theta(3.0)), 1.0, 4000, 400, 21);
    EXPECT_EQ(r.failures, 0u);
    EXPECT_NEAR(r.mean_sq_error, r.asymptotic_prediction, 4.0 * r.std_error + 0.05 * r.asymptotic_prediction);
}

TEST(Simulate, RejectsBadArguments) {
    const ScalarModel m(ModelKind::GaussianMean, 0.0);
    EXPECT_THROW(empirical_mse(m, NoiseDensity(m), 1.0, 100, 1, 0), std::invalid_argument);
    EXPECT_THROW(empirical_mse(m, NoiseDensity(m), 0.0, 100, 10, 0), std::invalid_argument);
    EXPECT_THROW(empirical_mse(m, NoiseDensity(m), 1.0, 1, 10, 0), std::invalid_argument);
}
