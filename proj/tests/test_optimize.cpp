#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncopt/ncopt.hpp"

using namespace ncopt;

namespace {

std::vector<double> random_logits(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 0.7);
    std::vector<double> v(n);
    for (double& x : v) x = z(rng);
    return v;
}

}  // namespace

TEST(Optimize, GoldenSection) {
    const auto [x, fx] = golden_section_minimize([](double t) { return (t - 0.3) * (t - 0.3) + 2.0; }, -1.0, 2.0, 1e-9);
    EXPECT_NEAR(x, 0.3, 1e-7);
    EXPECT_NEAR(fx, 2.0, 1e-15);
}

TEST(Optimize, ParametricSweepMeanModelHasTwoSymmetricMinima) {
    const ScalarModel m(ModelKind::GaussianMean, 0.0);
    const auto r = sweep_parametric_noise(m, 1.0, 1000.0, default_noise_axis(m), Objective::MSE, default_grid(m));
    ASSERT_EQ(r.local_minima.size(), 2u);
    EXPECT_NEAR(r.local_minima[0].at, -r.local_minima[1].at, 1e-5);
    EXPECT_NEAR(r.local_minima[0].value / r.local_minima[1].value, 1.0, 1e-8);
    EXPECT_TRUE(r.failures.empty());
    // The sweep includes p_n = p_d, whose value is known.
    EXPECT_LT(r.min_value, 4.0 / 1000.0);
}

TEST(Optimize, ParametricSweepIsThreadIndependent) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const auto axis = linspace(0.5, 8.0, 31);
    const auto a = sweep_parametric_noise(m, 1.0, 1.0, axis, Objective::MSE, default_grid(m), 1);
    const auto b = sweep_parametric_noise(m, 1.0, 1.0, axis, Objective::MSE, default_grid(m), 3);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.argmin, b.argmin);
}

TEST(Optimize, ProportionSweepMatchesClosedFormAndPeaksAtHalf) {
    for (const auto& m : {ScalarModel(ModelKind::GaussianMean, 0.0), ScalarModel(ModelKind::GaussianVariance, 2.0)}) {
        const auto r = optimize_proportion(m, NoiseDensity(m), 100.0, Objective::MSE, default_grid(m));
        EXPECT_NEAR(r.argmin, 0.5, 1e-4);
        for (std::size_t i = 0; i < r.axis.size(); i += 7) {
            const double nu = proportion_to_nu(r.axis[i]);
            const double closed = (nu + 1) * (nu + 1) / (nu * 100.0 * m.fisher_information());
            EXPECT_NEAR(r.values[i] / closed, 1.0, 1e-6);
        }
    }
    EXPECT_DOUBLE_EQ(nu_to_proportion(proportion_to_nu(0.3)), 0.3);
}

TEST(Optimize, HistogramGradientMatchesFiniteDifferences) {
    const std::vector<ScalarModel> models = {ScalarModel(ModelKind::GaussianMean, 0.0),
                                             ScalarModel(ModelKind::GaussianVariance, 1.0),
                                             ScalarModel(ModelKind::GaussianCorrelation, 0.3)};
    for (const auto& m : models) {
        const auto shape = m.dim() == 1 ? uniform_histogram(1, -5.0, 5.0, 20) : uniform_histogram(2, -4.0, 4.0, 6);
        const Grid g = default_grid(m);
        for (std::uint64_t s = 0; s < 2; ++s) {
            const auto z = random_logits(shape.bin_count(), 100 + s);
            const auto hist = shape.with_logits(z);
            const auto grad = mse_gradient_logits(m, hist, 2.0, 1.0, g);
            HistogramObjective f(m, shape, 2.0, 1.0, Objective::MSE, g.step());
            double sum = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) {
                auto zp = z, zm = z;
                zp[k] += 1e-6;
                zm[k] -= 1e-6;
                const double fd = (f.value(zp) - f.value(zm)) / 2e-6;
                EXPECT_NEAR(grad[k], fd, 1e-4 * std::abs(fd) + 1e-9) << to_string(m.kind()) << " bin " << k;
                sum += grad[k];
            }
            EXPECT_NEAR(sum, 0.0, 1e-10);
        }
    }
}

TEST(Optimize, HistogramObjectiveAgreesWithGenericQuadrature) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const auto hist = uniform_histogram(1, -6.0, 6.0, 24).with_logits(random_logits(24, 3));
    HistogramObjective f(m, hist, 1.0, 1.0, Objective::MSE, default_grid(m).step());
    const auto mp = generalized_moments(m, NoiseDensity(hist), 1.0, build_grid(1, -6.0, 6.0, 24001));
    EXPECT_NEAR(f.value(hist.logits()) / asymptotic_mse(1.0, mp), 1.0, 1e-5);
}

TEST(Optimize, ConjugateGradientOnRosenbrock) {
    ValueAndGradient rosen = [](const std::vector<double>& x, std::vector<double>& g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g = {-2 * a - 400 * x[0] * b, 200 * b};
        return a * a + 100 * b * b;
    };
    std::vector<double> x = {-1.2, 1.0};
    CgOptions opt;
    opt.max_iter = 2000;
    opt.gtol = 1e-8;
    const auto t = minimize_cg(rosen, x, opt);
    EXPECT_TRUE(t.converged);
    EXPECT_NEAR(x[0], 1.0, 1e-6);
    EXPECT_NEAR(x[1], 1.0, 1e-6);
    for (std::size_t i = 1; i < t.objective_history.size(); ++i)
        EXPECT_LE(t.objective_history[i], t.objective_history[i - 1]);
}

TEST(Optimize, HistogramOptimizationImprovesAndIsMonotone) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const auto init = uniform_histogram(1, -6.0, 6.0, 32);
    CgOptions opt;
    opt.max_iter = 60;
    const auto fit = optimize_histogram(m, 1.0, 1.0, init, Objective::MSE, default_grid(m), opt);
    const auto& h = fit.trace.objective_history;
    ASSERT_GE(h.size(), 2u);
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
    HistogramObjective f(m, init, 1.0, 1.0, Objective::MSE, default_grid(m).step());
    EXPECT_LE(f.value(fit.histogram.logits()), f.value(init.logits()));
    EXPECT_LE(fit.trace.iterations, 60u);
}

TEST(Optimize, ZeroIterationsReturnsInitialization) {
    const ScalarModel m(ModelKind::GaussianMean, 0.0);
    const auto init = uniform_histogram(1, -4.0, 4.0, 16);
    CgOptions opt;
    opt.max_iter = 0;
    const auto fit = optimize_histogram(m, 1.0, 1.0, init, Objective::MSE, default_grid(m), opt);
    EXPECT_EQ(fit.histogram.logits(), init.logits());
    EXPECT_EQ(fit.trace.iterations, 0u);
}

TEST(Optimize, ConvergedOptimumDominatesBinnedTheory) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const auto init = uniform_histogram(1, -6.0, 6.0, 32);
    const Grid g = default_grid(m);
    CgOptions opt;
    opt.max_iter = 1000;
    const auto fit = optimize_histogram(m, 100.0, 1.0, init, Objective::MSE, g, opt);
    const auto th = optimal_noise_all_noise(m, Objective::MSE, g);
    auto masses = bin_masses([&](double x) { return th.density.eval({x, 0.0}); }, init.x_edges());
    std::vector<double> z(masses.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = std::log(masses[k]);
    HistogramObjective f(m, init, 100.0, 1.0, Objective::MSE, g.step());
    EXPECT_LE(f.value(fit.histogram.logits()), f.value(z) + 1e-6);
}
