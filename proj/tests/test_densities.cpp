#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ncopt/ncopt.hpp"

using namespace ncopt;

TEST(Densities, SoftmaxIsShiftInvariantAndStable) {
    const std::vector<double> z = {0.1, -2.0, 3.5, 0.0};
    std::vector<double> shifted = z;
    for (double& v : shifted) v += 1000.0;
    const auto a = softmax(z), b = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-15);
        sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Densities, HistogramNormalizesWithFloor) {
    const HistogramDensity h({-1.0, 0.0, 0.5, 2.0}, {0.0, 1.0, -30.0}, 1e-3);
    double total = 0.0;
    for (std::size_t k = 0; k < h.bin_count(); ++k) {
        total += h.masses()[k];
        EXPECT_GT(h.masses()[k], 0.0);
        EXPECT_NEAR(h.bin_densities()[k] * h.bin_area(k), h.masses()[k], 1e-15);
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_NEAR(integrate(build_grid(1, -1.0, 2.0, 3001), [&](const Point& p) { return h.eval(p); }), 1.0, 2e-3);
}

TEST(Densities, HistogramLocateBoundaries) {
    const auto h = uniform_histogram(1, -2.0, 2.0, 4);
    EXPECT_EQ(h.locate({-2.0, 0.0}), 0u);
    EXPECT_EQ(h.locate({-1.0, 0.0}), 1u);
    EXPECT_EQ(h.locate({2.0, 0.0}), 3u);
    EXPECT_EQ(h.locate({2.0001, 0.0}), HistogramDensity::npos);
    EXPECT_EQ(h.eval({-3.0, 0.0}), 0.0);
    EXPECT_DOUBLE_EQ(h.eval({0.3, 0.0}), 0.25);
}

TEST(Densities, HistogramLogitShiftLeavesDensityUnchanged) {
    const auto h = uniform_histogram(1, -3.0, 3.0, 6).with_logits({0.3, -1.0, 2.0, 0.0, 0.5, 1.0});
    std::vector<double> z = h.logits();
    for (double& v : z) v -= 7.0;
    const auto h2 = h.with_logits(z);
    for (std::size_t k = 0; k < h.bin_count(); ++k) EXPECT_NEAR(h.masses()[k], h2.masses()[k], 1e-15);
}

TEST(Densities, HistogramSamplingChiSquare) {
    const auto h = uniform_histogram(1, -2.0, 2.0, 8).with_logits({0.0, 1.0, -1.0, 0.5, 2.0, 0.0, -0.5, 1.5});
    const std::size_t n = 100000;
    std::vector<double> counts(h.bin_count(), 0.0);
    for (const auto& p : h.sample(n, 123)) {
        const auto k = h.locate(p);
        ASSERT_NE(k, HistogramDensity::npos);
        counts[k] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double e = n * h.masses()[k];
        chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    // 7 degrees of freedom; 99.9% quantile is 24.3.
    EXPECT_LT(chi2, 24.3);
}

TEST(Densities, TwoDimensionalHistogramRowMajor) {
    const auto h = uniform_histogram(2, -1.0, 1.0, 2).with_logits({0.0, std::log(3.0), 0.0, 0.0});
    EXPECT_EQ(h.bin_count(), 4u);
    EXPECT_NEAR(h.masses()[1], 0.5, 1e-7);
    EXPECT_EQ(h.locate({-0.5, 0.5}), 1u);
    EXPECT_EQ(h.locate({0.5, -0.5}), 2u);
    EXPECT_NEAR(h.eval({-0.5, 0.5}), 0.5, 1e-7);
}

TEST(Densities, TabulatedIsNormalizedAndInterpolates) {
    const Grid g = build_grid(1, -1.0, 1.0, 5);
    const TabulatedDensity t(g, {0.0, 1.0, 2.0, 1.0, 0.0});
    EXPECT_NEAR(integrate(g, [&](const Point& p) { return t.eval(p); }), 1.0, 1e-15);
    EXPECT_NEAR(t.eval({-0.25, 0.0}), 0.5 * (t.eval({-0.5, 0.0}) + t.eval({0.0, 0.0})), 1e-15);
    EXPECT_EQ(t.eval({1.5, 0.0}), 0.0);
    EXPECT_THROW(TabulatedDensity(g, {0.0, 0.0, 0.0, 0.0, 0.0}), NumericError);
    EXPECT_THROW(TabulatedDensity(g, {0.0, -1.0, 0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(Densities, TabulatedSamplingFollowsInterpolant) {
    // Triangle density on [-1, 1]: P(|x| < 0.5) = 0.75.
    const Grid g = build_grid(1, -1.0, 1.0, 3);
    const TabulatedDensity t(g, {0.0, 1.0, 0.0});
    const std::size_t n = 200000;
    std::size_t inner = 0;
    for (const auto& p : t.sample(n, 5)) inner += std::abs(p[0]) < 0.5;
    EXPECT_NEAR(static_cast<double>(inner) / n, 0.75, 5.0 * std::sqrt(0.75 * 0.25 / n));
}

TEST(Densities, TabulatedTwoDimensionalSampling) {
    const ScalarModel m(ModelKind::GaussianCorrelation, 0.5);
    const Grid g = build_grid(2, -6.0, 6.0, 121);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = m.density(g.nodes[i]);
    const TabulatedDensity t(g, std::move(v));
    const std::size_t n = 100000;
    double xy = 0.0;
    for (const auto& p : t.sample(n, 11)) xy += p[0] * p[1];
    EXPECT_NEAR(xy / n, 0.5, 0.02);
}

TEST(Densities, NoiseDensityDispatch) {
    const ScalarModel m(ModelKind::GaussianMean, 1.0);
    const NoiseDensity a(m);
    EXPECT_TRUE(a.is_parametric());
    EXPECT_DOUBLE_EQ(a.eval({1.0, 0.0}), m.density({1.0, 0.0}));
    const NoiseDensity b(uniform_histogram(1, 0.0, 2.0, 4));
    EXPECT_TRUE(b.is_histogram());
    EXPECT_DOUBLE_EQ(density_eval(b, {0.1, 0.0}), 0.5);
    EXPECT_EQ(noise_sample(b, 3, 1).size(), 3u);
}

TEST(Densities, HistogramCsvRoundTrip) {
    for (int dim : {1, 2}) {
        auto h = uniform_histogram(dim, -2.0, 2.0, 4);
        std::vector<double> z(h.bin_count());
        for (std::size_t k = 0; k < z.size(); ++k) z[k] = std::sin(1.0 + k);
        h = h.with_logits(z);
        std::stringstream ss;
        write_histogram_csv(ss, h);
        const auto back = read_histogram_csv(ss, h.floor());
        ASSERT_EQ(back.bin_count(), h.bin_count());
        for (std::size_t k = 0; k < h.bin_count(); ++k) EXPECT_NEAR(back.masses()[k], h.masses()[k], 1e-7);
    }
}
