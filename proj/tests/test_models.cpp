#include <gtest/gtest.h>

#include <cmath>

#include "ncopt/ncopt.hpp"

using namespace ncopt;

namespace {

const std::vector<ScalarModel>& models() {
    static const std::vector<ScalarModel> m = {
        {ModelKind::GaussianMean, 0.0},        {ModelKind::GaussianMean, 2.0},
        {ModelKind::GaussianVariance, 1.0},    {ModelKind::GaussianVariance, 3.0},
        {ModelKind::GaussianCorrelation, 0.0}, {ModelKind::GaussianCorrelation, 0.5},
    };
    return m;
}

std::vector<Point> probe_points(int dim) {
    if (dim == 1) return {{-2.3, 0.0}, {-0.4, 0.0}, {0.0, 0.0}, {0.7, 0.0}, {3.1, 0.0}};
    return {{-1.2, 0.8}, {0.0, 0.0}, {0.5, 0.5}, {2.0, -1.0}, {-0.3, -1.7}};
}

}  // namespace

TEST(Models, ScoreMatchesFiniteDifferenceOfLogDensity) {
    for (const auto& m : models()) {
        const double h = 1e-5;
        for (const auto& p : probe_points(m.dim())) {
            const double fd = (family::log_density(m.kind(), m.theta() + h, p) -
                               family::log_density(m.kind(), m.theta() - h, p)) / (2 * h);
            EXPECT_NEAR(m.score(p), fd, 1e-7 * std::max(1.0, std::abs(fd))) << to_string(m.kind());
        }
    }
}

TEST(Models, ScoreDerivativeMatchesFiniteDifference) {
    for (const auto& m : models()) {
        const double h = 1e-5;
        for (const auto& p : probe_points(m.dim())) {
            const double fd =
                (family::score(m.kind(), m.theta() + h, p) - family::score(m.kind(), m.theta() - h, p)) / (2 * h);
            EXPECT_NEAR(family::score_derivative(m.kind(), m.theta(), p), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Models, QuadratureIdentities) {
    // Unit mass, zero-mean score, and E[g^2] = -E[g'] = I_F.
    for (const auto& m : models()) {
        const Grid g = default_grid(m);
        const double mass = integrate(g, [&](const Point& p) { return m.density(p); });
        const double mean = integrate(g, [&](const Point& p) { return m.score(p) * m.density(p); });
        const double second = integrate(g, [&](const Point& p) { return m.score(p) * m.score(p) * m.density(p); });
        const double curv = integrate(g, [&](const Point& p) {
            return -family::score_derivative(m.kind(), m.theta(), p) * m.density(p);
        });
        const double fi = m.fisher_information();
        EXPECT_NEAR(mass, 1.0, 1e-8);
        EXPECT_NEAR(mean, 0.0, 1e-8 * std::sqrt(fi));
        EXPECT_NEAR(second / fi, 1.0, 1e-7);
        EXPECT_NEAR(curv / fi, 1.0, 1e-7);
    }
}

TEST(Models, FisherInformationClosedForms) {
    EXPECT_DOUBLE_EQ(ScalarModel(ModelKind::GaussianMean, 5.0).fisher_information(), 1.0);
    EXPECT_DOUBLE_EQ(ScalarModel(ModelKind::GaussianVariance, 2.0).fisher_information(), 0.125);
    EXPECT_DOUBLE_EQ(ScalarModel(ModelKind::GaussianCorrelation, 0.0).fisher_information(), 1.0);
    EXPECT_NEAR(ScalarModel(ModelKind::GaussianCorrelation, 0.5).fisher_information(), 1.25 / 0.5625, 1e-15);
}

TEST(Models, DomainIsValidatedAtConstruction) {
    EXPECT_THROW(ScalarModel(ModelKind::GaussianVariance, 0.0), DomainError);
    EXPECT_THROW(ScalarModel(ModelKind::GaussianVariance, -1.0), DomainError);
    EXPECT_THROW(ScalarModel(ModelKind::GaussianCorrelation, 1.0), DomainError);
    EXPECT_THROW(ScalarModel(ModelKind::GaussianMean, std::nan("")), DomainError);
    EXPECT_NO_THROW(ScalarModel(ModelKind::GaussianCorrelation, -0.999));
}

TEST(Models, SamplingIsDeterministicAndMatchesMoments) {
    const ScalarModel v(ModelKind::GaussianVariance, 3.0);
    EXPECT_EQ(v.sample(10, 42), v.sample(10, 42));
    EXPECT_NE(v.sample(10, 42), v.sample(10, 43));

    const std::size_t n = 200000;
    const auto xs = v.sample(n, 7);
    double s2 = 0.0;
    for (const auto& p : xs) s2 += p[0] * p[0];
    // Var of the sample second moment is 2 theta^2 / n.
    EXPECT_NEAR(s2 / n, 3.0, 5.0 * std::sqrt(2.0 * 9.0 / n));

    const ScalarModel c(ModelKind::GaussianCorrelation, 0.5);
    double xy = 0.0, yy = 0.0;
    for (const auto& p : c.sample(n, 9)) {
        xy += p[0] * p[1];
        yy += p[1] * p[1];
    }
    EXPECT_NEAR(xy / n, 0.5, 5.0 * std::sqrt(1.25 / n));
    EXPECT_NEAR(yy / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}
