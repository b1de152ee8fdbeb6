#include <gtest/gtest.h>

#include "ncopt/ncopt.hpp"

using namespace ncopt;

TEST(Config, ModelSpecRoundTrip) {
    for (const char* s : {"mean:0", "mean:-1.5", "variance:3", "correlation:0.05"}) {
        EXPECT_EQ(format_model_spec(parse_model_spec(s)), s);
    }
    EXPECT_EQ(parse_model_spec("variance:2").kind(), ModelKind::GaussianVariance);
}

TEST(Config, ModelSpecErrorsNameTheField) {
    for (const char* s : {"variance:-1", "correlation:1", "gamma:1", "mean", "mean:abc"}) {
        try {
            parse_model_spec(s);
            ADD_FAILURE() << s;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.field(), "model") << s;
        }
    }
}

TEST(Config, NoiseSpecRoundTrip) {
    for (const char* s : {"data", "same-family:3.84", "histogram:-6:6:64", "histogram:@bins.csv", "theory:mse:all-noise",
                          "theory:kl:all-data"}) {
        EXPECT_EQ(format_noise_spec(parse_noise_spec(s)), s);
    }
}

TEST(Config, NoiseSpecErrors) {
    for (const char* s : {"", "same-family:", "histogram:1:0:4", "histogram:0:1", "theory:mse", "theory:l2:all-noise",
                          "gaussian:1"}) {
        EXPECT_THROW(parse_noise_spec(s), ConfigError) << s;
    }
}

TEST(Config, BuildNoiseValidatesDomain) {
    const ScalarModel m(ModelKind::GaussianVariance, 1.0);
    const Grid g = default_grid(m);
    EXPECT_THROW(build_noise(parse_noise_spec("same-family:-2"), m, g), ConfigError);
    EXPECT_TRUE(build_noise(parse_noise_spec("theory:mse:all-noise"), m, g).is_tabulated());
    EXPECT_TRUE(build_noise(parse_noise_spec("histogram:-4:4:8"), m, g).is_histogram());
    EXPECT_THROW(build_noise(parse_noise_spec("histogram:@/nonexistent/bins.csv"), m, g), ConfigError);
}

TEST(Config, TextRoundTrip) {
    RunConfig c;
    c.model = "correlation:0.3";
    c.noise = "theory:kl:all-data";
    c.proportion = 0.25;
    c.T = 5000;
    c.grid_n = 151;
    c.grid_range = 7.5;
    c.seed = 77;
    c.threads = 2;
    c.objective = "kl";
    c.eps1 = 0.002;
    c.left_mass = 0.3;
    const std::string text = format_config(c);
    const RunConfig back = parse_config_text(text);
    EXPECT_EQ(back, c);
    EXPECT_EQ(format_config(back), text);
    EXPECT_NEAR(back.ratio(), 1.0 / 3.0, 1e-15);
}

TEST(Config, TextParsingSkipsCommentsAndBlankLines) {
    const auto c = parse_config_text("# budget\n\nT = 2000\nmodel=variance:2  \nnu=3\n");
    EXPECT_EQ(c.T, 2000.0);
    EXPECT_EQ(c.model, "variance:2");
    EXPECT_EQ(c.ratio(), 3.0);
}

TEST(Config, InvalidValuesNameTheField) {
    auto field_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    EXPECT_EQ(field_of("nu=-1"), "nu");
    EXPECT_EQ(field_of("proportion=1.5"), "proportion");
    EXPECT_EQ(field_of("T=0"), "T");
    EXPECT_EQ(field_of("grid-n=100"), "grid-n");
    EXPECT_EQ(field_of("objective=l1"), "objective");
    EXPECT_EQ(field_of("colour=red"), "colour");
    EXPECT_EQ(field_of("noise=histogram:3:2:1"), "noise");
    EXPECT_EQ(field_of("seed"), "line 1");
}
