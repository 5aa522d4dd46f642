#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dreg/datagen.hpp"
#include "dreg/simharness.hpp"

using namespace dreg;

TEST_CASE("transforms at z = 0") {
    Scenario ks = Scenario::ks();
    auto x = ks.transform({0, 0, 0, 0});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(10.0));
    CHECK(x[2] == doctest::Approx(0.216));
    CHECK(x[3] == doctest::Approx(400.0));
    CHECK(ks.propensity({0, 0, 0, 0}) == doctest::Approx(0.5));
    CHECK(ks.mean_outcome({0, 0, 0, 0}) == doctest::Approx(210.0));
}

TEST_CASE("true_mu1 is the intercept") {
    CHECK(Scenario::ks().true_mu1() == 210.0);
    CHECK(Scenario::alt().true_mu1() == 210.0);
    Scenario flat = Scenario::ks();
    flat.outcome_slopes = {0, 0, 0, 0};
    flat.intercept = 3.5;
    CHECK(flat.true_mu1() == 3.5);
}

TEST_CASE("generation is bit-reproducible") {
    Dataset a = Dataset::generate(Scenario::ks(), 500, RngStream(11, 3));
    Dataset b = Dataset::generate(Scenario::ks(), 500, RngStream(11, 3));
    for (int i = 0; i < 500; ++i) {
        CHECK(a.t(i) == b.t(i));
        CHECK(a.oracle_outcome(i) == b.oracle_outcome(i));
        for (int j = 0; j < 4; ++j) CHECK(a.x(i, j) == b.x(i, j));
    }
}

TEST_CASE("ks and alt share all randomness; only x4 differs") {
    Dataset ks = Dataset::generate(Scenario::ks(), 2000, RngStream(5, 0));
    Dataset alt = Dataset::generate(Scenario::alt(), 2000, RngStream(5, 0));
    for (int i = 0; i < 2000; ++i) {
        CHECK(ks.t(i) == alt.t(i));
        CHECK(ks.oracle_outcome(i) == alt.oracle_outcome(i));
        for (int j = 0; j < 3; ++j) CHECK(ks.x(i, j) == alt.x(i, j));
        for (int j = 0; j < 4; ++j) CHECK(ks.z(i, j) == alt.z(i, j));
    }
}

TEST_CASE("large-sample moments of the generated law") {
    const int n = 1000000;
    Dataset d = Dataset::generate(Scenario::ks(), n, RngStream(123, 0));
    double ysum = 0, ysq = 0;
    long tsum = 0;
    for (int i = 0; i < n; ++i) {
        const double y = d.oracle_outcome(i);
        ysum += y;
        ysq += y * y;
        tsum += d.t(i);
    }
    const double ymean = ysum / n;
    const double yvar = ysq / n - ymean * ymean;
    CHECK(std::abs(ymean - 210.0) < 0.1);
    // analytic: 27.4^2 + 3 * 13.7^2 + 1
    const double var_expected = 27.4 * 27.4 + 3 * 13.7 * 13.7 + 1.0;
    CHECK(std::abs(yvar - var_expected) < 0.01 * var_expected);
    // the propensity linear predictor is symmetric about zero, so
    // E[T] = 1/2 exactly
    CHECK(std::abs(tsum / static_cast<double>(n) - 0.5) < 0.002);
}

TEST_CASE("positivity of constructed covariates") {
    Dataset d = Dataset::generate(Scenario::alt(), 20000, RngStream(9, 1));
    for (int i = 0; i < d.n(); ++i) {
        CHECK(d.x(i, 0) > 0);
        CHECK(d.x(i, 1) > 0);
        CHECK(d.x(i, 3) > 0);
    }
}

TEST_CASE("masked view refuses untreated outcomes") {
    Dataset d = Dataset::generate(Scenario::ks(), 200, RngStream(1, 0));
    int seen_control = 0;
    for (int i = 0; i < d.n(); ++i) {
        if (d.t(i) == 1) {
            CHECK(d.outcome(i) == d.oracle_outcome(i));
        } else {
            ++seen_control;
            CHECK_THROWS_AS(d.outcome(i), std::logic_error);
        }
    }
    CHECK(seen_control > 0);
}

TEST_CASE("design matrix layout") {
    Dataset d = DatasetBuilder{}.row(1, 5.0, {1.0, 10.0, 0.216, 400.0}).build();
    Matrix c = d.design_matrix(DesignSpec::correct);
    CHECK(c.rows() == 1);
    CHECK(c.cols() == 5);
    CHECK(c(0, 0) == 1.0);
    for (int j = 1; j < 5; ++j) CHECK(c(0, j) == 0.0);
    Matrix m = d.design_matrix(DesignSpec::misspecified);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(0, 2) == 10.0);
    CHECK(m(0, 3) == doctest::Approx(0.216));
    CHECK(m(0, 4) == 400.0);

    Dataset big = Dataset::generate(Scenario::ks(), 37, RngStream(0, 0));
    CHECK(big.design_matrix(DesignSpec::misspecified).rows() == 37);
}

TEST_CASE("csv round trip preserves values bit-exactly") {
    Dataset d = Dataset::generate(Scenario::ks(), 300, RngStream(77, 0));
    for (bool with_latent : {false, true}) {
        std::stringstream ss;
        d.write_csv(ss, with_latent);
        Dataset back = Dataset::read_csv(ss);
        CHECK(back.n() == d.n());
        CHECK(back.has_latent() == with_latent);
        for (int i = 0; i < d.n(); ++i) {
            CHECK(back.t(i) == d.t(i));
            for (int j = 0; j < 4; ++j) CHECK(back.x(i, j) == d.x(i, j));
            if (d.t(i) == 1) CHECK(back.outcome(i) == d.outcome(i));
        }
    }
}

TEST_CASE("misspecification diagnostic medians match their frozen values") {
    // medians over 200 replications of the alt design at n = 1000,
    // frozen from an independent evaluation at this seed; the bands are
    // wide enough to absorb reseeding but not a changed definition
    MisspecDiagnostics m =
        median_misspec_diagnostics(Scenario::alt(), 1000, 200, 2024);
    CHECK(std::abs(m.r_squared - 0.9354) < 0.005);
    CHECK(std::abs(m.fitted_y_correlation - 0.9674) < 0.005);
    CHECK(std::abs(m.ps_linpred_correlation - 0.9312) < 0.005);
    CHECK(std::abs(m.diff_q1 - 2.58) < 0.15);
    CHECK(std::abs(m.diff_q2 - 4.60) < 0.2);
    CHECK(std::abs(m.diff_q3 - 7.52) < 0.3);
}
