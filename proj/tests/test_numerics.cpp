#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dreg/linalg.hpp"
#include "dreg/rng.hpp"

using namespace dreg;

TEST_CASE("rng determinism: same (seed, stream) replays the sequence") {
    RngStream a(0, 0), b(0, 0);
    for (int i = 0; i < 100; ++i) CHECK(a.next_normal() == b.next_normal());
    RngStream c(0, 1);
    bool all_equal = true;
    RngStream a2(0, 0);
    for (int i = 0; i < 100; ++i)
        if (a2.next_normal() != c.next_normal()) all_equal = false;
    CHECK_FALSE(all_equal);
}

TEST_CASE("rng normal moments over 1e6 draws") {
    RngStream r(42, 0);
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    int below_zero = 0;
    for (int i = 0; i < n; ++i) {
        const double v = r.next_normal();
        sum += v;
        sumsq += v * v;
        if (v < 0) ++below_zero;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.005);
    CHECK(std::abs(var - 1.0) < 0.01);
    CHECK(std::abs(below_zero / static_cast<double>(n) - 0.5) < 0.002);
}

TEST_CASE("rng streams: lag correlation between adjacent streams") {
    const int n = 1000000;
    RngStream a(7, 0), b(7, 1);
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.next_uniform(), y = b.next_uniform();
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    const double ma = sa / n, mb = sb / n;
    const double cov = sab / n - ma * mb;
    const double r = cov / std::sqrt((saa / n - ma * ma) * (sbb / n - mb * mb));
    CHECK(std::abs(r) < 0.01);
}

TEST_CASE("solve_spd basics") {
    Matrix id = Matrix::identity(3);
    SolveResult r = solve_spd(id, {1, 2, 3});
    CHECK(r.x[0] == doctest::Approx(1).epsilon(1e-12));
    CHECK(r.x[1] == doctest::Approx(2).epsilon(1e-12));
    CHECK(r.x[2] == doctest::Approx(3).epsilon(1e-12));
    CHECK_FALSE(r.fallback_used);

    Matrix d(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 4;
    r = solve_spd(d, {2, 8});
    CHECK(r.x[0] == doctest::Approx(1).epsilon(1e-12));
    CHECK(r.x[1] == doctest::Approx(2).epsilon(1e-12));
}

TEST_CASE("solve_spd singular fallback: rank-1 system, min-norm solution") {
    Matrix a(2, 2, 1.0);
    Vector b{1, 1};
    SolveResult r = solve_spd(a, b);
    CHECK(r.fallback_used);
    Vector res = matvec(a, r.x);
    double nrm = std::hypot(res[0] - b[0], res[1] - b[1]);
    CHECK(nrm <= 1e-8 * (std::hypot(b[0], b[1]) + 1.0));
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("solve_spd error paths") {
    Matrix a(2, 3);
    CHECK_THROWS_AS(solve_spd(a, {1, 2}), DimensionMismatch);
    Matrix nf = Matrix::identity(2);
    nf(0, 1) = std::nan("");
    nf(1, 0) = std::nan("");
    CHECK_THROWS_AS(solve_spd(nf, {1, 2}), NonFiniteInput);
}

TEST_CASE("solve_spd recovers x on random SPD systems up to dim 12") {
    RngStream rng(99, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_uniform() * 12);
        // A = B B^T + small diagonal keeps the condition number moderate
        Matrix bmat(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) bmat(i, j) = rng.next_normal();
        Matrix a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = i == j ? 0.1 : 0.0;
                for (int k = 0; k < d; ++k) s += bmat(i, k) * bmat(j, k);
                a(i, j) = s;
            }
        Vector x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.next_normal();
        Vector b = matvec(a, x);
        SolveResult r = solve_spd(a, b);
        double err = 0, nrm = 0;
        for (int i = 0; i < d; ++i) {
            err += (r.x[i] - x[i]) * (r.x[i] - x[i]);
            nrm += x[i] * x[i];
        }
        CHECK(std::sqrt(err) <= 1e-7 * (std::sqrt(nrm) + 1.0));
    }
}

TEST_CASE("solve_general matches direct inversion and handles singularity") {
    Matrix a(2, 2);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 0) = 3;
    a(1, 1) = 4;
    SolveResult r = solve_general(a, {5, 6});
    // inverse of [[1,2],[3,4]] is [[-2,1],[1.5,-0.5]]
    CHECK(r.x[0] == doctest::Approx(-4).epsilon(1e-12));
    CHECK(r.x[1] == doctest::Approx(4.5).epsilon(1e-12));

    Matrix s(2, 2, 1.0);
    r = solve_general(s, {1, 1});
    CHECK(r.fallback_used);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("sample_average") {
    CHECK(sample_average({{1, 0}, {3, 2}}) == Vector{2, 1});
    CHECK(sample_average({{4, 7}}) == Vector{4, 7});
    CHECK(sample_average({{1}, {-1}}) == Vector{0});
    CHECK_THROWS_AS(sample_average({}), EmptyInput);
    CHECK_THROWS_AS(sample_average({{1}, {1, 2}}), DimensionMismatch);
}
