#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hheat/field.hpp"
#include "oracles.hpp"

using namespace hheat;

TEST_CASE("grid nodes are centred on the origin") {
    GridSpec s(1, 2, 2, 4, 8, 8, 16);
    CHECK(s.xnode(4) == 0.0);
    CHECK(s.xnode(0) == -2.0);
    CHECK(s.taunode(15) == doctest::Approx(3.5));
    CHECK(s.cell_volume() == doctest::Approx(0.5 * 0.5 * 0.5));
    CHECK(s.size() == 8u * 8u * 16u);
    GridSpec r = s.refined();
    CHECK(r.Nx == 16);
    CHECK(r.Ltau == 4.0);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridSpec(1, 2, 2, 4, 7, 8, 16).validate(), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec(1, 2, 2, 4, 8, 8, 4).validate(), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec(1, -2, 2, 4, 8, 8, 16).validate(), std::invalid_argument);
    CHECK_NOTHROW(GridSpec(2, 2, 2, 4, 8, 8, 16).validate());
}

TEST_CASE("column indexing round trips") {
    GridSpec s(2, 2, 2, 4, 8, 10, 16);
    int ix[2], iy[2];
    for (std::size_t c = 0; c < s.columns(); c += 37) {
        s.column_indices(c, ix, iy);
        CHECK(s.column_of(ix, iy) == c);
    }
    HPoint p = s.node(s.column_of(std::array<int, 2>{4, 5}.data(), std::array<int, 2>{5, 6}.data()) * 16 + 9);
    CHECK(p.x[0] == 0.0);
    CHECK(p.x[1] == doctest::Approx(0.5));
    CHECK(p.y[1] == doctest::Approx(0.4));
    CHECK(p.tau == doctest::Approx(0.5));
}

TEST_CASE("integration and norms of a Gaussian") {
    GridSpec s(1, 8, 8, 8, 64, 64, 64);
    auto f = sample_function(s, [](const HPoint& p) { return std::exp(-horizontal_sq(p) - p.tau * p.tau); });
    const double ex = std::pow(M_PI, 1.5);
    CHECK(integrate_field(f) == doctest::Approx(ex).epsilon(1e-10));
    CHECK(lp_norm(f, 1) == doctest::Approx(ex).epsilon(1e-10));
    CHECK(lp_norm(f, INFINITY) == 1.0);
    // ||f||_2^2 = (pi/2)^{3/2}
    CHECK(lp_norm_pow(f, 2) == doctest::Approx(std::pow(M_PI / 2, 1.5)).epsilon(1e-10));
    CHECK_THROWS_AS(lp_norm(f, 0.5), std::invalid_argument);
}

TEST_CASE("sampling reports the node of a NaN") {
    GridSpec s(1, 2, 2, 2, 8, 8, 8);
    CHECK_THROWS_WITH_AS(sample_function(s, [](const HPoint& p) { return p.tau > 1 ? NAN : 0.0; }),
                         doctest::Contains("node"), std::runtime_error);
}

TEST_CASE("sub-Laplacian against the exact jet") {
    auto f = [](auto x, auto y, auto t) { return exp(-(x * x) - (y * y) * 0.5 - (t * t) * 0.25 + x * t * 0.1); };
    auto fd = [&](const HPoint& p) { return f(p.x[0], p.y[0], p.tau); };
    double err[2];
    for (int lev = 0; lev < 2; ++lev) {
        const int N = lev == 0 ? 32 : 64;
        GridSpec s(1, 4, 4, 6, N, N, 2 * N);
        auto L = apply_sublaplacian(sample_function(s, fd));
        double e = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            HPoint p = s.node(i);
            if (std::abs(p.x[0]) > 2 || std::abs(p.y[0]) > 2 || std::abs(p.tau) > 3) continue;
            const double ex = oracle::sublaplacian_h1(
                [&](oracle::HD x, oracle::HD y, oracle::HD t) { return f(x, y, t); }, p.x[0], p.y[0], p.tau);
            e = std::max(e, std::abs(L.values[i] - ex));
        }
        err[lev] = e;
    }
    CHECK(err[1] < 0.05);
    // second order
    CHECK(err[0] / err[1] > 3.5);
}

TEST_CASE("horizontal gradient of a linear function is exact") {
    GridSpec s(1, 2, 2, 2, 8, 8, 8);
    auto f = sample_function(s, [](const HPoint& p) { return 3 * p.x[0] - p.y[0] + 0.5 * p.tau; });
    auto g = apply_horizontal_gradient(f);
    REQUIRE(g.size() == 2);
    for (std::size_t i = 0; i < s.size(); ++i) {
        HPoint p = s.node(i);
        CHECK(g[0].values[i] == doctest::Approx(3 - p.y[0]).epsilon(1e-12));
        CHECK(g[1].values[i] == doctest::Approx(-1 + p.x[0]).epsilon(1e-12));
    }
    auto dt = apply_tau_derivative(f);
    CHECK(dt.values[17] == doctest::Approx(0.5));
}

TEST_CASE("interpolation reproduces nodes and is zero outside") {
    GridSpec s(1, 2, 2, 2, 8, 8, 8);
    auto f = sample_function(s, [](const HPoint& p) { return 1 + p.x[0] + 2 * p.y[0] - p.tau; });
    CHECK(interpolate(f, s.node(100)) == doctest::Approx(f.values[100]));
    CHECK(interpolate(f, HPoint::of(0.25, 0.25, 0.25)) == doctest::Approx(1.5));
    CHECK(interpolate(f, HPoint::of(5, 0, 0)) == 0.0);
}

TEST_CASE("binary field format round trips") {
    GridSpec s(1, 2, 3, 4, 8, 8, 16);
    auto f = sample_function(s, [](const HPoint& p) { return std::sin(p.x[0]) + p.tau; });
    std::stringstream ss;
    write_field(f, ss);
    auto g = read_field(ss);
    CHECK(g.spec == s);
    CHECK(g.values == f.values);
    std::stringstream bad("HHEATXX1garbage");
    CHECK_THROWS(read_field(bad));
}

TEST_CASE("field arithmetic requires matching grids") {
    GridField a(GridSpec(1, 2, 2, 2, 8, 8, 8), 1.0), b(GridSpec(1, 2, 2, 2, 8, 8, 16), 1.0);
    CHECK_THROWS_AS(a += b, std::invalid_argument);
    GridField c = 2.0 * a;
    CHECK(c.max() == 2.0);
    CHECK((c - a).min() == 1.0);
}
