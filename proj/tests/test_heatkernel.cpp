#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hheat/heatkernel.hpp"
#include "oracles.hpp"

using namespace hheat;

namespace {
HPoint at_r2(int n, double r2, double tau) {
    HPoint p(n);
    p.x[0] = std::sqrt(r2);
    p.tau = tau;
    return p;
}
}  // namespace

TEST_CASE("Gauss-Legendre rule integrates polynomials") {
    std::vector<double> x, w;
    gauss_legendre(16, x, w);
    REQUIRE(x.size() == 16);
    for (int k = 0; k <= 30; k += 2) {
        double s = 0;
        for (int i = 0; i < 16; ++i) s += w[i] * std::pow(x[i], k);
        CHECK(s == doctest::Approx(2.0 / (k + 1)).epsilon(1e-14));
    }
}

TEST_CASE("kernel values against frozen references") {
    for (const auto& r : oracle::kernel_refs()) {
        CAPTURE(r.n);
        CAPTURE(r.r2);
        CAPTURE(r.tau);
        CHECK(kernel_value(r.n, r.t, at_r2(r.n, r.r2, r.tau)) == doctest::Approx(r.value).epsilon(1e-9));
    }
}

TEST_CASE("kernel on the tau axis matches the sech^2 closed form") {
    for (double tau : {0.0, 0.5, 1.0, 3.0, 8.0, 20.0, -13.0, 60.0}) {
        CAPTURE(tau);
        CHECK(kernel_value(1, 1.0, HPoint::of(0, 0, tau)) ==
              doctest::Approx(oracle::h1_tau_axis(tau)).epsilon(1e-9));
    }
}

TEST_CASE("printed closed form at the origin") {
    const double v = explicit_formula_value(1, 1.0, HPoint(1));
    CHECK(std::abs(v - oracle::printed_origin()) / oracle::printed_origin() <= 1e-6);
    // printed(z, tau) = (2/pi) h(z, 4 tau)
    auto p = HPoint::of(0.7, -0.2, 1.3);
    auto q = p;
    q.tau *= 4;
    CHECK(explicit_formula_value(1, 1.5, p) == doctest::Approx(2 / M_PI * kernel_value(1, 1.5, q)).epsilon(1e-10));
}

TEST_CASE("scaling identity h_{l^2 t}(dilate(l, p)) = l^{-Q} h_t(p)") {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(-2, 2), L(0.5, 2.0);
    for (int k = 0; k < 20; ++k) {
        auto p = HPoint::of(U(g), U(g), 2 * U(g));
        const double l = L(g);
        const double a = kernel_value(1, l * l, dilate(l, p)), b = std::pow(l, -4) * kernel_value(1, 1, p);
        CHECK(std::abs(a - b) <= 1e-10 * b);
    }
}

TEST_CASE("kernel is even and rotation invariant in z") {
    auto p = HPoint::of(0.6, 0.8, 2.5);
    const double v = kernel_value(1, 1, p);
    CHECK(kernel_value(1, 1, group_inv(p)) == v);
    CHECK(kernel_value(1, 1, HPoint::of(1.0, 0, 2.5)) == doctest::Approx(v).epsilon(1e-14));
}

TEST_CASE("bad arguments") {
    CHECK_THROWS_AS(kernel_value(1, 0.0, HPoint(1)), std::invalid_argument);
    CHECK_THROWS_AS(kernel_value(2, 1.0, HPoint(1)), std::invalid_argument);
    KernelQuadratureParams q;
    q.panels = 0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("sampled kernel: nodes, mass, symmetry, positivity") {
    GridSpec s;  // default n = 1 grid
    auto h = sample_kernel(1, 1.0, s);
    for (std::size_t i : {std::size_t(0), s.size() / 2 + 5, s.size() / 3 + 77}) {
        CHECK(h.values[i] == doctest::Approx(kernel_value(1, 1.0, s.node(i))).epsilon(1e-12));
    }
    auto r = check_kernel_invariants(h);
    CHECK(r.ok);
    CHECK(std::abs(r.mass - 1) <= 1e-2);
    CHECK(r.symmetry <= 1e-12);
    CHECK(r.min >= 0.0);
}

TEST_CASE("kernel cache round trip and corrupted entry") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hheat-test-cache";
    fs::remove_all(dir);
    setenv("HHEAT_KERNEL_CACHE", dir.c_str(), 1);
    GridSpec s(1, 6, 6, 40, 16, 16, 64);
    auto t1 = tabulate_kernel(1, s);
    CHECK_FALSE(t1.from_cache);
    auto t2 = tabulate_kernel(1, s);
    CHECK(t2.from_cache);
    CHECK(t2.values.values == t1.values.values);

    // overwrite the entry with a scaled kernel under the same key
    const std::string key = sample_cache_key(1, 1.0, s, {});
    GridField bad = t1.values;
    bad *= 1.5;
    {
        std::ofstream f(kernel_cache_path(key), std::ios::binary);
        f << "HHEATKC 1\n" << key << "\n";
        write_field(bad, f);
    }
    CHECK_THROWS_WITH_AS(tabulate_kernel(1, s), doctest::Contains("kernel.normalization"), std::runtime_error);

    setenv("HHEAT_KERNEL_CACHE", "off", 1);
    CHECK(kernel_cache_dir().empty());
    CHECK_FALSE(tabulate_kernel(1, s).from_cache);
    fs::remove_all(dir);
}

TEST_CASE("convolution with a point mass") {
    GridSpec s(1, 3, 3, 6, 12, 12, 24);
    auto g = sample_function(s, [](const HPoint& p) {
        return std::exp(-(p.x[0] - 0.5) * (p.x[0] - 0.5) - p.y[0] * p.y[0] - 0.3 * p.tau * p.tau);
    });
    GridField d(s);
    d.values[s.size() / 2 + s.Ntau / 2] = 0;
    const std::size_t c0 = s.column_of(std::array<int, 1>{6}.data(), std::array<int, 1>{6}.data());
    d.at(c0, 12) = 1.0 / s.cell_volume();
    auto a = group_convolve(d, g), b = group_convolve(g, d);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(a.values[i] == doctest::Approx(g.values[i]).epsilon(1e-12).scale(1));
        CHECK(b.values[i] == doctest::Approx(g.values[i]).epsilon(1e-12).scale(1));
    }
}

TEST_CASE("convolution against a direct sum when the shear lands on nodes") {
    // hx = hy = 1, htau = 2: every shear 2(x y' - x' y) is a whole number of tau cells
    GridSpec s(1, 4, 4, 16, 8, 8, 16);
    auto f = sample_function(s, [](const HPoint& p) {
        return std::exp(-0.5 * horizontal_sq(p) - 0.05 * p.tau * p.tau + 0.3 * p.x[0]);
    });
    auto g = sample_function(s, [](const HPoint& p) {
        return std::exp(-0.7 * (p.x[0] + 1) * (p.x[0] + 1) - 0.4 * p.y[0] * p.y[0] - 0.1 * (p.tau - 2) * (p.tau - 2));
    });
    auto c = group_convolve(f, g);
    auto lookup = [&](const HPoint& q) {
        const int ix = static_cast<int>(std::lround(q.x[0] / s.hx())) + s.Nx / 2;
        const int iy = static_cast<int>(std::lround(q.y[0] / s.hy())) + s.Ny / 2;
        const int it = static_cast<int>(std::lround(q.tau / s.htau())) + s.Ntau / 2;
        if (ix < 0 || ix >= s.Nx || iy < 0 || iy >= s.Ny || it < 0 || it >= s.Ntau) return 0.0;
        return f.at(s.column_of(&ix, &iy), it);
    };
    double err = 0, mx = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const HPoint eta = s.node(i);
        double acc = 0;
        for (std::size_t j = 0; j < s.size(); ++j) acc += lookup(group_mul(eta, group_inv(s.node(j)))) * g.values[j];
        acc *= s.cell_volume();
        err = std::max(err, std::abs(acc - c.values[i]));
        mx = std::max(mx, acc);
    }
    CHECK(err <= 1e-12 * mx);
}

TEST_CASE("convolution is not commutative but masses multiply") {
    GridSpec s(1, 6, 6, 30, 24, 24, 96);
    auto bump = [](double cx, double cy) {
        return [=](const HPoint& p) {
            return std::exp(-2 * ((p.x[0] - cx) * (p.x[0] - cx) + (p.y[0] - cy) * (p.y[0] - cy)) - p.tau * p.tau);
        };
    };
    auto f = sample_function(s, bump(1, 0)), g = sample_function(s, bump(0, 1));
    auto fg = group_convolve(f, g), gf = group_convolve(g, f);
    CHECK(lp_norm(fg - gf, 1) > 0.05 * lp_norm(fg, 1));
    CHECK(integrate_field(fg) == doctest::Approx(integrate_field(f) * integrate_field(g)).epsilon(1e-6));
}

TEST_CASE("semigroup property on the default grid") {
    GridSpec s;
    auto h1 = sample_kernel(1, 1, s), h2 = sample_kernel(1, 2, s);
    CHECK(lp_norm(group_convolve(h1, h1) - h2, 1) <= 5e-2);
    HeatSemigroup S(s, {}, true);
    auto u = S.apply(h1, 1.0);
    CHECK(lp_norm(u - h2, 1) <= 5e-2);
    CHECK(S.mass_deficit(1.0) == doctest::Approx(1 - integrate_field(h1)));
}

TEST_CASE("Gaussian bound fit brackets every sample") {
    GridSpec s(1, 6, 6, 40, 16, 16, 64);
    KernelTable tab = tabulate_kernel(1, s);
    std::vector<std::pair<double, HPoint>> samp;
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int k = 0; k < 60; ++k) samp.push_back({0.5 + std::abs(U(g)), HPoint::of(U(g), U(g), 2 * U(g))});
    auto fit = gaussian_bound_fit(tab, samp);
    CHECK(fit.cUp > 0);
    CHECK(fit.CLow >= fit.cUp);
    for (auto& [t, p] : samp) {
        const double v = kernel_value(1, t, p) * t * t;
        const double rho = std::pow(koranyi_norm(p), 2) / t;
        CHECK(v <= fit.CUp * std::exp(-fit.cUp * rho) * (1 + 1e-12));
        CHECK(v >= fit.CUp * std::exp(-fit.CLow * rho) * (1 - 1e-12));
    }
}

TEST_CASE("gradient and tau-derivative decay slopes") {
    GridSpec s(1, 12, 12, 40, 48, 48, 160);
    auto r = gradient_l1_check(1, s, {0.5, 1, 2, 4});
    CHECK(r.grad_slope == doctest::Approx(-0.5).epsilon(0.1));
    CHECK(r.tau_slope == doctest::Approx(-1.0).epsilon(0.1));
    CHECK(loglog_slope({1, 2, 4}, {1, 0.25, 0.0625}) == doctest::Approx(-2));
}

TEST_CASE("cell averages are close to node values for a fine histogram") {
    GridSpec s(1, 2, 2, 4, 16, 16, 32);
    auto a = cell_average_kernel(1, 1.0, s);
    auto h = sample_kernel(1, 1.0, s);
    CHECK(lp_norm(a - h, INFINITY) <= 1e-2 * h.max());
    // centre cell lies below the peak value
    CHECK(a.max() < h.max());
}
