#pragma once
// Independent reference values for the unit tests.

#include <cmath>
#include <vector>

namespace oracle {

// Hyper-dual number a + b e1 + c e2 + d e1e2 (e1^2 = e2^2 = 0): exact
// first and mixed second derivatives.
struct HD {
    double a = 0, b = 0, c = 0, d = 0;
    HD() = default;
    HD(double v) : a(v) {}
    HD(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}
};
inline HD operator+(HD x, HD y) { return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d}; }
inline HD operator-(HD x, HD y) { return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d}; }
inline HD operator-(HD x) { return {-x.a, -x.b, -x.c, -x.d}; }
inline HD operator*(HD x, HD y) {
    return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.c * y.a, x.a * y.d + x.b * y.c + x.c * y.b + x.d * y.a};
}
// g(x) for scalar g with derivatives g0, g1, g2 at x.a
inline HD lift(HD x, double g0, double g1, double g2) {
    return {g0, g1 * x.b, g1 * x.c, g1 * x.d + g2 * x.b * x.c};
}
inline HD operator/(HD x, HD y) { return x * lift(y, 1 / y.a, -1 / (y.a * y.a), 2 / (y.a * y.a * y.a)); }
inline HD exp(HD x) {
    const double e = std::exp(x.a);
    return lift(x, e, e, e);
}
inline HD sqrt(HD x) {
    const double s = std::sqrt(x.a);
    return lift(x, s, 0.5 / s, -0.25 / (s * x.a));
}
inline HD pow(HD x, double p) {
    return lift(x, std::pow(x.a, p), p * std::pow(x.a, p - 1), p * (p - 1) * std::pow(x.a, p - 2));
}

// Delta_H f at (x, y, tau) for n = 1 from exact second derivatives:
// X^2 = dxx - 4y dxt + 4y^2 dtt, Y^2 = dyy + 4x dyt + 4x^2 dtt.
template <class F>
double sublaplacian_h1(F f, double x, double y, double tau) {
    auto d2 = [&](int i, int j) {
        HD v[3] = {HD(x), HD(y), HD(tau)};
        v[i].b = 1;
        v[j].c = 1;
        return f(v[0], v[1], v[2]).d;
    };
    return d2(0, 0) - 4 * y * d2(0, 2) + d2(1, 1) + 4 * x * d2(1, 2) + 4 * (x * x + y * y) * d2(2, 2);
}

// sqrt((x^2 + y^2)^2 + tau^2), the squared Koranyi gauge
template <class T>
T gauge_sq(T x, T y, T tau) {
    T r2 = x * x + y * y;
    return sqrt(r2 * r2 + tau * tau);
}

// cut-off phi = Phi(xi)^ell for 1/2 < xi < 1
template <class T>
T cutoff_phi(double R, double p, double t, T x, T y, T tau) {
    const double ell = 2 * p / (p - 1);
    T xi = (T(t) + gauge_sq(x, y, tau)) * T(1.0 / R);
    T r = xi * T(2.0) - T(1.0);
    T P = r * r * r * (T(10.0) + r * (T(-15.0) + r * T(6.0)));
    return pow(P, ell);
}

// unit-mass kernel values, n = 1 unless noted, from an independent
// 30-digit integration: (n, t, |z|^2, tau, value)
struct KernelRef {
    int n;
    double t, r2, tau, value;
};
inline const std::vector<KernelRef>& kernel_refs() {
    static const std::vector<KernelRef> v = {
        {1, 1.0, 0.0, 0.0, 0.015625},
        {1, 1.0, 1.0, 0.0, 0.0098442319935076951942},
        {1, 1.0, 0.0, 2.0, 0.0089052181842715213354},
        {1, 1.0, 2.25, 3.0, 0.0034283725404068912157},
        {1, 0.5, 0.5, -1.0, 0.027040588236568965907},
        {1, 2.0, 4.0, 10.0, 0.00038422361708677200866},
        {2, 1.0, 0.0, 0.0, 0.00082893199527028820713},
        {2, 1.0, 1.5, 2.0, 0.00040659198965509456181},
    };
    return v;
}

// int_0^inf (l / sinh l) cos(w l) dl = (pi^2 / 4) sech^2(pi w / 2), so on the
// tau axis h_1(0, tau) = sech^2(pi tau / 8) / 64 for n = 1.
inline double h1_tau_axis(double tau) {
    const double s = 1.0 / std::cosh(M_PI * tau / 8.0);
    return s * s / 64.0;
}

// printed closed form at the origin, n = 1, t = 1: uses int_R l / sinh l = pi^2 / 2
inline double printed_origin() { return 1.0 / (32.0 * M_PI); }

}  // namespace oracle
