#include "hheat/hgroup.hpp"

#include <cmath>
#include <stdexcept>

namespace hheat {

HPoint::HPoint(std::vector<double> x_, std::vector<double> y_, double t)
    : x(std::move(x_)), y(std::move(y_)), tau(t) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("HPoint: x and y must have equal length n >= 1");
}

HPoint HPoint::of(double x, double y, double tau) {
    return HPoint({x}, {y}, tau);
}

bool HPoint::valid() const {
    if (x.empty() || x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return false;
    return std::isfinite(tau);
}

GroupDim::GroupDim(int n_) : n(n_), Q(2 * n_ + 2) {
    if (n_ < 1) throw std::invalid_argument("GroupDim: n >= 1 required");
}

static void check_same(const HPoint& a, const HPoint& b) {
    if (a.dim() != b.dim() || a.dim() < 1)
        throw std::invalid_argument("dimension mismatch between HPoints");
}

HPoint group_mul(const HPoint& a, const HPoint& b) {
    check_same(a, b);
    const int n = a.dim();
    HPoint r(n);
    double twist = 0.0;
    for (int i = 0; i < n; ++i) {
        r.x[i] = a.x[i] + b.x[i];
        r.y[i] = a.y[i] + b.y[i];
        twist += a.x[i] * b.y[i] - b.x[i] * a.y[i];
    }
    r.tau = a.tau + b.tau + 2.0 * twist;
    return r;
}

HPoint group_inv(const HPoint& a) {
    HPoint r(a.dim());
    for (int i = 0; i < a.dim(); ++i) {
        r.x[i] = -a.x[i];
        r.y[i] = -a.y[i];
    }
    r.tau = -a.tau;
    return r;
}

HPoint dilate(double lambda, const HPoint& a) {
    if (!(lambda > 0.0)) throw std::invalid_argument("dilate: lambda > 0 required");
    HPoint r(a.dim());
    for (int i = 0; i < a.dim(); ++i) {
        r.x[i] = lambda * a.x[i];
        r.y[i] = lambda * a.y[i];
    }
    r.tau = lambda * lambda * a.tau;
    return r;
}

double dilation_jacobian(double lambda, int n) {
    return std::pow(lambda, GroupDim(n).Q);
}

double horizontal_sq(const HPoint& a) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a.x[i] * a.x[i] + a.y[i] * a.y[i];
    return s;
}

double koranyi_norm(const HPoint& a) {
    const double r2 = horizontal_sq(a);
    return std::sqrt(std::sqrt(r2 * r2 + a.tau * a.tau));
}

double koranyi_dist(const HPoint& a, const HPoint& b) {
    check_same(a, b);
    return koranyi_norm(group_mul(group_inv(b), a));
}

}  // namespace hheat
