#pragma once

#include <vector>

namespace hheat {

// Point of H^n stored as (x, y, tau); n = x.size().
struct HPoint {
    std::vector<double> x;
    std::vector<double> y;
    double tau = 0.0;

    HPoint() = default;
    explicit HPoint(int n) : x(n, 0.0), y(n, 0.0) {}
    HPoint(std::vector<double> x_, std::vector<double> y_, double t);
    // n = 1 shorthand
    static HPoint of(double x, double y, double tau);

    int dim() const { return static_cast<int>(x.size()); }
    bool valid() const;
};

struct GroupDim {
    int n;
    int Q;
    explicit GroupDim(int n_);
};

HPoint group_mul(const HPoint& a, const HPoint& b);
HPoint group_inv(const HPoint& a);
HPoint dilate(double lambda, const HPoint& a);
double dilation_jacobian(double lambda, int n);
double koranyi_norm(const HPoint& a);
double koranyi_dist(const HPoint& a, const HPoint& b);

// |z|^2 = |x|^2 + |y|^2
double horizontal_sq(const HPoint& a);

}  // namespace hheat
