#pragma once

#include <complex>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hheat/field.hpp"
#include "hheat/hgroup.hpp"

namespace hheat {

struct KernelQuadratureParams {
    double Lambda = 60.0;    // lambda cutoff
    int panels = 64;         // minimum number of panels on [0, Lambda]
    int nodesPerPanel = 16;  // Gauss-Legendre order per panel
    void validate() const;
    std::string key() const;
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, std::vector<double>& x, std::vector<double>& w);

// Evaluates I(r2, w) = int_0^Lambda (l/sinh l)^n exp(-r2 l coth(l)/4) cos(w l) dl
// for a batch of r2 values at one frequency w. Panels never exceed a
// quarter period of cos(w l). For each r2 the range is cut where a
// closed-form bound puts the remaining tail below 1e-15; rows whose
// contour-shift bound is below 1e-18 are returned as exact zeros.
class LambdaIntegrator {
public:
    LambdaIntegrator(int n, const KernelQuadratureParams& qp, std::vector<double> r2);
    void row(double w, double* out, int refine = 1, double* abs_out = nullptr) const;
    const std::vector<double>& r2() const { return r2_; }
    int panels_for(double w) const;

private:
    int n_;
    KernelQuadratureParams qp_;
    std::vector<double> r2_, lcut_, bound_;
    std::vector<double> glx_, glw_;
};

// Normalized heat kernel of the sub-Laplacian (unit mass).
double kernel_value(int n, double t, const HPoint& p, const KernelQuadratureParams& qp = {});
// The closed-form expression exactly as printed in the source formula; its
// total mass is 1/(2 pi) and it equals (2/pi) * kernel_value(z, 4 tau).
double explicit_formula_value(int n, double t, const HPoint& p, const KernelQuadratureParams& qp = {});

// h_t sampled at every node of spec. Uses the kernel cache when enabled.
GridField sample_kernel(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp = {});

// h_t averaged over the cell around each node (3-point Gauss-Legendre per axis).
GridField cell_average_kernel(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp = {});

// Cache directory: $HHEAT_KERNEL_CACHE, "off" disables; default is
// <tmp>/hheat-kernel-cache.
std::string kernel_cache_dir();
std::string kernel_cache_path(const std::string& key);
// cache key of sample_kernel(n, t, spec, qp)
std::string sample_cache_key(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp);

struct KernelTable {
    GridSpec spec;
    GridField values;  // h_1
    KernelQuadratureParams params;
    int n = 1;
    bool from_cache = false;
};

struct KernelInvariantReport {
    double mass = 0, min = 0, symmetry = 0;
    bool ok = true;
    std::string failed;
};
KernelInvariantReport check_kernel_invariants(const GridField& h1);

// Throws std::runtime_error naming the failed invariant.
KernelTable tabulate_kernel(int n, const GridSpec& spec, const KernelQuadratureParams& qp = {});

// Precomputed tau-transforms of a kernel field f; apply(g) returns f *_H g.
class GroupConvolver {
public:
    explicit GroupConvolver(const GridField& f);
    ~GroupConvolver();
    GroupConvolver(const GroupConvolver&) = delete;
    GroupConvolver& operator=(const GroupConvolver&) = delete;
    GridField apply(const GridField& g) const;
    const GridSpec& spec() const { return spec_; }

private:
    struct Impl;
    GridSpec spec_;
    std::unique_ptr<Impl> impl_;
};

GridField group_convolve(const GridField& f, const GridField& g);

// S(t) on a fixed grid, caching sampled kernels and their transforms per t.
class HeatSemigroup {
public:
    HeatSemigroup(const GridSpec& spec, const KernelQuadratureParams& qp = {}, bool renormalize = false);
    GridField apply(const GridField& f, double t);
    const GridField& kernel(double t);
    // 1 - discrete mass of the raw sampled kernel
    double mass_deficit(double t);
    const GridSpec& spec() const { return spec_; }

private:
    struct Entry {
        GridField kernel;
        double deficit = 0;
        std::unique_ptr<GroupConvolver> conv;
    };
    Entry& entry(double t);
    GridSpec spec_;
    KernelQuadratureParams qp_;
    bool renorm_;
    std::map<double, Entry> cache_;
};

GridField heat_semigroup_apply(const GridField& f, double t, const KernelQuadratureParams& qp = {});

struct GaussianBoundFit {
    double cLow, CLow, cUp, CUp;
};
GaussianBoundFit gaussian_bound_fit(const KernelTable& table, const std::vector<std::pair<double, HPoint>>& samples);

struct GradientCheck {
    std::vector<double> t, grad_l1, tau_l1;
    double grad_slope = 0, tau_slope = 0;
};
GradientCheck gradient_l1_check(int n, const GridSpec& spec, const std::vector<double>& tList,
                                const KernelQuadratureParams& qp = {});

// least-squares slope of log(v) against log(t)
double loglog_slope(const std::vector<double>& t, const std::vector<double>& v);

}  // namespace hheat
