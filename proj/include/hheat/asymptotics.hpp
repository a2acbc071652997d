#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hheat/field.hpp"
#include "hheat/heatkernel.hpp"
#include "hheat/solver.hpp"

namespace hheat {

// ---- integrability condition on k ----

enum class Verdict { Converges, Diverges, Inconclusive };
const char* verdict_name(Verdict v);

struct ConditionReport {
    double p = 0;
    int Q = 0;
    std::string k;
    std::vector<double> T, integral;  // partial integrals over [1, T]
    Verdict verdict = Verdict::Inconclusive;
    bool closed_form = false;
    std::string details;
};

ConditionReport condition_check(const AbsorptionProfile& k, double p, int Q, double Tmax);

// ---- dichotomy ----

struct SweepRow {
    double p;
    bool supercritical;  // p > 1 + 2/Q
    double M0, M_half, M_end;
    double plateau;       // |M(T) - M(T/2)| / M(0)
    double ratio;         // M(T) / M(0)
    double decay_exponent;  // slope of log M against log t over the second half
    double leak;
    std::string observed;  // "persists", "decays" or "intermediate"
};

std::vector<SweepRow> dichotomy_sweep(const std::vector<double>& pList, const SolverConfig& tmpl,
                                      const AbsorptionProfile& k, std::vector<EvolveResult>* runs = nullptr);
SweepRow summarize_run(const EvolveResult& run, double p, int Q);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// ---- profile convergence ----

struct SeriesPoint {
    double t, value;
};

// t^{(Q/2)(1 - 1/q)} ||u(t) - M h_{t + shift}||_q at each snapshot with t > 0.
std::vector<SeriesPoint> profile_convergence(const std::vector<Snapshot>& snaps, double M_inf, double q,
                                             double shift = 0.0, const KernelQuadratureParams& qp = {});
bool strictly_decreasing_tail(const std::vector<SeriesPoint>& s, std::size_t count);

// ---- Taylor identity ----

struct TestFunction {
    std::function<double(const HPoint&)> f;
    std::function<std::vector<double>(const HPoint&)> grad_h;  // X_1..X_n, Y_1..Y_n
    std::function<double(const HPoint&)> dtau;
};
TestFunction gaussian_test_function();  // exp(-|x|^2 - |y|^2 - tau^2)
TestFunction linear_test_function(std::vector<double> a, std::vector<double> b);  // a.x + b.y

struct TaylorSides {
    double lhs, rhs;
};
TaylorSides taylor_expansion_check(const TestFunction& f, const HPoint& eta, const HPoint& xi, int order = 64);

// ---- profile lemma ----

struct ProfileLemmaResult {
    std::vector<double> t, series, weighted;  // weighted = series * sqrt(t)
    double mass = 0;
    bool decreasing = false;
    double weighted_spread = 0;  // max/min of weighted
};
ProfileLemmaResult profile_lemma_check(const GridField& g, const std::vector<double>& tList,
                                       const KernelQuadratureParams& qp = {});

// ---- cut-off family ----

struct CutoffFamily {
    double R, p, ell;
    CutoffFamily(double R_, double p_);
    static double Phi(double s);
    static double dPhi(double s);
    static double d2Phi(double s);
    double xi(double t, const HPoint& eta) const;
    double phi(double t, const HPoint& eta) const;
    double phi_star(double t, const HPoint& eta) const;
    double dt_phi(double t, const HPoint& eta) const;
    double sublaplacian_analytic(double t, const HPoint& eta) const;
    double sublaplacian_fd(double t, const HPoint& eta) const;
};

struct CutoffSample {
    double t;
    HPoint eta;
};
// samples with xi in [1/2, 1] and |eta|_H^2 >= 1e-3 R
std::vector<CutoffSample> cutoff_samples(double R, double p, int n, int count, uint64_t seed);

struct CutoffCheck {
    std::vector<double> R, max_ratio, max_fd_disagreement;
    int used = 0;
};
CutoffCheck cutoff_lemma_check(const std::vector<double>& Rs, double p,
                               const std::vector<std::vector<CutoffSample>>& samples);

// ---- capacity functional ----

struct CapacityTrace {
    std::vector<double> R, Y;
    std::vector<double> rho, inner;  // inner(rho) = int int u^p phi*_rho
    double total = 0;                // int int u^p
    double Rmax = 0;
    bool monotone = true, log2_bound = true;
};
CapacityTrace capacity_functional(const std::vector<Snapshot>& snaps, double p, const std::vector<double>& Rs,
                                  double Rmax);

}  // namespace hheat
