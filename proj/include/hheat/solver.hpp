#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hheat/field.hpp"
#include "hheat/heatkernel.hpp"

namespace hheat {

class AbsorptionProfile {
public:
    enum class Kind { Constant, PowerLaw, Tabulated };

    static AbsorptionProfile constant(double c);
    // k(t) = c (1 + t)^a
    static AbsorptionProfile power_law(double c, double a);
    // piecewise linear through (t_i, k_i), held constant outside
    static AbsorptionProfile tabulated(std::vector<double> t, std::vector<double> k);

    double value(double t) const;
    double integral(double t0, double t1) const;
    Kind kind() const { return kind_; }
    double coef() const { return c_; }
    double exponent() const { return a_; }
    std::string describe() const;

private:
    Kind kind_ = Kind::Constant;
    double c_ = 1.0, a_ = 0.0;
    std::vector<double> tt_, kk_;
};

enum class Splitting { Lie, Strang };

struct InitialData {
    enum class Kind { Bump, Gaussian, Kernel };
    Kind kind = Kind::Bump;
    double amplitude = 0.1;
    double radius = 3.0;             // bump: Koranyi radius of the support
    double width_z = 2.0;            // gaussian: exp(-|z|^2/wz^2 - tau^2/wt^2)
    double width_tau = 4.0;
    double t0 = 1.0;                 // kernel: amplitude * h_{t0}
};

GridField make_initial(const GridSpec& spec, const InitialData& d, const KernelQuadratureParams& qp = {});

struct SolverConfig {
    double p = 2.0;
    double dt = 1.0;
    double T_end = 4.0;
    Splitting splitting = Splitting::Strang;
    GridSpec grid;
    InitialData initial;
    int record_every = 1;    // steps between MassTrace rows
    int snapshot_every = 0;  // steps between stored snapshots, 0 = none
    KernelQuadratureParams quad;
    void validate() const;
    int steps() const;
};

struct MassRow {
    int step;
    double t, mass, linf, lp_p, absorbed_cum, leak_cum;
};

struct MassTrace {
    double p = 2.0;
    std::vector<MassRow> rows;
    void write_csv(const std::string& path) const;
    static const char* header() { return "step,t,mass,linf,lp_p,absorbed_cum,leak_cum"; }
};

struct Snapshot {
    double t;
    GridField u;
};

struct EvolveResult {
    GridField final_state;
    MassTrace trace;
    std::vector<Snapshot> snapshots;
    double kernel_mass_deficit = 0;  // before renormalization of the step kernel
};

GridField absorption_step(const GridField& u, double t0, double t1, const AbsorptionProfile& k, double p);

// One splitting integrator; several may share a semigroup.
class Stepper {
public:
    Stepper(const GridField& u0, const SolverConfig& cfg, const AbsorptionProfile& k,
            std::shared_ptr<HeatSemigroup> S);
    void step();
    const GridField& state() const { return u_; }
    double time() const { return t_; }
    int step_index() const { return step_; }
    double absorbed() const { return absorbed_; }
    double leaked() const { return leak_; }
    MassRow row() const;

private:
    SolverConfig cfg_;
    AbsorptionProfile k_;
    std::shared_ptr<HeatSemigroup> S_;
    GridField u_;
    double t_ = 0, absorbed_ = 0, leak_ = 0, lpp_ = 0, m0_ = 0, linf0_ = 0;
    int step_ = 0;
};

std::shared_ptr<HeatSemigroup> make_step_semigroup(const SolverConfig& cfg);

EvolveResult evolve(const GridField& u0, const SolverConfig& cfg, const AbsorptionProfile& k,
                    std::shared_ptr<HeatSemigroup> S = nullptr);

struct ComparisonResult {
    bool ordered = true;
    double max_violation = 0;
};
ComparisonResult comparison_check(const GridField& u0, const GridField& v0, const SolverConfig& cfg,
                                  const AbsorptionProfile& k, std::shared_ptr<HeatSemigroup> S = nullptr);

double mass_identity_residual(const MassTrace& trace);

}  // namespace hheat
