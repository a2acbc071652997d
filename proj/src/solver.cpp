#include "hheat/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace hheat {

AbsorptionProfile AbsorptionProfile::constant(double c) {
    if (!(c > 0)) throw std::invalid_argument("absorption profile: constant must be > 0");
    AbsorptionProfile k;
    k.kind_ = Kind::Constant;
    k.c_ = c;
    return k;
}

AbsorptionProfile AbsorptionProfile::power_law(double c, double a) {
    if (!(c > 0)) throw std::invalid_argument("absorption profile: coefficient must be > 0");
    if (!std::isfinite(a)) throw std::invalid_argument("absorption profile: exponent must be finite");
    AbsorptionProfile k;
    k.kind_ = Kind::PowerLaw;
    k.c_ = c;
    k.a_ = a;
    return k;
}

AbsorptionProfile AbsorptionProfile::tabulated(std::vector<double> t, std::vector<double> v) {
    if (t.size() < 2 || t.size() != v.size())
        throw std::invalid_argument("absorption profile: tabulated needs >= 2 matching (t, k) pairs");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(v[i] > 0)) throw std::invalid_argument("absorption profile: tabulated values must be > 0");
        if (i > 0 && !(t[i] > t[i - 1])) throw std::invalid_argument("absorption profile: times must increase");
    }
    AbsorptionProfile k;
    k.kind_ = Kind::Tabulated;
    k.tt_ = std::move(t);
    k.kk_ = std::move(v);
    return k;
}

double AbsorptionProfile::value(double t) const {
    switch (kind_) {
        case Kind::Constant:
            return c_;
        case Kind::PowerLaw:
            return c_ * std::pow(1.0 + t, a_);
        case Kind::Tabulated: {
            if (t <= tt_.front()) return kk_.front();
            if (t >= tt_.back()) return kk_.back();
            auto it = std::upper_bound(tt_.begin(), tt_.end(), t);
            std::size_t i = it - tt_.begin();
            double w = (t - tt_[i - 1]) / (tt_[i] - tt_[i - 1]);
            return (1 - w) * kk_[i - 1] + w * kk_[i];
        }
    }
    return 0.0;
}

double AbsorptionProfile::integral(double t0, double t1) const {
    if (t1 < t0) return -integral(t1, t0);
    switch (kind_) {
        case Kind::Constant:
            return c_ * (t1 - t0);
        case Kind::PowerLaw:
            if (a_ == -1.0) return c_ * (std::log1p(t1) - std::log1p(t0));
            return c_ * (std::pow(1.0 + t1, a_ + 1) - std::pow(1.0 + t0, a_ + 1)) / (a_ + 1);
        case Kind::Tabulated: {
            // exact for the piecewise linear interpolant
            std::vector<double> pts{t0, t1};
            for (double s : tt_)
                if (s > t0 && s < t1) pts.push_back(s);
            std::sort(pts.begin(), pts.end());
            double acc = 0.0;
            for (std::size_t i = 1; i < pts.size(); ++i)
                acc += 0.5 * (value(pts[i - 1]) + value(pts[i])) * (pts[i] - pts[i - 1]);
            return acc;
        }
    }
    return 0.0;
}

std::string AbsorptionProfile::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Constant:
            os << "constant(" << c_ << ")";
            break;
        case Kind::PowerLaw:
            os << "powerLaw(" << c_ << "*(1+t)^" << a_ << ")";
            break;
        case Kind::Tabulated:
            os << "tabulated(" << tt_.size() << " points)";
            break;
    }
    return os.str();
}

GridField make_initial(const GridSpec& spec, const InitialData& d, const KernelQuadratureParams& qp) {
    if (!(d.amplitude > 0)) throw std::invalid_argument("initial data: amplitude > 0 required");
    switch (d.kind) {
        case InitialData::Kind::Bump: {
            const double R4 = std::pow(d.radius, 4);
            return sample_function(spec, [&](const HPoint& p) {
                const double r2 = horizontal_sq(p);
                const double rho = (r2 * r2 + p.tau * p.tau) / R4;
                return rho < 1.0 ? d.amplitude * std::exp(1.0 - 1.0 / (1.0 - rho)) : 0.0;
            });
        }
        case InitialData::Kind::Gaussian:
            return sample_function(spec, [&](const HPoint& p) {
                return d.amplitude *
                       std::exp(-horizontal_sq(p) / (d.width_z * d.width_z) - p.tau * p.tau / (d.width_tau * d.width_tau));
            });
        case InitialData::Kind::Kernel: {
            GridField h = sample_kernel(spec.n, d.t0, spec, qp);
            h *= d.amplitude;
            return h;
        }
    }
    throw std::invalid_argument("initial data: unknown kind");
}

void SolverConfig::validate() const {
    if (!(p > 1)) throw std::invalid_argument("p > 1 required");
    if (!(dt > 0)) throw std::invalid_argument("dt > 0 required");
    if (!(T_end > 0)) throw std::invalid_argument("T_end > 0 required");
    if (dt > T_end) throw std::invalid_argument("dt <= T_end required");
    const double r = T_end / dt;
    if (std::abs(r - std::round(r)) > 1e-9 * r) throw std::invalid_argument("T_end/dt must be an integer");
    if (record_every < 1) throw std::invalid_argument("record_every >= 1 required");
    if (snapshot_every < 0) throw std::invalid_argument("snapshot_every >= 0 required");
    grid.validate();
    quad.validate();
}

int SolverConfig::steps() const { return static_cast<int>(std::lround(T_end / dt)); }

void MassTrace::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << header() << "\n" << std::setprecision(17);
    for (const auto& r : rows)
        f << r.step << "," << r.t << "," << r.mass << "," << r.linf << "," << r.lp_p << "," << r.absorbed_cum << ","
          << r.leak_cum << "\n";
}

GridField absorption_step(const GridField& u, double t0, double t1, const AbsorptionProfile& k, double p) {
    if (!(p > 1)) throw std::invalid_argument("absorption_step: p > 1 required");
    if (t1 < t0) throw std::invalid_argument("absorption_step: t1 >= t0 required");
    const double K = k.integral(t0, t1);
    GridField out(u.spec);
    const double q = p - 1.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double v = u.values[i];
        if (v < 0.0) throw std::invalid_argument("absorption_step: negative input value");
        // (v^{1-p} + (p-1)K)^{-1/(p-1)} written to avoid overflow for small v
        out.values[i] = v == 0.0 ? 0.0 : v * std::pow(1.0 + q * K * std::pow(v, q), -1.0 / q);
    }
    return out;
}

std::shared_ptr<HeatSemigroup> make_step_semigroup(const SolverConfig& cfg) {
    return std::make_shared<HeatSemigroup>(cfg.grid, cfg.quad, true);
}

Stepper::Stepper(const GridField& u0, const SolverConfig& cfg, const AbsorptionProfile& k,
                 std::shared_ptr<HeatSemigroup> S)
    : cfg_(cfg), k_(k), S_(std::move(S)), u_(u0) {
    cfg_.validate();
    if (u0.spec != cfg.grid) throw std::invalid_argument("evolve: initial data grid differs from config grid");
    if (!u0.all_finite()) throw std::invalid_argument("evolve: initial data not finite");
    if (u0.min() < 0.0) throw std::invalid_argument("evolve: initial data must be nonnegative");
    if (!S_) S_ = make_step_semigroup(cfg_);
    if (S_->spec() != cfg.grid) throw std::invalid_argument("evolve: semigroup grid differs from config grid");
    lpp_ = lp_norm_pow(u_, cfg_.p);
    m0_ = integrate_field(u_);
    linf0_ = u_.max();
}

void Stepper::step() {
    const double t0 = t_, dt = cfg_.dt, t1 = (step_ + 1) * dt;
    const double mass_before = integrate_field(u_);
    const double lpp0 = lpp_;
    auto diffuse = [&] {
        const double mb = integrate_field(u_);
        u_ = S_->apply(u_, dt);
        leak_ += mb - integrate_field(u_);
    };
    if (cfg_.splitting == Splitting::Strang) {
        const double th = t0 + 0.5 * dt;
        u_ = absorption_step(u_, t0, th, k_, cfg_.p);
        diffuse();
        u_ = absorption_step(u_, th, t1, k_, cfg_.p);
    } else {
        diffuse();
        u_ = absorption_step(u_, t0, t1, k_, cfg_.p);
    }
    ++step_;
    t_ = t1;
    if (!u_.all_finite()) {
        std::ostringstream os;
        os << "evolve: non-finite value at step " << step_;
        throw std::runtime_error(os.str());
    }
    lpp_ = lp_norm_pow(u_, cfg_.p);
    absorbed_ += k_.integral(t0, t1) * 0.5 * (lpp0 + lpp_);
    const double mass = integrate_field(u_);
    if (mass > mass_before + 1e-10 * m0_) {
        std::ostringstream os;
        os << "evolve: invariant violation, mass increased at step " << step_ << " (" << mass_before << " -> "
           << mass << ")";
        throw std::runtime_error(os.str());
    }
    if (u_.max() > linf0_ * (1 + 1e-12)) {
        std::ostringstream os;
        os << "evolve: invariant violation, maximum principle at step " << step_;
        throw std::runtime_error(os.str());
    }
}

MassRow Stepper::row() const {
    return MassRow{step_, t_, integrate_field(u_), lp_norm(u_, INFINITY), lpp_, absorbed_, leak_};
}

EvolveResult evolve(const GridField& u0, const SolverConfig& cfg, const AbsorptionProfile& k,
                    std::shared_ptr<HeatSemigroup> S) {
    if (!S) S = make_step_semigroup(cfg);
    Stepper st(u0, cfg, k, S);
    EvolveResult r;
    r.trace.p = cfg.p;
    r.trace.rows.push_back(st.row());
    if (cfg.snapshot_every > 0) r.snapshots.push_back({0.0, u0});
    const int steps = cfg.steps();
    for (int i = 0; i < steps; ++i) {
        st.step();
        const int j = st.step_index();
        if (j % cfg.record_every == 0 || j == steps) r.trace.rows.push_back(st.row());
        if (cfg.snapshot_every > 0 && (j % cfg.snapshot_every == 0 || j == steps))
            r.snapshots.push_back({st.time(), st.state()});
    }
    r.final_state = st.state();
    r.kernel_mass_deficit = S->mass_deficit(cfg.dt);
    return r;
}

ComparisonResult comparison_check(const GridField& u0, const GridField& v0, const SolverConfig& cfg,
                                  const AbsorptionProfile& k, std::shared_ptr<HeatSemigroup> S) {
    if (u0.spec != v0.spec) throw std::invalid_argument("comparison_check: grid specs differ");
    for (std::size_t i = 0; i < u0.values.size(); ++i)
        if (u0.values[i] < 0.0 || u0.values[i] > v0.values[i])
            throw std::invalid_argument("comparison_check: 0 <= u0 <= v0 required");
    if (!S) S = make_step_semigroup(cfg);
    Stepper a(u0, cfg, k, S), b(v0, cfg, k, S);
    ComparisonResult r;
    const int steps = cfg.steps();
    for (int i = 0; i < steps; ++i) {
        a.step();
        b.step();
        if (a.step_index() % cfg.record_every != 0 && a.step_index() != steps) continue;
        const auto& u = a.state().values;
        const auto& v = b.state().values;
        for (std::size_t j = 0; j < u.size(); ++j) r.max_violation = std::max(r.max_violation, u[j] - v[j]);
    }
    r.ordered = r.max_violation <= 1e-12;
    return r;
}

double mass_identity_residual(const MassTrace& trace) {
    if (trace.rows.empty()) return 0.0;
    const double m0 = trace.rows.front().mass;
    double r = 0.0;
    for (const auto& row : trace.rows) r = std::max(r, std::abs(row.mass - m0 + row.absorbed_cum + row.leak_cum));
    return r;
}

}  // namespace hheat
