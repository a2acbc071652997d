#include "hheat/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hheat {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Converges:
            return "converges";
        case Verdict::Diverges:
            return "diverges";
        default:
            return "inconclusive";
    }
}

ConditionReport condition_check(const AbsorptionProfile& k, double p, int Q, double Tmax) {
    if (!(p > 1)) throw std::invalid_argument("p > 1 required");
    if (Q < 4 || Q % 2 != 0) throw std::invalid_argument("condition_check: Q = 2n + 2 required");
    if (!(Tmax >= 2)) throw std::invalid_argument("condition_check: Tmax >= 2 required");
    ConditionReport r;
    r.p = p;
    r.Q = Q;
    r.k = k.describe();
    const double e = -0.5 * Q * (p - 1.0);

    // int_1^T t^e k(t) dt in the variable u = log t, 8 panels per doubling
    std::vector<double> gx, gw;
    gauss_legendre(16, gx, gw);
    auto f = [&](double u) {
        const double t = std::exp(u);
        return std::pow(t, e) * k.value(t) * t;
    };
    double acc = 0.0;
    const double du = std::log(2.0) / 8;
    for (double T = 2.0; T <= Tmax * (1 + 1e-12); T *= 2.0) {
        const double u1 = std::log(T);
        for (double a = u1 - std::log(2.0); a < u1 - 1e-14; a += du) {
            const double b = std::min(a + du, u1);
            for (std::size_t i = 0; i < gx.size(); ++i) acc += 0.5 * (b - a) * gw[i] * f(0.5 * (a + b) + 0.5 * (b - a) * gx[i]);
        }
        r.T.push_back(T);
        r.integral.push_back(acc);
    }

    // Cauchy test on the increments over successive doublings
    Verdict cauchy = Verdict::Inconclusive;
    std::ostringstream det;
    if (r.integral.size() >= 3) {
        const std::size_t m = r.integral.size();
        const double d1 = r.integral[m - 1] - r.integral[m - 2];
        const double d0 = r.integral[m - 2] - r.integral[m - 3];
        const double ratio = d0 > 0 ? d1 / d0 : 0.0;
        const double tail = ratio < 1 ? d1 * ratio / (1 - ratio) : INFINITY;
        det << "increment ratio " << ratio << ", extrapolated tail " << tail << "; ";
        if (ratio >= 0.99)
            cauchy = Verdict::Diverges;
        else if (ratio <= 0.9 && tail <= 1e-2 * r.integral.back())
            cauchy = Verdict::Converges;
    }

    double tail_exp = e;
    bool closed = false;
    if (k.kind() == AbsorptionProfile::Kind::Constant) {
        closed = true;
    } else if (k.kind() == AbsorptionProfile::Kind::PowerLaw) {
        tail_exp = e + k.exponent();
        closed = true;
    }
    if (closed) {
        r.closed_form = true;
        r.verdict = tail_exp < -1.0 ? Verdict::Converges : Verdict::Diverges;
        det << "integrand ~ t^" << tail_exp << " at infinity";
        if (cauchy != Verdict::Inconclusive && cauchy != r.verdict) det << " (Cauchy test disagrees)";
    } else {
        r.verdict = cauchy;
    }
    r.details = det.str();
    return r;
}

SweepRow summarize_run(const EvolveResult& run, double p, int Q) {
    const auto& rows = run.trace.rows;
    if (rows.size() < 2) throw std::invalid_argument("summarize_run: trace too short");
    SweepRow s{};
    s.p = p;
    s.supercritical = p > 1.0 + 2.0 / Q;
    s.M0 = rows.front().mass;
    s.M_end = rows.back().mass;
    const double T = rows.back().t;
    double best = INFINITY;
    for (const auto& r : rows)
        if (std::abs(r.t - 0.5 * T) < best) {
            best = std::abs(r.t - 0.5 * T);
            s.M_half = r.mass;
        }
    s.plateau = std::abs(s.M_end - s.M_half) / s.M0;
    s.ratio = s.M_end / s.M0;
    s.leak = rows.back().leak_cum;
    std::vector<double> tt, mm;
    for (const auto& r : rows)
        if (r.t >= 0.5 * T && r.t > 0 && r.mass > 0) {
            tt.push_back(r.t);
            mm.push_back(r.mass);
        }
    s.decay_exponent = tt.size() >= 2 ? loglog_slope(tt, mm) : 0.0;
    if (s.plateau <= 0.05 && s.ratio >= 0.5)
        s.observed = "persists";
    else if (s.ratio <= 0.2)
        s.observed = "decays";
    else
        s.observed = "intermediate";
    return s;
}

std::vector<SweepRow> dichotomy_sweep(const std::vector<double>& pList, const SolverConfig& tmpl,
                                      const AbsorptionProfile& k, std::vector<EvolveResult>* runs) {
    for (double p : pList)
        if (!(p > 1)) throw std::invalid_argument("p > 1 required");
    SolverConfig base = tmpl;
    auto S = make_step_semigroup(base);
    const GridField u0 = make_initial(base.grid, base.initial, base.quad);
    const int Q = 2 * base.grid.n + 2;
    std::vector<SweepRow> out;
    for (double p : pList) {
        SolverConfig c = base;
        c.p = p;
        EvolveResult r = evolve(u0, c, k, S);
        out.push_back(summarize_run(r, p, Q));
        if (runs) runs->push_back(std::move(r));
    }
    return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "p,regime,M0,M_half,M_end,plateau,ratio,decay_exponent,leak,observed\n" << std::setprecision(12);
    for (const auto& r : rows)
        f << r.p << "," << (r.supercritical ? "supercritical" : "critical_or_below") << "," << r.M0 << ","
          << r.M_half << "," << r.M_end << "," << r.plateau << "," << r.ratio << "," << r.decay_exponent << ","
          << r.leak << "," << r.observed << "\n";
}

std::vector<SeriesPoint> profile_convergence(const std::vector<Snapshot>& snaps, double M_inf, double q,
                                             double shift, const KernelQuadratureParams& qp) {
    if (!(M_inf > 0)) throw std::invalid_argument("profile_convergence: inapplicable regime, M_inf <= 0");
    if (!(q >= 1)) throw std::invalid_argument("profile_convergence: q >= 1 required");
    std::vector<SeriesPoint> out;
    for (const auto& s : snaps) {
        const double t = s.t + shift;
        if (!(t > 0)) continue;
        const int n = s.u.spec.n;
        const double Q = 2.0 * n + 2.0;
        GridField h = sample_kernel(n, t, s.u.spec, qp);
        h *= M_inf;
        GridField d = s.u - h;
        out.push_back({s.t, std::pow(t, 0.5 * Q * (1.0 - 1.0 / q)) * lp_norm(d, q)});
    }
    return out;
}

bool strictly_decreasing_tail(const std::vector<SeriesPoint>& s, std::size_t count) {
    if (s.size() < count || count < 2) return false;
    for (std::size_t i = s.size() - count + 1; i < s.size(); ++i)
        if (!(s[i].value < s[i - 1].value)) return false;
    return true;
}

TestFunction gaussian_test_function() {
    TestFunction tf;
    tf.f = [](const HPoint& p) { return std::exp(-horizontal_sq(p) - p.tau * p.tau); };
    tf.dtau = [f = tf.f](const HPoint& p) { return -2.0 * p.tau * f(p); };
    tf.grad_h = [f = tf.f](const HPoint& p) {
        const int n = p.dim();
        const double v = f(p);
        std::vector<double> g(2 * n);
        for (int i = 0; i < n; ++i) {
            g[i] = (-2.0 * p.x[i] + 4.0 * p.y[i] * p.tau) * v;
            g[n + i] = (-2.0 * p.y[i] - 4.0 * p.x[i] * p.tau) * v;
        }
        return g;
    };
    return tf;
}

TestFunction linear_test_function(std::vector<double> a, std::vector<double> b) {
    TestFunction tf;
    tf.f = [a, b](const HPoint& p) {
        double s = 0.0;
        for (int i = 0; i < p.dim(); ++i) s += a[i] * p.x[i] + b[i] * p.y[i];
        return s;
    };
    tf.dtau = [](const HPoint&) { return 0.0; };
    tf.grad_h = [a, b](const HPoint& p) {
        std::vector<double> g(a);
        g.insert(g.end(), b.begin(), b.end());
        (void)p;
        return g;
    };
    return tf;
}

TaylorSides taylor_expansion_check(const TestFunction& tf, const HPoint& eta, const HPoint& xi, int order) {
    if (eta.dim() != xi.dim()) throw std::invalid_argument("taylor_expansion_check: dimension mismatch");
    const int n = eta.dim();
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    double integral = 0.0;
    for (std::size_t k = 0; k < gx.size(); ++k) {
        const double s = 0.5 * (gx[k] + 1.0);
        const HPoint P = group_mul(eta, dilate(s, xi));
        const auto g = tf.grad_h(P);
        double v = 2.0 * s * xi.tau * tf.dtau(P);
        for (int i = 0; i < n; ++i) v += xi.x[i] * g[i] + xi.y[i] * g[n + i];
        integral += 0.5 * gw[k] * v;
    }
    return {tf.f(group_mul(eta, xi)), tf.f(eta) + integral};
}

ProfileLemmaResult profile_lemma_check(const GridField& g, const std::vector<double>& tList,
                                       const KernelQuadratureParams& qp) {
    ProfileLemmaResult r;
    r.mass = integrate_field(g);
    const int n = g.spec.n;
    for (double t : tList) {
        GridField h = sample_kernel(n, t, g.spec, qp);
        GridField c = group_convolve(h, g);
        h *= r.mass;
        const double s = lp_norm(c - h, 1.0);
        r.t.push_back(t);
        r.series.push_back(s);
        r.weighted.push_back(s * std::sqrt(t));
    }
    r.decreasing = true;
    for (std::size_t i = 1; i < r.series.size(); ++i) r.decreasing &= r.series[i] < r.series[i - 1];
    if (!r.weighted.empty()) {
        auto [mn, mx] = std::minmax_element(r.weighted.begin(), r.weighted.end());
        r.weighted_spread = *mx / *mn;
    }
    return r;
}

// ---- cut-off family ----

CutoffFamily::CutoffFamily(double R_, double p_) : R(R_), p(p_), ell(2.0 * p_ / (p_ - 1.0)) {
    if (!(R_ > 0)) throw std::invalid_argument("cutoff: R > 0 required");
    if (!(p_ > 1)) throw std::invalid_argument("p > 1 required");
}

double CutoffFamily::Phi(double s) {
    if (s <= 0.5) return 0.0;
    if (s >= 1.0) return 1.0;
    const double r = 2.0 * s - 1.0;
    return r * r * r * (10.0 + r * (-15.0 + 6.0 * r));
}

double CutoffFamily::dPhi(double s) {
    if (s <= 0.5 || s >= 1.0) return 0.0;
    const double r = 2.0 * s - 1.0;
    return 60.0 * r * r * (r - 1.0) * (r - 1.0);
}

double CutoffFamily::d2Phi(double s) {
    if (s <= 0.5 || s >= 1.0) return 0.0;
    const double r = 2.0 * s - 1.0;
    return 240.0 * r * (2.0 * r - 1.0) * (r - 1.0);
}

namespace {
double koranyi_sq(const HPoint& e) {
    const double r2 = horizontal_sq(e);
    return std::sqrt(r2 * r2 + e.tau * e.tau);
}
}  // namespace

double CutoffFamily::xi(double t, const HPoint& eta) const { return (t + koranyi_sq(eta)) / R; }

double CutoffFamily::phi(double t, const HPoint& eta) const { return std::pow(Phi(xi(t, eta)), ell); }

double CutoffFamily::phi_star(double t, const HPoint& eta) const {
    const double s = xi(t, eta);
    return s > 1.0 ? 0.0 : std::pow(Phi(s), ell);
}

double CutoffFamily::dt_phi(double t, const HPoint& eta) const {
    const double s = xi(t, eta);
    const double P = Phi(s);
    if (P == 0.0) return 0.0;
    return ell * std::pow(P, ell - 1.0) * dPhi(s) / R;
}

// With N = |eta|_H^2: |grad_H N|^2 = 4|z|^2 and Delta_H N = 4(n+1)|z|^2 / N.
double CutoffFamily::sublaplacian_analytic(double t, const HPoint& eta) const {
    const double s = xi(t, eta);
    const double P = Phi(s);
    if (P == 0.0 || s >= 1.0) return 0.0;
    const double r2 = horizontal_sq(eta);
    if (r2 == 0.0) return 0.0;
    const double N = koranyi_sq(eta);
    const int n = eta.dim();
    const double d1 = dPhi(s), d2 = d2Phi(s);
    const double G1 = ell * std::pow(P, ell - 1.0) * d1;
    const double G2 = ell * (ell - 1.0) * std::pow(P, ell - 2.0) * d1 * d1 + ell * std::pow(P, ell - 1.0) * d2;
    return G1 * 4.0 * (n + 1) * r2 / (N * R) + G2 * 4.0 * r2 / (R * R);
}

namespace {
// 1 - Phi(s) without cancellation near s = 1
double one_minus_Phi(double s) {
    if (s >= 1.0) return 0.0;
    if (s <= 0.5) return 1.0;
    const double u = 2.0 * (1.0 - s);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}
}  // namespace

// X^2 f(eta) = d^2/ds^2 f(eta o (s e)) for each horizontal unit vector e.
// The step stays well inside the region where Phi is a polynomial; near xi = 1
// the stencil differences 1 - phi instead of phi.
double CutoffFamily::sublaplacian_fd(double t, const HPoint& eta) const {
    const int n = eta.dim();
    const double s0 = xi(t, eta);
    const double r = std::sqrt(horizontal_sq(eta));
    const double d = std::min(std::abs(1.0 - s0), std::abs(s0 - 0.5));
    double h = 1e-3 * std::sqrt(R);
    if (r > 0) h = std::min(h, d * R / (2.0 * r) / 40.0);
    h = std::min(h, std::sqrt(koranyi_sq(eta)) / 100.0);
    const bool upper = s0 > 0.75;
    auto F = [&](const HPoint& e) {
        if (!upper) return phi(t, e);
        return -std::expm1(ell * std::log1p(-one_minus_Phi(xi(t, e))));
    };
    const double f0 = F(eta);
    double acc = 0.0;
    for (int a = 0; a < 2 * n; ++a) {
        auto at = [&](double s) {
            HPoint e(n);
            if (a < n)
                e.x[a] = s;
            else
                e.y[a - n] = s;
            return F(group_mul(eta, e));
        };
        acc += (-at(2 * h) + 16 * at(h) - 30 * f0 + 16 * at(-h) - at(-2 * h)) / (12 * h * h);
    }
    return upper ? -acc : acc;
}

std::vector<CutoffSample> cutoff_samples(double R, double p, int n, int count, uint64_t seed) {
    (void)p;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> G(0.0, 1.0);
    std::vector<CutoffSample> out;
    while (static_cast<int>(out.size()) < count) {
        const double s = 0.5 + 0.5 * U(rng);
        const double a = U(rng);
        const double N = (1.0 - a) * s * R;
        if (N < 1e-3 * R) continue;
        const double t = a * s * R;
        // split N^2 = |z|^4 + tau^2; one sample in eight sits on the tau axis
        const bool axis = out.size() % 8 == 7;
        const double th = axis ? 0.5 * M_PI : (U(rng) - 0.5) * M_PI;
        const double r2 = axis ? 0.0 : N * std::abs(std::cos(th));
        const double tau = axis ? N : N * std::sin(th);
        std::vector<double> dir(2 * n);
        double norm = 0.0;
        for (auto& d : dir) {
            d = G(rng);
            norm += d * d;
        }
        norm = std::sqrt(norm);
        HPoint e(n);
        for (int i = 0; i < n; ++i) {
            e.x[i] = std::sqrt(r2) * dir[i] / norm;
            e.y[i] = std::sqrt(r2) * dir[n + i] / norm;
        }
        e.tau = tau;
        out.push_back({t, e});
    }
    return out;
}

CutoffCheck cutoff_lemma_check(const std::vector<double>& Rs, double p,
                               const std::vector<std::vector<CutoffSample>>& samples) {
    if (samples.size() != Rs.size()) throw std::invalid_argument("cutoff_lemma_check: one sample set per R required");
    CutoffCheck r;
    for (std::size_t i = 0; i < Rs.size(); ++i) {
        CutoffFamily cf(Rs[i], p);
        double mr = 0.0, md = 0.0;
        for (const auto& s : samples[i]) {
            const double ps = cf.phi_star(s.t, s.eta);
            if (!(ps > 1e-8)) continue;
            const double an = cf.sublaplacian_analytic(s.t, s.eta);
            if (std::abs(an) > 1e-10) {
                const double fd = cf.sublaplacian_fd(s.t, s.eta);
                const double dis = std::abs(fd - an) / std::abs(an);
                md = std::max(md, dis);
                if (dis > 1e-4) {
                    std::ostringstream os;
                    os << "cutoff_lemma_check: analytic and finite-difference sub-Laplacian disagree (rel " << dis
                       << ") at R=" << Rs[i];
                    throw std::runtime_error(os.str());
                }
            }
            const double ratio = Rs[i] * (std::abs(cf.dt_phi(s.t, s.eta)) + std::abs(an)) / std::pow(ps, 1.0 / p);
            mr = std::max(mr, ratio);
            ++r.used;
        }
        r.R.push_back(Rs[i]);
        r.max_ratio.push_back(mr);
        r.max_fd_disagreement.push_back(md);
    }
    return r;
}

CapacityTrace capacity_functional(const std::vector<Snapshot>& snaps, double p, const std::vector<double>& Rs,
                                  double Rmax) {
    if (snaps.size() < 2) throw std::invalid_argument("capacity_functional: at least two snapshots required");
    if (!(p > 1)) throw std::invalid_argument("p > 1 required");
    CapacityTrace ct;
    ct.Rmax = Rmax;
    const GridSpec& spec = snaps.front().u.spec;
    const double cv = spec.cell_volume();
    const double ell = 2.0 * p / (p - 1.0);
    std::vector<double> Nnode(spec.size());
    for (std::size_t i = 0; i < Nnode.size(); ++i) Nnode[i] = koranyi_sq(spec.node(i));
    std::vector<std::vector<double>> up(snaps.size());
    std::vector<double> tw(snaps.size(), 0.0);  // trapezoid weights in time
    for (std::size_t j = 0; j < snaps.size(); ++j) {
        up[j].resize(spec.size());
        for (std::size_t i = 0; i < spec.size(); ++i) up[j][i] = std::pow(snaps[j].u.values[i], p);
        if (j > 0) {
            const double dt = snaps[j].t - snaps[j - 1].t;
            tw[j - 1] += 0.5 * dt;
            tw[j] += 0.5 * dt;
        }
    }
    for (std::size_t j = 0; j < snaps.size(); ++j) {
        double s = 0.0;
        for (double v : up[j]) s += v;
        ct.total += tw[j] * s * cv;
    }
    const double Rmin = *std::min_element(Rs.begin(), Rs.end());
    const int K = 241;
    const double l0 = std::log(Rmin), l1 = std::log(Rmax);
    for (int k = 0; k < K; ++k) {
        const double rho = std::exp(l0 + (l1 - l0) * k / (K - 1));
        double acc = 0.0;
        for (std::size_t j = 0; j < snaps.size(); ++j) {
            if (tw[j] == 0.0) continue;
            double s = 0.0;
            for (std::size_t i = 0; i < spec.size(); ++i) {
                const double x = (snaps[j].t + Nnode[i]) / rho;
                if (x <= 0.5 || x > 1.0 || up[j][i] == 0.0) continue;
                s += up[j][i] * std::pow(CutoffFamily::Phi(x), ell);
            }
            acc += tw[j] * s * cv;
        }
        ct.rho.push_back(rho);
        ct.inner.push_back(acc);
    }
    // cumulative trapezoid from the top in log(rho)
    std::vector<double> cum(K, 0.0);
    const double dl = (l1 - l0) / (K - 1);
    for (int k = K - 2; k >= 0; --k) cum[k] = cum[k + 1] + 0.5 * dl * (ct.inner[k] + ct.inner[k + 1]);
    for (double R : Rs) {
        double y;
        if (R >= Rmax) {
            y = 0.0;
        } else {
            const double pos = (std::log(R) - l0) / dl;
            const int k = std::min(K - 2, static_cast<int>(std::floor(pos)));
            const double w = pos - k;
            y = (1 - w) * cum[k] + w * cum[k + 1];
        }
        ct.R.push_back(R);
        ct.Y.push_back(y);
    }
    for (std::size_t i = 1; i < ct.Y.size(); ++i)
        if (ct.R[i] > ct.R[i - 1] && ct.Y[i] > ct.Y[i - 1] * (1 + 1e-12)) ct.monotone = false;
    for (double y : ct.Y)
        if (y > std::log(2.0) * ct.total * 1.05) ct.log2_bound = false;
    return ct;
}

}  // namespace hheat
