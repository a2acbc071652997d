#include "hheat/heatkernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hheat/parallel.hpp"

namespace hheat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kContourShift = 1.3;  // strip of analyticity is |Im l| < pi
constexpr double kTailTol = 1e-15;
constexpr double kSkipTol = 1e-18;
constexpr double kClamp = 1e-12;

// mass-one prefactor in front of I(|z|^2, tau/4)
double normalized_prefactor(int n) { return 2.0 / (8.0 * kPi) * std::pow(4.0 * kPi, -n); }
// printed prefactor in front of I(|z|^2, tau)
double printed_prefactor(int n) { return 2.0 * std::pow(2.0 * kPi, -(n + 2)) * std::pow(2.0, -n); }

double l_over_sinh(double l) {
    if (std::abs(l) < 1e-4) return 1.0 - l * l / 6.0;
    return l / std::sinh(l);
}

double l_coth(double l) {
    if (std::abs(l) < 1e-4) return 1.0 + l * l / 3.0;
    return l / std::tanh(l);
}

double clamp_dust(double v, const char* where) {
    if (v < 0.0) {
        if (v > -kClamp) return 0.0;
        std::ostringstream os;
        os << where << ": negative kernel value " << v << " beyond clamp tolerance";
        throw std::runtime_error(os.str());
    }
    return v;
}

// int_L^inf (2.04 l)^n exp(-a l) dl
double tail_bound(int n, double a, double L) {
    double s = 0.0, fact = 1.0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) fact *= (n - k + 1);
        s += fact * std::pow(L, n - k) / std::pow(a, k + 1);
    }
    return std::pow(2.04, n) * std::exp(-a * L) * s;
}

}  // namespace

void KernelQuadratureParams::validate() const {
    if (!(Lambda > 0)) throw std::invalid_argument("kernel quadrature: Lambda > 0 required");
    if (panels < 1) throw std::invalid_argument("kernel quadrature: panels >= 1 required");
    if (nodesPerPanel < 2) throw std::invalid_argument("kernel quadrature: nodesPerPanel >= 2 required");
}

std::string KernelQuadratureParams::key() const {
    std::ostringstream os;
    os << std::setprecision(17) << "Lambda=" << Lambda << " panels=" << panels << " nodes=" << nodesPerPanel;
    return os.str();
}

void gauss_legendre(int order, std::vector<double>& x, std::vector<double>& w) {
    std::vector<double> z = boost::math::legendre_p_zeros<double>(order);
    x.clear();
    w.clear();
    for (double r : z) {
        double d = boost::math::legendre_p_prime(order, r);
        double wt = 2.0 / ((1.0 - r * r) * d * d);
        if (r == 0.0) {
            x.push_back(0.0);
            w.push_back(wt);
        } else {
            x.push_back(-r);
            w.push_back(wt);
            x.push_back(r);
            w.push_back(wt);
        }
    }
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs, ws;
    for (auto i : idx) {
        xs.push_back(x[i]);
        ws.push_back(w[i]);
    }
    x = xs;
    w = ws;
}

LambdaIntegrator::LambdaIntegrator(int n, const KernelQuadratureParams& qp, std::vector<double> r2)
    : n_(n), qp_(qp), r2_(std::move(r2)) {
    qp_.validate();
    gauss_legendre(qp_.nodesPerPanel, glx_, glw_);
    lcut_.resize(r2_.size());
    bound_.resize(r2_.size());

    // contour bound: |I(r2, w)| <= exp(-c|w|) * int_0^inf |F(x + ic)| dx
    std::vector<double> bx, bw;
    gauss_legendre(8, bx, bw);
    const int bpanels = 320;
    const double X = 80.0, hw = X / bpanels;
    std::vector<double> xs, ws;
    for (int p = 0; p < bpanels; ++p)
        for (std::size_t k = 0; k < bx.size(); ++k) {
            xs.push_back(hw * (p + 0.5 * (bx[k] + 1.0)));
            ws.push_back(0.5 * hw * bw[k]);
        }
    std::vector<double> logmod(xs.size()), recoth(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        std::complex<double> l(xs[k], kContourShift);
        std::complex<double> a = l / std::sinh(l);
        std::complex<double> b = l * std::cosh(l) / std::sinh(l);
        logmod[k] = n_ * std::log(std::abs(a));
        recoth[k] = b.real() / 4.0;
    }
    for (std::size_t i = 0; i < r2_.size(); ++i) {
        const double a = n_ + r2_[i] / 4.0;
        double L = std::min(qp_.Lambda, 2.0);
        while (L < qp_.Lambda && tail_bound(n_, a, L) > kTailTol) L += 0.5;
        lcut_[i] = std::min(L, qp_.Lambda);
        double s = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) s += ws[k] * std::exp(logmod[k] - r2_[i] * recoth[k]);
        bound_[i] = 2.0 * s;  // safety factor 2 on the numerical bound
    }
}

int LambdaIntegrator::panels_for(double w) const {
    double need = std::ceil(qp_.Lambda * 2.0 * std::abs(w) / kPi);
    return std::max(qp_.panels, static_cast<int>(need));
}

void LambdaIntegrator::row(double w, double* out, int refine, double* abs_out) const {
    const std::size_t m = r2_.size();
    std::vector<char> skip(m, 0);
    double lmax = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (std::exp(-kContourShift * std::abs(w)) * bound_[i] < kSkipTol) {
            skip[i] = 1;
            out[i] = 0.0;
            if (abs_out) abs_out[i] = 0.0;
        } else {
            lmax = std::max(lmax, lcut_[i]);
        }
    }
    if (lmax == 0.0) return;
    const int P = panels_for(w) * refine;
    const double width = qp_.Lambda / P;
    const int Puse = std::min(P, static_cast<int>(std::ceil(lmax / width)));
    const std::size_t q = glx_.size();
    std::vector<double> lam(Puse * q), A(Puse * q), B(Puse * q);
    for (int p = 0; p < Puse; ++p)
        for (std::size_t k = 0; k < q; ++k) {
            const double l = width * (p + 0.5 * (glx_[k] + 1.0));
            const std::size_t j = p * q + k;
            lam[j] = l;
            A[j] = 0.5 * width * glw_[k] * std::pow(l_over_sinh(l), n_) * std::cos(w * l);
            B[j] = l_coth(l) / 4.0;
        }
    for (std::size_t i = 0; i < m; ++i) {
        if (skip[i]) continue;
        const std::size_t nn = std::min<std::size_t>(Puse, static_cast<std::size_t>(std::ceil(lcut_[i] / width))) * q;
        const double r2 = r2_[i];
        double s = 0.0, sa = 0.0;
        if (r2 == 0.0) {
            for (std::size_t j = 0; j < nn; ++j) {
                s += A[j];
                sa += std::abs(A[j]);
            }
        } else {
            for (std::size_t j = 0; j < nn; ++j) {
                const double e = std::exp(-r2 * B[j]);
                s += A[j] * e;
                sa += std::abs(A[j]) * e;
            }
        }
        out[i] = s;
        if (abs_out) abs_out[i] = sa;
    }
}

namespace {

double checked_integral(int n, double r2, double w, const KernelQuadratureParams& qp) {
    LambdaIntegrator li(n, qp, {r2});
    double a, b, absb;
    li.row(w, &a, 1);
    li.row(w, &b, 2, &absb);
    if (std::abs(a - b) > 1e-9 * std::max(absb, 1e-300) && std::abs(a - b) > 1e-300) {
        std::ostringstream os;
        os << "kernel quadrature did not converge under panel refinement (|dI|=" << std::abs(a - b) << ")";
        throw std::runtime_error(os.str());
    }
    return b;
}

}  // namespace

double kernel_value(int n, double t, const HPoint& p, const KernelQuadratureParams& qp) {
    if (!(t > 0)) throw std::invalid_argument("kernel_value: t > 0 required");
    if (p.dim() != n) throw std::invalid_argument("kernel_value: point dimension differs from n");
    const double r2 = horizontal_sq(p) / t;
    const double w = p.tau / t / 4.0;
    double v = std::pow(t, -(n + 1)) * normalized_prefactor(n) * checked_integral(n, r2, w, qp);
    return clamp_dust(v, "kernel_value");
}

double explicit_formula_value(int n, double t, const HPoint& p, const KernelQuadratureParams& qp) {
    if (!(t > 0)) throw std::invalid_argument("explicit_formula_value: t > 0 required");
    if (p.dim() != n) throw std::invalid_argument("explicit_formula_value: point dimension differs from n");
    const double r2 = horizontal_sq(p) / t;
    const double w = p.tau / t;
    double v = std::pow(t, -(n + 1)) * printed_prefactor(n) * checked_integral(n, r2, w, qp);
    return clamp_dust(v, "explicit_formula_value");
}

// ---- cache ----

std::string kernel_cache_dir() {
    const char* env = std::getenv("HHEAT_KERNEL_CACHE");
    if (env) {
        std::string s(env);
        if (s == "off" || s.empty()) return "";
        return s;
    }
    return (std::filesystem::temp_directory_path() / "hheat-kernel-cache").string();
}

std::string kernel_cache_path(const std::string& key) {
    std::string dir = kernel_cache_dir();
    if (dir.empty()) return "";
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << "hk-" << std::hex << std::setw(16) << std::setfill('0') << h << ".bin";
    return (std::filesystem::path(dir) / os.str()).string();
}

namespace {
constexpr int kCacheVersion = 1;
}

std::string sample_cache_key(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp) {
    std::ostringstream os;
    os << std::setprecision(17) << "sampled-heat-kernel v" << kCacheVersion << " n=" << n << " t=" << t << " "
       << spec.describe() << " " << qp.key();
    return os.str();
}

namespace {


bool load_cached(const std::string& key, const GridSpec& spec, GridField& out) {
    std::string path = kernel_cache_path(key);
    if (path.empty() || !std::filesystem::exists(path)) return false;
    std::ifstream f(path, std::ios::binary);
    std::string magic, stored;
    if (!std::getline(f, magic) || magic != "HHEATKC 1") return false;
    if (!std::getline(f, stored) || stored != key) return false;
    try {
        GridField u = read_field(f);
        if (u.spec != spec) return false;
        out = std::move(u);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void store_cached(const std::string& key, const GridField& u) {
    std::string path = kernel_cache_path(key);
    if (path.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
    std::string tmp = path + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&u));
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) return;
        f << "HHEATKC 1\n" << key << "\n";
        write_field(u, f);
    }
    std::filesystem::rename(tmp, path, ec);
}

GridField sample_kernel_impl(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp,
                             bool* loaded) {
    if (!(t > 0)) throw std::invalid_argument("sample_kernel: t > 0 required");
    if (spec.n != n) throw std::invalid_argument("sample_kernel: spec dimension differs from n");
    spec.validate();
    qp.validate();
    const std::string key = sample_cache_key(n, t, spec, qp);
    GridField u;
    if (load_cached(key, spec, u)) {
        if (loaded) *loaded = true;
        return u;
    }
    if (loaded) *loaded = false;

    // distinct |z|^2 over columns, built from |index offsets| so mirrored
    // columns share bit-identical values
    const std::size_t C = spec.columns();
    std::vector<double> colr2(C);
    std::vector<int> ix(n), iy(n);
    for (std::size_t c = 0; c < C; ++c) {
        spec.column_indices(c, ix.data(), iy.data());
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double a = std::abs(ix[i] - spec.Nx / 2) * spec.hx();
            double b = std::abs(iy[i] - spec.Ny / 2) * spec.hy();
            s += a * a + b * b;
        }
        colr2[c] = s;
    }
    std::vector<double> uniq = colr2;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<std::size_t> colmap(C);
    for (std::size_t c = 0; c < C; ++c)
        colmap[c] = std::lower_bound(uniq.begin(), uniq.end(), colr2[c]) - uniq.begin();
    std::vector<double> scaled(uniq.size());
    for (std::size_t i = 0; i < uniq.size(); ++i) scaled[i] = uniq[i] / t;
    LambdaIntegrator li(n, qp, scaled);

    // rows indexed by |tau| offset 0..Ntau/2
    const int Nt = spec.Ntau, half = Nt / 2;
    std::vector<std::vector<double>> rows(half + 1, std::vector<double>(uniq.size()));
    const double pref = std::pow(t, -(n + 1)) * normalized_prefactor(n);
    parallel_for(half + 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            const double tau = r * spec.htau();
            li.row(tau / t / 4.0, rows[r].data());
            for (double& v : rows[r]) v = clamp_dust(pref * v, "sample_kernel");
        }
    });
    u = GridField(spec);
    for (std::size_t c = 0; c < C; ++c)
        for (int k = 0; k < Nt; ++k) u.at(c, k) = rows[std::abs(k - half)][colmap[c]];
    store_cached(key, u);
    return u;
}

}  // namespace

GridField sample_kernel(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp) {
    return sample_kernel_impl(n, t, spec, qp, nullptr);
}

GridField cell_average_kernel(int n, double t, const GridSpec& spec, const KernelQuadratureParams& qp) {
    if (!(t > 0)) throw std::invalid_argument("cell_average_kernel: t > 0 required");
    if (spec.n != n) throw std::invalid_argument("cell_average_kernel: spec dimension differs from n");
    spec.validate();
    qp.validate();
    std::vector<double> gx, gw;
    gauss_legendre(3, gx, gw);
    // horizontal offset combos: 3^(2n) per column
    std::size_t combos = 1;
    for (int a = 0; a < 2 * n; ++a) combos *= 3;
    const std::size_t C = spec.columns();
    std::vector<double> r2(C * combos), cw(combos);
    std::vector<int> ix(n), iy(n);
    for (std::size_t m = 0; m < combos; ++m) {
        double w = 1.0;
        for (std::size_t a = 0, r = m; a < static_cast<std::size_t>(2 * n); ++a, r /= 3) w *= 0.5 * gw[r % 3];
        cw[m] = w;
    }
    for (std::size_t c = 0; c < C; ++c) {
        spec.column_indices(c, ix.data(), iy.data());
        for (std::size_t m = 0; m < combos; ++m) {
            double s = 0.0;
            std::size_t r = m;
            for (int i = 0; i < n; ++i, r /= 3) {
                const double x = spec.xnode(ix[i]) + 0.5 * gx[r % 3] * spec.hx();
                s += x * x;
            }
            for (int i = 0; i < n; ++i, r /= 3) {
                const double y = spec.ynode(iy[i]) + 0.5 * gx[r % 3] * spec.hy();
                s += y * y;
            }
            r2[c * combos + m] = s;
        }
    }
    std::vector<double> uniq = r2;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<std::size_t> idx(r2.size());
    for (std::size_t i = 0; i < r2.size(); ++i) idx[i] = std::lower_bound(uniq.begin(), uniq.end(), r2[i]) - uniq.begin();
    std::vector<double> scaled(uniq.size());
    for (std::size_t i = 0; i < uniq.size(); ++i) scaled[i] = uniq[i] / t;
    LambdaIntegrator li(n, qp, scaled);

    // row j = 3k + q at tau = taunode(k) + gx[q] htau / 2
    const int Nt = spec.Ntau;
    std::vector<std::vector<double>> rows(3 * Nt, std::vector<double>(uniq.size()));
    const double pref = std::pow(t, -(n + 1)) * normalized_prefactor(n);
    parallel_for(rows.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            const double tau = spec.taunode(static_cast<int>(j / 3)) + 0.5 * gx[j % 3] * spec.htau();
            li.row(tau / t / 4.0, rows[j].data());
            for (double& v : rows[j]) v = clamp_dust(pref * v, "cell_average_kernel");
        }
    });
    GridField u(spec);
    for (std::size_t c = 0; c < C; ++c)
        for (int k = 0; k < Nt; ++k) {
            double acc = 0.0;
            for (int q = 0; q < 3; ++q) {
                const auto& row = rows[3 * k + q];
                double s = 0.0;
                for (std::size_t m = 0; m < combos; ++m) s += cw[m] * row[idx[c * combos + m]];
                acc += 0.5 * gw[q] * s;
            }
            u.at(c, k) = acc;
        }
    return u;
}

KernelInvariantReport check_kernel_invariants(const GridField& h1) {
    KernelInvariantReport r;
    const GridSpec& s = h1.spec;
    if (!h1.all_finite()) {
        r.ok = false;
        r.failed = "kernel.finite";
        return r;
    }
    r.mass = integrate_field(h1);
    r.min = h1.min();
    // pair node k with N - k on every axis (k >= 1)
    const std::size_t C = s.columns();
    std::vector<int> ix(s.n), iy(s.n), jx(s.n), jy(s.n);
    double maxv = std::max(h1.max(), 1e-300), sym = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        s.column_indices(c, ix.data(), iy.data());
        bool inside = true;
        for (int i = 0; i < s.n; ++i) {
            if (ix[i] == 0 || iy[i] == 0) inside = false;
            jx[i] = s.Nx - ix[i];
            jy[i] = s.Ny - iy[i];
        }
        if (!inside) continue;
        std::size_t cm = s.column_of(jx.data(), jy.data());
        for (int k = 1; k < s.Ntau; ++k) sym = std::max(sym, std::abs(h1.at(c, k) - h1.at(cm, s.Ntau - k)));
    }
    r.symmetry = sym / maxv;
    if (std::abs(r.mass - 1.0) > 1e-2) {
        r.ok = false;
        r.failed = "kernel.normalization";
    } else if (r.min < 0.0) {
        r.ok = false;
        r.failed = "kernel.positivity";
    } else if (r.symmetry > 1e-12) {
        r.ok = false;
        r.failed = "kernel.symmetry";
    }
    return r;
}

KernelTable tabulate_kernel(int n, const GridSpec& spec, const KernelQuadratureParams& qp) {
    KernelTable t;
    t.n = n;
    t.spec = spec;
    t.params = qp;
    t.values = sample_kernel_impl(n, 1.0, spec, qp, &t.from_cache);
    KernelInvariantReport r = check_kernel_invariants(t.values);
    if (!r.ok) {
        std::ostringstream os;
        os << "tabulate_kernel: invariant " << r.failed << " violated (mass=" << r.mass << ", min=" << r.min
           << ", symmetry=" << r.symmetry << ")";
        throw std::runtime_error(os.str());
    }
    return t;
}

// ---- convolution ----

namespace {
std::mutex g_fftw_mutex;  // planner is not thread safe

int nice_size(int m) {
    for (int s = m;; ++s) {
        int r = s;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return s;
    }
}
}  // namespace

// Two transform lengths: pairs whose sheared kernel support fits the short
// length without wrap-around use it, the rest use the long one (>= 3N + 2).
struct GroupConvolver::Impl {
    struct Level {
        int M = 0, Mh = 0;
        std::vector<double> tw_re, tw_im;  // exp(-2 pi i k / M)
        fftw_plan fwd = nullptr, bwd = nullptr;
    };
    struct KCol {
        std::vector<int> off_x, off_y;  // kernel column offsets from the centre
        int R = 0;                      // tau support half-width in index units
        // per level: transform of K and of K * exp(-i w_k)
        std::vector<double> kr[2], ki[2], k2r[2], k2i[2];
    };
    int N = 0;
    Level lv[2];
    std::vector<KCol> cols;
};

GroupConvolver::GroupConvolver(const GridField& f) : spec_(f.spec), impl_(std::make_unique<Impl>()) {
    Impl& I = *impl_;
    const GridSpec& s = spec_;
    I.N = s.Ntau;
    I.lv[0].M = nice_size(2 * I.N);
    I.lv[1].M = nice_size(3 * I.N + 2);
    for (auto& L : I.lv) {
        L.Mh = L.M / 2 + 1;
        L.tw_re.resize(L.M);
        L.tw_im.resize(L.M);
        for (int k = 0; k < L.M; ++k) {
            L.tw_re[k] = std::cos(2.0 * kPi * k / L.M);
            L.tw_im[k] = -std::sin(2.0 * kPi * k / L.M);
        }
        double* rin = fftw_alloc_real(L.M);
        fftw_complex* cout = fftw_alloc_complex(L.Mh);
        {
            std::lock_guard<std::mutex> lk(g_fftw_mutex);
            L.fwd = fftw_plan_dft_r2c_1d(L.M, rin, cout, FFTW_ESTIMATE);
            L.bwd = fftw_plan_dft_c2r_1d(L.M, cout, rin, FFTW_ESTIMATE);
        }
        fftw_free(rin);
        fftw_free(cout);
    }
    // columns whose entries all lie below 1e-15 of the peak are dropped, as
    // are entries below that floor at the column ends
    double peak = 0.0;
    for (double v : f.values) peak = std::max(peak, std::abs(v));
    const double floor_v = 1e-15 * peak;
    std::vector<int> ix(s.n), iy(s.n);
    for (std::size_t c = 0; c < s.columns(); ++c) {
        int R = -1;
        for (int k = 0; k < I.N; ++k)
            if (std::abs(f.at(c, k)) > floor_v) R = std::max(R, std::abs(k - I.N / 2));
        if (R < 0) continue;
        Impl::KCol kc;
        s.column_indices(c, ix.data(), iy.data());
        for (int i = 0; i < s.n; ++i) {
            kc.off_x.push_back(ix[i] - s.Nx / 2);
            kc.off_y.push_back(iy[i] - s.Ny / 2);
        }
        kc.R = R;
        for (int l = 0; l < 2; ++l) {
            const auto& L = I.lv[l];
            double* rin = fftw_alloc_real(L.M);
            fftw_complex* cout = fftw_alloc_complex(L.Mh);
            std::fill(rin, rin + L.M, 0.0);
            for (int k = 0; k < I.N; ++k) {
                const int r = k - I.N / 2;
                if (std::abs(r) <= R) rin[(r + L.M) % L.M] = f.at(c, k);
            }
            fftw_execute_dft_r2c(L.fwd, rin, cout);
            kc.kr[l].resize(L.Mh);
            kc.ki[l].resize(L.Mh);
            kc.k2r[l].resize(L.Mh);
            kc.k2i[l].resize(L.Mh);
            for (int k = 0; k < L.Mh; ++k) {
                const double a = cout[k][0], b = cout[k][1];
                kc.kr[l][k] = a;
                kc.ki[l][k] = b;
                kc.k2r[l][k] = a * L.tw_re[k] - b * L.tw_im[k];
                kc.k2i[l][k] = a * L.tw_im[k] + b * L.tw_re[k];
            }
            fftw_free(rin);
            fftw_free(cout);
        }
        I.cols.push_back(std::move(kc));
    }
}

GroupConvolver::~GroupConvolver() {
    std::lock_guard<std::mutex> lk(g_fftw_mutex);
    for (auto& L : impl_->lv) {
        if (L.fwd) fftw_destroy_plan(L.fwd);
        if (L.bwd) fftw_destroy_plan(L.bwd);
    }
}

GridField GroupConvolver::apply(const GridField& g) const {
    if (g.spec != spec_) throw std::invalid_argument("group_convolve: grid specs differ");
    const Impl& I = *impl_;
    const GridSpec& s = spec_;
    const int n = s.n, N = I.N;
    const std::size_t C = s.columns();
    const double cv = s.cell_volume();
    const double ht = s.htau();

    // transforms of the source columns at both lengths
    std::vector<double> Gr[2], Gi[2];
    std::vector<char> nonzero(C, 0);
    for (std::size_t c = 0; c < C; ++c)
        for (int k = 0; k < N && !nonzero[c]; ++k) nonzero[c] = g.at(c, k) != 0.0;
    for (int l = 0; l < 2; ++l) {
        const auto& L = I.lv[l];
        Gr[l].assign(C * L.Mh, 0.0);
        Gi[l].assign(C * L.Mh, 0.0);
        parallel_for(C, [&](std::size_t b, std::size_t e) {
            double* rin = fftw_alloc_real(L.M);
            fftw_complex* cout = fftw_alloc_complex(L.Mh);
            for (std::size_t c = b; c < e; ++c) {
                if (!nonzero[c]) continue;
                std::fill(rin, rin + L.M, 0.0);
                for (int k = 0; k < N; ++k) rin[k] = g.at(c, k);
                fftw_execute_dft_r2c(L.fwd, rin, cout);
                for (int k = 0; k < L.Mh; ++k) {
                    Gr[l][c * L.Mh + k] = cout[k][0];
                    Gi[l][c * L.Mh + k] = cout[k][1];
                }
            }
            fftw_free(rin);
            fftw_free(cout);
        });
    }
    std::vector<double> xs(C * n), ys(C * n);
    std::vector<int> cix(C * n), ciy(C * n);
    for (std::size_t c = 0; c < C; ++c) {
        s.column_indices(c, &cix[c * n], &ciy[c * n]);
        for (int i = 0; i < n; ++i) {
            xs[c * n + i] = s.xnode(cix[c * n + i]);
            ys[c * n + i] = s.ynode(ciy[c * n + i]);
        }
    }

    GridField out(s);
    parallel_for(C, [&](std::size_t b, std::size_t e) {
        std::vector<double> accr[2], acci[2];
        double* rout[2];
        fftw_complex* cin[2];
        for (int l = 0; l < 2; ++l) {
            accr[l].resize(I.lv[l].Mh);
            acci[l].resize(I.lv[l].Mh);
            rout[l] = fftw_alloc_real(I.lv[l].M);
            cin[l] = fftw_alloc_complex(I.lv[l].Mh);
        }
        std::vector<int> jx(n), jy(n);
        for (std::size_t c = b; c < e; ++c) {
            bool used[2] = {false, false};
            for (int l = 0; l < 2; ++l) {
                std::fill(accr[l].begin(), accr[l].end(), 0.0);
                std::fill(acci[l].begin(), acci[l].end(), 0.0);
            }
            for (const auto& kc : I.cols) {
                bool ok = true;
                for (int i = 0; i < n && ok; ++i) {
                    jx[i] = cix[c * n + i] - kc.off_x[i];
                    jy[i] = ciy[c * n + i] - kc.off_y[i];
                    ok = jx[i] >= 0 && jx[i] < s.Nx && jy[i] >= 0 && jy[i] < s.Ny;
                }
                if (!ok) continue;
                const std::size_t src = s.column_of(jx.data(), jy.data());
                if (!nonzero[src]) continue;
                double twist = 0.0;
                for (int i = 0; i < n; ++i)
                    twist += xs[c * n + i] * ys[src * n + i] - xs[src * n + i] * ys[c * n + i];
                const double sigma = 2.0 * twist / ht;
                const double mf = std::floor(sigma);
                const double w = sigma - mf;
                const long m = static_cast<long>(mf);
                const long lo = m - kc.R, hi = m + kc.R + 1;  // support of the sheared kernel
                if (lo > N - 1 || hi < -(N - 1)) continue;
                const int l = (hi <= I.lv[0].M - N && lo >= -(I.lv[0].M - N)) ? 0 : 1;
                const auto& L = I.lv[l];
                used[l] = true;
                // K'_k = exp(-i w_k m) ((1 - w) K_k + w K_k exp(-i w_k))
                const double* gr = &Gr[l][src * L.Mh];
                const double* gi = &Gi[l][src * L.Mh];
                const double* twr = L.tw_re.data();
                const double* twi = L.tw_im.data();
                const double *kr = kc.kr[l].data(), *ki = kc.ki[l].data();
                const double *k2r = kc.k2r[l].data(), *k2i = kc.k2i[l].data();
                double* ar = accr[l].data();
                double* ai = acci[l].data();
                const double w0 = 1.0 - w;
                const long M = L.M;
                const long step = ((m % M) + M) % M;
                long idx = 0;
                for (int k = 0; k < L.Mh; ++k) {
                    const double br = w0 * kr[k] + w * k2r[k];
                    const double bi = w0 * ki[k] + w * k2i[k];
                    const double tr = twr[idx], ti = twi[idx];
                    const double xr = gr[k] * tr - gi[k] * ti;
                    const double xi = gr[k] * ti + gi[k] * tr;
                    ar[k] += br * xr - bi * xi;
                    ai[k] += br * xi + bi * xr;
                    idx += step;
                    if (idx >= M) idx -= M;
                }
            }
            double* o = &out.values[c * N];
            for (int l = 0; l < 2; ++l) {
                if (!used[l]) continue;
                const auto& L = I.lv[l];
                for (int k = 0; k < L.Mh; ++k) {
                    cin[l][k][0] = accr[l][k];
                    cin[l][k][1] = acci[l][k];
                }
                fftw_execute_dft_c2r(L.bwd, cin[l], rout[l]);
                for (int i = 0; i < N; ++i) o[i] += rout[l][i] / L.M * cv;
            }
        }
        for (int l = 0; l < 2; ++l) {
            fftw_free(rout[l]);
            fftw_free(cin[l]);
        }
    });
    return out;
}

GridField group_convolve(const GridField& f, const GridField& g) {
    if (f.spec != g.spec) throw std::invalid_argument("group_convolve: grid specs differ");
    GroupConvolver conv(f);
    return conv.apply(g);
}

// ---- semigroup ----

HeatSemigroup::HeatSemigroup(const GridSpec& spec, const KernelQuadratureParams& qp, bool renormalize)
    : spec_(spec), qp_(qp), renorm_(renormalize) {}

HeatSemigroup::Entry& HeatSemigroup::entry(double t) {
    if (!(t > 0)) throw std::invalid_argument("heat semigroup: t > 0 required");
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    Entry e;
    e.kernel = sample_kernel(spec_.n, t, spec_, qp_);
    const double mass = integrate_field(e.kernel);
    e.deficit = 1.0 - mass;
    if (renorm_ && mass > 0) e.kernel *= 1.0 / mass;
    e.conv = std::make_unique<GroupConvolver>(e.kernel);
    return cache_.emplace(t, std::move(e)).first->second;
}

const GridField& HeatSemigroup::kernel(double t) { return entry(t).kernel; }
double HeatSemigroup::mass_deficit(double t) { return entry(t).deficit; }

GridField HeatSemigroup::apply(const GridField& f, double t) {
    Entry& e = entry(t);
    GridField out = e.conv->apply(f);
    if (f.min() >= 0.0) {
        // positivity: convolution round-off below the clamp tolerance is zeroed
        const double tol = 1e-12 * std::max(f.max(), 1e-300);
        for (double& v : out.values) {
            if (v < 0.0) {
                if (v > -tol)
                    v = 0.0;
                else
                    throw std::runtime_error("heat semigroup produced a negative value beyond round-off");
            }
        }
    }
    return out;
}

GridField heat_semigroup_apply(const GridField& f, double t, const KernelQuadratureParams& qp) {
    if (!(t > 0)) throw std::invalid_argument("heat_semigroup_apply: t > 0 required");
    HeatSemigroup S(f.spec, qp, true);
    return S.apply(f, t);
}

// ---- bounds and slopes ----

GaussianBoundFit gaussian_bound_fit(const KernelTable& table, const std::vector<std::pair<double, HPoint>>& samples) {
    const int n = table.n;
    const int Q = 2 * n + 2;
    std::vector<double> g(samples.size()), rho(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double t = samples[i].first;
        const HPoint& p = samples[i].second;
        const double v = kernel_value(n, t, p, table.params);
        if (!(v > 0)) throw std::runtime_error("gaussian_bound_fit: non-positive kernel value at a sample");
        g[i] = v * std::pow(t, Q / 2.0);
        const double k = koranyi_norm(p);
        rho[i] = k * k / t;
    }
    GaussianBoundFit fit{};
    // t^{Q/2} h_t peaks at the origin and is constant there
    fit.CUp = std::max(*std::max_element(g.begin(), g.end()), kernel_value(n, 1.0, HPoint(n), table.params));
    fit.cLow = fit.CUp;
    fit.cUp = std::numeric_limits<double>::infinity();
    fit.CLow = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (rho[i] <= 0) continue;
        const double r = std::log(fit.CUp / g[i]) / rho[i];
        fit.cUp = std::min(fit.cUp, r);
        fit.CLow = std::max(fit.CLow, r);
    }
    return fit;
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& v) {
    const std::size_t m = t.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = std::log(t[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

GradientCheck gradient_l1_check(int n, const GridSpec& spec, const std::vector<double>& tList,
                                const KernelQuadratureParams& qp) {
    GradientCheck r;
    for (double t : tList) {
        GridField h = sample_kernel(n, t, spec, qp);
        auto grad = apply_horizontal_gradient(h);
        GridField dt = apply_tau_derivative(h);
        double sg = 0.0, st = 0.0;
        for (std::size_t i = 0; i < h.values.size(); ++i) {
            double q = 0.0;
            for (const auto& gcomp : grad) q += gcomp.values[i] * gcomp.values[i];
            sg += std::sqrt(q);
            st += std::abs(dt.values[i]);
        }
        r.t.push_back(t);
        r.grad_l1.push_back(sg * spec.cell_volume());
        r.tau_l1.push_back(st * spec.cell_volume());
    }
    r.grad_slope = loglog_slope(r.t, r.grad_l1);
    r.tau_slope = loglog_slope(r.t, r.tau_l1);
    return r;
}

}  // namespace hheat
