#include "hheat/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hheat/parallel.hpp"

namespace hheat {

GridSpec::GridSpec(int n_, double lx, double ly, double lt, int nx, int ny, int nt)
    : n(n_), Lx(lx), Ly(ly), Ltau(lt), Nx(nx), Ny(ny), Ntau(nt) {
    validate();
}

void GridSpec::validate() const {
    if (n < 1) throw std::invalid_argument("GridSpec: n >= 1 required");
    if (!(Lx > 0 && Ly > 0 && Ltau > 0)) throw std::invalid_argument("GridSpec: half-widths must be positive");
    for (int N : {Nx, Ny, Ntau})
        if (N < 8 || N % 2 != 0) throw std::invalid_argument("GridSpec: point counts must be even and >= 8");
}

double GridSpec::cell_volume() const {
    return std::pow(hx(), n) * std::pow(hy(), n) * htau();
}

std::size_t GridSpec::columns() const {
    std::size_t c = 1;
    for (int i = 0; i < n; ++i) c *= static_cast<std::size_t>(Nx) * Ny;
    return c;
}

void GridSpec::column_indices(std::size_t c, int* ix, int* iy) const {
    for (int i = n - 1; i >= 0; --i) {
        iy[i] = static_cast<int>(c % Ny);
        c /= Ny;
    }
    for (int i = n - 1; i >= 0; --i) {
        ix[i] = static_cast<int>(c % Nx);
        c /= Nx;
    }
}

std::size_t GridSpec::column_of(const int* ix, const int* iy) const {
    std::size_t c = 0;
    for (int i = 0; i < n; ++i) c = c * Nx + ix[i];
    for (int i = 0; i < n; ++i) c = c * Ny + iy[i];
    return c;
}

HPoint GridSpec::node(std::size_t idx) const {
    std::vector<int> ix(n), iy(n);
    column_indices(idx / Ntau, ix.data(), iy.data());
    HPoint p(n);
    for (int i = 0; i < n; ++i) {
        p.x[i] = xnode(ix[i]);
        p.y[i] = ynode(iy[i]);
    }
    p.tau = taunode(static_cast<int>(idx % Ntau));
    return p;
}

bool GridSpec::operator==(const GridSpec& o) const {
    return n == o.n && Lx == o.Lx && Ly == o.Ly && Ltau == o.Ltau && Nx == o.Nx && Ny == o.Ny &&
           Ntau == o.Ntau;
}

std::string GridSpec::describe() const {
    std::ostringstream os;
    os << "n=" << n << " L=(" << Lx << "," << Ly << "," << Ltau << ") N=(" << Nx << "," << Ny << ","
       << Ntau << ")";
    return os.str();
}

GridSpec GridSpec::refined() const {
    return GridSpec(n, Lx, Ly, Ltau, 2 * Nx, 2 * Ny, 2 * Ntau);
}

GridField::GridField(const GridSpec& s, double fill) : spec(s), values(s.size(), fill) {}

double GridField::min() const { return *std::min_element(values.begin(), values.end()); }
double GridField::max() const { return *std::max_element(values.begin(), values.end()); }

bool GridField::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

GridField& GridField::operator*=(double c) {
    for (double& v : values) v *= c;
    return *this;
}

GridField& GridField::operator+=(const GridField& o) {
    if (o.spec != spec) throw std::invalid_argument("GridField: spec mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

GridField& GridField::operator-=(const GridField& o) {
    if (o.spec != spec) throw std::invalid_argument("GridField: spec mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double c, GridField a) { return a *= c; }

GridField sample_function(const GridSpec& spec, const std::function<double(const HPoint&)>& f) {
    GridField u(spec);
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        HPoint p = spec.node(i);
        double v = f(p);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "sample_function: non-finite value at node " << i << " (x=" << p.x[0] << ", y=" << p.y[0]
               << ", tau=" << p.tau << ")";
            throw std::runtime_error(os.str());
        }
        u.values[i] = v;
    }
    return u;
}

double integrate_field(const GridField& u) {
    double s = 0.0;
    for (double v : u.values) s += v;
    return s * u.spec.cell_volume();
}

double lp_norm_pow(const GridField& u, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
    double s = 0.0;
    if (p == 1.0) {
        for (double v : u.values) s += std::abs(v);
    } else if (p == 2.0) {
        for (double v : u.values) s += v * v;
    } else {
        for (double v : u.values) s += std::pow(std::abs(v), p);
    }
    return s * u.spec.cell_volume();
}

double lp_norm(const GridField& u, double p) {
    if (std::isinf(p) && p > 0) {
        double m = 0.0;
        for (double v : u.values) m = std::max(m, std::abs(v));
        return m;
    }
    return std::pow(lp_norm_pow(u, p), 1.0 / p);
}

namespace {

// Geometry of axis `a` (0..n-1 x axes, n..2n-1 y axes, 2n the tau axis).
struct Axis {
    std::size_t len, stride, outer;
    double h;
};

Axis axis_of(const GridSpec& s, int a) {
    Axis ax{};
    std::vector<std::size_t> sizes;
    for (int i = 0; i < s.n; ++i) sizes.push_back(s.Nx);
    for (int i = 0; i < s.n; ++i) sizes.push_back(s.Ny);
    sizes.push_back(s.Ntau);
    ax.len = sizes[a];
    ax.stride = 1;
    for (std::size_t k = a + 1; k < sizes.size(); ++k) ax.stride *= sizes[k];
    ax.outer = s.size() / (ax.len * ax.stride);
    ax.h = a < s.n ? s.hx() : (a < 2 * s.n ? s.hy() : s.htau());
    return ax;
}

// order 1: central in the interior, one-sided second order at the ends.
// order 2: central three-point, one-sided four-point at the ends.
GridField axis_derivative(const GridField& u, int a, int order) {
    Axis ax = axis_of(u.spec, a);
    GridField out(u.spec);
    const double* in = u.values.data();
    double* o = out.values.data();
    const std::size_t L = ax.len, S = ax.stride;
    const double inv = order == 1 ? 1.0 / (2 * ax.h) : 1.0 / (ax.h * ax.h);
    parallel_for(ax.outer, [&](std::size_t b, std::size_t e) {
        for (std::size_t ou = b; ou < e; ++ou)
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t base = ou * L * S + s;
                auto f = [&](std::size_t i) { return in[base + i * S]; };
                if (order == 1) {
                    o[base] = (-3 * f(0) + 4 * f(1) - f(2)) * inv;
                    for (std::size_t i = 1; i + 1 < L; ++i) o[base + i * S] = (f(i + 1) - f(i - 1)) * inv;
                    o[base + (L - 1) * S] = (3 * f(L - 1) - 4 * f(L - 2) + f(L - 3)) * inv;
                } else {
                    o[base] = (2 * f(0) - 5 * f(1) + 4 * f(2) - f(3)) * inv;
                    for (std::size_t i = 1; i + 1 < L; ++i)
                        o[base + i * S] = (f(i + 1) - 2 * f(i) + f(i - 1)) * inv;
                    o[base + (L - 1) * S] = (2 * f(L - 1) - 5 * f(L - 2) + 4 * f(L - 3) - f(L - 4)) * inv;
                }
            }
    });
    return out;
}

// coordinate of horizontal axis a at every node, evaluated lazily per column
struct ColumnCoords {
    const GridSpec& s;
    std::vector<double> xs, ys;  // columns * n each
    explicit ColumnCoords(const GridSpec& sp) : s(sp) {
        std::size_t C = s.columns();
        xs.resize(C * s.n);
        ys.resize(C * s.n);
        std::vector<int> ix(s.n), iy(s.n);
        for (std::size_t c = 0; c < C; ++c) {
            s.column_indices(c, ix.data(), iy.data());
            for (int i = 0; i < s.n; ++i) {
                xs[c * s.n + i] = s.xnode(ix[i]);
                ys[c * s.n + i] = s.ynode(iy[i]);
            }
        }
    }
};

}  // namespace

GridField apply_tau_derivative(const GridField& u) { return axis_derivative(u, 2 * u.spec.n, 1); }

std::vector<GridField> apply_horizontal_gradient(const GridField& u) {
    const GridSpec& s = u.spec;
    const int n = s.n;
    GridField dt = apply_tau_derivative(u);
    ColumnCoords cc(s);
    std::vector<GridField> out;
    for (int a = 0; a < 2 * n; ++a) {
        GridField d = axis_derivative(u, a, 1);
        const int i = a % n;
        const bool isX = a < n;
        for (std::size_t c = 0; c < s.columns(); ++c) {
            // X_i = d/dx_i - 2 y_i d/dtau, Y_i = d/dy_i + 2 x_i d/dtau
            const double coef = isX ? -2.0 * cc.ys[c * n + i] : 2.0 * cc.xs[c * n + i];
            for (int k = 0; k < s.Ntau; ++k) d.at(c, k) += coef * dt.at(c, k);
        }
        out.push_back(std::move(d));
    }
    return out;
}

GridField apply_sublaplacian(const GridField& u) {
    const GridSpec& s = u.spec;
    const int n = s.n;
    ColumnCoords cc(s);
    GridField out(s);
    for (int a = 0; a < 2 * n; ++a) out += axis_derivative(u, a, 2);
    GridField dtt = axis_derivative(u, 2 * n, 2);
    GridField dt = axis_derivative(u, 2 * n, 1);
    std::vector<GridField> dxt, dyt;
    for (int i = 0; i < n; ++i) {
        dxt.push_back(axis_derivative(dt, i, 1));
        dyt.push_back(axis_derivative(dt, n + i, 1));
    }
    for (std::size_t c = 0; c < s.columns(); ++c) {
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) r2 += cc.xs[c * n + i] * cc.xs[c * n + i] + cc.ys[c * n + i] * cc.ys[c * n + i];
        for (int k = 0; k < s.Ntau; ++k) {
            double v = 4.0 * r2 * dtt.at(c, k);
            for (int i = 0; i < n; ++i)
                v += 4.0 * (cc.xs[c * n + i] * dyt[i].at(c, k) - cc.ys[c * n + i] * dxt[i].at(c, k));
            out.at(c, k) += v;
        }
    }
    return out;
}

double interpolate(const GridField& u, const HPoint& p) {
    const GridSpec& s = u.spec;
    if (p.dim() != s.n) throw std::invalid_argument("interpolate: dimension mismatch");
    const int D = 2 * s.n + 1;
    std::vector<int> lo(D);
    std::vector<double> w(D);
    std::vector<int> N(D);
    for (int a = 0; a < D; ++a) {
        double coord, h;
        if (a < s.n) {
            coord = p.x[a];
            h = s.hx();
            N[a] = s.Nx;
        } else if (a < 2 * s.n) {
            coord = p.y[a - s.n];
            h = s.hy();
            N[a] = s.Ny;
        } else {
            coord = p.tau;
            h = s.htau();
            N[a] = s.Ntau;
        }
        double g = coord / h + N[a] / 2;
        if (g < 0.0 || g > N[a] - 1) return 0.0;
        int i = std::min(static_cast<int>(std::floor(g)), N[a] - 2);
        lo[a] = i;
        w[a] = g - i;
    }
    double acc = 0.0;
    std::vector<int> ix(s.n), iy(s.n);
    for (int corner = 0; corner < (1 << D); ++corner) {
        double wt = 1.0;
        int kt = 0;
        for (int a = 0; a < D; ++a) {
            int bit = (corner >> a) & 1;
            wt *= bit ? w[a] : 1.0 - w[a];
            int idx = lo[a] + bit;
            if (a < s.n)
                ix[a] = idx;
            else if (a < 2 * s.n)
                iy[a - s.n] = idx;
            else
                kt = idx;
        }
        if (wt == 0.0) continue;
        acc += wt * u.at(s.column_of(ix.data(), iy.data()), kt);
    }
    return acc;
}

namespace {
const char kMagic[8] = {'H', 'H', 'E', 'A', 'T', 'G', 'F', '1'};
}

void write_field(const GridField& u, std::ostream& f) {
    f.write(kMagic, 8);
    const GridSpec& s = u.spec;
    int32_t ints[4] = {s.n, s.Nx, s.Ny, s.Ntau};
    double dbl[3] = {s.Lx, s.Ly, s.Ltau};
    f.write(reinterpret_cast<const char*>(ints), sizeof ints);
    f.write(reinterpret_cast<const char*>(dbl), sizeof dbl);
    f.write(reinterpret_cast<const char*>(u.values.data()), u.values.size() * sizeof(double));
}

GridField read_field(std::istream& f) {
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("read_field: bad magic");
    int32_t ints[4];
    double dbl[3];
    f.read(reinterpret_cast<char*>(ints), sizeof ints);
    f.read(reinterpret_cast<char*>(dbl), sizeof dbl);
    if (!f) throw std::runtime_error("read_field: truncated header");
    GridSpec s(ints[0], dbl[0], dbl[1], dbl[2], ints[1], ints[2], ints[3]);
    GridField u(s);
    f.read(reinterpret_cast<char*>(u.values.data()), u.values.size() * sizeof(double));
    if (!f) throw std::runtime_error("read_field: truncated values");
    return u;
}

void write_field(const GridField& u, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_field: cannot open " + path);
    write_field(u, f);
    if (!f) throw std::runtime_error("write_field: write failed for " + path);
}

GridField read_field(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_field: cannot open " + path);
    return read_field(f);
}

}  // namespace hheat
