#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hheat/hgroup.hpp"

namespace hheat {

// Node k on an axis of half-width L with N points sits at (k - N/2) * h,
// h = 2L/N. The origin is a node, so horizontal differences of nodes are
// nodes again.
struct GridSpec {
    int n = 1;
    double Lx = 6, Ly = 6, Ltau = 40;
    int Nx = 32, Ny = 32, Ntau = 128;

    GridSpec() = default;
    GridSpec(int n_, double lx, double ly, double lt, int nx, int ny, int nt);

    double hx() const { return 2 * Lx / Nx; }
    double hy() const { return 2 * Ly / Ny; }
    double htau() const { return 2 * Ltau / Ntau; }
    double cell_volume() const;

    // number of horizontal columns (Nx^n * Ny^n) and total nodes
    std::size_t columns() const;
    std::size_t size() const { return columns() * static_cast<std::size_t>(Ntau); }

    double xnode(int k) const { return (k - Nx / 2) * hx(); }
    double ynode(int k) const { return (k - Ny / 2) * hy(); }
    double taunode(int k) const { return (k - Ntau / 2) * htau(); }

    // Column c decodes to indices (ix_1..ix_n, iy_1..iy_n), row-major with
    // ix_1 slowest.
    void column_indices(std::size_t c, int* ix, int* iy) const;
    std::size_t column_of(const int* ix, const int* iy) const;
    HPoint node(std::size_t idx) const;

    void validate() const;
    bool operator==(const GridSpec& o) const;
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
    std::string describe() const;

    // spacings halved, same box
    GridSpec refined() const;
};

struct GridField {
    GridSpec spec;
    std::vector<double> values;

    GridField() = default;
    explicit GridField(const GridSpec& s, double fill = 0.0);

    double& at(std::size_t col, int k) { return values[col * spec.Ntau + k]; }
    double at(std::size_t col, int k) const { return values[col * spec.Ntau + k]; }

    double min() const;
    double max() const;
    bool all_finite() const;

    GridField& operator*=(double c);
    GridField& operator+=(const GridField& o);
    GridField& operator-=(const GridField& o);
};

GridField operator-(GridField a, const GridField& b);
GridField operator*(double c, GridField a);

GridField sample_function(const GridSpec& spec, const std::function<double(const HPoint&)>& f);
double integrate_field(const GridField& u);
// p = infinity for the max norm
double lp_norm(const GridField& u, double p);
double lp_norm_pow(const GridField& u, double p);  // sum |u|^p * cellVolume

// Returns X_1..X_n, Y_1..Y_n applied to u.
std::vector<GridField> apply_horizontal_gradient(const GridField& u);
GridField apply_tau_derivative(const GridField& u);
GridField apply_sublaplacian(const GridField& u);

// Multilinear interpolation, zero outside the node hull.
double interpolate(const GridField& u, const HPoint& p);

// Binary format: 8-byte magic "HHEATGF1", int32 n, Nx, Ny, Ntau, float64 Lx,
// Ly, Ltau, then size() float64 values, tau fastest.
void write_field(const GridField& u, const std::string& path);
GridField read_field(const std::string& path);
void write_field(const GridField& u, std::ostream& os);
GridField read_field(std::istream& is);

}  // namespace hheat
