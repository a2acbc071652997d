#include "hheat/montecarlo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hheat/parallel.hpp"

namespace hheat {

void McConfig::validate() const {
    if (n < 1) throw std::invalid_argument("montecarlo: n >= 1 required");
    if (paths < 1) throw std::invalid_argument("montecarlo: paths >= 1 required");
    if (substeps < 1) throw std::invalid_argument("montecarlo: substeps >= 1 required");
    if (!(t > 0)) throw std::invalid_argument("montecarlo: t > 0 required");
    if (hist.n != n) throw std::invalid_argument("montecarlo: histogram grid dimension differs from n");
    hist.validate();
}

long McConfig::steps() const { return std::max(1L, std::lround(std::ceil(t * substeps - 1e-9))); }

HPoint Ensemble::at(std::size_t i) const {
    const int d = 2 * n + 1;
    HPoint p(n);
    const double* v = &data[i * d];
    for (int k = 0; k < n; ++k) {
        p.x[k] = v[k];
        p.y[k] = v[n + k];
    }
    p.tau = v[2 * n];
    return p;
}

namespace {

// Fine paths with cfg.substeps; when coarse is given, also the paths with half
// as many substeps driven by the same Brownian increments.
Ensemble simulate(const McConfig& cfg, Ensemble* coarse) {
    cfg.validate();
    const int n = cfg.n, d = 2 * n + 1;
    const long steps = cfg.steps();
    if (coarse && steps % 2) throw std::invalid_argument("montecarlo: coupled run needs an even number of substeps");
    const double sd = std::sqrt(2.0 * cfg.t / steps);  // sqrt(2) dB
    Ensemble e;
    e.n = n;
    e.data.assign(static_cast<std::size_t>(cfg.paths) * d, 0.0);
    if (coarse) {
        coarse->n = n;
        coarse->data.assign(e.data.size(), 0.0);
    }
    const int W = workers();
    const std::size_t P = cfg.paths;
    // one stream per worker block, contiguous blocks
    parallel_for(W, [&](std::size_t wb, std::size_t we) {
        for (std::size_t w = wb; w < we; ++w) {
            const std::size_t b = P * w / W, en = P * (w + 1) / W;
            std::seed_seq ss{static_cast<uint32_t>(cfg.seed), static_cast<uint32_t>(cfg.seed >> 32),
                             static_cast<uint32_t>(w), static_cast<uint32_t>(W)};
            std::mt19937_64 rng(ss);
            std::normal_distribution<double> G(0.0, sd);
            std::vector<double> dx(n), dy(n), cx(n), cy(n);
            for (std::size_t i = b; i < en; ++i) {
                double* v = &e.data[i * d];
                double* c = coarse ? &coarse->data[i * d] : nullptr;
                for (long s = 0; s < steps; ++s) {
                    double dtau = 0.0;
                    for (int k = 0; k < n; ++k) {
                        dx[k] = G(rng);
                        dy[k] = G(rng);
                        dtau += v[k] * dy[k] - v[n + k] * dx[k];
                    }
                    for (int k = 0; k < n; ++k) {
                        v[k] += dx[k];
                        v[n + k] += dy[k];
                    }
                    v[2 * n] += 2.0 * dtau;
                    if (!c) continue;
                    for (int k = 0; k < n; ++k) {
                        cx[k] = (s % 2 ? cx[k] : 0.0) + dx[k];
                        cy[k] = (s % 2 ? cy[k] : 0.0) + dy[k];
                    }
                    if (s % 2 == 0) continue;
                    double ct = 0.0;
                    for (int k = 0; k < n; ++k) ct += c[k] * cy[k] - c[n + k] * cx[k];
                    for (int k = 0; k < n; ++k) {
                        c[k] += cx[k];
                        c[n + k] += cy[k];
                    }
                    c[2 * n] += 2.0 * ct;
                }
            }
        }
    });
    return e;
}

}  // namespace

Ensemble sample_paths(const McConfig& cfg) { return simulate(cfg, nullptr); }

std::pair<Ensemble, Ensemble> sample_paths_coupled(const McConfig& cfg) {
    Ensemble coarse;
    Ensemble fine = simulate(cfg, &coarse);
    return {std::move(fine), std::move(coarse)};
}

namespace {
int cell_index(double v, double h, int N) {
    const double k = std::floor(v / h + N / 2 + 0.5);
    if (k < 0 || k >= N) return -1;
    return static_cast<int>(k);
}
}  // namespace

DensityEstimate estimate_density(const Ensemble& e, const GridSpec& spec) {
    if (e.size() == 0) throw std::invalid_argument("estimate_density: empty ensemble");
    if (spec.n != e.n) throw std::invalid_argument("estimate_density: dimension mismatch");
    spec.validate();
    const int n = e.n, d = 2 * n + 1;
    const int W = workers();
    std::vector<std::vector<long>> local(W);
    const std::size_t P = e.size();
    parallel_for(W, [&](std::size_t wb, std::size_t we) {
        std::vector<int> ix(n), iy(n);
        for (std::size_t w = wb; w < we; ++w) {
            auto& h = local[w];
            h.assign(spec.size(), 0);
            for (std::size_t i = P * w / W; i < P * (w + 1) / W; ++i) {
                const double* v = &e.data[i * d];
                bool ok = true;
                for (int k = 0; k < n && ok; ++k) {
                    ix[k] = cell_index(v[k], spec.hx(), spec.Nx);
                    iy[k] = cell_index(v[n + k], spec.hy(), spec.Ny);
                    ok = ix[k] >= 0 && iy[k] >= 0;
                }
                const int it = cell_index(v[2 * n], spec.htau(), spec.Ntau);
                if (!ok || it < 0) continue;
                ++h[spec.column_of(ix.data(), iy.data()) * spec.Ntau + it];
            }
        }
    });
    DensityEstimate r;
    r.density = GridField(spec);
    r.stderr_ = GridField(spec);
    r.paths = static_cast<long>(P);
    const double cv = spec.cell_volume();
    for (std::size_t j = 0; j < spec.size(); ++j) {
        long c = 0;
        for (const auto& h : local) c += h[j];
        r.in_box += c;
        const double q = static_cast<double>(c) / P;
        r.density.values[j] = q / cv;
        r.stderr_.values[j] = std::sqrt(q * (1 - q) / P) / cv;
    }
    return r;
}

McComparison compare_with_kernel(const DensityEstimate& d, const GridField& expected, double min_expected) {
    if (d.density.spec != expected.spec) throw std::invalid_argument("compare_with_kernel: grid mismatch");
    const double cv = expected.spec.cell_volume();
    const double P = static_cast<double>(d.paths);
    McComparison r;
    for (std::size_t j = 0; j < expected.values.size(); ++j) {
        const double q = expected.values[j] * cv;
        if (q * P < min_expected) continue;
        const double sigma = std::sqrt(q * (1 - q) / P) / cv;
        const double z = (d.density.values[j] - expected.values[j]) / sigma;
        ++r.cells;
        if (std::abs(z) > 3) ++r.exceed;
        if (std::abs(z) > std::abs(r.worst_z)) {
            r.worst_z = z;
            r.worst_index = j;
        }
    }
    r.fraction = r.cells ? static_cast<double>(r.exceed) / r.cells : 0.0;
    return r;
}

void write_density(const DensityEstimate& d, const std::string& path) {
    write_field(d.density, path);
    write_field(d.stderr_, path + ".stderr");
}

}  // namespace hheat
