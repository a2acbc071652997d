#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hheat/field.hpp"
#include "hheat/heatkernel.hpp"

namespace hheat {

struct McConfig {
    int n = 1;
    long paths = 1000000;
    int substeps = 128;  // per unit time
    double t = 1.0;
    uint64_t seed = 1;
    GridSpec hist{1, 4, 4, 16, 16, 16, 32};

    void validate() const;
    long steps() const;  // total substeps over [0, t]
};

// Endpoints, 2n+1 coordinates per path (x, y, tau).
struct Ensemble {
    int n = 1;
    std::vector<double> data;

    std::size_t size() const { return data.size() / (2 * n + 1); }
    HPoint at(std::size_t i) const;
};

// Bit-identical for a fixed (seed, worker count).
Ensemble sample_paths(const McConfig& cfg);
// (fine, coarse): coarse uses half the substeps on the same Brownian paths;
// fine is identical to sample_paths(cfg).
std::pair<Ensemble, Ensemble> sample_paths_coupled(const McConfig& cfg);

struct DensityEstimate {
    GridField density;  // counts / (paths * cellVolume)
    GridField stderr_;  // binomial standard error of density
    long paths = 0;
    long in_box = 0;
};

// Cells are centred on the nodes of spec.
DensityEstimate estimate_density(const Ensemble& e, const GridSpec& spec);

struct McComparison {
    std::size_t cells = 0;  // cells with expected count >= min_expected
    std::size_t exceed = 0;  // of those, |z| > 3
    double fraction = 0;
    double worst_z = 0;
    std::size_t worst_index = 0;
};

// z = (density - expected) / sigma, sigma binomial from the expected cell probability.
McComparison compare_with_kernel(const DensityEstimate& d, const GridField& expected, double min_expected = 20.0);

// writes path and path + ".stderr"
void write_density(const DensityEstimate& d, const std::string& path);

}  // namespace hheat
