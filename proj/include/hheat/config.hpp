#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hheat/field.hpp"
#include "hheat/heatkernel.hpp"
#include "hheat/montecarlo.hpp"
#include "hheat/solver.hpp"

namespace hheat {

// Key-value config: one "key = value" per line, '#' starts a comment.
// Lists are comma separated. Only "n" is required.
struct RunConfig {
    int n = 1;
    SolverConfig solver;  // solver.grid is the grid block
    AbsorptionProfile k = AbsorptionProfile::constant(1.0);
    std::vector<double> sweep_p{1.1, 1.25, 1.5, 1.75, 2.5};
    double kernel_t = 1.0;
    long mc_paths = 1000000;
    int mc_substeps = 128;
    double mc_t = 1.0;
    GridSpec mc_hist{1, 4, 4, 16, 16, 16, 32};
    double condition_Tmax = 1048576.0;
    std::string out = ".";
    uint64_t seed = 1;

    const GridSpec& grid() const { return solver.grid; }
    const KernelQuadratureParams& quad() const { return solver.quad; }
    McConfig mc() const;
    void validate() const;
    // every effective key in the documented order
    std::string echo() const;
};

struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(const std::string& k, const std::string& msg) : std::runtime_error(msg), key(k) {}
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace hheat
