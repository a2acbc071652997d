#pragma once

#include <string>
#include <vector>

#include "hheat/config.hpp"

namespace hheat {

struct InvariantResult {
    std::string name;
    bool ok = false;
    double measured = 0;
    double limit = 0;
    double margin = 0;  // limit - measured for upper bounds, measured - limit for lower bounds
    std::string detail;
};

struct VerifyOptions {
    long mc_paths = 100000;
    int mc_substeps = 64;
};

struct VerifyReport {
    std::vector<InvariantResult> results;
    bool ok() const;
    std::string summary_json() const;
    std::string table() const;
};

VerifyReport run_verify(const RunConfig& cfg, const VerifyOptions& opt = {});

}  // namespace hheat
