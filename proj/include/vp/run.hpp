#pragma once

#include <ostream>
#include <string>

#include "vp/config.hpp"
#include "vp/phase_state.hpp"

namespace vp {

enum ExitCode { exit_ok = 0, exit_numerical = 1, exit_usage = 2 };

// Gaussian initial (or final) data of the config; amplitude rescaled when data.c0 > 0.
DistributionGrid make_data(const RunConfig& cfg);

// Runs one mode and writes its artifacts under out_dir. Numerical failures are caught,
// written to report.txt with their sub-code and mapped to exit 1.
int run(const std::string& mode, const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

}  // namespace vp
