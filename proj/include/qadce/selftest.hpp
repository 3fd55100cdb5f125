#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qadce {

struct SelftestOptions {
    bool full = false;      // large sample counts instead of the quick ones
    std::uint64_t seed = 1;
};

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Oracle suites: Bussgang Monte-Carlo, Lloyd-Max table, detector posterior
/// argmax, MM descent, quadratic majorization and prior normalization.
std::vector<SelftestCheck> run_selftest(const SelftestOptions& opts = {});

} // namespace qadce
