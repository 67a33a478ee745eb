#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relaxsort {

struct PropertyResult {
    std::string suite;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<std::string> property_suites();

/// Runs one suite ("all" for everything) at the documented tolerances.
/// Deterministic given the seed; timings are the only nondeterminism and
/// only affect the runtime suite's measured ratio, not its bound.
std::vector<PropertyResult> run_properties(const std::string& suite, std::uint64_t seed);

}  // namespace relaxsort
