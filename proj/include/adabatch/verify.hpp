#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adabatch {

struct VerifyOptions {
    std::uint64_t baseSeed = 20240817;
    long long replications = 100;
    std::string outDir;  // fixtures (CSV/SVG) written here when nonempty
    int threads = 0;     // 0: ADABATCH_THREADS env, then hardware concurrency
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Runs the full verification suite (eight checks) and returns one result
/// per check. Deterministic for a fixed baseSeed regardless of worker count.
std::vector<CheckResult> runVerificationSuite(const VerifyOptions& opts);

/// Prints one [PASS]/[FAIL] line per result plus a summary; returns true if
/// everything passed.
bool reportResults(const std::vector<CheckResult>& results);

}  // namespace adabatch
