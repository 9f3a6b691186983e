#pragma once

// Self-checks runnable from the command line. Each suite returns named
// measurements with the bound they must satisfy.

#include <cstdint>
#include <string>
#include <vector>

namespace gazelab::verify {

enum class Suite { grad, geometry, invariants };
const char* suite_name(Suite s);
Suite parse_suite(const std::string& name);

struct Check {
    std::string name;
    double value = 0.0;
    /// Passing requires value <= bound (or value >= bound when at_least).
    double bound = 0.0;
    bool at_least = false;
    std::string detail;

    bool passed() const { return at_least ? value >= bound : value <= bound; }
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool passed() const;
    /// One "PASS|FAIL name value bound" line per check.
    std::string text() const;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    /// Random configurations in the grad suite.
    std::size_t grad_trials = 50;
    /// Random directions / samples in the geometry suite.
    std::size_t geometry_samples = 1000;
};

SuiteReport run(Suite suite, const VerifyOptions& options = {});

}  // namespace gazelab::verify
