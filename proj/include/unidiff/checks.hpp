#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace unidiff::checks {

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string note; // optional context (units, comparison direction)
};

struct Options {
    int n_threads = 2;
    std::uint64_t seed = 20260810;
};

// The full cross-module invariant suite at reduced scale (small N, short
// batches, coarse grids). Deterministic for a fixed seed.
std::vector<CheckResult> run_all(const Options& opts);

bool all_passed(const std::vector<CheckResult>& results);
void print_table(const std::vector<CheckResult>& results, std::FILE* out);

} // namespace unidiff::checks
