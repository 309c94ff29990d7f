#pragma once

#include <string>
#include <vector>

#include "qflow/errors.hpp"

namespace qflow {

/// One verified invariant: worst observed margin against its threshold.
struct CheckResult {
    std::string suite;
    std::string name;
    std::size_t samples = 0;
    double worst = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;  // extra facts (e.g. empirical validity radius)
};

/// Suites: algebra, manifold, lemma23, lemma24, solver. Throws UnknownSuite.
std::vector<CheckResult> verify_suite(const std::string& name);
std::vector<std::string> verify_suite_names();

/// Machine-readable line, one per check.
std::string format_check(const CheckResult& c);

}  // namespace qflow
