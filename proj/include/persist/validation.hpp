#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace persist {

/// `quick` runs only the exact (non-statistical) checks.
enum class CheckTier { exact, statistical };

struct CheckOutcome {
    std::string id;
    CheckTier tier = CheckTier::exact;
    std::string description;
    bool passed = false;
    std::string detail;  // first failures, empty on success
    double seconds = 0.0;
};

struct ValidationOptions {
    bool quick = false;
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<std::string> only;  // run just these ids when non-empty
};

struct CheckInfo {
    std::string id;
    CheckTier tier;
    std::string description;
};

std::vector<CheckInfo> validation_checks();

/// Runs the invariant suite; `report` sees each outcome as soon as it is known.
std::vector<CheckOutcome> run_validation(const ValidationOptions& options,
                                         const std::function<void(const CheckOutcome&)>& report = {});

}  // namespace persist
