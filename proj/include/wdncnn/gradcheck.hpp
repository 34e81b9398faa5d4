#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdncnn/model.hpp"

namespace wdncnn {

struct GradCheckEntry {
    std::string parameter;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;  // one per parameter tensor
    double worst_rel_err = 0.0;
    std::int64_t checked_elements = 0;

    bool passed(double tol = 1e-4) const { return worst_rel_err < tol; }
};

// Compares analytic gradients of the band-weighted loss against central
// finite differences (epsilon 1e-5 by default) for every element of every
// parameter. The probe sample (noisy image, per-band noise targets) is
// derived deterministically from the seed.
GradCheckReport model_gradcheck(const WDnCNNConfig& config,
                                std::uint64_t seed, int image_size = 16,
                                double eps = 1e-5,
                                const std::string& bank_name = "haar");

namespace testing {
// Test hook: when enabled, one analytic gradient entry is corrupted before
// the comparison so failure reporting paths can be exercised end to end.
bool& gradcheck_fault_injection();
}  // namespace testing

}  // namespace wdncnn
