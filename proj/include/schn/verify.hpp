#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace schn::verify {

/// One measured property: passes when measured < tolerance.
struct CheckResult {
    std::string suite;
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;

    bool passed() const { return measured < tolerance; }
    /// `<suite> <name> measured=<e> tolerance=<e> <PASS|FAIL>`
    std::string format() const;
};

/// Round trip (max abs) and Parseval (relative) for random real bandlimited
/// signals, tolerance 1e-9, at each bandlimit.
std::vector<CheckResult> sht_suite(const std::vector<int>& bandlimits = {4, 8, 16, 32, 64}, std::uint64_t seed = 1);

/// rotate_signal against direct series evaluation at pulled-back points
/// (B = 8, 1e-8); Wigner-d orthogonality (1e-10) and same-axis composition
/// (1e-9) for l <= 32.
std::vector<CheckResult> rotation_suite(std::uint64_t seed = 1);

/// Rotation commutation defect of sph_conv, pointwise_conv, truncation,
/// zero padding and weighted_norm on bandlimited inputs with B <= 16,
/// worst over `trials` random rotations, tolerance 1e-7.
std::vector<CheckResult> equivariance_suite(int trials = 100, std::uint64_t seed = 1);

/// Central finite differences against the tape adjoints: every primitive
/// (B = 4) and, per parameter tensor, the desk-scale hourglass in both
/// architectures. Relative tolerance 1e-4.
std::vector<CheckResult> gradient_suite(std::uint64_t seed = 1, bool include_desk_model = true);

} // namespace schn::verify
