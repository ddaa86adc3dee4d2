#pragma once

namespace fplab {

// Floating-point format constants the relative-error bounds depend on.
//
// eps_max is the worst-case truncation error of the format's arithmetic;
// lambda is the exponent magnitude at which exp(-lambda) flushes to zero,
// i.e. -ln of the smallest positive subnormal.
struct PrecisionProfile {
    int bits = 64;       // 16, 32, or 64
    double eps_max = 0;
    double lambda = 0;
};

// Returns the profile for a supported IEEE binary format.
// Throws std::invalid_argument for any width other than 16/32/64.
PrecisionProfile profile_for(int bits);

// Rounds x to the nearest value representable in the target format
// (round-to-nearest-even, subnormals included, overflow to infinity),
// returned as a double. Values below half the smallest subnormal flush
// to exactly 0. NaN passes through. The 64-bit profile is the identity.
double round_to_precision(double x, const PrecisionProfile& profile);

// Degeneracy floor substituted for the logit gap at decision-boundary ties.
inline constexpr double kGapFloor = 1e-12;

}  // namespace fplab
