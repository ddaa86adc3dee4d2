#include "fplab/precision.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fplab {

PrecisionProfile profile_for(int bits) {
    switch (bits) {
        case 16:
            return {16, 0x1p-10, 16.6355};
        case 32:
            return {32, 0x1p-23, 103.2789};
        case 64:
            return {64, 0x1p-52, 744.4401};
        default:
            throw std::invalid_argument("unsupported precision: " + std::to_string(bits) +
                                        " bits (expected 16, 32, or 64)");
    }
}

namespace {

struct FormatGeometry {
    int mant_bits;   // explicit mantissa bits
    int min_exp;     // smallest normal exponent (ilogb convention)
    int max_exp;     // largest normal exponent
};

FormatGeometry geometry_for(int bits) {
    if (bits == 16) return {10, -14, 15};
    return {23, -126, 127};  // bits == 32
}

}  // namespace

double round_to_precision(double x, const PrecisionProfile& profile) {
    if (profile.bits == 64) return x;
    if (std::isnan(x) || std::isinf(x) || x == 0.0) return x;

    const FormatGeometry fmt = geometry_for(profile.bits);
    const double a = std::fabs(x);

    // Spacing of representable values around a; below the normal range the
    // grid is the fixed subnormal spacing 2^(min_exp - mant_bits).
    int e = std::ilogb(a);
    if (e < fmt.min_exp) e = fmt.min_exp;
    const double spacing = std::ldexp(1.0, e - fmt.mant_bits);

    // a/spacing <= 2^(mant_bits+1), exact in double, so nearbyint under the
    // default rounding mode gives round-to-nearest with ties to even.
    double r = std::nearbyint(a / spacing) * spacing;

    const double max_finite = std::ldexp(2.0 - std::ldexp(1.0, -fmt.mant_bits), fmt.max_exp);
    if (r > max_finite) r = std::numeric_limits<double>::infinity();

    return std::copysign(r, x);
}

}  // namespace fplab
