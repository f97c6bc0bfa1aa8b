#include "srl/rng.hpp"

#include <cmath>
#include <numbers>

namespace srl {

double Rng::next_gaussian() {
    // Box-Muller, cosine branch only. u1 is kept away from 0 so log() is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace srl
