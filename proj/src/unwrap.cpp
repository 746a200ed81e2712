#include "fwm/unwrap.hpp"

#include <cmath>
#include <numbers>

#include "fwm/error.hpp"

namespace fwm {

double wrap_angle(double x) {
  constexpr double kPi = std::numbers::pi;
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

UnwrapResult unwrap_from_seed(std::span<const double> wrapped, std::size_t seed,
                              std::span<const bool> mask) {
  const std::size_t n = wrapped.size();
  UnwrapResult out{std::vector<double>(n), {}};
  if (n == 0) return out;
  if (seed >= n) throw Error(ErrorCode::kInvalidArgument, "field-core", "unwrap: seed out of range");
  if (!mask.empty() && mask.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "field-core", "unwrap: mask length mismatch");
  }
  auto valid = [&](std::size_t i) { return mask.empty() || mask[i]; };

  out.phase[seed] = wrapped[seed];
  auto walk = [&](int dir) {
    double last_raw = wrapped[seed];
    double last = out.phase[seed];
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(seed) + dir;
         i >= 0 && i < static_cast<std::ptrdiff_t>(n); i += dir) {
      const auto k = static_cast<std::size_t>(i);
      const double step = wrap_angle(wrapped[k] - last_raw);
      out.phase[k] = last + step;
      if (!valid(k)) continue;
      if (std::abs(step) > std::numbers::pi / 2) out.large_steps.push_back(k);
      last_raw = wrapped[k];
      last = out.phase[k];
    }
  };
  walk(+1);
  walk(-1);
  return out;
}

}  // namespace fwm
