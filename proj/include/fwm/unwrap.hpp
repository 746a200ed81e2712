#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fwm {

/// Wraps an angle into (-pi, pi].
double wrap_angle(double x);

struct UnwrapResult {
  std::vector<double> phase;
  /// Indices i (of the later bin in traversal order) where the chosen
  /// inter-bin step exceeded pi/2 in magnitude.
  std::vector<std::size_t> large_steps;
};

/// Removes 2*pi jumps by walking outward from `seed`, choosing the step of
/// magnitude <= pi between consecutive valid bins. Bins with mask == false do
/// not advance the chain; they receive the value nearest to the last valid
/// bin so the output stays continuous. An empty mask means all bins are valid.
/// The seed bin keeps its wrapped value.
UnwrapResult unwrap_from_seed(std::span<const double> wrapped, std::size_t seed,
                              std::span<const bool> mask = {});

}  // namespace fwm
