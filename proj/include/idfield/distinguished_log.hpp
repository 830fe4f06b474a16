#pragma once

#include <cmath>
#include <complex>

#include "idfield/numeric.hpp"

namespace idfield {

struct TrackedLog {
  Complex value;
  int steps = 0;
  int refinements = 0;
};

/// Distinguished logarithm of r -> phi(r), r in [0,1], phi(0) = 1, fixed by
/// log(1) = 0 and continuity. Marches along the homotopy taking principal
/// logs of consecutive ratios; a phase jump above max_phase halves the step.
/// A modulus at or below min_modulus loses the branch and is an error.
template <class Phi>
TrackedLog track_log(Phi&& phi, double min_modulus = 1e-12, double max_phase = 1.5707963267948966,
                     int max_steps = 200000) {
  TrackedLog out;
  double r = 0.0;
  double step = 0.125;
  Complex log_acc{0.0, 0.0};
  Complex prev{1.0, 0.0};
  while (r < 1.0) {
    double next = std::min(1.0, r + step);
    Complex cur = phi(next);
    if (std::abs(cur) <= min_modulus)
      throw BranchTrackingError("characteristic function within " + format_g17(min_modulus) +
                                " of zero along the homotopy; distinguished logarithm undefined here");
    Complex ratio = cur / prev;
    if (std::abs(std::arg(ratio)) > max_phase) {
      step *= 0.5;
      ++out.refinements;
      if (++out.steps > max_steps)
        throw BranchTrackingError("phase tracking failed to converge (step underflow)");
      continue;
    }
    log_acc += std::log(ratio);
    prev = cur;
    r = next;
    step = std::min(0.25, step * 1.5);
    if (++out.steps > max_steps) throw BranchTrackingError("phase tracking exceeded step budget");
  }
  out.value = log_acc;
  return out;
}

}  // namespace idfield
