#pragma once

#include <array>
#include <span>

namespace stochdrive {

struct KinematicState {
  double position = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
};

// s(tau) = c0 tau^5 + c1 tau^4 + c2 tau^3 + c3 tau^2 + c4 tau + c5 over
// segment-local time tau in [0, duration].
struct QuinticSegment {
  std::array<double, 6> coeffs{};
  double duration = 1.0;
};

// Horner evaluation of position and its first two derivatives. Throws
// DomainError when tau lies outside [0, duration].
KinematicState eval(const QuinticSegment& seg, double tau);

// Pins (c5, c4, c3) = (p0, v0, a0 / 2) so that eval(0) reproduces the
// initial state; `free` supplies (c0, c1, c2).
QuinticSegment from_initial_state(const KinematicState& initial,
                                  const std::array<double, 3>& free,
                                  double duration);

struct TimedPosition {
  double t = 0.0;  // local time
  double position = 0.0;
};

struct QuinticFit {
  QuinticSegment segment;
  double residual_rms = 0.0;
};

// Least-squares quintic through the samples (local time). Throws FitError
// when fewer than six distinct times make the system rank deficient.
QuinticFit fit_slice(std::span<const TimedPosition> samples, double duration);

}  // namespace stochdrive
