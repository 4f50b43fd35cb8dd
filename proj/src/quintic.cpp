#include "stochdrive/quintic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

KinematicState eval(const QuinticSegment& seg, double tau) {
  const double slack = 1e-9 * std::max(1.0, seg.duration);
  if (!(tau >= -slack && tau <= seg.duration + slack)) {
    throw DomainError(fmt::format("tau={} outside [0, {}]", tau, seg.duration));
  }
  const auto& c = seg.coeffs;
  KinematicState s;
  s.position =
      ((((c[0] * tau + c[1]) * tau + c[2]) * tau + c[3]) * tau + c[4]) * tau +
      c[5];
  s.velocity =
      (((5.0 * c[0] * tau + 4.0 * c[1]) * tau + 3.0 * c[2]) * tau + 2.0 * c[3]) *
          tau +
      c[4];
  s.acceleration =
      ((20.0 * c[0] * tau + 12.0 * c[1]) * tau + 6.0 * c[2]) * tau + 2.0 * c[3];
  return s;
}

QuinticSegment from_initial_state(const KinematicState& initial,
                                  const std::array<double, 3>& free,
                                  double duration) {
  if (!(duration > 0.0)) throw DomainError("duration must be > 0");
  QuinticSegment seg;
  seg.coeffs = {free[0],
                free[1],
                free[2],
                0.5 * initial.acceleration,
                initial.velocity,
                initial.position};
  seg.duration = duration;
  return seg;
}

QuinticFit fit_slice(std::span<const TimedPosition> samples, double duration) {
  std::vector<double> times;
  times.reserve(samples.size());
  for (const auto& s : samples) times.push_back(s.t);
  std::sort(times.begin(), times.end());
  const auto distinct =
      std::unique(times.begin(), times.end()) - times.begin();
  if (distinct < 6) {
    throw FitError(fmt::format(
        "quintic fit needs 6 distinct sample times, got {}", distinct));
  }

  // Columns in descending power order, time scaled to [0, 1] for
  // conditioning and mapped back afterwards.
  const double scale = duration > 0.0 ? duration : 1.0;
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd A(n, 6);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = samples[static_cast<std::size_t>(i)].t / scale;
    double p = 1.0;
    for (int j = 5; j >= 0; --j) {
      A(i, j) = p;
      p *= x;
    }
    b(i) = samples[static_cast<std::size_t>(i)].position;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 6) {
    throw FitError("quintic fit is rank deficient");
  }
  const Eigen::VectorXd x = qr.solve(b);

  QuinticFit fit;
  fit.segment.duration = duration;
  for (int j = 0; j < 6; ++j) {
    fit.segment.coeffs[static_cast<std::size_t>(j)] =
        x(j) / std::pow(scale, 5 - j);
  }
  const Eigen::VectorXd r = A * x - b;
  fit.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(n));
  return fit;
}

}  // namespace stochdrive
