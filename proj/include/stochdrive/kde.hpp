#pragma once

#include <span>
#include <vector>

namespace stochdrive {

enum class BandwidthRule {
  Silverman,  // 0.9 * min(sd, IQR / 1.34) * n^(-1/5)
  Scott,      // 1.06 * sd * n^(-1/5)
};

double select_bandwidth(std::span<const double> data, BandwidthRule rule);

// Gaussian kernel density estimate of a univariate distribution.
class KdeMarginal {
 public:
  KdeMarginal() = default;
  KdeMarginal(std::vector<double> points, double bandwidth);

  static KdeMarginal fit(std::span<const double> data,
                         BandwidthRule rule = BandwidthRule::Silverman);

  double pdf(double x) const;
  // Strictly increasing, maps R onto (0, 1).
  double cdf(double x) const;
  // Inverse CDF by safeguarded Newton iteration inside a shrinking
  // bisection bracket; stops once |cdf(x) - u| <= u_tol.
  double inverse_cdf(double u, double u_tol = 1e-10) const;

  const std::vector<double>& points() const { return points_; }
  double bandwidth() const { return bandwidth_; }
  double min_point() const { return points_.front(); }
  double max_point() const { return points_.back(); }

 private:
  std::vector<double> points_;  // sorted
  double bandwidth_ = 1.0;
};

double standard_normal_cdf(double z);

}  // namespace stochdrive
