#include "stochdrive/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

double select_bandwidth(std::span<const double> data, BandwidthRule rule) {
  const auto n = static_cast<double>(data.size());
  if (data.size() < 2) throw FitError("bandwidth needs at least 2 points");
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : data) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  const double shrink = std::pow(n, -0.2);
  if (rule == BandwidthRule::Scott) return 1.06 * sd * shrink;
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * shrink;
}

KdeMarginal::KdeMarginal(std::vector<double> points, double bandwidth)
    : points_(std::move(points)), bandwidth_(bandwidth) {
  if (points_.empty()) throw FitError("KDE needs at least one point");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw FitError(fmt::format("KDE bandwidth must be > 0, got {}", bandwidth_));
  }
  std::sort(points_.begin(), points_.end());
}

KdeMarginal KdeMarginal::fit(std::span<const double> data,
                             BandwidthRule rule) {
  return KdeMarginal(std::vector<double>(data.begin(), data.end()),
                     select_bandwidth(data, rule));
}

double KdeMarginal::pdf(double x) const {
  double sum = 0.0;
  for (double p : points_) {
    const double z = (x - p) / bandwidth_;
    sum += std::exp(-0.5 * z * z);
  }
  return sum / (static_cast<double>(points_.size()) * bandwidth_ *
                std::sqrt(2.0 * std::numbers::pi));
}

double KdeMarginal::cdf(double x) const {
  double sum = 0.0;
  for (double p : points_) sum += standard_normal_cdf((x - p) / bandwidth_);
  return sum / static_cast<double>(points_.size());
}

double KdeMarginal::inverse_cdf(double u, double u_tol) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError(fmt::format("inverse CDF needs u in (0, 1), got {}", u));
  }
  double lo = points_.front() - 10.0 * bandwidth_;
  double hi = points_.back() + 10.0 * bandwidth_;
  while (cdf(lo) > u) lo -= 10.0 * bandwidth_;
  while (cdf(hi) < u) hi += 10.0 * bandwidth_;

  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = cdf(x) - u;
    if (std::abs(f) <= u_tol) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double density = pdf(x);
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) return x;
    x = next;
  }
  return x;
}

}  // namespace stochdrive
