#include "stochdrive/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <fmt/format.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

PhaseLabel classify_segment(const HeadwayIndicators& ind,
                            const PhaseThresholds& th) {
  if (ind.mean_thw < th.steady_max_thw && ind.mean_ttci < th.steady_max_ttci) {
    return PhaseLabel::SteadyFollowing;
  }
  if (ind.mean_thw >= th.free_min_thw && ind.mean_ttci <= th.free_max_ttci &&
      ind.mean_gap >= th.free_min_gap && ind.mean_speed >= th.free_min_speed) {
    return PhaseLabel::FreeMotion;
  }
  return PhaseLabel::UnsteadyFollowing;
}

void classify_segments(std::vector<TrajectorySegment>& segments,
                       const HeadwayOptions& opts) {
  for (auto& seg : segments) {
    seg.phase = classify_segment(headway_indicators(seg.window(), opts));
  }
}

namespace {

double sq_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

}  // namespace

KMeansResult kmeans_speed_gap(const std::vector<SpeedGapPoint>& points, int k,
                              std::uint64_t seed) {
  if (k < 1) throw ClusteringError("k must be >= 1");
  std::set<std::pair<double, double>> distinct;
  for (const auto& p : points) distinct.emplace(p.mean_speed, p.mean_gap);
  if (static_cast<std::size_t>(k) > distinct.size()) {
    throw ClusteringError(fmt::format(
        "k={} exceeds the {} distinct points", k, distinct.size()));
  }
  const std::size_t n = points.size();

  // z-score each axis; a constant axis keeps unit scale.
  std::array<double, 2> mean{}, sd{};
  for (const auto& p : points) {
    mean[0] += p.mean_speed;
    mean[1] += p.mean_gap;
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& p : points) {
    sd[0] += (p.mean_speed - mean[0]) * (p.mean_speed - mean[0]);
    sd[1] += (p.mean_gap - mean[1]) * (p.mean_gap - mean[1]);
  }
  for (auto& s : sd) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  std::vector<std::array<double, 2>> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = {(points[i].mean_speed - mean[0]) / sd[0],
            (points[i].mean_gap - mean[1]) / sd[1]};
  }

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<std::array<double, 2>> centers;
  centers.push_back(
      z[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(z[i], c));
      d2[i] = best;
      total += best;
    }
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      if (r < d2[i]) {
        pick = i;
        break;
      }
      r -= d2[i];
    }
    while (d2[pick] <= 0.0) pick = (pick + n - 1) % n;
    centers.push_back(z[pick]);
  }

  KMeansResult res;
  res.k = k;
  res.assignments.assign(n, -1);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(z[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(z[i], centers[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignments[i] != best) changed = true;
      res.assignments[i] = best;
      inertia += best_d;
    }
    res.iterations = iter + 1;
    // Update step; an emptied cluster keeps its previous center.
    std::vector<std::array<double, 2>> sum(static_cast<std::size_t>(k), {0, 0});
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignments[i]);
      sum[c][0] += z[i][0];
      sum[c][1] += z[i][1];
      ++count[c];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] > 0) {
        centers[c] = {sum[c][0] / static_cast<double>(count[c]),
                      sum[c][1] / static_cast<double>(count[c])};
      }
    }
    double updated = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      updated +=
          sq_dist(z[i], centers[static_cast<std::size_t>(res.assignments[i])]);
    }
    res.inertia_history.push_back(inertia);
    res.inertia_history.push_back(updated);
    res.inertia = updated;
    if (!changed && iter > 0) break;
  }
  for (const auto& c : centers) {
    res.centroids.push_back(
        {c[0] * sd[0] + mean[0], c[1] * sd[1] + mean[1]});
  }
  return res;
}

}  // namespace stochdrive
