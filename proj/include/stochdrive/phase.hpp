#pragma once

#include <cstdint>
#include <vector>

#include "stochdrive/features.hpp"
#include "stochdrive/trace.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

// Rule thresholds separating the three driving phases.
struct PhaseThresholds {
  double steady_max_thw = 6.0;      // steady iff thw <  6 ...
  double steady_max_ttci = 0.05;    // ... and ttci < 0.05
  double free_min_thw = 6.0;        // free needs thw >= 6
  double free_max_ttci = 0.0;       // ttci <= 0
  double free_min_gap = 35.0;       // gap >= 35 m
  double free_min_speed = 5.0;      // speed >= 5 m/s
};

PhaseLabel classify_segment(const HeadwayIndicators& ind,
                            const PhaseThresholds& th = {});

// Labels every segment from the indicators over its whole window.
void classify_segments(std::vector<TrajectorySegment>& segments,
                       const HeadwayOptions& opts = {});

struct SpeedGapPoint {
  double mean_speed = 0.0;
  double mean_gap = 0.0;
};

struct KMeansResult {
  int k = 0;
  std::vector<SpeedGapPoint> centroids;  // original units
  std::vector<int> assignments;
  double inertia = 0.0;  // sum of squared distances, standardized space
  std::vector<double> inertia_history;  // per Lloyd iteration
  int iterations = 0;
};

// Lloyd's algorithm on z-scored (speed, gap) with seeded k-means++
// initialization. Throws ClusteringError when k exceeds the number of
// distinct points.
KMeansResult kmeans_speed_gap(const std::vector<SpeedGapPoint>& points, int k,
                              std::uint64_t seed);

}  // namespace stochdrive
