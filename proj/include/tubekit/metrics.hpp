#pragma once

#include <cstddef>

#include "tubekit/volume.hpp"

namespace tubekit {

// Percent. Both masks empty gives 100.
double dice(const Mask3& pred, const Mask3& gt);

double cldice(const Mask3& pred, const Mask3& gt, int skel_iterations = 10);

struct SurfaceDistances {
  double hd = 0.0;
  double assd = 0.0;
  double ahd = 0.0;
  std::size_t pred_surface = 0;
  std::size_t gt_surface = 0;
};

// Foreground voxels with a background 6-neighbour; the outside of the volume
// counts as background.
Mask3 surface_voxels(const Mask3& mask);

// Squared Euclidean distance (mm^2) from every voxel centre to the nearest
// foreground voxel centre of `sites`. Exact separable transform.
std::vector<double> squared_distance_transform(const Mask3& sites, Spacing spacing);

// Distances in mm between the two surfaces. Throws DomainError
// ("undefined distance") if either mask is empty.
SurfaceDistances surface_distances(const Mask3& pred, const Mask3& gt, Spacing spacing);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
};

PrecisionRecall precision_recall_f1(const Mask3& pred, const Mask3& gt);

struct TreeMetrics {
  double bd = 0.0;
  double tld = 0.0;
  int branches = 0;
  int branches_detected = 0;
  int junction_voxels = 0;
  double centerline_length_mm = 0.0;
};

struct TreeMetricsConfig {
  int skel_iterations = 10;
  int detection_min_voxels = 1;
};

// Branches are the 26-connected pieces of the gt centerline left after
// removing junction voxels (>= 3 centerline neighbours).
TreeMetrics tree_metrics(const Mask3& pred, const Mask3& gt, const TreeMetricsConfig& cfg = {});

struct MetricsReport {
  double dice = 0.0;
  double cldice = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double hd = 0.0;
  double assd = 0.0;
  double ahd = 0.0;
  double bd = 0.0;
  double tld = 0.0;
  std::size_t pred_voxels = 0;
  std::size_t gt_voxels = 0;
  std::size_t pred_surface_voxels = 0;
  std::size_t gt_surface_voxels = 0;
  int gt_branches = 0;
};

MetricsReport evaluate(const Mask3& pred, const Mask3& gt, const TreeMetricsConfig& cfg = {});

}  // namespace tubekit
