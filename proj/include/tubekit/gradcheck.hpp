#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tubekit/volume.hpp"

namespace tubekit {

// Central difference with a step relative to the coordinate,
// h = rel_step * max(|x_i|, 1e-2).
double central_difference(const std::function<double(const Field3&)>& f, const Field3& x,
                          std::size_t i, double rel_step = 1e-3);

double relative_error(double analytic, double numeric);

struct GradCheckEntry {
  std::string loss;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t points = 0;
  std::size_t skipped_ties = 0;
  bool pass = false;
};

struct GradCheckReport {
  std::uint64_t seed = 0;
  int size = 0;
  int instances = 0;
  std::vector<GradCheckEntry> entries;
  bool pass() const;
};

// Random size^3 instances; r_sup, spatial and mix are checked at
// `points_per_instance` random voxels, con at up to `con_points` interior
// voxels whose routing is unchanged by the +/- perturbation.
GradCheckReport run_gradcheck(std::uint64_t seed, int size, int instances = 20,
                              int points_per_instance = 50, int con_points = 20);

}  // namespace tubekit
