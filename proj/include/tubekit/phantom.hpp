#pragma once

#include <cstdint>
#include <string>

#include "tubekit/volume.hpp"

namespace tubekit {

enum class PhantomKind { cylinder, gapped_cylinder, bifurcation, helix };

PhantomKind parse_phantom_kind(const std::string& name);
std::string to_string(PhantomKind kind);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::cylinder;
  double radius_mm = 2.0;
  double foreground_intensity = 1.0;
  double background_intensity = 0.0;
  double noise_sigma = 0.0;
  int gap_len_voxels = 0;  // gapped_cylinder only
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phantom {
  Volume3 image;
  Mask3 label;
};

// Synthetic bright tube on a dark background. A voxel is labelled when its
// centre lies within radius_mm of the analytic centerline:
//   cylinder         z-axis line through (nx/2, ny/2) voxel centres
//   gapped_cylinder  same, with gap_len_voxels z-slices removed mid-volume
//   bifurcation      trunk from z=0 to nz/2 splitting into two arms reaching
//                    the top face at x = nx/2 -/+ nx/4
//   helix            two turns of radius nx/4 around the volume's z axis
// image = background + (foreground - background) * label + noise_sigma * N(0,1),
// with one GaussianStream draw per voxel in linear order.
Phantom make_phantom(const PhantomSpec& spec, Dims dims, Spacing spacing = {});

// First z-slice of the removed mid-section of a gapped cylinder.
int phantom_gap_start(const PhantomSpec& spec, const Dims& dims);

}  // namespace tubekit
