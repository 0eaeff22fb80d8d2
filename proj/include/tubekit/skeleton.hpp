#pragma once

#include <cstdint>
#include <vector>

#include "tubekit/volume.hpp"

namespace tubekit {

struct SoftSkeletonParams {
  int iterations = 10;

  void validate() const;
};

enum class Connectivity : int { six = 6, twentysix = 26 };

// 3x3x3 min/max pooling with zero padding. When `route` is given it receives,
// per output voxel, the linear index that produced the value, or -1 when the
// padding won. Ties go to in-volume voxels, then to the smallest linear index.
Field3 min_pool3(const Field3& in, std::vector<std::int32_t>* route = nullptr);
Field3 max_pool3(const Field3& in, std::vector<std::int32_t>* route = nullptr);

// Soft skeleton with its routing decisions recorded, so a gradient with
// respect to the skeleton can be pulled back onto the input.
class SoftSkeletonTrace {
 public:
  SoftSkeletonTrace(const Field3& prob, SoftSkeletonParams params);

  const Field3& skeleton() const noexcept { return skeleton_; }

  // d(sum_v g_v * skeleton_v) / d(prob), using the recorded subgradients.
  Field3 backward(const Field3& grad_skeleton) const;

  // True when every pooling choice and every relu activity agrees.
  bool same_routing(const SoftSkeletonTrace& other) const noexcept;

 private:
  struct Step {
    std::vector<std::int32_t> erode_route;   // img_t -> erode(img_t)
    std::vector<std::int32_t> dilate_route;  // erode(img_t) -> open(img_t)
    std::vector<std::uint8_t> delta_active;  // img_t - open(img_t) > 0
    std::vector<std::uint8_t> update_active; // delta - skel*delta > 0  (t >= 1)
    std::vector<double> delta;               // delta_t
    std::vector<double> skel_before;         // skeleton entering step t
  };

  Dims dims_{};
  Field3 skeleton_;
  std::vector<Step> steps_;
};

// skel <- relu(img - open(img)); then k times: img <- erode(img),
// delta <- relu(img - open(img)), skel <- skel + relu(delta - skel*delta).
// Input values must lie in [0, 1].
Field3 soft_skeleton(const Field3& prob, SoftSkeletonParams params = {});
Volume3 soft_skeleton(const Volume3& prob, SoftSkeletonParams params = {});

// soft_skeleton of the 0/1 field, thresholded at 0.5.
Mask3 hard_skeleton(const Mask3& mask, int iterations = 10);

struct ComponentSet {
  Grid<std::int32_t> labels;  // 0 = background, ids 1..count
  int count = 0;
  std::vector<std::size_t> sizes;  // sizes[id - 1]
};

// Ids are assigned in order of each component's smallest linear index.
ComponentSet connected_components(const Mask3& mask, Connectivity conn = Connectivity::twentysix);

int count_neighbors26(const Mask3& mask, const Index3& p);

// Foreground voxels with at most one foreground 26-neighbour, by linear index.
std::vector<Index3> endpoints(const Mask3& skeleton);

// Integer 3D Bresenham from a to b, both inclusive. Consecutive voxels are
// 26-adjacent and the driving axis advances by exactly one per step.
std::vector<Index3> rasterize_line(const Index3& a, const Index3& b);

struct ReconnectSegment {
  Index3 from{};
  Index3 to{};
  std::size_t drawn_voxels = 0;
  int pass = 0;
};

struct ReconnectResult {
  Mask3 reconnected;
  Mask3 drawn_only;
  std::vector<ReconnectSegment> segments;
  int passes = 0;
  int initial_components = 0;
  int final_components = 0;
};

// Links every component other than the largest to its nearest foreign
// endpoint with a one-voxel-wide line, repeating until one 26-connected
// component remains. Throws DomainError on an empty skeleton.
ReconnectResult reconnect(const Mask3& skeleton);

}  // namespace tubekit
