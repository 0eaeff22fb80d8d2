#pragma once

#include <cstddef>
#include <optional>

#include "tubekit/skeleton.hpp"
#include "tubekit/volume.hpp"

namespace tubekit {

inline constexpr double kLossEpsilon = 1e-7;

struct LossTerm {
  double value = 0.0;
  Field3 grad;
};

struct RelaxedSupConfig {
  std::optional<double> beta;  // empty = 1 / ln(sum(y^c) / sum(y))
  double epsilon = kLossEpsilon;
};

double resolve_beta(const Mask3& y, const RelaxedSupConfig& cfg);

// y*yhat + beta * y^c*R*yhat + y^c*R^c*yhat.
Field3 uncertain_prediction(const Mask3& y, const Field3& yhat, const RoiBox& roi,
                            const RelaxedSupConfig& cfg);

struct RelaxedSupResult {
  LossTerm term;
  double dice = 0.0;  // -sum(y*yhat) / (sum(y) + sum(yhat') + eps)
  double ce = 0.0;    // -mean(y * ln(yhat' + eps))
  double beta = 0.0;
};

RelaxedSupResult loss_r_sup(const Mask3& y, const Field3& yhat, const RoiBox& roi,
                            const RelaxedSupConfig& cfg = {});

enum class ConnectivityTarget { all, drawn_only };

struct ConnectivityConfig {
  SoftSkeletonParams skeleton{};
  double threshold = 0.5;
  double epsilon = kLossEpsilon;
  ConnectivityTarget target = ConnectivityTarget::all;
};

struct ConnectivityResult {
  LossTerm term;
  std::size_t skeleton_voxels = 0;      // thresholded soft skeleton
  std::size_t pseudo_label_voxels = 0;  // voxels the CE is averaged over
  std::size_t drawn_voxels = 0;
  int components = 0;
};

// Cross entropy of the soft skeleton against its reconnected, thresholded
// version. The pseudo-label is a constant; gradients route through the
// soft skeleton pooling choices.
ConnectivityResult loss_con(const Field3& yhat, const ConnectivityConfig& cfg = {});

// Pseudo-label and routing used by loss_con, exposed for tie checks.
struct ConnectivityTrace {
  SoftSkeletonTrace skeleton;
  Mask3 pseudo_label;
};
ConnectivityTrace trace_con(const Field3& yhat, const ConnectivityConfig& cfg = {});

enum class SpatialMode {
  joint,      // k_ij * yhat_i * yhat_j
  gated_crf,  // k_ij * yhat_i * (1 - yhat_j)
};

struct GatedKernelParams {
  double sigma_l = 1.5;  // voxels
  double sigma_c = 0.1;  // guide intensity units
  int radius = 2;
  SpatialMode mode = SpatialMode::joint;

  void validate() const;
};

struct SpatialResult {
  LossTerm term;
  std::size_t pair_count = 0;   // ordered pairs (i, j), j in window, j != i
  double unordered_sum = 0.0;   // sum over unordered pairs, before /N
};

// (1/N) sum_i sum_{j in cube window of radius r, j != i} k_ij * yhat_i * yhat_j,
// k_ij = exp(-(|l_i - l_j|^2 / (2 sigma_l^2) + (c_i - c_j)^2 / (2 sigma_c^2))),
// locations in voxel units, colours from `guide`.
SpatialResult loss_spatial(const Field3& yhat, const Field3& guide, const GatedKernelParams& params = {});

struct MixSample {
  double alpha = 1.0;
  Volume3 x_mixed;
  Mask3 y1;
  Mask3 y2;
};

MixSample mix_inputs(const Volume3& x1, const Mask3& y1, const Volume3& x2, const Mask3& y2,
                     double alpha);

Field3 mixed_label(const Mask3& y1, const Mask3& y2, double alpha);

// Negative cosine between the mixed-input prediction and alpha*y1 + (1-alpha)*y2.
LossTerm loss_mix(const Field3& yhat_mixed, const Mask3& y1, const Mask3& y2, double alpha);

struct LossBreakdown {
  double r_sup = 0.0;
  double con = 0.0;
  double spatial = 0.0;
  double mix = 0.0;
  double lambda = 1.0;
  double total = 0.0;
  Field3 grad_r_sup;
  Field3 grad_con;
  Field3 grad_spatial;
  Field3 grad_mix;

  // grad_r_sup + grad_con + lambda * grad_spatial: the gradient with respect
  // to the prediction the first three terms share.
  Field3 prediction_grad() const;
  // lambda * grad_mix, with respect to the mixed-input prediction.
  Field3 mixed_prediction_grad() const;
};

// total = r_sup + con + lambda * (spatial + mix)
LossBreakdown loss_gsb(const LossTerm& r_sup, const LossTerm& con, const LossTerm& spatial,
                       const LossTerm& mix, double lambda);

}  // namespace tubekit
