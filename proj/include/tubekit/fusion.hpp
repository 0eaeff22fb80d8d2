#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tubekit/volume.hpp"

namespace tubekit {

// Channel-major feature tensor; within a channel voxels are x-fastest.
// Tokens are voxels, each carrying a `channels`-long feature vector.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, Dims dims, float fill = 0.0f);
  FeatureMap(int channels, Dims dims, std::vector<float> data);

  int channels() const noexcept { return channels_; }
  const Dims& dims() const noexcept { return dims_; }
  std::size_t voxels() const noexcept { return dims_.count(); }

  float& at(int c, std::size_t voxel) noexcept { return data_[c * voxels() + voxel]; }
  float at(int c, std::size_t voxel) const noexcept { return data_[c * voxels() + voxel]; }

  std::vector<float>& data() noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  // Channels [first, first + count).
  FeatureMap slice_channels(int first, int count) const;

  bool operator==(const FeatureMap&) const = default;

 private:
  int channels_ = 0;
  Dims dims_{};
  std::vector<float> data_;
};

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);
FeatureMap add(const FeatureMap& a, const FeatureMap& b);
FeatureMap random_feature_map(int channels, Dims dims, std::uint64_t seed, float lo = -1.0f,
                              float hi = 1.0f);

// Trilinear resampling with half-pixel centres and edge clamping.
FeatureMap trilinear_resize(const FeatureMap& in, Dims target);

// Single-head projections, row-major: wq/wk/wv are d_model x d_head,
// wo is d_head x d_model. No biases.
struct AttentionParams {
  int d_model = 0;
  int d_head = 0;
  std::vector<float> wq, wk, wv, wo;

  // Uniform in [-1/sqrt(d_model), 1/sqrt(d_model)] from the seed, with
  // d_head = d_model.
  static AttentionParams make(int d_model, std::uint64_t seed);
  void validate() const;
};

struct AttentionStats {
  double max_row_sum_error = 0.0;
  std::size_t rows = 0;
  std::size_t keys = 0;
  void merge(const AttentionStats& other);
};

// rowsoftmax(Q K^T / sqrt(d_head)) V, projected by wo and laid out on fq's
// spatial grid.
FeatureMap cross_attention(const FeatureMap& fq, const FeatureMap& fkv, const AttentionParams& p,
                           AttentionStats* stats = nullptr);

FeatureMap self_attention(const FeatureMap& f, const AttentionParams& p,
                          AttentionStats* stats = nullptr);

struct DmqParams {
  AttentionParams cross;
  AttentionParams self;
  static DmqParams make(int d_model, std::uint64_t seed);
};

struct DmqResult {
  FeatureMap dq_v2c;
  FeatureMap dq_c2v;
};

// dq_v2c = Cross(Q from fv4, K/V from fc4) + Self(fc4); dq_c2v swaps roles.
DmqResult deep_mutual_query(const FeatureMap& fc4, const FeatureMap& fv4, const DmqParams& p,
                            AttentionStats* stats = nullptr);

struct ShallowQueryParams {
  int channels = 0;
  std::vector<float> mix;  // channels x channels, 1x1x1 mixing of the fused sum
  AttentionParams attention;  // d_model = channels / 2
  static ShallowQueryParams make(int channels, std::uint64_t seed);
  void validate() const;
};

// Elementwise sum of the two modalities followed by the 1x1x1 mix.
FeatureMap fuse_shallow(const FeatureMap& fci, const FeatureMap& fvi, const ShallowQueryParams& p);

// Attention whose queries are 2x average-pooled and keys 2x max-pooled. Each
// pooled key's weight is spread evenly over the full-resolution value tokens
// of its cell, and every query voxel takes the row of the cell it falls in.
FeatureMap pooled_self_attention(const FeatureMap& f, const AttentionParams& p,
                                 AttentionStats* stats = nullptr);

// Concat(pooled_self_attention(first half), second half) of the fused map.
FeatureMap shallow_query(const FeatureMap& fci, const FeatureMap& fvi, const ShallowQueryParams& p,
                         AttentionStats* stats = nullptr);

struct FlexConvParams {
  int in_channels = 0;
  int branch_channels = 0;
  int out_channels = 0;
  std::vector<int> kernel_sizes{1, 3, 5};
  // Per branch: [branch_channels][in_channels][k][k][k], x-fastest taps.
  std::vector<std::vector<float>> branch_weights;
  // [out_channels][kernel_sizes.size() * branch_channels]
  std::vector<float> compression;

  static FlexConvParams make(int in_channels, int branch_channels, int out_channels,
                             std::uint64_t seed, std::vector<int> kernel_sizes = {1, 3, 5});
  // Every branch is a centred identity; compression selects branch 0.
  static FlexConvParams identity(int channels, std::vector<int> kernel_sizes = {1, 3, 5});
  // One 1x1x1 branch averaging all input channels into one output.
  static FlexConvParams channel_average(int in_channels);
  void validate() const;
};

// Parallel zero-padded "same" convolutions, concatenated, then 1x1x1 compression.
FeatureMap flex_conv_block(const FeatureMap& x, const FlexConvParams& p);

// Resizes each single-channel Seg_i to `target`, concatenates, fuses to one
// channel with `fusion`, and applies the logistic function.
FeatureMap d2sd_fuse(const std::vector<FeatureMap>& segs, Dims target, const FlexConvParams& fusion);

}  // namespace tubekit
