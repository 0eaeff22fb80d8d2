#include "tubekit/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "tubekit/random.hpp"

namespace tubekit {
namespace {

std::vector<float> uniform_weights(std::size_t n, double bound, SplitMix64& rng) {
  std::vector<float> w(n);
  for (float& v : w) v = static_cast<float>(rng.uniform(-bound, bound));
  return w;
}

// tokens (N x C) times W (C x H), result N x H in double.
std::vector<double> project(const FeatureMap& f, const std::vector<float>& w, int out_dim) {
  const std::size_t n = f.voxels();
  const int c_in = f.channels();
  std::vector<double> out(n * out_dim, 0.0);
  for (int c = 0; c < c_in; ++c) {
    for (std::size_t v = 0; v < n; ++v) {
      const double x = f.at(c, v);
      double* row = &out[v * out_dim];
      const float* wr = &w[static_cast<std::size_t>(c) * out_dim];
      for (int h = 0; h < out_dim; ++h) row[h] += x * wr[h];
    }
  }
  return out;
}

// Softmax-weighted sum of `values` rows for one query row; returns |sum(a) - 1|.
double attend_row(const double* q, const std::vector<double>& keys, const std::vector<double>& values,
                  std::size_t n_keys, int dh, double* out, std::vector<double>& scratch) {
  scratch.resize(n_keys);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < n_keys; ++m) {
    double dot = 0.0;
    for (int h = 0; h < dh; ++h) dot += q[h] * keys[m * dh + h];
    scratch[m] = dot * scale;
    max_logit = std::max(max_logit, scratch[m]);
  }
  double denom = 0.0;
  for (std::size_t m = 0; m < n_keys; ++m) {
    scratch[m] = std::exp(scratch[m] - max_logit);
    denom += scratch[m];
  }
  std::fill(out, out + dh, 0.0);
  double row_sum = 0.0;
  for (std::size_t m = 0; m < n_keys; ++m) {
    const double a = scratch[m] / denom;
    row_sum += a;
    for (int h = 0; h < dh; ++h) out[h] += a * values[m * dh + h];
  }
  return std::abs(row_sum - 1.0);
}

// Head-space rows (N x dh) through wo into a d_model-channel map on `dims`.
FeatureMap output_projection(const std::vector<double>& heads, const AttentionParams& p, Dims dims) {
  FeatureMap out(p.d_model, dims);
  const std::size_t n = dims.count();
  for (std::size_t v = 0; v < n; ++v) {
    for (int c = 0; c < p.d_model; ++c) {
      double acc = 0.0;
      for (int h = 0; h < p.d_head; ++h) acc += heads[v * p.d_head + h] * p.wo[h * p.d_model + c];
      out.at(c, v) = static_cast<float>(acc);
    }
  }
  return out;
}

Dims pooled_dims(const Dims& d) { return {(d.nx + 1) / 2, (d.ny + 1) / 2, (d.nz + 1) / 2}; }

std::size_t cell_of(const Dims& d, const Dims& pd, std::size_t v) {
  const std::size_t x = v % d.nx, y = (v / d.nx) % d.ny, z = v / (static_cast<std::size_t>(d.nx) * d.ny);
  return x / 2 + pd.nx * (y / 2 + static_cast<std::size_t>(pd.ny) * (z / 2));
}

void check_finite(const std::vector<float>& data) {
  for (float v : data) {
    if (!std::isfinite(v)) throw ParameterError("feature map values must be finite");
  }
}

}  // namespace

FeatureMap::FeatureMap(int channels, Dims dims, float fill)
    : FeatureMap(channels, dims, std::vector<float>(static_cast<std::size_t>(std::max(channels, 0)) *
                                                        dims.count(),
                                                    fill)) {}

FeatureMap::FeatureMap(int channels, Dims dims, std::vector<float> data)
    : channels_(channels), dims_(dims), data_(std::move(data)) {
  if (channels < 1) throw ParameterError("feature map needs >= 1 channel");
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw ParameterError("feature map dims must be >= 1");
  if (data_.size() != static_cast<std::size_t>(channels) * dims.count()) {
    throw ParameterError("feature map data length does not match channels x dims");
  }
  check_finite(data_);
}

FeatureMap FeatureMap::slice_channels(int first, int count) const {
  if (first < 0 || count < 1 || first + count > channels_) {
    throw ParameterError("channel slice out of range");
  }
  const std::size_t n = voxels();
  std::vector<float> out(data_.begin() + static_cast<std::ptrdiff_t>(first * n),
                         data_.begin() + static_cast<std::ptrdiff_t>((first + count) * n));
  return FeatureMap(count, dims_, std::move(out));
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.dims() != b.dims()) throw ParameterError("concat: spatial dims differ");
  std::vector<float> out = a.data();
  out.insert(out.end(), b.data().begin(), b.data().end());
  return FeatureMap(a.channels() + b.channels(), a.dims(), std::move(out));
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
  if (a.dims() != b.dims() || a.channels() != b.channels()) throw ParameterError("add: shape mismatch");
  std::vector<float> out = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  return FeatureMap(a.channels(), a.dims(), std::move(out));
}

FeatureMap random_feature_map(int channels, Dims dims, std::uint64_t seed, float lo, float hi) {
  SplitMix64 rng(seed);
  std::vector<float> data(static_cast<std::size_t>(channels) * dims.count());
  for (float& v : data) v = static_cast<float>(rng.uniform(lo, hi));
  return FeatureMap(channels, dims, std::move(data));
}

FeatureMap trilinear_resize(const FeatureMap& in, Dims target) {
  const Dims& s = in.dims();
  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [](int n_in, int n_out) {
    std::vector<Tap> out(n_out);
    const double ratio = static_cast<double>(n_in) / n_out;
    for (int o = 0; o < n_out; ++o) {
      const double src = std::clamp((o + 0.5) * ratio - 0.5, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      out[o] = {i0, std::min(i0 + 1, n_in - 1), src - i0};
    }
    return out;
  };
  const auto tx = taps(s.nx, target.nx), ty = taps(s.ny, target.ny), tz = taps(s.nz, target.nz);
  FeatureMap out(in.channels(), target);
  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
  for (int c = 0; c < in.channels(); ++c) {
    auto src = [&](int x, int y, int z) -> double {
      return in.at(c, x + static_cast<std::size_t>(s.nx) * (y + static_cast<std::size_t>(s.ny) * z));
    };
    std::size_t v = 0;
    for (int z = 0; z < target.nz; ++z)
      for (int y = 0; y < target.ny; ++y)
        for (int x = 0; x < target.nx; ++x, ++v) {
          const Tap& a = tx[x];
          const Tap& b = ty[y];
          const Tap& g = tz[z];
          auto plane = [&](int zi) {
            return lerp(lerp(src(a.i0, b.i0, zi), src(a.i1, b.i0, zi), a.t),
                        lerp(src(a.i0, b.i1, zi), src(a.i1, b.i1, zi), a.t), b.t);
          };
          out.at(c, v) = static_cast<float>(lerp(plane(g.i0), plane(g.i1), g.t));
        }
  }
  return out;
}

AttentionParams AttentionParams::make(int d_model, std::uint64_t seed) {
  if (d_model < 1) throw ParameterError("d_model must be >= 1");
  SplitMix64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
  const std::size_t n = static_cast<std::size_t>(d_model) * d_model;
  AttentionParams p;
  p.d_model = d_model;
  p.d_head = d_model;
  p.wq = uniform_weights(n, bound, rng);
  p.wk = uniform_weights(n, bound, rng);
  p.wv = uniform_weights(n, bound, rng);
  p.wo = uniform_weights(n, bound, rng);
  return p;
}

void AttentionParams::validate() const {
  if (d_model < 1 || d_head < 1) throw ParameterError("attention dims must be >= 1");
  const std::size_t n = static_cast<std::size_t>(d_model) * d_head;
  if (wq.size() != n || wk.size() != n || wv.size() != n || wo.size() != n) {
    throw ParameterError("attention projection sizes do not match d_model x d_head");
  }
  for (const auto* w : {&wq, &wk, &wv, &wo}) check_finite(*w);
}

void AttentionStats::merge(const AttentionStats& other) {
  max_row_sum_error = std::max(max_row_sum_error, other.max_row_sum_error);
  rows += other.rows;
  keys = std::max(keys, other.keys);
}

FeatureMap cross_attention(const FeatureMap& fq, const FeatureMap& fkv, const AttentionParams& p,
                           AttentionStats* stats) {
  p.validate();
  if (fq.channels() != p.d_model || fkv.channels() != p.d_model) {
    throw ParameterError("attention: channels must equal d_model (" + std::to_string(p.d_model) + ")");
  }
  const int dh = p.d_head;
  const std::vector<double> q = project(fq, p.wq, dh);
  const std::vector<double> k = project(fkv, p.wk, dh);
  const std::vector<double> v = project(fkv, p.wv, dh);
  const std::size_t nq = fq.voxels(), nk = fkv.voxels();
  std::vector<double> heads(nq * dh);
  std::vector<double> scratch;
  AttentionStats local;
  local.rows = nq;
  local.keys = nk;
  for (std::size_t r = 0; r < nq; ++r) {
    const double err = attend_row(&q[r * dh], k, v, nk, dh, &heads[r * dh], scratch);
    local.max_row_sum_error = std::max(local.max_row_sum_error, err);
  }
  if (stats) stats->merge(local);
  return output_projection(heads, p, fq.dims());
}

FeatureMap self_attention(const FeatureMap& f, const AttentionParams& p, AttentionStats* stats) {
  return cross_attention(f, f, p, stats);
}

DmqParams DmqParams::make(int d_model, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::uint64_t s1 = rng.next(), s2 = rng.next();
  return {AttentionParams::make(d_model, s1), AttentionParams::make(d_model, s2)};
}

DmqResult deep_mutual_query(const FeatureMap& fc4, const FeatureMap& fv4, const DmqParams& p,
                            AttentionStats* stats) {
  if (fc4.channels() != fv4.channels()) throw ParameterError("DMQ: channel counts differ");
  if (fc4.dims() != fv4.dims()) throw ParameterError("DMQ: spatial dims differ");
  DmqResult r;
  r.dq_v2c = add(cross_attention(fv4, fc4, p.cross, stats), self_attention(fc4, p.self, stats));
  r.dq_c2v = add(cross_attention(fc4, fv4, p.cross, stats), self_attention(fv4, p.self, stats));
  return r;
}

ShallowQueryParams ShallowQueryParams::make(int channels, std::uint64_t seed) {
  if (channels < 2 || channels % 2 != 0) throw ParameterError("shallow query needs an even channel count");
  SplitMix64 rng(seed);
  ShallowQueryParams p;
  p.channels = channels;
  p.mix = uniform_weights(static_cast<std::size_t>(channels) * channels,
                          1.0 / std::sqrt(static_cast<double>(channels)), rng);
  p.attention = AttentionParams::make(channels / 2, rng.next());
  return p;
}

void ShallowQueryParams::validate() const {
  if (channels < 2 || channels % 2 != 0) throw ParameterError("shallow query needs an even channel count");
  if (mix.size() != static_cast<std::size_t>(channels) * channels) {
    throw ParameterError("shallow query mix must be channels x channels");
  }
  if (attention.d_model != channels / 2) throw ParameterError("shallow query attention d_model must be channels/2");
  attention.validate();
}

FeatureMap fuse_shallow(const FeatureMap& fci, const FeatureMap& fvi, const ShallowQueryParams& p) {
  p.validate();
  if (fci.channels() != p.channels || fvi.channels() != p.channels) {
    throw ParameterError("shallow query: input channels must equal " + std::to_string(p.channels));
  }
  const FeatureMap sum = add(fci, fvi);
  FeatureMap out(p.channels, sum.dims());
  const std::size_t n = sum.voxels();
  for (int o = 0; o < p.channels; ++o) {
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (int c = 0; c < p.channels; ++c) acc += p.mix[o * p.channels + c] * sum.at(c, v);
      out.at(o, v) = static_cast<float>(acc);
    }
  }
  return out;
}

FeatureMap pooled_self_attention(const FeatureMap& f, const AttentionParams& p, AttentionStats* stats) {
  p.validate();
  if (f.channels() != p.d_model) throw ParameterError("pooled attention: channels must equal d_model");
  const Dims& d = f.dims();
  const Dims pd = pooled_dims(d);
  const std::size_t n = f.voxels(), nc = pd.count();
  const int dh = p.d_head;
  const std::vector<double> q = project(f, p.wq, dh);
  const std::vector<double> k = project(f, p.wk, dh);
  const std::vector<double> v = project(f, p.wv, dh);

  std::vector<double> q_avg(nc * dh, 0.0), v_avg(nc * dh, 0.0);
  std::vector<double> k_max(nc * dh, -std::numeric_limits<double>::infinity());
  std::vector<double> cell_count(nc, 0.0);
  std::vector<std::size_t> cell(n);
  for (std::size_t t = 0; t < n; ++t) {
    cell[t] = cell_of(d, pd, t);
    const std::size_t c = cell[t];
    cell_count[c] += 1.0;
    for (int h = 0; h < dh; ++h) {
      q_avg[c * dh + h] += q[t * dh + h];
      v_avg[c * dh + h] += v[t * dh + h];
      k_max[c * dh + h] = std::max(k_max[c * dh + h], k[t * dh + h]);
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    for (int h = 0; h < dh; ++h) {
      q_avg[c * dh + h] /= cell_count[c];
      v_avg[c * dh + h] /= cell_count[c];
    }
  }

  std::vector<double> cell_heads(nc * dh);
  std::vector<double> scratch;
  AttentionStats local;
  local.rows = n;
  local.keys = n;
  for (std::size_t c = 0; c < nc; ++c) {
    const double err = attend_row(&q_avg[c * dh], k_max, v_avg, nc, dh, &cell_heads[c * dh], scratch);
    local.max_row_sum_error = std::max(local.max_row_sum_error, err);
  }
  if (stats) stats->merge(local);

  std::vector<double> heads(n * dh);
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(&cell_heads[cell[t] * dh], dh, &heads[t * dh]);
  }
  return output_projection(heads, p, d);
}

FeatureMap shallow_query(const FeatureMap& fci, const FeatureMap& fvi, const ShallowQueryParams& p,
                         AttentionStats* stats) {
  const FeatureMap fused = fuse_shallow(fci, fvi, p);
  const int half = p.channels / 2;
  const FeatureMap s1 = fused.slice_channels(0, half);
  const FeatureMap s2 = fused.slice_channels(half, half);
  return concat_channels(pooled_self_attention(s1, p.attention, stats), s2);
}

FlexConvParams FlexConvParams::make(int in_channels, int branch_channels, int out_channels,
                                    std::uint64_t seed, std::vector<int> kernel_sizes) {
  FlexConvParams p;
  p.in_channels = in_channels;
  p.branch_channels = branch_channels;
  p.out_channels = out_channels;
  p.kernel_sizes = std::move(kernel_sizes);
  if (in_channels < 1 || branch_channels < 1 || out_channels < 1 || p.kernel_sizes.empty()) {
    throw ParameterError("flex conv needs positive channel counts and at least one kernel");
  }
  SplitMix64 rng(seed);
  for (int k : p.kernel_sizes) {
    if (k < 1 || k % 2 == 0) throw ParameterError("flex conv kernel sizes must be odd, got " + std::to_string(k));
    const std::size_t taps = static_cast<std::size_t>(k) * k * k;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * taps));
    p.branch_weights.push_back(
        uniform_weights(static_cast<std::size_t>(branch_channels) * in_channels * taps, bound, rng));
  }
  const std::size_t cat = p.kernel_sizes.size() * branch_channels;
  p.compression = uniform_weights(out_channels * cat, 1.0 / std::sqrt(static_cast<double>(cat)), rng);
  return p;
}

FlexConvParams FlexConvParams::identity(int channels, std::vector<int> kernel_sizes) {
  FlexConvParams p;
  p.in_channels = p.branch_channels = p.out_channels = channels;
  p.kernel_sizes = std::move(kernel_sizes);
  for (int k : p.kernel_sizes) {
    if (k < 1 || k % 2 == 0) throw ParameterError("flex conv kernel sizes must be odd, got " + std::to_string(k));
    const std::size_t taps = static_cast<std::size_t>(k) * k * k;
    std::vector<float> w(static_cast<std::size_t>(channels) * channels * taps, 0.0f);
    const std::size_t centre = taps / 2;
    for (int c = 0; c < channels; ++c) w[(static_cast<std::size_t>(c) * channels + c) * taps + centre] = 1.0f;
    p.branch_weights.push_back(std::move(w));
  }
  const std::size_t cat = p.kernel_sizes.size() * channels;
  p.compression.assign(channels * cat, 0.0f);
  for (int c = 0; c < channels; ++c) p.compression[c * cat + c] = 1.0f;
  return p;
}

FlexConvParams FlexConvParams::channel_average(int in_channels) {
  if (in_channels < 1) throw ParameterError("channel_average needs >= 1 channel");
  FlexConvParams p;
  p.in_channels = in_channels;
  p.branch_channels = 1;
  p.out_channels = 1;
  p.kernel_sizes = {1};
  p.branch_weights = {std::vector<float>(in_channels, 1.0f / static_cast<float>(in_channels))};
  p.compression = {1.0f};
  return p;
}

void FlexConvParams::validate() const {
  if (in_channels < 1 || branch_channels < 1 || out_channels < 1 || kernel_sizes.empty()) {
    throw ParameterError("flex conv needs positive channel counts and at least one kernel");
  }
  if (branch_weights.size() != kernel_sizes.size()) throw ParameterError("flex conv: one weight set per kernel");
  for (std::size_t b = 0; b < kernel_sizes.size(); ++b) {
    const int k = kernel_sizes[b];
    if (k < 1 || k % 2 == 0) throw ParameterError("flex conv kernel sizes must be odd, got " + std::to_string(k));
    const std::size_t taps = static_cast<std::size_t>(k) * k * k;
    if (branch_weights[b].size() != static_cast<std::size_t>(branch_channels) * in_channels * taps) {
      throw ParameterError("flex conv branch weight size mismatch");
    }
  }
  if (compression.size() != static_cast<std::size_t>(out_channels) * kernel_sizes.size() * branch_channels) {
    throw ParameterError("flex conv compression size mismatch");
  }
}

FeatureMap flex_conv_block(const FeatureMap& x, const FlexConvParams& p) {
  p.validate();
  if (x.channels() != p.in_channels) {
    throw ParameterError("flex conv: expected " + std::to_string(p.in_channels) + " input channels");
  }
  const Dims& d = x.dims();
  const std::size_t n = x.voxels();
  const std::size_t cat = p.kernel_sizes.size() * p.branch_channels;
  std::vector<double> branches(cat * n, 0.0);
  for (std::size_t b = 0; b < p.kernel_sizes.size(); ++b) {
    const int k = p.kernel_sizes[b];
    const int r = k / 2;
    const std::size_t taps = static_cast<std::size_t>(k) * k * k;
    const std::vector<float>& w = p.branch_weights[b];
    for (int o = 0; o < p.branch_channels; ++o) {
      double* dst = &branches[(b * p.branch_channels + o) * n];
      for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
          for (int xx = 0; xx < d.nx; ++xx) {
            double acc = 0.0;
            for (int c = 0; c < p.in_channels; ++c) {
              const float* wc = &w[(static_cast<std::size_t>(o) * p.in_channels + c) * taps];
              for (int tz = -r; tz <= r; ++tz) {
                const int zz = z + tz;
                if (zz < 0 || zz >= d.nz) continue;
                for (int ty = -r; ty <= r; ++ty) {
                  const int yy = y + ty;
                  if (yy < 0 || yy >= d.ny) continue;
                  for (int tx = -r; tx <= r; ++tx) {
                    const int xs = xx + tx;
                    if (xs < 0 || xs >= d.nx) continue;
                    const float wt = wc[(tz + r) * k * k + (ty + r) * k + (tx + r)];
                    if (wt == 0.0f) continue;
                    acc += static_cast<double>(wt) *
                           x.at(c, xs + static_cast<std::size_t>(d.nx) * (yy + static_cast<std::size_t>(d.ny) * zz));
                  }
                }
              }
            }
            dst[xx + static_cast<std::size_t>(d.nx) * (y + static_cast<std::size_t>(d.ny) * z)] = acc;
          }
    }
  }
  FeatureMap out(p.out_channels, d);
  for (int o = 0; o < p.out_channels; ++o) {
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cat; ++j) {
        const float wt = p.compression[o * cat + j];
        if (wt != 0.0f) acc += static_cast<double>(wt) * branches[j * n + v];
      }
      out.at(o, v) = static_cast<float>(acc);
    }
  }
  return out;
}

FeatureMap d2sd_fuse(const std::vector<FeatureMap>& segs, Dims target, const FlexConvParams& fusion) {
  if (segs.empty()) throw ParameterError("d2sd_fuse: empty list");
  if (segs.size() < 2) throw ParameterError("d2sd_fuse: needs at least two scales");
  if (fusion.in_channels != static_cast<int>(segs.size()) || fusion.out_channels != 1) {
    throw ParameterError("d2sd_fuse: fusion block must map one channel per scale to one channel");
  }
  std::vector<float> stacked;
  stacked.reserve(segs.size() * target.count());
  for (const FeatureMap& s : segs) {
    if (s.channels() != 1) throw ParameterError("d2sd_fuse: every Seg_i must be single-channel");
    const FeatureMap up = trilinear_resize(s, target);
    stacked.insert(stacked.end(), up.data().begin(), up.data().end());
  }
  FeatureMap fused = flex_conv_block(FeatureMap(static_cast<int>(segs.size()), target, std::move(stacked)), fusion);
  for (float& v : fused.data()) v = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  return fused;
}

}  // namespace tubekit
