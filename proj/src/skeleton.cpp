#include "tubekit/skeleton.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>

namespace tubekit {
namespace {

// Padding is value 0 with route -1. Ties prefer in-volume voxels, then the
// smaller linear index.
inline bool better(double v, std::int32_t i, double bv, std::int32_t bi, bool is_min) {
  if (is_min ? v < bv : v > bv) return true;
  if (v != bv) return false;
  if (bi < 0) return i >= 0;
  if (i < 0) return false;
  return i < bi;
}

// Separable 3x3x3 pooling. Lexicographic (value, padding, z, y, x) order
// composes across the three passes, so the route is the same as a direct
// 27-neighbour scan.
std::vector<double> pool3(const std::vector<double>& in, const Dims& d, bool is_min,
                          std::vector<std::int32_t>* route) {
  const std::size_t n = in.size();
  std::vector<double> val(n), val2(n);
  std::vector<std::int32_t> idx(n), idx2(n);
  std::vector<std::int32_t> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = static_cast<std::int32_t>(i);

  const std::array<int, 3> len{d.nx, d.ny, d.nz};
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(d.nx),
                                          static_cast<std::size_t>(d.nx) * d.ny};
  const double* src_v = in.data();
  const std::int32_t* src_i = base.data();
  for (int axis = 0; axis < 3; ++axis) {
    double* dst_v = axis == 1 ? val2.data() : val.data();
    std::int32_t* dst_i = axis == 1 ? idx2.data() : idx.data();
    for (std::size_t i = 0; i < n; ++i) {
      const int pos = static_cast<int>((i / stride[axis]) % len[axis]);
      double bv = 0.0;
      std::int32_t bi = -1;
      bool first = true;
      for (int k = -1; k <= 1; ++k) {
        double v = 0.0;
        std::int32_t r = -1;
        const int q = pos + k;
        if (q >= 0 && q < len[axis]) {
          const std::size_t j = i + static_cast<std::ptrdiff_t>(k) * static_cast<std::ptrdiff_t>(stride[axis]);
          v = src_v[j];
          r = src_i[j];
        }
        if (first || better(v, r, bv, bi, is_min)) {
          bv = v;
          bi = r;
          first = false;
        }
      }
      dst_v[i] = bv;
      dst_i[i] = bi;
    }
    src_v = dst_v;
    src_i = dst_i;
  }
  if (route) *route = idx;
  return val;
}

void check_unit_range(const Field3& prob) {
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (!(prob[i] >= 0.0 && prob[i] <= 1.0)) {
      throw ParameterError("soft skeleton input must lie in [0, 1] (linear index " +
                           std::to_string(i) + ")");
    }
  }
}

constexpr std::array<std::array<int, 3>, 6> kFaceOffsets{{
    {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

std::vector<std::array<int, 3>> offsets_for(Connectivity conn) {
  std::vector<std::array<int, 3>> out;
  if (conn == Connectivity::six) return {kFaceOffsets.begin(), kFaceOffsets.end()};
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy || dz) out.push_back({dx, dy, dz});
  return out;
}

long long dist2(const Index3& a, const Index3& b) {
  const long long dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

void SoftSkeletonParams::validate() const {
  if (iterations < 1) throw ParameterError("skeleton iterations must be >= 1");
}

Field3 min_pool3(const Field3& in, std::vector<std::int32_t>* route) {
  return Field3(in.dims(), in.spacing(), pool3(in.values(), in.dims(), true, route));
}

Field3 max_pool3(const Field3& in, std::vector<std::int32_t>* route) {
  return Field3(in.dims(), in.spacing(), pool3(in.values(), in.dims(), false, route));
}

SoftSkeletonTrace::SoftSkeletonTrace(const Field3& prob, SoftSkeletonParams params)
    : dims_(prob.dims()), skeleton_(prob.dims(), prob.spacing()) {
  params.validate();
  check_unit_range(prob);
  const std::size_t n = prob.size();
  std::vector<double> img = prob.values();
  std::vector<double> skel(n, 0.0);
  steps_.resize(static_cast<std::size_t>(params.iterations) + 1);
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    Step& s = steps_[t];
    std::vector<double> eroded = pool3(img, dims_, true, &s.erode_route);
    const std::vector<double> opened = pool3(eroded, dims_, false, &s.dilate_route);
    s.delta.resize(n);
    s.delta_active.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = img[i] - opened[i];
      s.delta_active[i] = diff > 0.0;
      s.delta[i] = diff > 0.0 ? diff : 0.0;
    }
    if (t == 0) {
      skel = s.delta;
    } else {
      s.skel_before = skel;
      s.update_active.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = s.delta[i] - skel[i] * s.delta[i];
        s.update_active[i] = u > 0.0;
        if (u > 0.0) skel[i] += u;
      }
    }
    img = std::move(eroded);
  }
  skeleton_ = Field3(dims_, prob.spacing(), std::move(skel));
}

Field3 SoftSkeletonTrace::backward(const Field3& grad_skeleton) const {
  if (grad_skeleton.dims() != dims_) throw ParameterError("backward: gradient shape mismatch");
  const std::size_t n = dims_.count();
  std::vector<double> g_skel = grad_skeleton.values();
  std::vector<double> g_next(n, 0.0);  // d/d img_{t+1}
  std::vector<double> g_eroded(n), g_img(n);
  for (std::size_t t = steps_.size(); t-- > 0;) {
    const Step& s = steps_[t];
    std::vector<double> g_delta(n);
    if (t == 0) {
      g_delta = g_skel;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (s.update_active[i]) {
          g_delta[i] = g_skel[i] * (1.0 - s.skel_before[i]);
          g_skel[i] *= 1.0 - s.delta[i];
        } else {
          g_delta[i] = 0.0;
        }
      }
    }
    // diff = img_t - dilate(erode(img_t)); img_{t+1} = erode(img_t).
    g_eroded = g_next;
    for (std::size_t i = 0; i < n; ++i) {
      const double g_diff = s.delta_active[i] ? g_delta[i] : 0.0;
      g_img[i] = g_diff;
      if (g_diff != 0.0 && s.dilate_route[i] >= 0) g_eroded[s.dilate_route[i]] -= g_diff;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (g_eroded[i] != 0.0 && s.erode_route[i] >= 0) g_img[s.erode_route[i]] += g_eroded[i];
    }
    std::swap(g_next, g_img);
  }
  return Field3(dims_, grad_skeleton.spacing(), std::move(g_next));
}

bool SoftSkeletonTrace::same_routing(const SoftSkeletonTrace& other) const noexcept {
  if (dims_ != other.dims_ || steps_.size() != other.steps_.size()) return false;
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    const Step& a = steps_[t];
    const Step& b = other.steps_[t];
    if (a.erode_route != b.erode_route || a.dilate_route != b.dilate_route ||
        a.delta_active != b.delta_active || a.update_active != b.update_active) {
      return false;
    }
  }
  return true;
}

Field3 soft_skeleton(const Field3& prob, SoftSkeletonParams params) {
  params.validate();
  check_unit_range(prob);
  const Dims& d = prob.dims();
  const std::size_t n = prob.size();
  std::vector<double> img = prob.values();
  auto open_residual = [&](const std::vector<double>& src, std::vector<double>& eroded) {
    eroded = pool3(src, d, true, nullptr);
    const std::vector<double> opened = pool3(eroded, d, false, nullptr);
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = std::max(0.0, src[i] - opened[i]);
    return delta;
  };
  std::vector<double> eroded;
  std::vector<double> skel = open_residual(img, eroded);
  for (int t = 0; t < params.iterations; ++t) {
    img = std::move(eroded);
    const std::vector<double> delta = open_residual(img, eroded);
    for (std::size_t i = 0; i < n; ++i) skel[i] += std::max(0.0, delta[i] - skel[i] * delta[i]);
  }
  return Field3(d, prob.spacing(), std::move(skel));
}

Volume3 soft_skeleton(const Volume3& prob, SoftSkeletonParams params) {
  return convert<float>(soft_skeleton(convert<double>(prob), params));
}

Mask3 hard_skeleton(const Mask3& mask, int iterations) {
  return threshold(soft_skeleton(convert<double>(mask), SoftSkeletonParams{iterations}), 0.5);
}

ComponentSet connected_components(const Mask3& mask, Connectivity conn) {
  const Dims& d = mask.dims();
  ComponentSet out;
  out.labels = Grid<std::int32_t>(d, mask.spacing(), 0);
  const auto offsets = offsets_for(conn);
  std::vector<std::size_t> queue;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || out.labels[seed] != 0) continue;
    const std::int32_t id = ++out.count;
    std::size_t size = 0;
    queue.clear();
    queue.push_back(seed);
    out.labels[seed] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Index3 p = mask.coord(queue[head]);
      ++size;
      for (const auto& o : offsets) {
        const Index3 q{p.x + o[0], p.y + o[1], p.z + o[2]};
        if (!mask.contains(q)) continue;
        const std::size_t j = mask.index(q);
        if (mask[j] && out.labels[j] == 0) {
          out.labels[j] = id;
          queue.push_back(j);
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

int count_neighbors26(const Mask3& mask, const Index3& p) {
  int count = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy && !dz) continue;
        const Index3 q{p.x + dx, p.y + dy, p.z + dz};
        if (mask.contains(q) && mask.at(q)) ++count;
      }
  return count;
}

std::vector<Index3> endpoints(const Mask3& skeleton) {
  std::vector<Index3> out;
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (!skeleton[i]) continue;
    const Index3 p = skeleton.coord(i);
    if (count_neighbors26(skeleton, p) <= 1) out.push_back(p);
  }
  return out;
}

std::vector<Index3> rasterize_line(const Index3& a, const Index3& b) {
  std::vector<Index3> out{a};
  int x = a.x, y = a.y, z = a.z;
  const int dx = std::abs(b.x - a.x), dy = std::abs(b.y - a.y), dz = std::abs(b.z - a.z);
  const int xs = b.x > a.x ? 1 : -1, ys = b.y > a.y ? 1 : -1, zs = b.z > a.z ? 1 : -1;
  // Drive along the dominant axis; the two error terms step the others.
  auto drive = [&](int& major, int dmajor, int smajor, int& m1, int d1, int s1, int& m2, int d2,
                   int s2) {
    int e1 = 2 * d1 - dmajor;
    int e2 = 2 * d2 - dmajor;
    for (int step = 0; step < dmajor; ++step) {
      major += smajor;
      if (e1 >= 0) {
        m1 += s1;
        e1 -= 2 * dmajor;
      }
      if (e2 >= 0) {
        m2 += s2;
        e2 -= 2 * dmajor;
      }
      e1 += 2 * d1;
      e2 += 2 * d2;
      out.push_back({x, y, z});
    }
  };
  if (dx >= dy && dx >= dz) {
    drive(x, dx, xs, y, dy, ys, z, dz, zs);
  } else if (dy >= dx && dy >= dz) {
    drive(y, dy, ys, x, dx, xs, z, dz, zs);
  } else {
    drive(z, dz, zs, x, dx, xs, y, dy, ys);
  }
  return out;
}

ReconnectResult reconnect(const Mask3& skeleton) {
  skeleton.validate();
  if (count_foreground(skeleton) == 0) throw DomainError("empty skeleton");

  ReconnectResult result;
  result.reconnected = skeleton;
  result.drawn_only = Mask3(skeleton.dims(), skeleton.spacing());
  Mask3& cur = result.reconnected;

  ComponentSet cc = connected_components(cur);
  result.initial_components = cc.count;
  const int max_passes = cc.count + 1;
  while (cc.count > 1) {
    if (result.passes >= max_passes) throw std::logic_error("reconnect failed to converge");
    ++result.passes;

    int largest = 1;
    for (int id = 2; id <= cc.count; ++id) {
      if (cc.sizes[id - 1] > cc.sizes[largest - 1]) largest = id;
    }

    std::vector<std::vector<Index3>> ends(cc.count + 1), voxels(cc.count + 1);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (!cur[i]) continue;
      voxels[cc.labels[i]].push_back(cur.coord(i));
    }
    for (const Index3& e : endpoints(cur)) ends[cc.labels.at(e)].push_back(e);
    bool foreign_endpoints_exist = false;

    std::vector<std::pair<Index3, Index3>> links;
    for (int id = 1; id <= cc.count; ++id) {
      if (id == largest) continue;
      const auto& sources = ends[id].empty() ? voxels[id] : ends[id];
      foreign_endpoints_exist = false;
      for (int other = 1; other <= cc.count; ++other) {
        if (other != id && !ends[other].empty()) foreign_endpoints_exist = true;
      }
      long long best = std::numeric_limits<long long>::max();
      Index3 best_a{}, best_b{};
      std::size_t best_ai = 0, best_bi = 0;
      // Sources and targets are both visited in linear-index order, so a
      // strict comparison keeps the smallest indices among equal distances.
      for (const Index3& a : sources) {
        for (int other = 1; other <= cc.count; ++other) {
          if (other == id) continue;
          const auto& targets = foreign_endpoints_exist ? ends[other] : voxels[other];
          for (const Index3& b : targets) {
            const long long d2 = dist2(a, b);
            const std::size_t ai = cur.index(a), bi = cur.index(b);
            if (d2 < best || (d2 == best && (ai < best_ai || (ai == best_ai && bi < best_bi)))) {
              best = d2;
              best_a = a;
              best_b = b;
              best_ai = ai;
              best_bi = bi;
            }
          }
        }
      }
      links.emplace_back(best_a, best_b);
    }

    for (const auto& [a, b] : links) {
      ReconnectSegment seg{a, b, 0, result.passes};
      for (const Index3& p : rasterize_line(a, b)) {
        if (!cur.at(p)) {
          cur.at(p) = 1;
          result.drawn_only.at(p) = 1;
          ++seg.drawn_voxels;
        }
      }
      result.segments.push_back(seg);
    }
    cc = connected_components(cur);
  }
  result.final_components = cc.count;
  return result;
}

}  // namespace tubekit
