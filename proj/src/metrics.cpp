#include "tubekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tubekit/skeleton.hpp"

namespace tubekit {
namespace {

void require_same_shape(const Mask3& a, const Mask3& b) {
  if (a.dims() != b.dims()) {
    throw ParameterError("shape mismatch " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
}

std::size_t overlap(const Mask3& a, const Mask3& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] & b[i];
  return n;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on samples at
// q * spacing. f holds squared distances, +inf where no site exists.
void edt_1d(const double* f, double* out, int n, std::size_t stride, double spacing,
            std::vector<int>& v, std::vector<double>& zb) {
  v.resize(n);
  zb.resize(n + 1);
  int k = -1;
  auto pos = [&](int q) { return q * spacing; };
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    while (true) {
      if (k < 0) {
        v[0] = q;
        zb[0] = -kInf;
        zb[1] = kInf;
        k = 0;
        break;
      }
      const int p = v[k];
      const double fp = f[p * stride];
      const double s = ((fq + pos(q) * pos(q)) - (fp + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
      if (s <= zb[k]) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      zb[k] = s;
      zb[k + 1] = kInf;
      break;
    }
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q * stride] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (zb[j + 1] < pos(q)) ++j;
    const double dq = pos(q) - pos(v[j]);
    out[q * stride] = dq * dq + f[v[j] * stride];
  }
}

}  // namespace

double dice(const Mask3& pred, const Mask3& gt) {
  require_same_shape(pred, gt);
  const std::size_t p = count_foreground(pred), g = count_foreground(gt);
  if (p + g == 0) return 100.0;
  return 100.0 * 2.0 * static_cast<double>(overlap(pred, gt)) / static_cast<double>(p + g);
}

double cldice(const Mask3& pred, const Mask3& gt, int skel_iterations) {
  require_same_shape(pred, gt);
  if (pred.values() == gt.values()) return 100.0;
  const Mask3 sp = hard_skeleton(pred, skel_iterations);
  const Mask3 sg = hard_skeleton(gt, skel_iterations);
  const std::size_t np = count_foreground(sp), ng = count_foreground(sg);
  if (np == 0 || ng == 0) return 0.0;
  const double tprec = static_cast<double>(overlap(sp, gt)) / static_cast<double>(np);
  const double tsens = static_cast<double>(overlap(sg, pred)) / static_cast<double>(ng);
  if (tprec + tsens == 0.0) return 0.0;
  return 100.0 * 2.0 * tprec * tsens / (tprec + tsens);
}

Mask3 surface_voxels(const Mask3& mask) {
  Mask3 out(mask.dims(), mask.spacing());
  constexpr int kOff[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const Index3 p = mask.coord(i);
    for (const auto& o : kOff) {
      const Index3 q{p.x + o[0], p.y + o[1], p.z + o[2]};
      if (!mask.contains(q) || !mask.at(q)) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

std::vector<double> squared_distance_transform(const Mask3& sites, Spacing spacing) {
  const Dims& d = sites.dims();
  const std::size_t n = d.count();
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = sites[i] ? 0.0 : kInf;
  std::vector<int> v;
  std::vector<double> zb;
  const std::size_t sx = 1, sy = d.nx, sz = static_cast<std::size_t>(d.nx) * d.ny;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y) {
      const std::size_t base = y * sy + z * sz;
      edt_1d(&a[base], &b[base], d.nx, sx, spacing.x, v, zb);
    }
  for (int z = 0; z < d.nz; ++z)
    for (int x = 0; x < d.nx; ++x) {
      const std::size_t base = x + z * sz;
      edt_1d(&b[base], &a[base], d.ny, sy, spacing.y, v, zb);
    }
  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x) {
      const std::size_t base = x + y * sy;
      edt_1d(&a[base], &b[base], d.nz, sz, spacing.z, v, zb);
    }
  return b;
}

SurfaceDistances surface_distances(const Mask3& pred, const Mask3& gt, Spacing spacing) {
  require_same_shape(pred, gt);
  if (count_foreground(pred) == 0 || count_foreground(gt) == 0) {
    throw DomainError("undefined distance: empty mask");
  }
  const Mask3 ps = surface_voxels(pred), gs = surface_voxels(gt);
  const std::vector<double> to_gt = squared_distance_transform(gs, spacing);
  const std::vector<double> to_pred = squared_distance_transform(ps, spacing);
  SurfaceDistances out;
  double sum_p = 0.0, sum_g = 0.0, max_p = 0.0, max_g = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i]) {
      const double dv = std::sqrt(to_gt[i]);
      sum_p += dv;
      max_p = std::max(max_p, dv);
      ++out.pred_surface;
    }
    if (gs[i]) {
      const double dv = std::sqrt(to_pred[i]);
      sum_g += dv;
      max_g = std::max(max_g, dv);
      ++out.gt_surface;
    }
  }
  const auto np = static_cast<double>(out.pred_surface), ng = static_cast<double>(out.gt_surface);
  out.hd = std::max(max_p, max_g);
  out.assd = (sum_p + sum_g) / (np + ng);
  out.ahd = (sum_p / np + sum_g / ng) / 2.0;
  return out;
}

PrecisionRecall precision_recall_f1(const Mask3& pred, const Mask3& gt) {
  require_same_shape(pred, gt);
  const auto tp = static_cast<double>(overlap(pred, gt));
  const auto p = static_cast<double>(count_foreground(pred));
  const auto g = static_cast<double>(count_foreground(gt));
  PrecisionRecall r;
  r.precision_defined = p > 0.0;
  r.recall_defined = g > 0.0;
  r.precision = r.precision_defined ? 100.0 * tp / p : 0.0;
  r.recall = r.recall_defined ? 100.0 * tp / g : 0.0;
  r.f1 = (r.precision > 0.0 && r.recall > 0.0)
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

TreeMetrics tree_metrics(const Mask3& pred, const Mask3& gt, const TreeMetricsConfig& cfg) {
  require_same_shape(pred, gt);
  if (count_foreground(gt) == 0) throw DomainError("tree metrics need a nonempty reference");
  if (cfg.detection_min_voxels < 1) throw ParameterError("detection threshold must be >= 1 voxel");
  const Mask3 centerline = hard_skeleton(gt, cfg.skel_iterations);

  TreeMetrics out;
  Mask3 branches = centerline;
  for (std::size_t i = 0; i < centerline.size(); ++i) {
    if (centerline[i] && count_neighbors26(centerline, centerline.coord(i)) >= 3) {
      branches[i] = 0;
      ++out.junction_voxels;
    }
  }
  const ComponentSet cc = connected_components(branches, Connectivity::twentysix);
  out.branches = cc.count;
  if (cc.count == 0) return out;

  const Spacing s = gt.spacing();
  const double single_voxel_length = (s.x + s.y + s.z) / 3.0;
  std::vector<int> hits(cc.count + 1, 0);
  double total = 0.0, inside = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const int id = cc.labels[i];
    if (id == 0) continue;
    const Index3 p = branches.coord(i);
    // Half of each step to a same-branch neighbour, so every link counts once.
    double length = 0.0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          const Index3 q{p.x + dx, p.y + dy, p.z + dz};
          if (!branches.contains(q) || cc.labels.at(q) != id) continue;
          length += 0.5 * std::sqrt(dx * dx * s.x * s.x + dy * dy * s.y * s.y + dz * dz * s.z * s.z);
        }
    if (cc.sizes[id - 1] == 1) length = single_voxel_length;
    total += length;
    if (pred[i]) {
      inside += length;
      ++hits[id];
    }
  }
  for (int id = 1; id <= cc.count; ++id) {
    if (hits[id] >= cfg.detection_min_voxels) ++out.branches_detected;
  }
  out.centerline_length_mm = total;
  out.bd = 100.0 * out.branches_detected / cc.count;
  out.tld = total > 0.0 ? 100.0 * inside / total : 0.0;
  return out;
}

MetricsReport evaluate(const Mask3& pred, const Mask3& gt, const TreeMetricsConfig& cfg) {
  require_same_shape(pred, gt);
  MetricsReport r;
  r.dice = dice(pred, gt);
  r.cldice = cldice(pred, gt, cfg.skel_iterations);
  const PrecisionRecall pr = precision_recall_f1(pred, gt);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.f1 = pr.f1;
  const SurfaceDistances sd = surface_distances(pred, gt, gt.spacing());
  r.hd = sd.hd;
  r.assd = sd.assd;
  r.ahd = sd.ahd;
  r.pred_surface_voxels = sd.pred_surface;
  r.gt_surface_voxels = sd.gt_surface;
  const TreeMetrics tm = tree_metrics(pred, gt, cfg);
  r.bd = tm.bd;
  r.tld = tm.tld;
  r.gt_branches = tm.branches;
  r.pred_voxels = count_foreground(pred);
  r.gt_voxels = count_foreground(gt);
  return r;
}

}  // namespace tubekit
