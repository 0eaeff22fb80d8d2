#include "tubekit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tubekit/losses.hpp"
#include "tubekit/random.hpp"

namespace tubekit {
namespace {

Field3 uniform_field(Dims d, SplitMix64& rng, double lo, double hi) {
  Field3 f(d);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(lo, hi);
  return f;
}

Mask3 bernoulli_mask(Dims d, SplitMix64& rng, double p, int border) {
  Mask3 m(d);
  for (int z = border; z < d.nz - border; ++z)
    for (int y = border; y < d.ny - border; ++y)
      for (int x = border; x < d.nx - border; ++x) m.at(x, y, z) = rng.uniform() < p ? 1 : 0;
  if (count_foreground(m) == 0) m.at(d.nx / 2, d.ny / 2, d.nz / 2) = 1;
  return m;
}

std::vector<std::size_t> sample_points(std::size_t n, std::size_t count, SplitMix64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next() % i]);
  idx.resize(std::min(n, count));
  return idx;
}

double step_for(double x, double rel_step) { return rel_step * std::max(std::abs(x), 1e-2); }

void check_points(GradCheckEntry& e, const std::function<double(const Field3&)>& f, const Field3& x,
                  const Field3& grad, const std::vector<std::size_t>& points) {
  for (std::size_t i : points) {
    const double err = relative_error(grad[i], central_difference(f, x, i));
    e.max_rel_error = std::max(e.max_rel_error, err);
    ++e.points;
  }
}

}  // namespace

double central_difference(const std::function<double(const Field3&)>& f, const Field3& x,
                          std::size_t i, double rel_step) {
  const double h = step_for(x[i], rel_step);
  Field3 xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

bool GradCheckReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return e.pass; });
}

GradCheckReport run_gradcheck(std::uint64_t seed, int size, int instances, int points_per_instance,
                              int con_points) {
  if (size < 4) throw ParameterError("gradcheck size must be >= 4");
  if (instances < 1 || points_per_instance < 1 || con_points < 1) {
    throw ParameterError("gradcheck counts must be >= 1");
  }
  GradCheckReport report;
  report.seed = seed;
  report.size = size;
  report.instances = instances;
  GradCheckEntry r_sup{"r_sup", 0.0, 1e-4}, spatial{"spatial", 0.0, 1e-4},
      gated{"spatial_gated_crf", 0.0, 1e-4}, mix{"mix", 0.0, 1e-4}, con{"con", 0.0, 1e-3};

  SplitMix64 rng(seed);
  const Dims d{size, size, size};
  const std::size_t n = d.count();
  const auto points = static_cast<std::size_t>(points_per_instance);

  for (int inst = 0; inst < instances; ++inst) {
    // Positives only inside a one-voxel margin, so the ROI excludes the rim.
    const Mask3 y = bernoulli_mask(d, rng, 0.25, 1);
    const RoiBox roi = roi_from_label(y, 0);
    const Field3 yhat = uniform_field(d, rng, 0.05, 0.95);
    auto f_rsup = [&](const Field3& p) { return loss_r_sup(y, p, roi).term.value; };
    check_points(r_sup, f_rsup, yhat, loss_r_sup(y, yhat, roi).term.grad,
                 sample_points(n, points, rng));

    const Field3 guide = uniform_field(d, rng, 0.0, 1.0);
    for (SpatialMode mode : {SpatialMode::joint, SpatialMode::gated_crf}) {
      GatedKernelParams kp{1.5, 0.5, 2, mode};
      auto f_sp = [&](const Field3& p) { return loss_spatial(p, guide, kp).term.value; };
      check_points(mode == SpatialMode::joint ? spatial : gated, f_sp, yhat,
                   loss_spatial(yhat, guide, kp).term.grad, sample_points(n, points, rng));
    }

    const Mask3 y1 = bernoulli_mask(d, rng, 0.3, 0);
    const Mask3 y2 = bernoulli_mask(d, rng, 0.3, 0);
    const double alpha = rng.uniform();
    const Field3 mixed_pred = uniform_field(d, rng, 0.05, 0.95);
    auto f_mix = [&](const Field3& p) { return loss_mix(p, y1, y2, alpha).value; };
    check_points(mix, f_mix, mixed_pred, loss_mix(mixed_pred, y1, y2, alpha).grad,
                 sample_points(n, points, rng));

    // Connectivity: keep interior voxels whose routing and pseudo-label are
    // identical at x - h, x and x + h, so the loss is smooth along the probe.
    const Field3 pcon = uniform_field(d, rng, 0.05, 0.95);
    const ConnectivityConfig cfg{};
    const Field3 g = loss_con(pcon, cfg).term.grad;
    const ConnectivityTrace base = trace_con(pcon, cfg);
    auto f_con = [&](const Field3& p) { return loss_con(p, cfg).term.value; };
    std::size_t accepted = 0;
    for (std::size_t i : sample_points(n, n, rng)) {
      if (accepted >= static_cast<std::size_t>(con_points)) break;
      const Index3 c = pcon.coord(i);
      if (c.x == 0 || c.y == 0 || c.z == 0 || c.x == d.nx - 1 || c.y == d.ny - 1 || c.z == d.nz - 1) {
        continue;
      }
      if (std::abs(g[i]) < 1e-6) continue;
      const double h = step_for(pcon[i], 1e-3);
      Field3 xp = pcon, xm = pcon;
      xp[i] += h;
      xm[i] -= h;
      const ConnectivityTrace tp = trace_con(xp, cfg), tm = trace_con(xm, cfg);
      if (!base.skeleton.same_routing(tp.skeleton) || !base.skeleton.same_routing(tm.skeleton) ||
          !(base.pseudo_label == tp.pseudo_label) || !(base.pseudo_label == tm.pseudo_label)) {
        ++con.skipped_ties;
        continue;
      }
      check_points(con, f_con, pcon, g, {i});
      ++accepted;
    }
  }

  for (GradCheckEntry* e : {&r_sup, &spatial, &gated, &mix, &con}) {
    e->pass = e->points > 0 && e->max_rel_error <= e->tolerance;
    report.entries.push_back(*e);
  }
  return report;
}

}  // namespace tubekit
