// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tubekit/cli.hpp"
#include "tubekit/fusion.hpp"
#include "tubekit/gradcheck.hpp"
#include "tubekit/losses.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/phantom.hpp"
#include "tubekit/random.hpp"
#include "tubekit/skeleton.hpp"
#include "tubekit/tvol.hpp"
#include "tubekit/vesselness.hpp"

using namespace tubekit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

class ThreadOverride {
 public:
  explicit ThreadOverride(const char* n) {
    if (const char* old = std::getenv("TUBEKIT_THREADS")) saved_ = old;
    setenv("TUBEKIT_THREADS", n, 1);
  }
  ~ThreadOverride() {
    if (saved_.empty()) unsetenv("TUBEKIT_THREADS");
    else setenv("TUBEKIT_THREADS", saved_.c_str(), 1);
  }

 private:
  std::string saved_;
};

Field3 uniform_field(Dims d, SplitMix64& rng, double lo, double hi) {
  Field3 f(d);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(lo, hi);
  return f;
}

Mask3 bernoulli(Dims d, SplitMix64& rng, double p) {
  Mask3 m(d);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform() < p;
  return m;
}

double step_for(double x) { return 1e-3 * std::max(std::abs(x), 1e-2); }

double central(const std::function<double(const Field3&)>& f, const Field3& x, std::size_t i) {
  const double h = step_for(x[i]);
  Field3 up = x, dn = x;
  up[i] += h;
  dn[i] -= h;
  return (f(up) - f(dn)) / (2 * h);
}

double rel_err(double a, double b) {
  const double den = std::max(std::abs(a), std::abs(b));
  return den == 0.0 ? 0.0 : std::abs(a - b) / den;
}

// ---------------------------------------------------------------------------

Outcome criterion_gradients() {
  Outcome o;
  const auto t0 = Clock::now();
  const Dims d{8, 8, 8};
  SplitMix64 rng(20240601);
  double e_sup = 0, e_sp = 0, e_gc = 0, e_mix = 0, e_con = 0;
  std::size_t con_points = 0, con_skipped = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Mask3 y = bernoulli(d, rng, 0.25);
    y.at(4, 4, 4) = 1;
    const Field3 x = uniform_field(d, rng, 0.05, 0.95);
    const Field3 guide = uniform_field(d, rng, 0.0, 1.0);
    const RoiBox roi{{1, 1, 1}, {6, 6, 6}};
    GatedKernelParams kj;
    kj.sigma_c = 0.5;
    GatedKernelParams kg = kj;
    kg.mode = SpatialMode::gated_crf;
    Mask3 y2 = bernoulli(d, rng, 0.3);
    y2.at(3, 3, 3) = 1;
    const double alpha = rng.uniform();

    const auto sup = loss_r_sup(y, x, roi).term;
    const auto spj = loss_spatial(x, guide, kj).term;
    const auto spg = loss_spatial(x, guide, kg).term;
    const auto mix = loss_mix(x, y, y2, alpha);
    for (int t = 0; t < 50; ++t) {
      const std::size_t i = rng.next() % x.size();
      e_sup = std::max(e_sup, rel_err(sup.grad[i], central([&](const Field3& v) { return loss_r_sup(y, v, roi).term.value; }, x, i)));
      e_sp = std::max(e_sp, rel_err(spj.grad[i], central([&](const Field3& v) { return loss_spatial(v, guide, kj).term.value; }, x, i)));
      e_gc = std::max(e_gc, rel_err(spg.grad[i], central([&](const Field3& v) { return loss_spatial(v, guide, kg).term.value; }, x, i)));
      e_mix = std::max(e_mix, rel_err(mix.grad[i], central([&](const Field3& v) { return loss_mix(v, y, y2, alpha).value; }, x, i)));
    }

    const ConnectivityResult con = loss_con(x);
    const ConnectivityTrace base = trace_con(x);
    int taken = 0;
    for (int attempt = 0; attempt < 400 && taken < 20; ++attempt) {
      const Index3 p{1 + int(rng.next() % 6), 1 + int(rng.next() % 6), 1 + int(rng.next() % 6)};
      const std::size_t i = x.index(p);
      if (std::abs(con.term.grad[i]) < 1e-6) continue;
      const double h = step_for(x[i]);
      Field3 up = x, dn = x;
      up[i] += h;
      dn[i] -= h;
      const ConnectivityTrace tu = trace_con(up), td = trace_con(dn);
      if (!base.skeleton.same_routing(tu.skeleton) || !base.skeleton.same_routing(td.skeleton) ||
          !(tu.pseudo_label == base.pseudo_label) || !(td.pseudo_label == base.pseudo_label)) {
        ++con_skipped;
        continue;
      }
      const double f = (loss_con(up).term.value - loss_con(dn).term.value) / (2 * h);
      e_con = std::max(e_con, rel_err(con.term.grad[i], f));
      ++taken;
      ++con_points;
    }
  }
  const double secs = seconds_since(t0);
  o.detail << "r_sup=" << e_sup << " spatial=" << e_sp << " spatial_gated=" << e_gc << " mix=" << e_mix
           << " con=" << e_con << " (" << con_points << " tie-free points, " << con_skipped << " skipped) time="
           << secs << "s";
  o.require(e_sup <= 1e-4, "r_sup");
  o.require(e_sp <= 1e-4 && e_gc <= 1e-4, "spatial");
  o.require(e_mix <= 1e-4, "mix");
  o.require(e_con <= 1e-3, "con");
  o.require(con_points >= 200, "enough con points");
  o.require(secs < 60.0, "runtime");
  return o;
}

Outcome criterion_linearity() {
  Outcome o;
  SplitMix64 rng(77);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Dims d{8, 8, 8};
    Mask3 y = bernoulli(d, rng, 0.2);
    y.at(2, 2, 2) = 1;
    Mask3 y2 = bernoulli(d, rng, 0.2);
    y2.at(5, 5, 5) = 1;
    const Field3 x = uniform_field(d, rng, 0.0, 1.0);
    const Field3 xm = uniform_field(d, rng, 0.0, 1.0);
    const Field3 guide = uniform_field(d, rng, 0.0, 1.0);
    const auto sup = loss_r_sup(y, x, roi_from_label(y)).term;
    const auto con = loss_con(x).term;
    const auto sp = loss_spatial(x, guide).term;
    const auto mix = loss_mix(xm, y, y2, rng.uniform());
    for (double lambda : {0.0, 0.5, 0.75, 1.0, 1.5, 2.0}) {
      const LossBreakdown b = loss_gsb(sup, con, sp, mix, lambda);
      const double lhs = b.total - (b.r_sup + b.con);
      const double rhs = lambda * (b.spatial + b.mix);
      const double err = std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
      worst = std::max(worst, err);
    }
  }
  o.detail << "max relative deviation=" << worst;
  o.require(worst <= 1e-7, "linearity");
  return o;
}

Outcome criterion_jerman() {
  Outcome o;
  const double tau = 0.5;
  const auto b = Polarity::bright;
  const double f_neg_l2 = jerman_response({0.0, 0.5, -3.0}, 3.0, tau, b);  // lambda2 = -0.5 after flip
  const double f_zero_lp = jerman_response({0.0, -1.0, 2.0}, 0.0, tau, b);  // lambda3 <= 0 -> lambda_p = 0
  const double f_one = jerman_response({0.0, -1.5, -3.0}, 3.0, tau, b);
  const double f_mid = jerman_response({0.0, -1.0, -3.0}, 3.0, tau, b);
  const double direct = 1.0 * 1.0 * (3.0 - 1.0) * std::pow(3.0 / (3.0 + 1.0), 3);
  o.detail << "F(l2<=0)=" << f_neg_l2 << " F(lp<=0)=" << f_zero_lp << " F(l2>=lp/2)=" << f_one
           << " F(1,3)=" << f_mid;
  o.require(f_neg_l2 == 0.0, "lambda2 <= 0 branch");
  o.require(f_zero_lp == 0.0, "lambda_p <= 0 branch");
  o.require(f_one == 1.0, "unit branch");
  o.require(std::abs(f_mid - 0.84375) <= 1e-9 && std::abs(direct - 0.84375) <= 1e-12, "middle branch");
  return o;
}

Outcome criterion_vesselness() {
  Outcome o;
  PhantomSpec spec;
  spec.radius_mm = 2.0;
  const Dims d{64, 64, 64};
  const Phantom ph = make_phantom(spec, d);
  JermanParams p;
  p.scales = {1.0, 2.0, 3.0};
  double single = 0.0;
  Volume3 r;
  {
    ThreadOverride one("1");
    const auto t0 = Clock::now();
    r = vesselness_multiscale(ph.image, p);
    single = seconds_since(t0);
  }
  // Label cross-section is constant along z, so in-plane distance suffices.
  std::vector<Index3> section;
  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x)
      if (ph.label.at(x, y, 0)) section.push_back({x, y, 0});
  double centre = 0.0, far = 0.0;
  std::size_t nc = 0, nf = 0;
  for (int z = 0; z < d.nz; ++z) {
    centre += r.at(32, 32, z);
    ++nc;
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        double best = 1e30;
        for (const Index3& s : section) best = std::min(best, double((x - s.x) * (x - s.x) + (y - s.y) * (y - s.y)));
        if (std::sqrt(best) >= 5.0) {
          far += r.at(x, y, z);
          ++nf;
        }
      }
  }
  centre /= double(nc);
  far /= double(nf);
  const double ratio = far > 0 ? centre / far : INFINITY;

  const Phantom big = make_phantom(spec, Dims{128, 128, 128});
  const auto t1 = Clock::now();
  const Volume3 rb = vesselness_multiscale(big.image, JermanParams{});
  const double four = seconds_since(t1);
  o.detail << "centerline mean=" << centre << " far mean=" << far << " ratio=" << ratio << " 64^3 single-thread="
           << single << "s 128^3 four-scale=" << four << "s";
  o.require(ratio >= 10.0, "contrast");
  o.require(single < 30.0, "64^3 runtime");
  o.require(four < 120.0 && rb.size() == big.image.size(), "128^3 runtime");
  return o;
}

Outcome criterion_eigen() {
  Outcome o;
  SplitMix64 rng(1000);
  double worst = 0.0, worst_res = 0.0;
  for (int t = 0; t < 1000; ++t) {
    SymMat3 m{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
              rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const EigenTriple e = eig3_symmetric(m);
    const auto ref = oracle::jacobi_eigenvalues({{{m.xx, m.xy, m.xz}, {m.xy, m.yy, m.yz}, {m.xz, m.yz, m.zz}}});
    worst = std::max({worst, std::abs(e.l1 - ref[0]), std::abs(e.l2 - ref[1]), std::abs(e.l3 - ref[2])});
    for (double l : {e.l1, e.l2, e.l3}) worst_res = std::max(worst_res, std::abs(m.characteristic(l)) / (1 + m.frobenius()));
  }
  o.detail << "max |closed form - Jacobi|=" << worst << " max residual/(1+|H|)=" << worst_res;
  o.require(worst <= 1e-6, "eigenvalues");
  o.require(worst_res <= 1e-4, "residual");
  return o;
}

// Self-avoiding 26-connected walk where each new voxel touches only its predecessor.
Mask3 random_thin_curve(Dims d, SplitMix64& rng) {
  Mask3 m(d);
  std::vector<Index3> path{{int(rng.next() % d.nx), int(rng.next() % d.ny), int(rng.next() % d.nz)}};
  m.at(path[0]) = 1;
  const int target = 5 + int(rng.next() % 40);
  for (int step = 0; step < target; ++step) {
    const Index3 cur = path.back();
    std::vector<Index3> options;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Index3 c{cur.x + dx, cur.y + dy, cur.z + dz};
          if (c == cur || !m.contains(c) || m.at(c)) continue;
          bool ok = true;
          for (int ez = -1; ez <= 1 && ok; ++ez)
            for (int ey = -1; ey <= 1 && ok; ++ey)
              for (int ex = -1; ex <= 1 && ok; ++ex) {
                const Index3 n{c.x + ex, c.y + ey, c.z + ez};
                if (n == c || n == cur || !m.contains(n)) continue;
                if (m.at(n)) ok = false;
              }
          if (ok) options.push_back(c);
        }
    if (options.empty()) break;
    path.push_back(options[rng.next() % options.size()]);
    m.at(path.back()) = 1;
  }
  return m;
}

Outcome criterion_fixed_point() {
  Outcome o;
  SplitMix64 rng(6);
  int curves = 0, soft_fail = 0, hard_fail = 0;
  auto check = [&](const Mask3& m) {
    ++curves;
    const Field3 f = convert<double>(m);
    if (!(soft_skeleton(f) == f)) ++soft_fail;
    const Mask3 h = hard_skeleton(m);
    if (!(h == m) || !(hard_skeleton(h) == h)) ++hard_fail;
  };
  for (int t = 0; t < 200; ++t) check(random_thin_curve(Dims{16, 16, 16}, rng));
  for (const auto& [a, b] : std::vector<std::pair<Index3, Index3>>{
           {{0, 0, 0}, {15, 15, 15}}, {{0, 7, 7}, {15, 7, 7}}, {{3, 0, 9}, {12, 15, 2}}, {{0, 0, 5}, {15, 4, 5}}}) {
    Mask3 m(Dims{16, 16, 16});
    for (const Index3& p : rasterize_line(a, b)) m.at(p) = 1;
    check(m);
  }
  o.detail << curves << " curves, soft mismatches=" << soft_fail << ", hard mismatches=" << hard_fail;
  o.require(soft_fail == 0, "soft fixed point");
  o.require(hard_fail == 0, "hard idempotence");
  return o;
}

Outcome criterion_reconnect() {
  Outcome o;
  struct Case {
    const char* name;
    double radius;
    int gap;
  };
  for (const Case c : {Case{"thin", 0.5, 3}, Case{"thick", 1.5, 1}}) {
    PhantomSpec spec;
    spec.kind = PhantomKind::gapped_cylinder;
    spec.radius_mm = c.radius;
    spec.gap_len_voxels = c.gap;
    const Dims d{20, 20, 32};
    const Phantom ph = make_phantom(spec, d);
    const Mask3 skel = hard_skeleton(ph.label);
    int lo = -1, hi = -1;
    for (int z = 0; z < d.nz; ++z) {
      if (!skel.at(10, 10, z)) continue;
      if (z < d.nz / 2) lo = z;
      else if (hi < 0) hi = z;
    }
    const int skel_gap = hi - lo - 1;
    const ReconnectResult r = reconnect(skel);
    const int comps = oracle::component_count(r.reconnected, 26);
    const std::size_t drawn = count_foreground(r.drawn_only);

    Field3 pred = convert<double>(ph.label);
    const double before = loss_con(pred).term.value;
    const int start = phantom_gap_start(spec, d);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const Index3 p = pred.coord(i);
      const double dx = p.x - 10.0, dy = p.y - 10.0;
      if (p.z >= start && p.z < start + c.gap && std::sqrt(dx * dx + dy * dy) <= c.radius) pred[i] = 0.9;
    }
    const double after = loss_con(pred).term.value;
    o.detail << c.name << ": skeleton gap=" << skel_gap << " components=" << comps << " drawn=" << drawn
             << " loss_con " << before << " -> " << after << "; ";
    o.require(skel_gap == 3, std::string(c.name) + " skeleton gap");
    o.require(comps == 1 && r.final_components == 1, std::string(c.name) + " components");
    o.require(drawn == 3, std::string(c.name) + " drawn voxels");
    o.require(before > 0.0 && after < before, std::string(c.name) + " loss_con decrease");
  }
  return o;
}

Outcome criterion_metrics() {
  Outcome o;
  SplitMix64 rng(8);
  double worst = 0.0;
  int cases = 0;
  bool overlap_exact = true;
  for (int t = 0; t < 200 && cases < 60; ++t) {
    const Dims d{9, 8, 7};
    Mask3 p = bernoulli(d, rng, rng.uniform(0.03, 0.5));
    Mask3 g = bernoulli(d, rng, rng.uniform(0.03, 0.5));
    p[rng.next() % p.size()] = 1;
    g[rng.next() % g.size()] = 1;
    std::size_t tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      tp += p[i] && g[i];
      np += p[i];
      ng += g[i];
    }
    const PrecisionRecall pr = precision_recall_f1(p, g);
    overlap_exact = overlap_exact && dice(p, g) == 100.0 * 2.0 * double(tp) / double(np + ng) &&
                    pr.precision == 100.0 * double(tp) / double(np) && pr.recall == 100.0 * double(tp) / double(ng);
    if (oracle::surface(p).size() > 200 || oracle::surface(g).size() > 200) continue;
    ++cases;
    const Spacing sp{float(rng.uniform(0.5, 2)), float(rng.uniform(0.5, 2)), float(rng.uniform(0.5, 2))};
    const SurfaceDistances s = surface_distances(p, g, sp);
    const auto ref = oracle::surface_distances(p, g, sp);
    worst = std::max({worst, std::abs(s.hd - ref.hd), std::abs(s.assd - ref.assd), std::abs(s.ahd - ref.ahd)});
  }
  const Dims yd{21, 21, 21};
  Mask3 gt(yd), pred(yd);
  for (int z = 2; z <= 10; ++z) gt.at(10, 10, z) = pred.at(10, 10, z) = 1;
  for (int t = 1; t <= 7; ++t) {
    gt.at(10 - t, 10, 10 + t) = pred.at(10 - t, 10, 10 + t) = 1;
    gt.at(10 + t, 10, 10 + t) = 1;
  }
  const TreeMetrics tm = tree_metrics(pred, gt);
  o.detail << cases << " surface cases, max |err|=" << worst << " mm; overlap exact=" << overlap_exact
           << "; Y-tree branches=" << tm.branches << " BD=" << tm.bd;
  o.require(cases >= 30, "enough surface cases");
  o.require(worst <= 1e-6, "surface distances");
  o.require(overlap_exact, "overlap enumeration");
  o.require(tm.branches == 3 && std::abs(tm.bd - 66.67) <= 0.01, "Y-tree BD");
  return o;
}

Outcome criterion_fusion() {
  Outcome o;
  SplitMix64 rng(9);
  AttentionStats stats;
  for (int t = 0; t < 10; ++t) {
    const int c = 2 * (1 + int(rng.next() % 4));
    const Dims d{1 + int(rng.next() % 6), 1 + int(rng.next() % 6), 1 + int(rng.next() % 6)};
    const FeatureMap a = random_feature_map(c, d, rng.next()), b = random_feature_map(c, d, rng.next());
    deep_mutual_query(a, b, DmqParams::make(c, rng.next()), &stats);
    shallow_query(a, b, ShallowQueryParams::make(c, rng.next()), &stats);
    cross_attention(a, random_feature_map(c, Dims{3, 1, 2}, rng.next()), AttentionParams::make(c, rng.next()), &stats);
  }

  const int c = 8;
  const AttentionParams p = AttentionParams::make(c, 123);
  const FeatureMap q = random_feature_map(c, Dims{4, 4, 4}, 124);
  auto projected_v = [&](const FeatureMap& f, std::size_t n) {
    std::vector<double> v(c, 0.0), out(c, 0.0);
    for (int ch = 0; ch < c; ++ch)
      for (int h = 0; h < c; ++h) v[h] += double(f.at(ch, n)) * p.wv[ch * c + h];
    for (int h = 0; h < c; ++h)
      for (int ch = 0; ch < c; ++ch) out[ch] += v[h] * p.wo[h * c + ch];
    return out;
  };
  const FeatureMap one = random_feature_map(c, Dims{1, 1, 1}, 125);
  const FeatureMap single = cross_attention(q, one, p, &stats);
  const auto v1 = projected_v(one, 0);
  double single_err = 0.0;
  for (std::size_t n = 0; n < q.voxels(); ++n)
    for (int ch = 0; ch < c; ++ch) single_err = std::max(single_err, std::abs(single.at(ch, n) - v1[ch]));

  AttentionParams flat = p;
  std::fill(flat.wk.begin(), flat.wk.end(), 0.0f);
  const FeatureMap kv = random_feature_map(c, Dims{3, 2, 2}, 126);
  const FeatureMap same = cross_attention(q, kv, flat, &stats);
  std::vector<double> mean(c, 0.0);
  for (std::size_t m = 0; m < kv.voxels(); ++m) {
    const auto v = projected_v(kv, m);
    for (int ch = 0; ch < c; ++ch) mean[ch] += v[ch] / double(kv.voxels());
  }
  double mean_err = 0.0;
  for (std::size_t n = 0; n < q.voxels(); ++n)
    for (int ch = 0; ch < c; ++ch) mean_err = std::max(mean_err, std::abs(same.at(ch, n) - mean[ch]));

  bool identity_ok = true;
  for (int t = 0; t < 5; ++t) {
    const int ch = 1 + int(rng.next() % 5);
    const FeatureMap x = random_feature_map(ch, Dims{1 + int(rng.next() % 7), 1 + int(rng.next() % 7), 1 + int(rng.next() % 7)}, rng.next());
    identity_ok = identity_ok && flex_conv_block(x, FlexConvParams::identity(ch)) == x;
  }

  int shape_ok = 0;
  for (int t = 0; t < 50; ++t) {
    const int scales = 2 + int(rng.next() % 4);
    const Dims target{1 + int(rng.next() % 12), 1 + int(rng.next() % 12), 1 + int(rng.next() % 12)};
    std::vector<FeatureMap> segs;
    for (int s = 0; s < scales; ++s) {
      segs.push_back(random_feature_map(1, Dims{1 + int(rng.next() % 8), 1 + int(rng.next() % 8), 1 + int(rng.next() % 8)}, rng.next(), -4, 4));
    }
    const FeatureMap out = d2sd_fuse(segs, target, FlexConvParams::make(scales, 2, 1, rng.next()));
    bool ok = out.channels() == 1 && out.dims() == target;
    for (float v : out.data()) ok = ok && v >= 0.0f && v <= 1.0f;
    shape_ok += ok;
  }
  o.detail << "max row-sum error=" << stats.max_row_sum_error << " over " << stats.rows << " rows; single-token err="
           << single_err << " identical-keys err=" << mean_err << " identity bitwise=" << identity_ok
           << " d2sd shapes ok=" << shape_ok << "/50";
  o.require(stats.max_row_sum_error <= 1e-6, "row sums");
  o.require(single_err <= 1e-5, "single token");
  o.require(mean_err <= 1e-5, "identical keys");
  o.require(identity_ok, "flex identity");
  o.require(shape_ok == 50, "d2sd shapes");
  return o;
}

Outcome criterion_determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "tubekit_acceptance_determinism";
  fs::remove_all(root);
  auto run_all = [&](const fs::path& dir) {
    fs::create_directories(dir);
    auto f = [&](const char* n) { return (dir / n).string(); };
    std::vector<std::vector<std::string>> cmds = {
        {"phantom", "--kind", "gapped_cylinder", "--dims", "24,24,32", "--radius", "1.5", "--gap", "1", "--noise",
         "0.2", "--seed", "42", "--image", f("img.tvol"), "--label", f("lab.tvol")},
        {"phantom", "--kind", "helix", "--dims", "24,24,32", "--noise", "0.1", "--seed", "5", "--image",
         f("helix.tvol"), "--label", f("helix_lab.tvol")},
        {"vesselness", "--in", f("img.tvol"), "--out", f("ves.tvol"), "--tau", "0.5", "--scales", "1,1.5,2,3",
         "--polarity", "bright"},
        {"skeleton", "--in", f("lab.tvol"), "--iters", "10", "--out", f("skel.tvol")},
        {"skeleton", "--in", f("ves.tvol"), "--iters", "5", "--out", f("soft.tvol")},
        {"reconnect", "--in", f("skel.tvol"), "--out", f("rec.tvol"), "--report", f("seg.json")},
        {"loss", "--pred", f("ves.tvol"), "--label", f("lab.tvol"), "--image", f("img.tvol"), "--roi", "auto",
         "--lambda", "1.0", "--label2", f("helix_lab.tvol"), "--mix-pred", f("ves.tvol"), "--alpha", "0.3",
         "--json", f("loss.json")},
        {"metrics", "--pred", f("helix_lab.tvol"), "--gt", f("lab.tvol"), "--json", f("metrics.json")},
        {"fusion-demo", "--seed", "7", "--dims", "8,8,8", "--channels", "16", "--json", f("fusion.json")},
        {"gradcheck", "--seed", "3", "--size", "8", "--instances", "3", "--json", f("grad.json")},
    };
    int failures = 0;
    for (const auto& c : cmds) failures += cli::run(c) != 0;
    return failures;
  };
  const int fa = run_all(root / "a");
  const int fb = run_all(root / "b");
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    const fs::path other = root / "b" / e.path().filename();
    if (!fs::exists(other) || read_file(e.path()) != read_file(other)) ++differ;
  }
  o.detail << files << " output files, " << differ << " differ, command failures=" << fa + fb;
  o.require(fa == 0 && fb == 0, "commands succeed");
  o.require(files == 13 && differ == 0, "byte identical");
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "gradient suite vs central finite differences", criterion_gradients},
      {2, "total loss linear in lambda", criterion_linearity},
      {3, "Jerman branch values", criterion_jerman},
      {4, "vesselness contrast and runtime", criterion_vesselness},
      {5, "eigen solver vs Jacobi oracle", criterion_eigen},
      {6, "thin curves are skeleton fixed points", criterion_fixed_point},
      {7, "reconnection of the gapped cylinder", criterion_reconnect},
      {8, "metric oracles", criterion_metrics},
      {9, "fusion invariants", criterion_fusion},
      {10, "CLI determinism", criterion_determinism},
  };
  int failed = 0;
  for (const Entry& e : entries) {
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << "exception: " << ex.what();
    }
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", e.id, e.name, o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", int(entries.size()) - failed, entries.size());
  return failed == 0 ? 0 : 1;
}
