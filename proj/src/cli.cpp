#include "tubekit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "tubekit/error.hpp"
#include "tubekit/fusion.hpp"
#include "tubekit/gradcheck.hpp"
#include "tubekit/losses.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/phantom.hpp"
#include "tubekit/random.hpp"
#include "tubekit/skeleton.hpp"
#include "tubekit/tvol.hpp"
#include "tubekit/vesselness.hpp"

namespace tubekit::cli {
namespace {

using nlohmann::json;

// 9 significant digits; nlohmann prints the shortest round-trip form.
json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

json shape_json(const FeatureMap& f) {
  return json::array({f.channels(), f.dims().nx, f.dims().ny, f.dims().nz});
}

json index_json(const Index3& p) { return json::array({p.x, p.y, p.z}); }

void emit(const json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dims parse_dims(const std::vector<int>& v) {
  if (v.size() != 3) throw ParameterError("dims must have three components");
  return {v[0], v[1], v[2]};
}

Spacing parse_spacing(const std::vector<double>& v) {
  if (v.size() != 3) throw ParameterError("spacing must have three components");
  return {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
}

double l2_norm(const Field3& g) {
  double s = 0.0;
  for (double v : g.values()) s += v * v;
  return std::sqrt(s);
}

Field3 normalized_guide(const Volume3& img) {
  const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  const double range = static_cast<double>(*hi) - *lo;
  std::vector<double> out(img.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] - static_cast<double>(*lo)) / range;
  }
  return Field3(img.dims(), img.spacing(), std::move(out));
}

RoiBox parse_roi(const std::string& text, const Mask3& label) {
  if (text == "auto") return roi_from_label(label, 2);
  if (text == "full") return full_roi(label.dims());
  std::vector<int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ParameterError("roi must be auto, full or x0,y0,z0,x1,y1,z1");
    }
  }
  if (v.size() != 6) throw ParameterError("roi must be auto, full or x0,y0,z0,x1,y1,z1");
  RoiBox roi{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
  validate_roi(roi, label.dims());
  return roi;
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const std::string& what) {
  if (!a.same_shape(b)) throw ParameterError(what + ": dims " + to_string(a.dims()) + " vs " + to_string(b.dims()));
}

// ---- subcommands -----------------------------------------------------------

struct PhantomArgs {
  std::string kind = "cylinder";
  std::vector<int> dims{64, 64, 64};
  std::vector<double> spacing{1.0, 1.0, 1.0};
  PhantomSpec spec{};
  std::string image_out, label_out;
};

int do_phantom(const PhantomArgs& a) {
  PhantomSpec spec = a.spec;
  spec.kind = parse_phantom_kind(a.kind);
  const Phantom ph = make_phantom(spec, parse_dims(a.dims), parse_spacing(a.spacing));
  if (!a.image_out.empty()) save_tvol(ph.image, a.image_out);
  if (!a.label_out.empty()) save_tvol(ph.label, a.label_out);
  return kOk;
}

struct VesselArgs {
  std::string in, out;
  double tau = 0.5;
  std::vector<double> scales{1.0, 1.5, 2.0, 3.0};
  std::string polarity = "bright";
};

int do_vesselness(const VesselArgs& a) {
  JermanParams p;
  p.tau = a.tau;
  p.scales = a.scales;
  p.polarity = parse_polarity(a.polarity);
  const Volume3 img = load_tvol(a.in);
  save_tvol(vesselness_multiscale(img, p), a.out);
  return kOk;
}

struct SkeletonArgs {
  std::string in, out;
  int iters = 10;
};

int do_skeleton(const SkeletonArgs& a) {
  const std::vector<std::uint8_t> bytes = read_file(a.in);
  const TvolHeader h = decode_tvol_header(bytes);
  if (h.type == TvolType::u8) {
    save_tvol(hard_skeleton(decode_tvol_mask(bytes), a.iters), a.out);
  } else {
    SoftSkeletonParams p;
    p.iterations = a.iters;
    save_tvol(soft_skeleton(decode_tvol_volume(bytes), p), a.out);
  }
  return kOk;
}

struct ReconnectArgs {
  std::string in, out, report, drawn_out;
};

int do_reconnect(const ReconnectArgs& a) {
  const ReconnectResult r = reconnect(load_tvol_mask(a.in));
  save_tvol(r.reconnected, a.out);
  if (!a.drawn_out.empty()) save_tvol(r.drawn_only, a.drawn_out);
  json segs = json::array();
  std::size_t drawn = 0;
  for (const ReconnectSegment& s : r.segments) {
    segs.push_back({{"from", index_json(s.from)},
                    {"to", index_json(s.to)},
                    {"drawn_voxels", s.drawn_voxels},
                    {"pass", s.pass}});
    drawn += s.drawn_voxels;
  }
  if (!a.report.empty()) {
    emit({{"segments", segs},
          {"passes", r.passes},
          {"initial_components", r.initial_components},
          {"final_components", r.final_components},
          {"total_drawn_voxels", drawn}},
         a.report);
  }
  return kOk;
}

struct LossArgs {
  std::string pred, label, image, roi = "auto", json_out;
  std::string label2, mix_pred;
  double lambda = 1.0;
  double alpha = 0.5;
  std::optional<double> beta;
  GatedKernelParams kernel{};
  std::string spatial_mode = "joint";
  int skel_iters = 10;
  std::string con_mode = "all";
};

int do_loss(const LossArgs& a) {
  const Volume3 pred_f = load_tvol(a.pred);
  const Mask3 label = load_tvol_mask(a.label);
  const Volume3 image = load_tvol(a.image);
  require_same_shape(pred_f, label, "pred/label");
  require_same_shape(pred_f, image, "pred/image");
  const Field3 yhat = convert<double>(pred_f);

  GatedKernelParams kernel = a.kernel;
  if (a.spatial_mode == "joint") {
    kernel.mode = SpatialMode::joint;
  } else if (a.spatial_mode == "gated_crf") {
    kernel.mode = SpatialMode::gated_crf;
  } else {
    throw ParameterError("spatial-mode must be joint or gated_crf");
  }
  ConnectivityConfig con_cfg;
  con_cfg.skeleton.iterations = a.skel_iters;
  if (a.con_mode == "all") {
    con_cfg.target = ConnectivityTarget::all;
  } else if (a.con_mode == "drawn_only") {
    con_cfg.target = ConnectivityTarget::drawn_only;
  } else {
    throw ParameterError("con-mode must be all or drawn_only");
  }
  RelaxedSupConfig sup_cfg;
  sup_cfg.beta = a.beta;

  const RoiBox roi = parse_roi(a.roi, label);
  const RelaxedSupResult sup = loss_r_sup(label, yhat, roi, sup_cfg);
  const ConnectivityResult con = loss_con(yhat, con_cfg);
  const SpatialResult spatial = loss_spatial(yhat, normalized_guide(image), kernel);

  LossTerm mix{0.0, Field3(yhat.dims(), yhat.spacing(), 0.0)};
  const bool has_mix = !a.mix_pred.empty() || !a.label2.empty();
  if (has_mix) {
    if (a.mix_pred.empty() || a.label2.empty()) throw ParameterError("mix needs both --mix-pred and --label2");
    const Mask3 label2 = load_tvol_mask(a.label2);
    const Field3 mixed = convert<double>(load_tvol(a.mix_pred));
    require_same_shape(label, label2, "label/label2");
    require_same_shape(label, mixed, "label/mix-pred");
    mix = loss_mix(mixed, label, label2, a.alpha);
  }
  const LossBreakdown b = loss_gsb(sup.term, con.term, spatial.term, mix, a.lambda);

  json report = {
      {"r_sup", num(b.r_sup)},
      {"con", num(b.con)},
      {"spatial", num(b.spatial)},
      {"mix", num(b.mix)},
      {"lambda", num(b.lambda)},
      {"total", num(b.total)},
      {"beta", num(sup.beta)},
      {"dice_term", num(sup.dice)},
      {"ce_term", num(sup.ce)},
      {"roi", {{"min", index_json(roi.min)}, {"max", index_json(roi.max)}}},
      {"pair_count", spatial.pair_count},
      {"unordered_sum", num(spatial.unordered_sum)},
      {"spatial_mode", a.spatial_mode},
      {"con_mode", a.con_mode},
      {"skeleton_voxels", con.skeleton_voxels},
      {"pseudo_label_voxels", con.pseudo_label_voxels},
      {"drawn_voxels", con.drawn_voxels},
      {"components", con.components},
      {"mix_enabled", has_mix},
      {"alpha", has_mix ? num(a.alpha) : json(nullptr)},
      {"grad_norms",
       {{"r_sup", num(l2_norm(b.grad_r_sup))},
        {"con", num(l2_norm(b.grad_con))},
        {"spatial", num(l2_norm(b.grad_spatial))},
        {"mix", num(l2_norm(b.grad_mix))},
        {"prediction", num(l2_norm(b.prediction_grad()))},
        {"mixed_prediction", num(l2_norm(b.mixed_prediction_grad()))}}},
  };
  emit(report, a.json_out);
  return kOk;
}

struct MetricsArgs {
  std::string pred, gt, json_out;
  int skel_iters = 10;
};

int do_metrics(const MetricsArgs& a) {
  const Mask3 pred = load_tvol_mask(a.pred);
  const Mask3 gt = load_tvol_mask(a.gt);
  require_same_shape(pred, gt, "pred/gt");
  TreeMetricsConfig cfg;
  cfg.skel_iterations = a.skel_iters;
  const MetricsReport m = evaluate(pred, gt, cfg);
  emit({{"dice", num(m.dice)},
        {"cldice", num(m.cldice)},
        {"precision", num(m.precision)},
        {"recall", num(m.recall)},
        {"f1", num(m.f1)},
        {"hd", num(m.hd)},
        {"assd", num(m.assd)},
        {"ahd", num(m.ahd)},
        {"bd", num(m.bd)},
        {"tld", num(m.tld)},
        {"pred_voxels", m.pred_voxels},
        {"gt_voxels", m.gt_voxels},
        {"pred_surface_voxels", m.pred_surface_voxels},
        {"gt_surface_voxels", m.gt_surface_voxels},
        {"gt_branches", m.gt_branches}},
       a.json_out);
  return kOk;
}

struct FusionArgs {
  std::uint64_t seed = 7;
  std::vector<int> dims{8, 8, 8};
  int channels = 16;
  std::string json_out;
};

Dims halve(const Dims& d) { return {(d.nx + 1) / 2, (d.ny + 1) / 2, (d.nz + 1) / 2}; }

bool rows_identical(const FeatureMap& f) {
  for (int c = 0; c < f.channels(); ++c) {
    for (std::size_t v = 1; v < f.voxels(); ++v) {
      if (f.at(c, v) != f.at(c, 0)) return false;
    }
  }
  return true;
}

int do_fusion(const FusionArgs& a) {
  const Dims d1 = parse_dims(a.dims);
  const int c = a.channels;
  if (c < 2 || c % 2 != 0) throw ParameterError("channels must be even and >= 2");
  SplitMix64 rng(a.seed);
  auto seed = [&] { return rng.next(); };

  const Dims d2 = halve(d1), d3 = halve(d2), d4 = halve(d3);
  const FeatureMap fci = random_feature_map(c, d1, seed());
  const FeatureMap fvi = random_feature_map(c, d1, seed());
  const FeatureMap fc4 = random_feature_map(c, d2, seed());
  const FeatureMap fv4 = random_feature_map(c, d2, seed());

  AttentionStats stats;
  const DmqResult dq = deep_mutual_query(fc4, fv4, DmqParams::make(c, seed()), &stats);
  const FeatureMap sq_ci = add(fci, trilinear_resize(dq.dq_v2c, d1));
  const FeatureMap sq_vi = add(fvi, trilinear_resize(dq.dq_c2v, d1));
  const FeatureMap sq = shallow_query(sq_ci, sq_vi, ShallowQueryParams::make(c, seed()), &stats);

  const FeatureMap dq_cat = concat_channels(dq.dq_v2c, dq.dq_c2v);
  const FeatureMap f3 = random_feature_map(c, d3, seed());
  const FeatureMap f4 = random_feature_map(c, d4, seed());
  std::vector<FeatureMap> segs;
  segs.push_back(flex_conv_block(sq, FlexConvParams::make(c, c / 2, 1, seed())));
  segs.push_back(flex_conv_block(dq_cat, FlexConvParams::make(2 * c, c / 2, 1, seed())));
  segs.push_back(flex_conv_block(f3, FlexConvParams::make(c, c / 2, 1, seed())));
  segs.push_back(flex_conv_block(f4, FlexConvParams::make(c, c / 2, 1, seed())));
  const FeatureMap out = d2sd_fuse(segs, d1, FlexConvParams::make(4, 4, 1, seed()));

  // Invariant probes.
  const AttentionParams probe = AttentionParams::make(c, seed());
  AttentionStats probe_stats;
  const FeatureMap one_token = random_feature_map(c, {1, 1, 1}, seed());
  const bool single_token_ok = rows_identical(cross_attention(fci, one_token, probe, &probe_stats));
  std::vector<float> same_keys(static_cast<std::size_t>(c) * fc4.voxels());
  for (int ch = 0; ch < c; ++ch) {
    std::fill_n(same_keys.begin() + static_cast<std::ptrdiff_t>(ch * fc4.voxels()), fc4.voxels(),
                one_token.at(ch, 0));
  }
  const FeatureMap identical = cross_attention(fci, FeatureMap(c, d2, std::move(same_keys)), probe, &probe_stats);
  const bool identical_keys_ok = rows_identical(identical);
  stats.merge(probe_stats);
  const bool identity_ok = flex_conv_block(fci, FlexConvParams::identity(c)) == fci;
  bool range_ok = true;
  for (float v : out.data()) range_ok = range_ok && v >= 0.0f && v <= 1.0f;
  const bool shape_ok = out.channels() == 1 && out.dims() == d1;
  const bool rows_ok = stats.max_row_sum_error <= 1e-6;

  json shapes = {{"fci", shape_json(fci)},       {"fvi", shape_json(fvi)},
                 {"fc4", shape_json(fc4)},       {"fv4", shape_json(fv4)},
                 {"dq_v2c", shape_json(dq.dq_v2c)}, {"dq_c2v", shape_json(dq.dq_c2v)},
                 {"sq", shape_json(sq)},         {"output", shape_json(out)}};
  json seg_shapes = json::array();
  for (const FeatureMap& s : segs) seg_shapes.push_back(shape_json(s));
  shapes["segs"] = seg_shapes;
  const auto [lo, hi] = std::minmax_element(out.data().begin(), out.data().end());
  double mean = 0.0;
  for (float v : out.data()) mean += v;
  mean /= static_cast<double>(out.data().size());

  const bool all_ok = single_token_ok && identical_keys_ok && identity_ok && range_ok && shape_ok && rows_ok;
  emit({{"seed", a.seed},
        {"channels", c},
        {"shapes", shapes},
        {"attention", {{"max_row_sum_error", num(stats.max_row_sum_error)}, {"rows", stats.rows}}},
        {"output", {{"min", num(*lo)}, {"max", num(*hi)}, {"mean", num(mean)}}},
        {"checks",
         {{"rows_sum_to_one", rows_ok},
          {"single_token", single_token_ok},
          {"identical_keys", identical_keys_ok},
          {"flex_identity_bitwise", identity_ok},
          {"output_in_unit_range", range_ok},
          {"output_shape", shape_ok}}},
        {"pass", all_ok}},
       a.json_out);
  return all_ok ? kOk : kDomainError;
}

struct GradArgs {
  std::uint64_t seed = 0;
  int size = 8;
  int instances = 20;
  std::string json_out;
};

int do_gradcheck(const GradArgs& a) {
  const GradCheckReport r = run_gradcheck(a.seed, a.size, a.instances);
  json entries = json::object();
  for (const GradCheckEntry& e : r.entries) {
    entries[e.loss] = {{"max_rel_error", num(e.max_rel_error)},
                       {"tolerance", num(e.tolerance)},
                       {"points", e.points},
                       {"skipped_ties", e.skipped_ties},
                       {"pass", e.pass}};
  }
  emit({{"seed", r.seed}, {"size", r.size}, {"instances", r.instances}, {"losses", entries}, {"pass", r.pass()}},
       a.json_out);
  return r.pass() ? kOk : kDomainError;
}

int report_error(const char* kind, const std::string& message, int code, const std::string& field = {}) {
  json err = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  if (!field.empty()) err["field"] = field;
  std::cerr << json{{"error", err}}.dump() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"tubekit: tubular-structure volume toolkit", "tubekit"};
  app.require_subcommand(1);

  PhantomArgs ph;
  auto* s_ph = app.add_subcommand("phantom", "Generate a synthetic tube phantom");
  s_ph->add_option("--kind", ph.kind, "cylinder|gapped_cylinder|bifurcation|helix");
  s_ph->add_option("--dims", ph.dims, "nx,ny,nz")->delimiter(',')->expected(3);
  s_ph->add_option("--spacing", ph.spacing, "sx,sy,sz in mm")->delimiter(',')->expected(3);
  s_ph->add_option("--radius", ph.spec.radius_mm, "Tube radius in mm");
  s_ph->add_option("--fg", ph.spec.foreground_intensity, "Foreground intensity");
  s_ph->add_option("--bg", ph.spec.background_intensity, "Background intensity");
  s_ph->add_option("--noise", ph.spec.noise_sigma, "Gaussian noise sigma");
  s_ph->add_option("--gap", ph.spec.gap_len_voxels, "Gap length in voxels (gapped_cylinder)");
  s_ph->add_option("--seed", ph.spec.seed, "Noise seed");
  s_ph->add_option("--image", ph.image_out, "Output image .tvol");
  s_ph->add_option("--label", ph.label_out, "Output label .tvol");

  VesselArgs ve;
  auto* s_ve = app.add_subcommand("vesselness", "Multiscale Jerman vesselness");
  s_ve->add_option("--in", ve.in, "Input image .tvol")->required();
  s_ve->add_option("--out", ve.out, "Output response .tvol")->required();
  s_ve->add_option("--tau", ve.tau, "Regularization tau in (0,1]");
  s_ve->add_option("--scales", ve.scales, "Comma-separated sigmas in mm")->delimiter(',');
  s_ve->add_option("--polarity", ve.polarity, "bright|dark");

  SkeletonArgs sk;
  auto* s_sk = app.add_subcommand("skeleton", "Soft (f32 input) or hard (u8 input) skeleton");
  s_sk->add_option("--in", sk.in, "Input .tvol")->required();
  s_sk->add_option("--out", sk.out, "Output .tvol")->required();
  s_sk->add_option("--iters", sk.iters, "Skeleton iterations");

  ReconnectArgs rc;
  auto* s_rc = app.add_subcommand("reconnect", "Join skeleton components with drawn lines");
  s_rc->add_option("--in", rc.in, "Skeleton mask .tvol")->required();
  s_rc->add_option("--out", rc.out, "Reconnected mask .tvol")->required();
  s_rc->add_option("--report", rc.report, "Segments JSON report");
  s_rc->add_option("--drawn-out", rc.drawn_out, "Mask of drawn voxels only");

  LossArgs lo;
  auto* s_lo = app.add_subcommand("loss", "Evaluate the composite segmentation loss");
  s_lo->add_option("--pred", lo.pred, "Prediction probabilities .tvol")->required();
  s_lo->add_option("--label", lo.label, "Label mask .tvol")->required();
  s_lo->add_option("--image", lo.image, "Guide image .tvol")->required();
  s_lo->add_option("--roi", lo.roi, "auto|full|x0,y0,z0,x1,y1,z1");
  s_lo->add_option("--lambda", lo.lambda, "Weight of the suppression terms");
  s_lo->add_option("--json", lo.json_out, "Report path (stdout if omitted)");
  s_lo->add_option("--label2", lo.label2, "Second label for the mix term");
  s_lo->add_option("--mix-pred", lo.mix_pred, "Prediction on the mixed input");
  s_lo->add_option("--alpha", lo.alpha, "Mix coefficient in [0,1]");
  s_lo->add_option("--beta", lo.beta, "Fixed beta (auto if omitted)");
  s_lo->add_option("--sigma-l", lo.kernel.sigma_l, "Spatial kernel sigma in voxels");
  s_lo->add_option("--sigma-c", lo.kernel.sigma_c, "Intensity kernel sigma");
  s_lo->add_option("--radius", lo.kernel.radius, "Spatial window radius");
  s_lo->add_option("--spatial-mode", lo.spatial_mode, "joint|gated_crf");
  s_lo->add_option("--skel-iters", lo.skel_iters, "Soft skeleton iterations");
  s_lo->add_option("--con-mode", lo.con_mode, "all|drawn_only");

  MetricsArgs me;
  auto* s_me = app.add_subcommand("metrics", "Overlap, surface and tree metrics");
  s_me->add_option("--pred", me.pred, "Prediction mask .tvol")->required();
  s_me->add_option("--gt", me.gt, "Ground-truth mask .tvol")->required();
  s_me->add_option("--json", me.json_out, "Report path (stdout if omitted)");
  s_me->add_option("--skel-iters", me.skel_iters, "Skeleton iterations for clDice and tree metrics");

  FusionArgs fu;
  auto* s_fu = app.add_subcommand("fusion-demo", "Run the fusion forward pass on random features");
  s_fu->add_option("--seed", fu.seed, "Seed");
  s_fu->add_option("--dims", fu.dims, "nx,ny,nz")->delimiter(',')->expected(3);
  s_fu->add_option("--channels", fu.channels, "Even channel count");
  s_fu->add_option("--json", fu.json_out, "Report path (stdout if omitted)");

  GradArgs gc;
  auto* s_gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  s_gc->add_option("--seed", gc.seed, "Seed");
  s_gc->add_option("--size", gc.size, "Cube edge length");
  s_gc->add_option("--instances", gc.instances, "Random instances");
  s_gc->add_option("--json", gc.json_out, "Report path (stdout if omitted)");

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-' &&
      !app.get_subcommand_no_throw(args.front())) {
    std::cerr << app.help();
    return report_error("parameter", "unknown subcommand '" + args.front() + "'", kParameterError);
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    return report_error("parameter", e.what(), kParameterError);
  }

  try {
    if (s_ph->parsed()) return do_phantom(ph);
    if (s_ve->parsed()) return do_vesselness(ve);
    if (s_sk->parsed()) return do_skeleton(sk);
    if (s_rc->parsed()) return do_reconnect(rc);
    if (s_lo->parsed()) return do_loss(lo);
    if (s_me->parsed()) return do_metrics(me);
    if (s_fu->parsed()) return do_fusion(fu);
    if (s_gc->parsed()) return do_gradcheck(gc);
  } catch (const IoError& e) {
    return report_error(e.kind(), e.what(), kIoError, e.field());
  } catch (const DomainError& e) {
    return report_error(e.kind(), e.what(), kDomainError);
  } catch (const ParameterError& e) {
    return report_error(e.kind(), e.what(), kParameterError);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), kDomainError);
  }
  std::cerr << app.help();
  return report_error("parameter", "no subcommand", kParameterError);
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace tubekit::cli
