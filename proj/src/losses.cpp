#include "tubekit/losses.hpp"

#include <cmath>

namespace tubekit {
namespace {

void require_same_shape(const Dims& a, const Dims& b, const char* what) {
  if (a != b) {
    throw ParameterError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " +
                         to_string(b));
  }
}

void require_unit_range(const Field3& f, const char* what) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] >= 0.0 && f[i] <= 1.0)) {
      throw ParameterError(std::string(what) + " must lie in [0, 1]");
    }
  }
}

// d yhat' / d yhat, per voxel.
double routing_weight(std::uint8_t y, bool in_roi, double beta) {
  if (y) return 1.0;
  return in_roi ? beta : 1.0;
}

}  // namespace

double resolve_beta(const Mask3& y, const RelaxedSupConfig& cfg) {
  if (cfg.beta) {
    if (!std::isfinite(*cfg.beta) || *cfg.beta < 0.0) throw ParameterError("beta must be >= 0");
    return *cfg.beta;
  }
  const double pos = static_cast<double>(count_foreground(y));
  const double neg = static_cast<double>(y.size()) - pos;
  if (pos < 1.0) throw DomainError("beta undefined: label has no positives");
  if (!(neg > pos)) {
    throw DomainError("beta undefined: sum(y^c) <= sum(y) makes ln(sum(y^c)/sum(y)) <= 0");
  }
  return 1.0 / std::log(neg / pos);
}

Field3 uncertain_prediction(const Mask3& y, const Field3& yhat, const RoiBox& roi,
                            const RelaxedSupConfig& cfg) {
  require_same_shape(y.dims(), yhat.dims(), "uncertain_prediction");
  require_unit_range(yhat, "prediction");
  validate_roi(roi, y.dims());
  const double beta = resolve_beta(y, cfg);
  Field3 out(yhat.dims(), yhat.spacing());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = routing_weight(y[i], roi.contains(y.coord(i)), beta) * yhat[i];
  }
  return out;
}

RelaxedSupResult loss_r_sup(const Mask3& y, const Field3& yhat, const RoiBox& roi,
                            const RelaxedSupConfig& cfg) {
  const Field3 relaxed = uncertain_prediction(y, yhat, roi, cfg);
  RelaxedSupResult r;
  r.beta = resolve_beta(y, cfg);
  const double eps = cfg.epsilon;
  const double n = static_cast<double>(y.size());

  double overlap = 0.0, label_sum = 0.0, relaxed_sum = 0.0, ce_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    overlap += y[i] * yhat[i];
    label_sum += y[i];
    relaxed_sum += relaxed[i];
    if (y[i]) ce_sum += std::log(relaxed[i] + eps);
  }
  const double denom = label_sum + relaxed_sum + eps;
  r.dice = -overlap / denom;
  r.ce = -ce_sum / n;
  r.term.value = r.dice + r.ce;

  r.term.grad = Field3(yhat.dims(), yhat.spacing());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = routing_weight(y[i], roi.contains(y.coord(i)), r.beta);
    double g = -(y[i] * denom - overlap * w) / (denom * denom);
    if (y[i]) g -= 1.0 / (n * (relaxed[i] + eps));
    r.term.grad[i] = g;
  }
  return r;
}

ConnectivityTrace trace_con(const Field3& yhat, const ConnectivityConfig& cfg) {
  require_unit_range(yhat, "prediction");
  SoftSkeletonTrace trace(yhat, cfg.skeleton);
  Mask3 skel_mask = threshold(trace.skeleton(), cfg.threshold);
  Mask3 pseudo(yhat.dims(), yhat.spacing());
  if (count_foreground(skel_mask) > 0) {
    ReconnectResult rc = reconnect(skel_mask);
    pseudo = cfg.target == ConnectivityTarget::all ? std::move(rc.reconnected)
                                                   : std::move(rc.drawn_only);
  }
  return {std::move(trace), std::move(pseudo)};
}

ConnectivityResult loss_con(const Field3& yhat, const ConnectivityConfig& cfg) {
  require_unit_range(yhat, "prediction");
  ConnectivityResult r;
  r.term.grad = Field3(yhat.dims(), yhat.spacing());

  SoftSkeletonTrace trace(yhat, cfg.skeleton);
  const Field3& skel = trace.skeleton();
  const Mask3 skel_mask = threshold(skel, cfg.threshold);
  r.skeleton_voxels = count_foreground(skel_mask);
  if (r.skeleton_voxels == 0) return r;

  ReconnectResult rc = reconnect(skel_mask);
  r.drawn_voxels = count_foreground(rc.drawn_only);
  r.components = rc.initial_components;
  const Mask3& pseudo = cfg.target == ConnectivityTarget::all ? rc.reconnected : rc.drawn_only;
  r.pseudo_label_voxels = count_foreground(pseudo);
  const double norm = std::max<double>(1.0, static_cast<double>(r.pseudo_label_voxels));

  double sum = 0.0;
  Field3 g_skel(yhat.dims(), yhat.spacing());
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    if (!pseudo[i]) continue;
    sum += std::log(skel[i] + cfg.epsilon);
    g_skel[i] = -1.0 / (norm * (skel[i] + cfg.epsilon));
  }
  r.term.value = -sum / norm;
  r.term.grad = trace.backward(g_skel);
  return r;
}

void GatedKernelParams::validate() const {
  if (!(sigma_l > 0.0) || !(sigma_c > 0.0)) throw ParameterError("sigma_l and sigma_c must be > 0");
  if (radius < 1) throw ParameterError("spatial radius must be >= 1");
}

SpatialResult loss_spatial(const Field3& yhat, const Field3& guide, const GatedKernelParams& params) {
  params.validate();
  require_same_shape(yhat.dims(), guide.dims(), "loss_spatial");
  const Dims& d = yhat.dims();
  const int r = params.radius;
  const double inv_l = 1.0 / (2.0 * params.sigma_l * params.sigma_l);
  const double inv_c = 1.0 / (2.0 * params.sigma_c * params.sigma_c);
  const bool joint = params.mode == SpatialMode::joint;

  SpatialResult out;
  std::vector<double> grad(yhat.size(), 0.0);
  double unordered = 0.0;
  std::size_t unordered_pairs = 0;
  // Each unordered pair {i, j} is visited once from its smaller linear index.
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t i = yhat.index(x, y, z);
        for (int dz = 0; dz <= r; ++dz) {
          const int zj = z + dz;
          if (zj >= d.nz) break;
          for (int dy = -r; dy <= r; ++dy) {
            const int yj = y + dy;
            if (yj < 0 || yj >= d.ny) continue;
            if (dz == 0 && dy < 0) continue;
            for (int dx = -r; dx <= r; ++dx) {
              const int xj = x + dx;
              if (xj < 0 || xj >= d.nx) continue;
              if (dz == 0 && dy == 0 && dx <= 0) continue;
              const std::size_t j = yhat.index(xj, yj, zj);
              const double dc = guide[i] - guide[j];
              const double k = std::exp(-((dx * dx + dy * dy + dz * dz) * inv_l + dc * dc * inv_c));
              const double pi = yhat[i], pj = yhat[j];
              ++unordered_pairs;
              if (joint) {
                unordered += k * pi * pj;
                grad[i] += 2.0 * k * pj;
                grad[j] += 2.0 * k * pi;
              } else {
                // (i, j) and (j, i) together: k (pi + pj - 2 pi pj)
                unordered += 0.5 * k * (pi + pj - 2.0 * pi * pj);
                grad[i] += k * (1.0 - 2.0 * pj);
                grad[j] += k * (1.0 - 2.0 * pi);
              }
            }
          }
        }
      }
    }
  }
  out.pair_count = 2 * unordered_pairs;
  out.unordered_sum = unordered;
  const double n = std::max<double>(1.0, static_cast<double>(out.pair_count));
  out.term.value = 2.0 * unordered / n;
  for (double& g : grad) g /= n;
  out.term.grad = Field3(d, yhat.spacing(), std::move(grad));
  return out;
}

MixSample mix_inputs(const Volume3& x1, const Mask3& y1, const Volume3& x2, const Mask3& y2,
                     double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  require_same_shape(x1.dims(), x2.dims(), "mix_inputs");
  require_same_shape(x1.dims(), y1.dims(), "mix_inputs");
  require_same_shape(x1.dims(), y2.dims(), "mix_inputs");
  std::vector<float> mixed(x1.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = static_cast<float>(alpha * x1[i] + (1.0 - alpha) * x2[i]);
  }
  return {alpha, Volume3(x1.dims(), x1.spacing(), std::move(mixed)), y1, y2};
}

Field3 mixed_label(const Mask3& y1, const Mask3& y2, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  require_same_shape(y1.dims(), y2.dims(), "mixed_label");
  Field3 m(y1.dims(), y1.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = alpha * y1[i] + (1.0 - alpha) * y2[i];
  return m;
}

LossTerm loss_mix(const Field3& yhat_mixed, const Mask3& y1, const Mask3& y2, double alpha) {
  require_same_shape(yhat_mixed.dims(), y1.dims(), "loss_mix");
  const Field3 m = mixed_label(y1, y2, alpha);
  double inner = 0.0, pp = 0.0, mm = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    inner += yhat_mixed[i] * m[i];
    pp += yhat_mixed[i] * yhat_mixed[i];
    mm += m[i] * m[i];
  }
  if (!(pp > 0.0) || !(mm > 0.0)) throw DomainError("degenerate cosine: zero-norm prediction or label");
  const double np = std::sqrt(pp), nm = std::sqrt(mm);
  LossTerm t;
  t.value = -inner / (np * nm);
  t.grad = Field3(m.dims(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) {
    t.grad[i] = -(m[i] / (np * nm) - inner * yhat_mixed[i] / (pp * np * nm));
  }
  return t;
}

namespace {

Field3 weighted_sum(std::initializer_list<std::pair<double, const Field3*>> parts) {
  const Field3& first = *parts.begin()->second;
  Field3 out(first.dims(), first.spacing());
  for (const auto& [w, f] : parts) {
    if (f->dims() != out.dims()) throw ParameterError("loss gradients do not share a shape");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (*f)[i];
  }
  return out;
}

}  // namespace

Field3 LossBreakdown::prediction_grad() const {
  return weighted_sum({{1.0, &grad_r_sup}, {1.0, &grad_con}, {lambda, &grad_spatial}});
}

Field3 LossBreakdown::mixed_prediction_grad() const { return weighted_sum({{lambda, &grad_mix}}); }

LossBreakdown loss_gsb(const LossTerm& r_sup, const LossTerm& con, const LossTerm& spatial,
                       const LossTerm& mix, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be >= 0");
  LossBreakdown b;
  b.r_sup = r_sup.value;
  b.con = con.value;
  b.spatial = spatial.value;
  b.mix = mix.value;
  b.lambda = lambda;
  b.total = b.r_sup + b.con + lambda * (b.spatial + b.mix);
  b.grad_r_sup = r_sup.grad;
  b.grad_con = con.grad;
  b.grad_spatial = spatial.grad;
  b.grad_mix = mix.grad;
  return b;
}

}  // namespace tubekit
