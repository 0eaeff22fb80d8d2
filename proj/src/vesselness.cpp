#include "tubekit/vesselness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tubekit/parallel.hpp"

namespace tubekit {
namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("sigma must be positive, got " + std::to_string(sigma));
  }
}

// One separable pass along the axis with the given stride and length.
void convolve_axis(const std::vector<double>& in, std::vector<double>& out, const Dims& d, int axis,
                   const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  const int len = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(d.nx)
                                                        : static_cast<std::size_t>(d.nx) * d.ny;
  // Lines are enumerated by their (a, b) position in the two other axes.
  const int na = axis == 0 ? d.ny : d.nx;
  const int nb = axis == 2 ? d.ny : d.nz;
  parallel_for(0, static_cast<std::size_t>(nb), [&](std::size_t b) {
    for (int a = 0; a < na; ++a) {
      std::size_t base = 0;
      if (axis == 0) base = static_cast<std::size_t>(d.nx) * (a + static_cast<std::size_t>(d.ny) * b);
      if (axis == 1) base = a + static_cast<std::size_t>(d.nx) * d.ny * b;
      if (axis == 2) base = a + static_cast<std::size_t>(d.nx) * b;
      for (int i = 0; i < len; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int j = std::clamp(i + k, 0, len - 1);
          acc += taps[k + radius] * in[base + j * stride];
        }
        out[base + i * stride] = acc;
      }
    }
  });
}

}  // namespace

double SymMat3::frobenius() const noexcept {
  return std::sqrt(xx * xx + yy * yy + zz * zz + 2.0 * (xy * xy + xz * xz + yz * yz));
}

double SymMat3::determinant() const noexcept {
  return xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz);
}

double SymMat3::characteristic(double lambda) const noexcept {
  SymMat3 m = *this;
  m.xx -= lambda;
  m.yy -= lambda;
  m.zz -= lambda;
  return m.determinant();
}

Polarity parse_polarity(const std::string& name) {
  if (name == "bright") return Polarity::bright;
  if (name == "dark") return Polarity::dark;
  throw ParameterError("unknown polarity '" + name + "'");
}

std::string to_string(Polarity p) { return p == Polarity::bright ? "bright" : "dark"; }

void JermanParams::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in [0, 1]");
  if (scales.empty()) throw ParameterError("at least one scale is required");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    check_sigma(scales[i]);
    if (i > 0 && !(scales[i] > scales[i - 1])) {
      throw ParameterError("scales must be strictly increasing");
    }
  }
}

std::vector<double> gaussian_kernel(double sigma_mm, double spacing_mm) {
  check_sigma(sigma_mm);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_mm / spacing_mm));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double x = i * spacing_mm;
    taps[i + radius] = std::exp(-x * x / (2.0 * sigma_mm * sigma_mm));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Volume3 gaussian_smooth(const Volume3& vol, double sigma_mm) {
  check_sigma(sigma_mm);
  const Dims& d = vol.dims();
  std::vector<double> a(vol.data().begin(), vol.data().end());
  std::vector<double> b(a.size());
  convolve_axis(a, b, d, 0, gaussian_kernel(sigma_mm, vol.spacing().x));
  convolve_axis(b, a, d, 1, gaussian_kernel(sigma_mm, vol.spacing().y));
  convolve_axis(a, b, d, 2, gaussian_kernel(sigma_mm, vol.spacing().z));
  std::vector<float> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = static_cast<float>(b[i]);
  return Volume3(d, vol.spacing(), std::move(out));
}

HessianField hessian_at_scale(const Volume3& vol, double sigma_mm) {
  check_sigma(sigma_mm);
  const Dims& d = vol.dims();
  if (d.nx < 5 || d.ny < 5 || d.nz < 5) {
    throw ParameterError("hessian needs dims >= 5 each, got " + to_string(d));
  }
  const Volume3 s = gaussian_smooth(vol, sigma_mm);
  HessianField h;
  h.dims = d;
  h.spacing = vol.spacing();
  h.scale_sigma = sigma_mm;
  const std::size_t n = d.count();
  for (auto* c : {&h.xx, &h.xy, &h.xz, &h.yy, &h.yz, &h.zz}) c->assign(n, 0.0f);

  const double sx = vol.spacing().x, sy = vol.spacing().y, sz = vol.spacing().z;
  const double norm = sigma_mm * sigma_mm;
  auto f = [&](int x, int y, int z) -> double {
    return s.at(std::clamp(x, 0, d.nx - 1), std::clamp(y, 0, d.ny - 1), std::clamp(z, 0, d.nz - 1));
  };
  parallel_for(0, static_cast<std::size_t>(d.nz), [&](std::size_t zi) {
    const int z = static_cast<int>(zi);
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const double c = f(x, y, z);
        const double dxx = (f(x + 1, y, z) - 2.0 * c + f(x - 1, y, z)) / (sx * sx);
        const double dyy = (f(x, y + 1, z) - 2.0 * c + f(x, y - 1, z)) / (sy * sy);
        const double dzz = (f(x, y, z + 1) - 2.0 * c + f(x, y, z - 1)) / (sz * sz);
        const double dxy = (f(x + 1, y + 1, z) - f(x + 1, y - 1, z) - f(x - 1, y + 1, z) +
                            f(x - 1, y - 1, z)) / (4.0 * sx * sy);
        const double dxz = (f(x + 1, y, z + 1) - f(x + 1, y, z - 1) - f(x - 1, y, z + 1) +
                            f(x - 1, y, z - 1)) / (4.0 * sx * sz);
        const double dyz = (f(x, y + 1, z + 1) - f(x, y + 1, z - 1) - f(x, y - 1, z + 1) +
                            f(x, y - 1, z - 1)) / (4.0 * sy * sz);
        const std::size_t i = s.index(x, y, z);
        h.xx[i] = static_cast<float>(norm * dxx);
        h.yy[i] = static_cast<float>(norm * dyy);
        h.zz[i] = static_cast<float>(norm * dzz);
        h.xy[i] = static_cast<float>(norm * dxy);
        h.xz[i] = static_cast<float>(norm * dxz);
        h.yz[i] = static_cast<float>(norm * dyz);
      }
    }
  });
  return h;
}

EigenTriple eig3_symmetric(const SymMat3& h) {
  for (double v : {h.xx, h.xy, h.xz, h.yy, h.yz, h.zz}) {
    if (!std::isfinite(v)) throw ParameterError("eigen solver input must be finite");
  }
  double e[3];
  const double off = h.xy * h.xy + h.xz * h.xz + h.yz * h.yz;
  const double q = h.trace() / 3.0;
  const double p2 = (h.xx - q) * (h.xx - q) + (h.yy - q) * (h.yy - q) + (h.zz - q) * (h.zz - q) +
                    2.0 * off;
  if (p2 == 0.0) {
    e[0] = e[1] = e[2] = q;
  } else if (off == 0.0) {
    e[0] = h.xx;
    e[1] = h.yy;
    e[2] = h.zz;
  } else {
    const double p = std::sqrt(p2 / 6.0);
    SymMat3 b{(h.xx - q) / p, h.xy / p, h.xz / p, (h.yy - q) / p, h.yz / p, (h.zz - q) / p};
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    e[0] = q + 2.0 * p * std::cos(phi);
    e[2] = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    e[1] = 3.0 * q - e[0] - e[2];
  }
  std::sort(e, e + 3, [](double a, double b) { return std::abs(a) < std::abs(b); });
  return {e[0], e[1], e[2]};
}

double jerman_response(const EigenTriple& eigs, double lambda3_max, double tau, Polarity polarity) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in [0, 1]");
  const double sign = polarity == Polarity::bright ? -1.0 : 1.0;
  const double l2 = sign * eigs.l2;
  const double l3 = sign * eigs.l3;
  const double cut = tau * lambda3_max;
  double lp = 0.0;
  if (l3 > cut) {
    lp = l3;
  } else if (l3 > 0.0) {
    lp = cut;
  }
  if (l2 <= 0.0 || lp <= 0.0) return 0.0;
  if (l2 >= lp / 2.0) return 1.0;
  const double ratio = 3.0 / (lp + l2);
  return std::clamp(l2 * l2 * (lp - l2) * ratio * ratio * ratio, 0.0, 1.0);
}

Volume3 vesselness_multiscale(const Volume3& vol, const JermanParams& params) {
  params.validate();
  const Dims& d = vol.dims();
  const std::size_t n = d.count();
  std::vector<float> best(n, 0.0f);
  std::vector<EigenTriple> eigs(n);
  const double sign = params.polarity == Polarity::bright ? -1.0 : 1.0;
  const std::size_t slice = static_cast<std::size_t>(d.nx) * d.ny;

  for (double sigma : params.scales) {
    const HessianField h = hessian_at_scale(vol, sigma);
    std::vector<double> slice_max(static_cast<std::size_t>(d.nz), 0.0);
    parallel_for(0, static_cast<std::size_t>(d.nz), [&](std::size_t z) {
      double m = 0.0;
      for (std::size_t i = z * slice; i < (z + 1) * slice; ++i) {
        eigs[i] = eig3_symmetric(h.at(i));
        m = std::max(m, sign * eigs[i].l3);
      }
      slice_max[z] = m;
    });
    const double l3max = *std::max_element(slice_max.begin(), slice_max.end());
    parallel_for(0, static_cast<std::size_t>(d.nz), [&](std::size_t z) {
      for (std::size_t i = z * slice; i < (z + 1) * slice; ++i) {
        const auto f = static_cast<float>(jerman_response(eigs[i], l3max, params.tau, params.polarity));
        best[i] = std::max(best[i], f);
      }
    });
  }
  return Volume3(d, vol.spacing(), std::move(best));
}

}  // namespace tubekit
