#include "tubekit/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "tubekit/random.hpp"

namespace tubekit {
namespace {

struct Point {
  double x, y, z;
};

Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

double segment_distance_sq(Point p, Point a, Point b) {
  const Point ab = b - a;
  const Point ap = p - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(ap, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Point q{a.x + t * ab.x, a.y + t * ab.y, a.z + t * ab.z};
  const Point d = p - q;
  return dot(d, d);
}

constexpr int kHelixSamples = 4096;
constexpr double kHelixTurns = 2.0;

}  // namespace

PhantomKind parse_phantom_kind(const std::string& name) {
  if (name == "cylinder") return PhantomKind::cylinder;
  if (name == "gapped_cylinder") return PhantomKind::gapped_cylinder;
  if (name == "bifurcation") return PhantomKind::bifurcation;
  if (name == "helix") return PhantomKind::helix;
  throw ParameterError("unknown phantom kind '" + name + "'");
}

std::string to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::cylinder: return "cylinder";
    case PhantomKind::gapped_cylinder: return "gapped_cylinder";
    case PhantomKind::bifurcation: return "bifurcation";
    case PhantomKind::helix: return "helix";
  }
  return "unknown";
}

void PhantomSpec::validate() const {
  if (!(radius_mm > 0.0) || !std::isfinite(radius_mm)) {
    throw ParameterError("phantom radius_mm must be positive");
  }
  if (!std::isfinite(foreground_intensity) || !std::isfinite(background_intensity) ||
      !(foreground_intensity > background_intensity)) {
    throw ParameterError("phantom foreground_intensity must exceed background_intensity");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ParameterError("phantom noise_sigma must be >= 0");
  }
  if (gap_len_voxels < 0) throw ParameterError("phantom gap_len_voxels must be >= 0");
}

int phantom_gap_start(const PhantomSpec& spec, const Dims& dims) {
  return dims.nz / 2 - spec.gap_len_voxels / 2;
}

Phantom make_phantom(const PhantomSpec& spec, Dims dims, Spacing spacing) {
  spec.validate();
  if (dims.nx < 16 || dims.ny < 16 || dims.nz < 16) {
    throw ParameterError("phantom dims must be >= 16 each, got " + to_string(dims));
  }
  if (spec.kind == PhantomKind::gapped_cylinder && spec.gap_len_voxels >= dims.nz) {
    throw ParameterError("gap_len_voxels must be smaller than nz");
  }

  Mask3 label(dims, spacing);
  const double sx = spacing.x, sy = spacing.y, sz = spacing.z;
  const double cx = (dims.nx / 2) * sx;
  const double cy = (dims.ny / 2) * sy;
  const double r2 = spec.radius_mm * spec.radius_mm;

  std::vector<std::array<Point, 2>> segments;
  std::vector<Point> helix;
  if (spec.kind == PhantomKind::bifurcation) {
    const Point root{cx, cy, 0.0};
    const Point split{cx, cy, (dims.nz / 2) * sz};
    const double arm = (dims.nx / 4) * sx;
    const double top = (dims.nz - 1) * sz;
    segments = {{root, split}, {split, Point{cx - arm, cy, top}}, {split, Point{cx + arm, cy, top}}};
  } else if (spec.kind == PhantomKind::helix) {
    const double radius = (dims.nx / 4) * sx;
    const double height = (dims.nz - 1) * sz;
    helix.reserve(kHelixSamples + 1);
    for (int s = 0; s <= kHelixSamples; ++s) {
      const double t = static_cast<double>(s) / kHelixSamples;
      const double theta = 2.0 * std::numbers::pi * kHelixTurns * t;
      helix.push_back({cx + radius * std::cos(theta), cy + radius * std::sin(theta), height * t});
    }
  }

  const int gap_lo = phantom_gap_start(spec, dims);
  const int gap_hi = gap_lo + spec.gap_len_voxels;

  for (int z = 0; z < dims.nz; ++z) {
    const double pz = z * sz;
    // Helix samples are monotone in z; only those within reach matter.
    std::size_t h_lo = 0, h_hi = 0;
    if (!helix.empty()) {
      const double reach = spec.radius_mm + sz;
      auto lo = std::lower_bound(helix.begin(), helix.end(), pz - reach,
                                 [](const Point& p, double v) { return p.z < v; });
      auto hi = std::upper_bound(helix.begin(), helix.end(), pz + reach,
                                 [](double v, const Point& p) { return v < p.z; });
      h_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, lo - helix.begin() - 1));
      h_hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(helix.size()) - 1, hi - helix.begin()));
    }
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        const Point p{x * sx, y * sy, pz};
        double d2 = std::numeric_limits<double>::infinity();
        switch (spec.kind) {
          case PhantomKind::cylinder:
            d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
            break;
          case PhantomKind::gapped_cylinder:
            if (z < gap_lo || z >= gap_hi) d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
            break;
          case PhantomKind::bifurcation:
            for (const auto& s : segments) d2 = std::min(d2, segment_distance_sq(p, s[0], s[1]));
            break;
          case PhantomKind::helix:
            for (std::size_t s = h_lo; s < h_hi; ++s) {
              d2 = std::min(d2, segment_distance_sq(p, helix[s], helix[s + 1]));
            }
            break;
        }
        if (d2 <= r2) label.at(x, y, z) = 1;
      }
    }
  }

  std::vector<float> image(dims.count());
  GaussianStream noise(spec.seed);
  const double contrast = spec.foreground_intensity - spec.background_intensity;
  for (std::size_t i = 0; i < image.size(); ++i) {
    double v = spec.background_intensity + contrast * label[i];
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise.next();
    image[i] = static_cast<float>(v);
  }
  return {Volume3(dims, spacing, std::move(image)), std::move(label)};
}

}  // namespace tubekit
