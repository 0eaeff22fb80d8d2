#include "tubekit/volume.hpp"

#include <algorithm>
#include <limits>

namespace tubekit {

std::string to_string(const Dims& d) {
  return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

std::string to_string(const Index3& i) {
  return "(" + std::to_string(i.x) + "," + std::to_string(i.y) + "," + std::to_string(i.z) + ")";
}

std::size_t count_foreground(const Mask3& m) {
  return static_cast<std::size_t>(std::count(m.values().begin(), m.values().end(), 1));
}

RoiBox full_roi(const Dims& dims) { return {{0, 0, 0}, {dims.nx - 1, dims.ny - 1, dims.nz - 1}}; }

void validate_roi(const RoiBox& roi, const Dims& dims) {
  const bool ordered = roi.min.x <= roi.max.x && roi.min.y <= roi.max.y && roi.min.z <= roi.max.z;
  const bool inside = roi.min.x >= 0 && roi.min.y >= 0 && roi.min.z >= 0 && roi.max.x < dims.nx &&
                      roi.max.y < dims.ny && roi.max.z < dims.nz;
  if (!ordered || !inside) {
    throw ParameterError("roi " + to_string(roi.min) + "-" + to_string(roi.max) +
                         " is not an ordered box inside " + to_string(dims));
  }
}

RoiBox roi_from_label(const Mask3& label, int margin) {
  if (margin < 0) throw ParameterError("roi margin must be >= 0");
  constexpr int kMax = std::numeric_limits<int>::max();
  RoiBox box{{kMax, kMax, kMax}, {-1, -1, -1}};
  bool any = false;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (!label[i]) continue;
    any = true;
    const Index3 p = label.coord(i);
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
  }
  if (!any) throw DomainError("empty label");
  const Dims& d = label.dims();
  box.min = {std::max(0, box.min.x - margin), std::max(0, box.min.y - margin),
             std::max(0, box.min.z - margin)};
  box.max = {std::min(d.nx - 1, box.max.x + margin), std::min(d.ny - 1, box.max.y + margin),
             std::min(d.nz - 1, box.max.z + margin)};
  return box;
}

}  // namespace tubekit
