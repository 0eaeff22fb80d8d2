#pragma once

#include <string>
#include <vector>

#include "tubekit/volume.hpp"

namespace tubekit {

struct SymMat3 {
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

  double trace() const noexcept { return xx + yy + zz; }
  double frobenius() const noexcept;
  double determinant() const noexcept;
  // det(H - lambda I)
  double characteristic(double lambda) const noexcept;
};

// Eigenvalues ordered so that |l1| <= |l2| <= |l3|.
struct EigenTriple {
  double l1 = 0, l2 = 0, l3 = 0;
};

// Six scale-normalized second derivatives per voxel.
struct HessianField {
  Dims dims{};
  Spacing spacing{};
  double scale_sigma = 0.0;
  std::vector<float> xx, xy, xz, yy, yz, zz;

  std::size_t size() const noexcept { return xx.size(); }
  SymMat3 at(std::size_t i) const noexcept {
    return {xx[i], xy[i], xz[i], yy[i], yz[i], zz[i]};
  }
};

enum class Polarity { bright, dark };

Polarity parse_polarity(const std::string& name);
std::string to_string(Polarity p);

struct JermanParams {
  double tau = 0.5;
  std::vector<double> scales{1.0, 1.5, 2.0, 3.0};
  Polarity polarity = Polarity::bright;

  void validate() const;
};

// Normalized 1D Gaussian taps for radius ceil(3 sigma / spacing).
std::vector<double> gaussian_kernel(double sigma_mm, double spacing_mm);

// Separable Gaussian with replicate padding.
Volume3 gaussian_smooth(const Volume3& vol, double sigma_mm);

// Gaussian smoothing at sigma, then spacing-aware central differences,
// multiplied by sigma^2. Requires every dim >= 5.
HessianField hessian_at_scale(const Volume3& vol, double sigma_mm);

// Closed-form trigonometric eigenvalues of a real symmetric 3x3 matrix.
EigenTriple eig3_symmetric(const SymMat3& h);

// Jerman enhancement for one voxel. For bright polarity l2 and l3 are negated
// before evaluation; lambda3_max is the volume maximum of the adjusted l3.
//   lp = l3            if l3 > tau * lambda3_max
//      = tau*l3max     if 0 < l3 <= tau * lambda3_max
//      = 0             otherwise
//   F  = 0 if l2 <= 0 or lp <= 0;  1 if l2 >= lp/2 > 0;
//        l2^2 (lp - l2) (3 / (lp + l2))^3 otherwise.
double jerman_response(const EigenTriple& eigs, double lambda3_max, double tau, Polarity polarity);

// Maximum over scales of the per-voxel Jerman response, in [0, 1].
Volume3 vesselness_multiscale(const Volume3& vol, const JermanParams& params);

}  // namespace tubekit
