#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tubekit/error.hpp"
#include "tubekit/phantom.hpp"
#include "tubekit/random.hpp"
#include "tubekit/vesselness.hpp"

using namespace tubekit;

namespace {

Volume3 permute_zx(const Volume3& v) {
  const Dims d = v.dims();
  Volume3 out(Dims{d.nz, d.ny, d.nx}, Spacing{v.spacing().z, v.spacing().y, v.spacing().x});
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) out.at(z, y, x) = v.at(x, y, z);
  return out;
}

Volume3 random_volume(Dims d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Volume3 v(d);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = float(rng.uniform(-1, 1));
  return v;
}

}  // namespace

TEST_SUITE("vesselness") {
  TEST_CASE("gaussian kernel shape") {
    const auto k = gaussian_kernel(1.0, 1.0);
    CHECK(k.size() == 7);
    double sum = 0;
    for (double w : k) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gaussian_kernel(1.0, 0.5).size() == 13);
    CHECK_THROWS_AS(gaussian_kernel(0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(gaussian_smooth(Volume3(Dims{4, 4, 4}), -1.0), ParameterError);
  }

  TEST_CASE("smoothing a constant volume is the identity") {
    const Volume3 c(Dims{9, 7, 5}, Spacing{1, 0.7f, 1.3f}, 2.5f);
    for (double sigma : {0.5, 1.0, 2.7}) {
      const Volume3 s = gaussian_smooth(c, sigma);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - 2.5f) <= 1e-6);
    }
  }

  TEST_CASE("impulse response matches dense convolution oracle") {
    for (Spacing sp : {Spacing{1, 1, 1}, Spacing{1, 0.8f, 1.5f}}) {
      Volume3 v(Dims{11, 11, 11}, sp);
      v.at(5, 5, 5) = 1.0f;
      const Volume3 s = gaussian_smooth(v, 1.0);
      std::vector<double> in(v.values().begin(), v.values().end());
      const auto ref = oracle::dense_gaussian(in, v.dims(), sp, 1.0);
      double mass = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s[i] - ref[i]) <= 1e-6);
        mass += s[i];
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    }
  }

  TEST_CASE("hessian of a quadratic tube profile") {
    const Dims d{16, 16, 16};
    Volume3 v(d);
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const double yy = y - 7.5, zz = z - 7.5;
          v.at(x, y, z) = float(-(yy * yy + zz * zz));
        }
    for (double sigma : {0.3, 1.0}) {
      const HessianField h = hessian_at_scale(v, sigma);
      const double s2 = sigma * sigma;
      for (int z = 5; z <= 10; ++z)
        for (int y = 5; y <= 10; ++y)
          for (int x = 5; x <= 10; ++x) {
            const SymMat3 m = h.at(v.index(x, y, z));
            CHECK(std::abs(m.xx) <= 1e-3 * s2);
            CHECK(std::abs(m.yy + 2.0 * s2) <= 1e-3 * s2);
            CHECK(std::abs(m.zz + 2.0 * s2) <= 1e-3 * s2);
            CHECK(std::abs(m.xy) <= 1e-3);
            CHECK(std::abs(m.yz) <= 1e-3);
            CHECK(std::abs(m.xz) <= 1e-3);
          }
    }
  }

  TEST_CASE("hessian of constant and linear fields vanishes") {
    const HessianField hc = hessian_at_scale(Volume3(Dims{8, 8, 8}, Spacing{}, 4.0f), 1.0);
    Volume3 ramp(Dims{12, 12, 12});
    for (int z = 0; z < 12; ++z)
      for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) ramp.at(x, y, z) = float(x);
    const HessianField hr = hessian_at_scale(ramp, 1.0);
    for (std::size_t i = 0; i < hc.size(); ++i) {
      const SymMat3 m = hc.at(i);
      CHECK((m.xx == 0 && m.yy == 0 && m.zz == 0 && m.xy == 0 && m.xz == 0 && m.yz == 0));
    }
    for (int z = 0; z < 12; ++z)
      for (int y = 0; y < 12; ++y)
        for (int x = 4; x < 8; ++x) {
          const SymMat3 m = hr.at(ramp.index(x, y, z));
          for (double c : {m.xx, m.yy, m.zz, m.xy, m.xz, m.yz}) CHECK(std::abs(c) <= 1e-5);
        }
    CHECK_THROWS_AS(hessian_at_scale(Volume3(Dims{4, 8, 8}), 1.0), ParameterError);
  }

  TEST_CASE("eigenvalue examples") {
    const EigenTriple d = eig3_symmetric(SymMat3{0, 0, 0, -2, 0, -2});
    CHECK(d.l1 == doctest::Approx(0.0));
    CHECK(d.l2 == doctest::Approx(-2.0));
    CHECK(d.l3 == doctest::Approx(-2.0));
    const EigenTriple z = eig3_symmetric(SymMat3{});
    CHECK((z.l1 == 0 && z.l2 == 0 && z.l3 == 0));
    CHECK_THROWS_AS(eig3_symmetric(SymMat3{NAN, 0, 0, 0, 0, 0}), ParameterError);
  }

  TEST_CASE("eigenvalues agree with Jacobi oracle") {
    SplitMix64 rng(5);
    for (int t = 0; t < 300; ++t) {
      const double scale = std::pow(10.0, rng.uniform(-2, 2));
      SymMat3 m{rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale,
                rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale, rng.uniform(-1, 1) * scale};
      const EigenTriple e = eig3_symmetric(m);
      const auto ref = oracle::jacobi_eigenvalues({{{m.xx, m.xy, m.xz}, {m.xy, m.yy, m.yz}, {m.xz, m.yz, m.zz}}});
      CHECK(std::abs(e.l1 - ref[0]) <= 1e-6 * std::max(1.0, scale));
      CHECK(std::abs(e.l2 - ref[1]) <= 1e-6 * std::max(1.0, scale));
      CHECK(std::abs(e.l3 - ref[2]) <= 1e-6 * std::max(1.0, scale));
      CHECK(std::abs(e.l1) <= std::abs(e.l2));
      CHECK(std::abs(e.l2) <= std::abs(e.l3));
      CHECK(std::abs(e.l1 + e.l2 + e.l3 - m.trace()) <= 1e-4 * (1 + m.frobenius()));
    }
  }

  TEST_CASE("jerman response branches") {
    const auto bright = Polarity::bright;
    CHECK(jerman_response({0.0, 1.0, -3.0}, 3.0, 0.5, bright) == 0.0);
    CHECK(jerman_response({0.0, -1.0, 3.0}, 3.0, 0.5, bright) == 0.0);
    CHECK(jerman_response({0.0, -2.0, -3.0}, 3.0, 0.5, bright) == 1.0);
    CHECK(std::abs(jerman_response({0.0, -1.0, -3.0}, 3.0, 0.5, bright) - 0.84375) <= 1e-9);
    CHECK(std::abs(jerman_response({0.0, 1.0, 3.0}, 3.0, 0.5, Polarity::dark) - 0.84375) <= 1e-9);
    // lambda3 below tau * max is lifted to tau * max = 3
    CHECK(std::abs(jerman_response({0.0, -1.0, -1.2}, 6.0, 0.5, bright) - 0.84375) <= 1e-9);
    CHECK(jerman_response({0.0, -1.0, -1.0}, 0.0, 0.5, bright) == 1.0);
    CHECK_THROWS_AS(jerman_response({0, -1, -1}, 1.0, 1.5, bright), ParameterError);
    CHECK_THROWS_AS(parse_polarity("grey"), ParameterError);
  }

  TEST_CASE("multiscale parameter validation") {
    JermanParams p;
    p.scales = {};
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.scales = {2.0, 1.0};
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.scales = {1.0};
    p.tau = -0.1;
    CHECK_THROWS_AS(p.validate(), ParameterError);
  }

  TEST_CASE("constant volume gives zero response") {
    const Volume3 r = vesselness_multiscale(Volume3(Dims{10, 10, 10}, Spacing{}, 7.0f), JermanParams{});
    for (float v : r.values()) CHECK(v == 0.0f);
  }

  TEST_CASE("dark polarity mirrors bright on inverted image") {
    const Phantom ph = make_phantom(PhantomSpec{}, Dims{20, 20, 20});
    Volume3 inv = ph.image;
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = -inv[i];
    JermanParams b;
    b.scales = {1.0, 2.0};
    JermanParams d = b;
    d.polarity = Polarity::dark;
    const Volume3 rb = vesselness_multiscale(ph.image, b);
    const Volume3 rd = vesselness_multiscale(inv, d);
    for (std::size_t i = 0; i < rb.size(); ++i) CHECK(std::abs(rb[i] - rd[i]) <= 1e-6);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("response stays in the unit interval") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      JermanParams p;
      p.scales = {0.7, 1.5};
      p.tau = 0.25 * double(seed - 1);
      const Volume3 r = vesselness_multiscale(random_volume(Dims{12, 10, 9}, seed), p);
      for (float v : r.values()) CHECK((v >= 0.0f && v <= 1.0f));
    }
  }

  TEST_CASE("adding a scale never lowers the response") {
    const Volume3 v = random_volume(Dims{14, 14, 14}, 77);
    JermanParams few;
    few.scales = {1.0, 2.0};
    JermanParams more;
    more.scales = {1.0, 1.5, 2.0};
    const Volume3 a = vesselness_multiscale(v, few), b = vesselness_multiscale(v, more);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] >= a[i]);
  }

  TEST_CASE("rotation covariance of the cylinder response") {
    const Phantom ph = make_phantom(PhantomSpec{}, Dims{24, 24, 24});
    JermanParams p;
    p.scales = {1.0, 2.0};
    const Volume3 rz = vesselness_multiscale(ph.image, p);
    const Volume3 rx = permute_zx(vesselness_multiscale(permute_zx(ph.image), p));
    double mad = 0.0;
    for (std::size_t i = 0; i < rz.size(); ++i) mad += std::abs(rz[i] - rx[i]);
    CHECK(mad / double(rz.size()) <= 1e-3);
  }

  TEST_CASE("eigen residual on a random field") {
    const HessianField h = hessian_at_scale(random_volume(Dims{10, 10, 10}, 3), 1.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const SymMat3 m = h.at(i);
      const EigenTriple e = eig3_symmetric(m);
      for (double l : {e.l1, e.l2, e.l3}) CHECK(std::abs(m.characteristic(l)) <= 1e-4 * (1 + m.frobenius()));
    }
  }
}
