#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tusim/errors.hpp"
#include "tusim/texture.hpp"

using namespace tusim;

namespace {

Volume ramp_x(Dims d, const Spacing& sp) {
  Volume v(d, sp, 0.0f);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        v.at(x, y, z) = static_cast<float>(x);
  return v;
}

}  // namespace

TEST_CASE("texture params validation") {
  TextureParams p;
  CHECK_NOTHROW(p.validate());
  TextureParams bad = p;
  bad.ratio_lo = 0.0;
  CHECK_THROWS_AS(bad.validate(), invariant_error);
  bad = p;
  bad.ratio_lo = 3.0;
  bad.ratio_hi = 1.0;
  CHECK_THROWS_AS(bad.validate(), invariant_error);
  bad = p;
  bad.elastic_grid_spacing = 3;  // must be >= 4
  CHECK_THROWS_AS(bad.validate(), invariant_error);
  bad = p;
  bad.elastic_max_disp = 8.0;  // must stay < grid spacing (fold-over)
  CHECK_THROWS_AS(bad.validate(), invariant_error);
  bad = p;
  bad.blur_sigma_lo_mm = -1.0;
  CHECK_THROWS_AS(bad.validate(), invariant_error);
}

TEST_CASE("linear_transform: unit gain identity") {
  Rng rng(4);
  Volume x = oracle::random_smooth_volume({6, 6, 6}, {1.0, 1.0, 1.0}, rng);
  Volume out = linear_transform(x, x, 1.0);
  for (std::size_t i = 0; i < x.data().size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-6));
}

TEST_CASE("linear_transform hand case: src=2, ref mean 4, r 0.5 -> 2") {
  Volume src({2, 2, 2}, {1.0, 1.0, 1.0}, 2.0f);
  Volume ref({2, 2, 2}, {1.0, 1.0, 1.0}, 4.0f);
  Volume out = linear_transform(src, ref, 0.5);
  for (float v : out.data()) CHECK(v == doctest::Approx(2.0f));
}

TEST_CASE("linear_transform mean identity within float32 rounding") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Volume src = oracle::random_smooth_volume({8, 8, 8}, {1.0, 1.0, 1.0}, rng);
    Volume ref = oracle::random_smooth_volume({8, 8, 8}, {1.0, 1.0, 1.0}, rng);
    double r = rng.uniform(0.125, 3.0);
    Volume out = linear_transform(src, ref, r);
    double want = r * mean_intensity(ref);
    double got = mean_intensity(out);
    // output voxels are stored as float32, so the identity holds to ~1e-7
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("linear_transform honors the region for both means") {
  Volume src({2, 1, 1}, {1.0, 1.0, 1.0}, std::vector<float>{2.0f, 100.0f});
  Volume ref({2, 1, 1}, {1.0, 1.0, 1.0}, std::vector<float>{6.0f, -50.0f});
  BinaryMask region({2, 1, 1}, std::vector<std::uint8_t>{1, 0});
  // region means: src 2, ref 6 -> gain = r*6/2
  Volume out = linear_transform(src, ref, 1.0, &region);
  CHECK(out.at(0, 0, 0) == doctest::Approx(6.0f));
  CHECK(out.at(1, 0, 0) == doctest::Approx(300.0f));
}

TEST_CASE("linear_transform rejects zero source mean") {
  Volume src({2, 1, 1}, {1.0, 1.0, 1.0}, std::vector<float>{1.0f, -1.0f});
  Volume ref({2, 1, 1}, {1.0, 1.0, 1.0}, 1.0f);
  CHECK_THROWS_AS(linear_transform(src, ref, 1.0), invariant_error);
}

TEST_CASE("gaussian_blur: sigma 0 is bit-identity") {
  Rng rng(8);
  Volume x = oracle::random_smooth_volume({5, 5, 5}, {1.0, 1.0, 1.0}, rng);
  Volume out = gaussian_blur(x, 0.0);
  CHECK(out.data() == x.data());
}

TEST_CASE("gaussian_blur: constants stay constant within 1e-6") {
  Volume x({9, 9, 9}, {1.0, 1.0, 1.0}, 3.25f);
  Volume out = gaussian_blur(x, 1.0);
  for (float v : out.data()) CHECK(v == doctest::Approx(3.25).epsilon(1e-6));
}

TEST_CASE("gaussian_blur negative sigma rejected") {
  Volume x({3, 3, 3}, {1.0, 1.0, 1.0}, 0.0f);
  CHECK_THROWS_AS(gaussian_blur(x, -0.5), invariant_error);
}

TEST_CASE("gaussian_blur impulse center equals axis-kernel center product") {
  Volume x({9, 9, 9}, {1.0, 1.0, 1.0}, 0.0f);
  x.at(4, 4, 4) = 1.0f;
  Volume out = gaussian_blur(x, 1.0);
  // 1D kernel at sigma 1 voxel, radius 3, renormalized
  double k[7], sum = 0.0;
  for (int i = -3; i <= 3; ++i) {
    k[i + 3] = std::exp(-0.5 * i * i);
    sum += k[i + 3];
  }
  double center = k[3] / sum;
  CHECK(out.at(4, 4, 4) ==
        doctest::Approx(center * center * center).epsilon(1e-6));
  // and the whole field matches the dense-convolution oracle
  Volume dense = oracle::dense_gaussian_blur(x, 1.0);
  for (std::size_t i = 0; i < out.data().size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(dense.data()[i]).epsilon(1e-5));
}

TEST_CASE("gaussian_blur matches dense oracle on random anisotropic input") {
  Rng rng(21);
  Volume x = oracle::random_smooth_volume({7, 6, 5}, {0.8, 1.0, 1.3}, rng);
  Volume sep = gaussian_blur(x, 1.2);
  Volume dense = oracle::dense_gaussian_blur(x, 1.2);
  for (std::size_t i = 0; i < sep.data().size(); ++i)
    CHECK(sep.data()[i] == doctest::Approx(dense.data()[i]).epsilon(2e-5));
}

TEST_CASE("gaussian_blur non-expansive in max-norm, sum preserved inside") {
  Rng rng(33);
  Volume x = oracle::random_smooth_volume({10, 10, 10}, {1.0, 1.0, 1.0}, rng);
  float lo = x.data()[0], hi = x.data()[0];
  for (float v : x.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Volume out = gaussian_blur(x, 0.8);
  for (float v : out.data()) {
    CHECK(v >= lo - 1e-5f);
    CHECK(v <= hi + 1e-5f);
  }
}

TEST_CASE("elastic_deform: zero field is bit-identity") {
  Rng rng(3);
  Volume x = oracle::random_smooth_volume({6, 6, 6}, {1.0, 1.0, 1.0}, rng);
  DisplacementField f;
  f.dims = x.dims();
  f.dx.assign(x.data().size(), 0.0f);
  f.dy.assign(x.data().size(), 0.0f);
  f.dz.assign(x.data().size(), 0.0f);
  Volume out = elastic_deform(x, f);
  CHECK(out.data() == x.data());
}

TEST_CASE("elastic_deform: constant (1,0,0) field shifts an x-ramp") {
  Dims d{8, 4, 4};
  Volume x = ramp_x(d, {1.0, 1.0, 1.0});
  DisplacementField f;
  f.dims = d;
  f.dx.assign(d.count(), 1.0f);
  f.dy.assign(d.count(), 0.0f);
  f.dz.assign(d.count(), 0.0f);
  Volume out = elastic_deform(x, f);
  // out(p) = x(p + 1) = p_x + 1 in-range; clamp at the far edge
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int xx = 0; xx < 8; ++xx) {
        float want = static_cast<float>(std::min(xx + 1, 7));
        CHECK(out.at(xx, y, z) == doctest::Approx(want));
      }
}

TEST_CASE("elastic_deform: constant input stays constant for any field") {
  Volume x({6, 6, 6}, {1.0, 1.0, 1.0}, 2.5f);
  TextureParams p;
  p.elastic_grid_spacing = 4;
  p.elastic_max_disp = 2.0;
  Rng rng(12);
  DisplacementField f = make_displacement(p, rng, x.dims());
  Volume out = elastic_deform(x, f);
  for (float v : out.data()) CHECK(v == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("elastic_deform output bounded by input range (convexity)") {
  Rng rng(44);
  Volume x = oracle::random_smooth_volume({12, 12, 12}, {1.0, 1.0, 1.0}, rng);
  float lo = x.data()[0], hi = x.data()[0];
  for (float v : x.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  TextureParams p;
  DisplacementField f = make_displacement(p, rng, x.dims());
  Volume out = elastic_deform(x, f);
  for (float v : out.data()) {
    CHECK(v >= lo - 1e-5f);
    CHECK(v <= hi + 1e-5f);
  }
}

TEST_CASE("make_displacement respects and reaches the max magnitude") {
  TextureParams p;
  p.elastic_grid_spacing = 8;
  p.elastic_max_disp = 3.0;
  Rng rng(5);
  DisplacementField f = make_displacement(p, rng, {24, 24, 24});
  double maxmag = f.max_magnitude();
  CHECK(maxmag <= 3.0 + 1e-6);
  CHECK(maxmag == doctest::Approx(3.0).epsilon(1e-5));  // rescaled to the cap
}

TEST_CASE("elastic_deform dims mismatch rejected") {
  Volume x({4, 4, 4}, {1.0, 1.0, 1.0}, 0.0f);
  DisplacementField f;
  f.dims = {4, 4, 3};
  f.dx.assign(48, 0.0f);
  f.dy.assign(48, 0.0f);
  f.dz.assign(48, 0.0f);
  CHECK_THROWS_AS(elastic_deform(x, f), invariant_error);
}

TEST_CASE("transform_pipeline: all stages disabled is identity") {
  Rng rng(9);
  Volume src = oracle::random_smooth_volume({6, 6, 6}, {1.0, 1.0, 1.0}, rng);
  Volume ref = oracle::random_smooth_volume({6, 6, 6}, {1.0, 1.0, 1.0}, rng);
  TextureParams p;
  p.linear_enabled = false;
  p.blur_enabled = false;
  p.elastic_enabled = false;
  auto [out, draw] = transform_pipeline(src, ref, p, rng);
  CHECK(out.data() == src.data());
  CHECK_FALSE(draw.linear_applied);
  CHECK_FALSE(draw.blur_applied);
  CHECK_FALSE(draw.elastic_applied);
}

TEST_CASE("transform_pipeline: only linear equals linear_transform") {
  Rng rng(10);
  Volume src = oracle::random_smooth_volume({6, 6, 6}, {1.0, 1.0, 1.0}, rng);
  Volume ref = oracle::random_smooth_volume({6, 6, 6}, {1.0, 1.0, 1.0}, rng);
  TextureParams p;
  p.blur_enabled = false;
  p.elastic_enabled = false;
  p.ratio_lo = 2.0;
  p.ratio_hi = 2.0;  // r pinned
  auto [out, draw] = transform_pipeline(src, ref, p, rng);
  CHECK(draw.linear_applied);
  CHECK(draw.r == doctest::Approx(2.0));
  Volume direct = linear_transform(src, ref, 2.0);
  CHECK(out.data() == direct.data());
}

TEST_CASE("full pipeline output mean equals r * Mean(ref) within 1e-5") {
  Rng rng(66);
  Volume src = oracle::random_smooth_volume({16, 16, 16}, {1.0, 1.0, 1.0}, rng);
  Volume ref = oracle::random_smooth_volume({16, 16, 16}, {1.0, 1.0, 1.0}, rng);
  TextureParams p;
  p.elastic_grid_spacing = 8;
  auto [out, draw] = transform_pipeline(src, ref, p, rng);
  CHECK(draw.linear_applied);
  CHECK(draw.blur_applied);
  CHECK(draw.elastic_applied);
  double want = draw.r * mean_intensity(ref);
  CHECK(mean_intensity(out) == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("pipeline order is elastic -> blur -> linear") {
  // With elastic disabled, the pipeline must equal blur-then-linear applied
  // by hand with the same drawn scalars; linear-last also pins the mean.
  Rng rng(77);
  Volume src = oracle::random_smooth_volume({10, 10, 10}, {1.0, 1.0, 1.0}, rng);
  Volume ref = oracle::random_smooth_volume({10, 10, 10}, {1.0, 1.0, 1.0}, rng);
  TextureParams p;
  p.elastic_enabled = false;
  p.ratio_lo = 1.5;
  p.ratio_hi = 1.5;
  p.blur_sigma_lo_mm = 1.0;
  p.blur_sigma_hi_mm = 1.0;
  auto [out, draw] = transform_pipeline(src, ref, p, rng);
  Volume manual = linear_transform(gaussian_blur(src, 1.0), ref, 1.5);
  CHECK(out.data() == manual.data());
  // the reversed order (linear before blur) would NOT fix the mean exactly
  // unless blur preserved it; verify our order does
  CHECK(mean_intensity(out) ==
        doctest::Approx(1.5 * mean_intensity(ref)).epsilon(1e-6));
}

TEST_CASE("transform_pipeline is deterministic per rng stream") {
  Volume src({8, 8, 8}, {1.0, 1.0, 1.0}, 1.0f);
  Volume ref({8, 8, 8}, {1.0, 1.0, 1.0}, 2.0f);
  for (std::size_t i = 0; i < src.data().size(); ++i)
    src.data()[i] += 0.01f * static_cast<float>(i % 17);
  TextureParams p;
  Rng a(5), b(5);
  auto [oa, da] = transform_pipeline(src, ref, p, a);
  auto [ob, db] = transform_pipeline(src, ref, p, b);
  CHECK(oa.data() == ob.data());
  CHECK(da.r == db.r);
  CHECK(da.sigma_mm == db.sigma_mm);
  CHECK(da.elastic_seed == db.elastic_seed);
}

TEST_CASE("tumor_texture masks the texture") {
  SUBCASE("m = 0 annihilates") {
    BinaryMask m({4, 4, 4}, std::uint8_t{0});
    Volume tex({4, 4, 4}, {1.0, 1.0, 1.0}, 7.0f);
    Volume s = tumor_texture(m, tex);
    for (float v : s.data()) CHECK(v == 0.0f);
  }
  SUBCASE("m = 1 is identity") {
    BinaryMask m({4, 4, 4}, std::uint8_t{1});
    Volume tex({4, 4, 4}, {1.0, 1.0, 1.0}, 7.0f);
    Volume s = tumor_texture(m, tex);
    CHECK(s.data() == tex.data());
  }
  SUBCASE("checkerboard mask alternates {0, c}") {
    Dims d{4, 4, 4};
    BinaryMask m(d, std::uint8_t{0});
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
          if ((x + y + z) % 2 == 0) m.at(x, y, z) = 1;
    Volume tex(d, {1.0, 1.0, 1.0}, 3.0f);
    Volume s = tumor_texture(m, tex);
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
          CHECK(s.at(x, y, z) == ((x + y + z) % 2 == 0 ? 3.0f : 0.0f));
  }
  SUBCASE("dims mismatch rejected") {
    BinaryMask m({4, 4, 3}, std::uint8_t{1});
    Volume tex({4, 4, 4}, {1.0, 1.0, 1.0}, 1.0f);
    CHECK_THROWS_AS(tumor_texture(m, tex), invariant_error);
  }
}
