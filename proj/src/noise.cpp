#include "tusim/noise.hpp"

#include <cmath>

#include "tusim/errors.hpp"
#include "tusim/rng.hpp"

namespace tusim {

double NoiseParams::octave_bound() const {
  double b = 0.0, w = 1.0;
  for (int k = 0; k < octaves; ++k) {
    b += w;
    w *= persistence;
  }
  return b;
}

void NoiseParams::validate() const {
  if (!(frequency > 0.0))
    throw invariant_error("noise frequency must be > 0");
  if (amplitude < 0.0 || amplitude > 0.9)
    throw invariant_error("noise amplitude must be in [0, 0.9]");
  if (octaves < 1 || octaves > 8)
    throw invariant_error("noise octaves must be in [1, 8]");
  if (!(persistence > 0.0) || persistence > 1.0)
    throw invariant_error("noise persistence must be in (0, 1]");
  if (amplitude * octave_bound() >= 1.0)
    throw invariant_error(
        "noise amplitude * octave bound must stay < 1 to keep perturbed radii "
        "positive");
}

namespace {

// 12 edge-midpoint gradients of a cube.
constexpr int kGrad[12][3] = {{1, 1, 0},  {-1, 1, 0},  {1, -1, 0}, {-1, -1, 0},
                              {1, 0, 1},  {-1, 0, 1},  {1, 0, -1}, {-1, 0, -1},
                              {0, 1, 1},  {0, -1, 1},  {0, 1, -1}, {0, -1, -1}};

inline double dot3(const int* g, double x, double y, double z) {
  return g[0] * x + g[1] * y + g[2] * z;
}

}  // namespace

SimplexNoise::SimplexNoise(std::uint64_t seed) {
  std::array<std::uint8_t, 256> p;
  for (int i = 0; i < 256; ++i) p[i] = static_cast<std::uint8_t>(i);
  Rng rng(seed);
  for (int i = 255; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(p[i], p[j]);
  }
  for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
}

double SimplexNoise::eval(double x, double y, double z) const {
  constexpr double F3 = 1.0 / 3.0;
  constexpr double G3 = 1.0 / 6.0;

  double s = (x + y + z) * F3;
  int i = static_cast<int>(std::floor(x + s));
  int j = static_cast<int>(std::floor(y + s));
  int k = static_cast<int>(std::floor(z + s));
  double t = (i + j + k) * G3;
  double x0 = x - (i - t);
  double y0 = y - (j - t);
  double z0 = z - (k - t);

  // Rank the simplex corner offsets.
  int i1, j1, k1, i2, j2, k2;
  if (x0 >= y0) {
    if (y0 >= z0) {
      i1 = 1; j1 = 0; k1 = 0; i2 = 1; j2 = 1; k2 = 0;
    } else if (x0 >= z0) {
      i1 = 1; j1 = 0; k1 = 0; i2 = 1; j2 = 0; k2 = 1;
    } else {
      i1 = 0; j1 = 0; k1 = 1; i2 = 1; j2 = 0; k2 = 1;
    }
  } else {
    if (y0 < z0) {
      i1 = 0; j1 = 0; k1 = 1; i2 = 0; j2 = 1; k2 = 1;
    } else if (x0 < z0) {
      i1 = 0; j1 = 1; k1 = 0; i2 = 0; j2 = 1; k2 = 1;
    } else {
      i1 = 0; j1 = 1; k1 = 0; i2 = 1; j2 = 1; k2 = 0;
    }
  }

  double x1 = x0 - i1 + G3, y1 = y0 - j1 + G3, z1 = z0 - k1 + G3;
  double x2 = x0 - i2 + 2.0 * G3, y2 = y0 - j2 + 2.0 * G3,
         z2 = z0 - k2 + 2.0 * G3;
  double x3 = x0 - 1.0 + 3.0 * G3, y3 = y0 - 1.0 + 3.0 * G3,
         z3 = z0 - 1.0 + 3.0 * G3;

  int ii = i & 255, jj = j & 255, kk = k & 255;
  int gi0 = perm_[ii + perm_[jj + perm_[kk]]] % 12;
  int gi1 = perm_[ii + i1 + perm_[jj + j1 + perm_[kk + k1]]] % 12;
  int gi2 = perm_[ii + i2 + perm_[jj + j2 + perm_[kk + k2]]] % 12;
  int gi3 = perm_[ii + 1 + perm_[jj + 1 + perm_[kk + 1]]] % 12;

  double n = 0.0;
  double t0 = 0.6 - x0 * x0 - y0 * y0 - z0 * z0;
  if (t0 > 0) {
    t0 *= t0;
    n += t0 * t0 * dot3(kGrad[gi0], x0, y0, z0);
  }
  double t1 = 0.6 - x1 * x1 - y1 * y1 - z1 * z1;
  if (t1 > 0) {
    t1 *= t1;
    n += t1 * t1 * dot3(kGrad[gi1], x1, y1, z1);
  }
  double t2 = 0.6 - x2 * x2 - y2 * y2 - z2 * z2;
  if (t2 > 0) {
    t2 *= t2;
    n += t2 * t2 * dot3(kGrad[gi2], x2, y2, z2);
  }
  double t3 = 0.6 - x3 * x3 - y3 * y3 - z3 * z3;
  if (t3 > 0) {
    t3 *= t3;
    n += t3 * t3 * dot3(kGrad[gi3], x3, y3, z3);
  }
  // 32 scales the theoretical extrema to roughly +-0.89, safely inside [-1,1]
  return 32.0 * n;
}

double SimplexNoise::fractal(double x, double y, double z, int octaves,
                             double persistence) const {
  double sum = 0.0, w = 1.0, f = 1.0;
  for (int k = 0; k < octaves; ++k) {
    sum += w * eval(x * f, y * f, z * f);
    w *= persistence;
    f *= 2.0;
  }
  return sum;
}

double fractal_noise(const std::array<double, 3>& p, const NoiseParams& params) {
  SimplexNoise noise(params.seed);
  return noise.fractal(p[0] * params.frequency, p[1] * params.frequency,
                       p[2] * params.frequency, params.octaves,
                       params.persistence);
}

}  // namespace tusim
