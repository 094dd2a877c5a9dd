#pragma once

#include <array>
#include <cstdint>

namespace tusim {

struct NoiseParams {
  std::uint64_t seed = 0;
  double frequency = 2.0;   // cycles per unit length
  double amplitude = 0.35;  // fraction of radius, [0, 0.9]
  int octaves = 3;
  double persistence = 0.5;

  // Sum of octave weights; the fractal value is bounded by this.
  double octave_bound() const;
  void validate() const;
};

// Classic 3D gradient simplex noise over a seeded 256-entry permutation
// table. Single evaluation is bounded in [-1, 1] and continuous.
class SimplexNoise {
 public:
  explicit SimplexNoise(std::uint64_t seed);

  double eval(double x, double y, double z) const;

  // Octave sum with lacunarity 2 and the given persistence (unnormalized,
  // bounded by octave_bound()).
  double fractal(double x, double y, double z, int octaves,
                 double persistence) const;

 private:
  std::array<std::uint8_t, 512> perm_;
};

// Fractal noise at frequency-scaled p, as used by the mesh perturbation.
double fractal_noise(const std::array<double, 3>& p, const NoiseParams& params);

}  // namespace tusim
