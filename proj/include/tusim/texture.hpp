#pragma once

#include <cstdint>
#include <vector>

#include "tusim/rng.hpp"
#include "tusim/volume.hpp"

namespace tusim {

struct TextureParams {
  // linear transform: r drawn uniform from (ratio_lo, ratio_hi)
  bool linear_enabled = true;
  double ratio_lo = 1.0;
  double ratio_hi = 3.0;
  // gaussian blur: sigma drawn uniform from [sigma_lo_mm, sigma_hi_mm]
  bool blur_enabled = true;
  double blur_sigma_lo_mm = 0.5;
  double blur_sigma_hi_mm = 1.5;
  // elastic deformation
  bool elastic_enabled = true;
  int elastic_grid_spacing = 8;      // voxels, >= 4
  double elastic_max_disp = 3.0;     // voxels, < grid spacing
  double elastic_smooth_sigma = 2.0; // voxels

  void validate() const;
};

// Per-voxel 3D offsets in voxel units, backward-warp convention.
struct DisplacementField {
  Dims dims;
  std::vector<float> dx, dy, dz;

  double max_magnitude() const;
};

// The scalars a pipeline run actually drew, for provenance.
struct TextureDraw {
  bool linear_applied = false;
  double r = 1.0;
  bool blur_applied = false;
  double sigma_mm = 0.0;
  bool elastic_applied = false;
  std::uint64_t elastic_seed = 0;
};

// out = r * (Mean(x_ref) / Mean(x_src)) * x_src. Means honor the optional
// region on both volumes.
Volume linear_transform(const Volume& x_src, const Volume& x_ref, double r,
                        const BinaryMask* region = nullptr);

// Separable 3D Gaussian, kernel truncated at 3 sigma and renormalized,
// clamp-to-edge borders. sigma 0 is the bit-exact identity.
Volume gaussian_blur(const Volume& x, double sigma_mm);

DisplacementField make_displacement(const TextureParams& params, Rng& rng,
                                    Dims dims);

// Backward warp out(p) = x(p + field(p)), trilinear, clamp-to-edge.
Volume elastic_deform(const Volume& x, const DisplacementField& field);

// Elastic -> blur -> linear, disabled stages skipped as identity.
std::pair<Volume, TextureDraw> transform_pipeline(const Volume& x_src,
                                                  const Volume& x_ref,
                                                  const TextureParams& params,
                                                  Rng& rng,
                                                  const BinaryMask* region = nullptr);

// s = m (elementwise) tex
Volume tumor_texture(const BinaryMask& m, const Volume& tex);

}  // namespace tusim
