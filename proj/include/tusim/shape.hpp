#pragma once

#include <cstdint>
#include <optional>

#include "tusim/mesh.hpp"
#include "tusim/rng.hpp"
#include "tusim/voxelize.hpp"

namespace tusim {

struct ShapeParams {
  int subdivision_level = 2;
  double radius_min_mm = 2.0;
  double radius_max_mm = 8.0;
  double scale_min = 0.7;   // per-axis, sampled log-uniform
  double scale_max = 1.4;
  std::optional<Quat> rotation;  // nullopt = uniform random on SO(3)
  NoiseParams noise;
  bool clip_to_roi = false;

  void validate() const;
};

// Every sampled quantity of one generated shape, for reproducibility.
struct ShapeRecord {
  std::uint64_t noise_seed = 0;
  VoxelCoord center;
  double radius_mm = 0.0;
  Vec3 scale{1.0, 1.0, 1.0};
  Quat rotation;
  NoiseParams noise;
  int subdivision_level = 0;
  std::uint64_t radii_digest = 0;
  std::size_t voxel_count = 0;
};

// Uniformly distributed rotation via a normalized 4D Gaussian.
Quat random_rotation(Rng& rng);

// sample_center -> icosphere -> perturb -> place -> voxelize.
std::pair<BinaryMask, ShapeRecord> generate_mask(const ShapeParams& params,
                                                 const BinaryMask& roi,
                                                 Dims grid_dims,
                                                 const Spacing& spacing,
                                                 Rng& rng);

}  // namespace tusim
