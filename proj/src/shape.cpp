#include "tusim/shape.hpp"

#include <cmath>

#include "tusim/errors.hpp"

namespace tusim {

void ShapeParams::validate() const {
  if (subdivision_level < 0 || subdivision_level > 6)
    throw invariant_error("shape subdivision level must be in [0, 6]");
  if (!(radius_min_mm > 0.0) || radius_min_mm > radius_max_mm)
    throw invariant_error("shape radius range must satisfy 0 < min <= max");
  if (!(scale_min > 0.0) || scale_min > scale_max)
    throw invariant_error("shape scale range must satisfy 0 < min <= max");
  if (rotation && std::abs(rotation->norm() - 1.0) > 1e-6)
    throw invariant_error("shape rotation quaternion is not unit");
  noise.validate();
}

Quat random_rotation(Rng& rng) {
  double w, x, y, z, n;
  do {
    w = rng.normal();
    x = rng.normal();
    y = rng.normal();
    z = rng.normal();
    n = std::sqrt(w * w + x * x + y * y + z * z);
  } while (n < 1e-12);
  return Quat{w / n, x / n, y / n, z / n};
}

std::pair<BinaryMask, ShapeRecord> generate_mask(const ShapeParams& params,
                                                 const BinaryMask& roi,
                                                 Dims grid_dims,
                                                 const Spacing& spacing,
                                                 Rng& rng) {
  params.validate();

  ShapeRecord rec;
  rec.subdivision_level = params.subdivision_level;
  rec.center = sample_center(roi, rng);
  rec.radius_mm = rng.uniform(params.radius_min_mm, params.radius_max_mm);
  for (int ax = 0; ax < 3; ++ax)
    rec.scale[ax] = rng.log_uniform(params.scale_min, params.scale_max);
  rec.rotation = params.rotation ? *params.rotation : random_rotation(rng);
  rec.noise = params.noise;
  rec.noise.seed = rng.next_u64();
  rec.noise_seed = rec.noise.seed;

  TriMesh mesh = icosphere(params.subdivision_level);
  mesh = perturb_mesh(mesh, rec.noise);
  Vec3 center_mm{rec.center.x * spacing[0], rec.center.y * spacing[1],
                 rec.center.z * spacing[2]};
  mesh = place_mesh(mesh, center_mm, rec.radius_mm, rec.scale, rec.rotation);
  rec.radii_digest = radii_digest(mesh);

  BinaryMask mask = voxelize(mesh, grid_dims, spacing);
  if (params.clip_to_roi) {
    auto& md = mask.data();
    const auto& rd = roi.data();
    for (std::size_t i = 0; i < md.size(); ++i)
      if (!rd[i]) md[i] = 0;
  }
  rec.voxel_count = mask.count_set();
  return {std::move(mask), rec};
}

}  // namespace tusim
