#pragma once

#include <cstdint>
#include <vector>

#include "tusim/shape.hpp"
#include "tusim/texture.hpp"

namespace tusim {

// Full provenance of one generated sample.
struct SampleRecord {
  std::uint64_t stream_seed = 0;
  int target_index = -1;
  int donor_index = -1;
  double alpha = 1.0;
  std::vector<ShapeRecord> shapes;
  std::vector<TextureDraw> textures;
};

// The ground-truth tuple: blended input x, normal image x_n, textured
// tumor s, mask m, and the mixing weight alpha.
struct SyntheticSample {
  Volume x;
  Volume x_n;
  Volume s;
  BinaryMask m;
  double alpha = 1.0;
  SampleRecord record;
};

// x = (1 - alpha*m) * x_n + alpha*m * s. Voxels with m=0 copy x_n bit-exactly.
Volume blend(const Volume& x_n, const Volume& s, const BinaryMask& m,
             double alpha);

struct TumorLayer {
  BinaryMask mask;
  Volume texture;
};

enum class MergeRule { LastWins };

// Combines K tumors: masks are OR-ed, overlap voxels take the later tumor's
// blend (last-wins). Returns the blended volume, the union mask, and the
// combined tumor texture layer.
struct MultiComposeResult {
  Volume x;
  BinaryMask mask;
  Volume s;
};
MultiComposeResult compose_multi(const Volume& x_n,
                                 const std::vector<TumorLayer>& tumors,
                                 const std::vector<double>& alphas,
                                 MergeRule rule = MergeRule::LastWins);

struct ComposeConfig {
  ShapeParams shape;
  TextureParams texture;
  double alpha_lo = 0.5;
  double alpha_hi = 1.0;
  int k_min = 1;   // tumors per sample, inclusive range
  int k_max = 1;
  bool allow_self_donation = false;
  bool roi_restricted_mean = true;  // Mean() over the ROI when one is given

  void validate() const;
};

// Samples target/donor from the pool, runs the shape and texture pipelines
// K times, and blends. Deterministic given the rng stream.
SyntheticSample generate_sample(const std::vector<Volume>& normal_pool,
                                const BinaryMask& roi,
                                const ComposeConfig& cfg, Rng& rng);

// Per-pool-volume ROIs: rois.size() must be 1 (shared) or pool size
// (the drawn target's ROI is used).
SyntheticSample generate_sample(const std::vector<Volume>& normal_pool,
                                const std::vector<BinaryMask>& rois,
                                const ComposeConfig& cfg, Rng& rng);

}  // namespace tusim
