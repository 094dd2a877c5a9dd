#include "tusim/compose.hpp"

#include "tusim/errors.hpp"

namespace tusim {

Volume blend(const Volume& x_n, const Volume& s, const BinaryMask& m,
             double alpha) {
  require_same_dims(x_n.dims(), s.dims(), "blend");
  require_same_dims(x_n.dims(), m.dims(), "blend");
  if (alpha < 0.0 || alpha > 1.0)
    throw invariant_error("blend: alpha must be in [0, 1]");

  std::vector<float> out(x_n.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (m.data()[i]) {
      out[i] = static_cast<float>(
          (1.0 - alpha) * static_cast<double>(x_n.data()[i]) +
          alpha * static_cast<double>(s.data()[i]));
    } else {
      // m=0 voxels copy x_n bit-exactly (the formula would turn -0 into +0)
      out[i] = x_n.data()[i];
    }
  }
  return Volume(x_n.dims(), x_n.spacing(), std::move(out));
}

MultiComposeResult compose_multi(const Volume& x_n,
                                 const std::vector<TumorLayer>& tumors,
                                 const std::vector<double>& alphas,
                                 MergeRule rule) {
  (void)rule;  // LastWins is the only v1 rule
  if (tumors.empty() || tumors.size() > 15)
    throw invariant_error("compose_multi: tumor count must be in [1, 15]");
  if (alphas.size() != tumors.size())
    throw invariant_error("compose_multi: one alpha per tumor required");

  // Last-wins: a voxel covered by several tumors takes the latest tumor's
  // texture and alpha, then a single blend is applied. This keeps the
  // composition identity x = (1 - a*m)*x_n + a*m*s valid voxelwise.
  BinaryMask combined(x_n.dims(), std::uint8_t{0});
  Volume s(x_n.dims(), x_n.spacing(), 0.0f);
  std::vector<double> voxel_alpha(x_n.data().size(), 0.0);

  for (std::size_t k = 0; k < tumors.size(); ++k) {
    const auto& t = tumors[k];
    require_same_dims(x_n.dims(), t.mask.dims(), "compose_multi");
    require_same_dims(x_n.dims(), t.texture.dims(), "compose_multi");
    if (alphas[k] < 0.0 || alphas[k] > 1.0)
      throw invariant_error("compose_multi: alpha must be in [0, 1]");
    for (std::size_t i = 0; i < combined.data().size(); ++i) {
      if (t.mask.data()[i]) {
        combined.data()[i] = 1;
        s.data()[i] = t.texture.data()[i];
        voxel_alpha[i] = alphas[k];
      }
    }
  }

  MultiComposeResult res;
  std::vector<float> out(x_n.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (combined.data()[i]) {
      double a = voxel_alpha[i];
      out[i] = static_cast<float>(
          (1.0 - a) * static_cast<double>(x_n.data()[i]) +
          a * static_cast<double>(s.data()[i]));
    } else {
      out[i] = x_n.data()[i];
    }
  }
  res.x = Volume(x_n.dims(), x_n.spacing(), std::move(out));
  res.mask = std::move(combined);
  res.s = std::move(s);
  return res;
}

void ComposeConfig::validate() const {
  shape.validate();
  texture.validate();
  if (alpha_lo < 0.0 || alpha_hi > 1.0 || alpha_lo > alpha_hi)
    throw invariant_error("alpha law must satisfy 0 <= lo <= hi <= 1");
  if (k_min < 1 || k_min > k_max || k_max > 15)
    throw invariant_error("tumor count range must satisfy 1 <= min <= max <= 15");
}

SyntheticSample generate_sample(const std::vector<Volume>& normal_pool,
                                const BinaryMask& roi,
                                const ComposeConfig& cfg, Rng& rng) {
  return generate_sample(normal_pool, std::vector<BinaryMask>{roi}, cfg, rng);
}

SyntheticSample generate_sample(const std::vector<Volume>& normal_pool,
                                const std::vector<BinaryMask>& rois,
                                const ComposeConfig& cfg, Rng& rng) {
  cfg.validate();
  if (rois.size() != 1 && rois.size() != normal_pool.size())
    throw invariant_error(
        "generate_sample: ROI count must be 1 or the pool size");
  std::size_t min_pool = cfg.allow_self_donation ? 1 : 2;
  if (normal_pool.size() < min_pool)
    throw invariant_error("generate_sample: normal pool needs at least " +
                          std::to_string(min_pool) + " volumes");

  SyntheticSample sample;
  auto& rec = sample.record;

  rec.target_index =
      static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(normal_pool.size()) - 1));
  if (cfg.allow_self_donation && normal_pool.size() == 1) {
    rec.donor_index = rec.target_index;
  } else {
    do {
      rec.donor_index = static_cast<int>(
          rng.uniform_int(0, static_cast<std::int64_t>(normal_pool.size()) - 1));
    } while (rec.donor_index == rec.target_index && !cfg.allow_self_donation);
  }

  const Volume& target = normal_pool[rec.target_index];
  const Volume& donor = normal_pool[rec.donor_index];
  const BinaryMask& roi =
      rois.size() == 1 ? rois[0] : rois[static_cast<std::size_t>(rec.target_index)];
  require_same_dims(target.dims(), donor.dims(), "generate_sample");
  require_same_dims(target.dims(), roi.dims(), "generate_sample");

  int k = static_cast<int>(rng.uniform_int(cfg.k_min, cfg.k_max));
  rec.alpha = rng.uniform(cfg.alpha_lo, cfg.alpha_hi);
  sample.alpha = rec.alpha;

  const BinaryMask* mean_region = cfg.roi_restricted_mean ? &roi : nullptr;

  std::vector<TumorLayer> tumors;
  tumors.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    auto [mask, shape_rec] =
        generate_mask(cfg.shape, roi, target.dims(), target.spacing(), rng);
    auto [tex, draw] =
        transform_pipeline(donor, target, cfg.texture, rng, mean_region);
    rec.shapes.push_back(shape_rec);
    rec.textures.push_back(draw);
    Volume masked_tex = tumor_texture(mask, tex);
    tumors.push_back({std::move(mask), std::move(masked_tex)});
  }

  std::vector<double> alphas(tumors.size(), rec.alpha);
  auto composed = compose_multi(target, tumors, alphas);
  sample.x = std::move(composed.x);
  sample.x_n = target;
  sample.s = std::move(composed.s);
  sample.m = std::move(composed.mask);
  return sample;
}

}  // namespace tusim
