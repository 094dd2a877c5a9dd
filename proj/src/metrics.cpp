#include "tusim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tusim/errors.hpp"

namespace tusim {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred.dims(), gt.dims(), "confusion");
  ConfusionCounts c;
  const auto& p = pred.data();
  const auto& g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && g[i]) ++c.tp;
    else if (p[i] && !g[i]) ++c.fp;
    else if (!p[i] && g[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double dice(const ConfusionCounts& c) {
  std::size_t denom = c.fp + 2 * c.tp + c.fn;
  if (denom == 0) return 1.0;  // both masks empty
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::optional<double> sensitivity(const ConfusionCounts& c) {
  std::size_t denom = c.tp + c.fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::optional<double> specificity(const ConfusionCounts& c) {
  std::size_t denom = c.tn + c.fp;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.tn) / static_cast<double>(denom);
}

std::vector<VoxelCoord> surface_voxels(const BinaryMask& m) {
  std::vector<VoxelCoord> out;
  const Dims& d = m.dims();
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (!m.at(x, y, z)) continue;
        bool boundary = x == 0 || x == d.nx - 1 || y == 0 || y == d.ny - 1 ||
                        z == 0 || z == d.nz - 1;
        if (!boundary) {
          boundary = !m.at(x - 1, y, z) || !m.at(x + 1, y, z) ||
                     !m.at(x, y - 1, z) || !m.at(x, y + 1, z) ||
                     !m.at(x, y, z - 1) || !m.at(x, y, z + 1);
        }
        if (boundary) out.push_back({x, y, z});
      }
    }
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher lower envelope of parabolas, anisotropic
// sample positions i * spacing.
void edt_pass(std::vector<double>& field, const Dims& dims, int axis,
              double spacing) {
  int n[3] = {dims.nx, dims.ny, dims.nz};
  std::size_t stride[3] = {1, static_cast<std::size_t>(dims.nx),
                           static_cast<std::size_t>(dims.nx) * dims.ny};
  int len = n[axis];
  std::size_t s = stride[axis];
  int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;

  std::vector<double> f(len), d_out(len);
  std::vector<int> v(len);
  std::vector<double> zb(len + 1);

  for (int b = 0; b < n[o2]; ++b) {
    for (int a = 0; a < n[o1]; ++a) {
      std::size_t base = static_cast<std::size_t>(a) * stride[o1] +
                         static_cast<std::size_t>(b) * stride[o2];
      for (int i = 0; i < len; ++i) f[i] = field[base + i * s];

      int k = 0;
      v[0] = -1;
      // find the first finite parabola
      for (int q = 0; q < len; ++q) {
        if (f[q] < kInf) {
          v[0] = q;
          break;
        }
      }
      if (v[0] < 0) continue;  // whole line infinite
      zb[0] = -kInf;
      zb[1] = kInf;
      for (int q = v[0] + 1; q < len; ++q) {
        if (f[q] == kInf) continue;
        double xq = q * spacing;
        while (true) {
          int p = v[k];
          double xp = p * spacing;
          double inter =
              ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * xq - 2.0 * xp);
          if (inter <= zb[k]) {
            --k;
          } else {
            ++k;
            v[k] = q;
            zb[k] = inter;
            zb[k + 1] = kInf;
            break;
          }
        }
      }

      int j = 0;
      for (int q = 0; q < len; ++q) {
        double xq = q * spacing;
        while (zb[j + 1] < xq) ++j;
        double dx = (q - v[j]) * spacing;
        d_out[q] = f[v[j]] + dx * dx;
      }
      for (int i = 0; i < len; ++i) field[base + i * s] = d_out[i];
    }
  }
}

// Squared Euclidean distance (mm) to the nearest site, over the whole grid.
std::vector<double> squared_edt(const std::vector<VoxelCoord>& sites,
                                const Dims& dims, const Spacing& spacing) {
  std::vector<double> field(dims.count(), kInf);
  for (const auto& p : sites)
    field[static_cast<std::size_t>(p.x) +
          static_cast<std::size_t>(dims.nx) *
              (static_cast<std::size_t>(p.y) +
               static_cast<std::size_t>(dims.ny) * p.z)] = 0.0;
  // pass order z, y, x fixes the summation grouping (dz2 + dy2) + dx2
  edt_pass(field, dims, 2, spacing[2]);
  edt_pass(field, dims, 1, spacing[1]);
  edt_pass(field, dims, 0, spacing[0]);
  return field;
}

double nearest_rank(std::vector<double>& values, double percentile) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return values[rank - 1];
}

}  // namespace

std::optional<double> hausdorff_percentile(const BinaryMask& pred,
                                           const BinaryMask& gt,
                                           const Spacing& spacing,
                                           double percentile) {
  require_same_dims(pred.dims(), gt.dims(), "hausdorff");
  if (!(percentile > 0.0) || percentile > 100.0)
    throw invariant_error("hausdorff percentile must be in (0, 100]");
  auto sx = surface_voxels(pred);
  auto sy = surface_voxels(gt);
  if (sx.empty() || sy.empty()) return std::nullopt;

  const Dims& d = pred.dims();
  auto to_y = squared_edt(sy, d, spacing);
  auto to_x = squared_edt(sx, d, spacing);

  auto directed = [&](const std::vector<VoxelCoord>& from,
                      const std::vector<double>& field) {
    std::vector<double> dist;
    dist.reserve(from.size());
    for (const auto& p : from)
      dist.push_back(std::sqrt(
          field[static_cast<std::size_t>(p.x) +
                static_cast<std::size_t>(d.nx) *
                    (static_cast<std::size_t>(p.y) +
                     static_cast<std::size_t>(d.ny) * p.z)]));
    return nearest_rank(dist, percentile);
  };

  return std::max(directed(sx, to_y), directed(sy, to_x));
}

std::optional<double> hd95(const BinaryMask& pred, const BinaryMask& gt,
                           const Spacing& spacing) {
  return hausdorff_percentile(pred, gt, spacing, 95.0);
}

MetricReport evaluate_masks(const BinaryMask& pred, const BinaryMask& gt,
                            const Spacing& spacing) {
  MetricReport rep;
  auto c = confusion(pred, gt);
  rep.dice = dice(c);
  rep.sensitivity = sensitivity(c);
  rep.specificity = specificity(c);
  rep.hd95_mm = hd95(pred, gt, spacing);
  return rep;
}

}  // namespace tusim
