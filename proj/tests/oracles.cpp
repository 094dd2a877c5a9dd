#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tusim::oracle {

namespace {

// Crossing count of the ray p + t*(1,0,0), t > 0, against one triangle.
bool ray_x_hits(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Solve in the (y,z) projection: the ray is a point sweep.
  Vec3 e1 = b - a, e2 = c - a;
  double det = e1[1] * e2[2] - e1[2] * e2[1];
  if (std::abs(det) < 1e-15) return false;
  double py = p[1] - a[1], pz = p[2] - a[2];
  double u = (py * e2[2] - pz * e2[1]) / det;
  double v = (e1[1] * pz - e1[2] * py) / det;
  if (u < 0.0 || v < 0.0 || u + v > 1.0) return false;
  double x_hit = a[0] + u * e1[0] + v * e2[0];
  return x_hit > p[0];
}

}  // namespace

BinaryMask parity_voxelize(const TriMesh& mesh, Dims dims,
                           const Spacing& spacing) {
  BinaryMask mask(dims, std::uint8_t{0});
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        // tiny irrational offsets keep the ray off triangle edges
        Vec3 p{x * spacing[0], y * spacing[1] + 1.23456789e-7,
               z * spacing[2] + 2.34567891e-7};
        int crossings = 0;
        for (const auto& f : mesh.faces)
          if (ray_x_hits(p, mesh.vertices[f[0]], mesh.vertices[f[1]],
                         mesh.vertices[f[2]]))
            ++crossings;
        if (crossings % 2 == 1) mask.at(x, y, z) = 1;
      }
    }
  }
  return mask;
}

double reference_simplex(std::uint64_t seed, double x, double y, double z) {
  // seeded permutation, same construction the production table uses
  std::uint8_t perm[512];
  {
    std::uint8_t p[256];
    for (int i = 0; i < 256; ++i) p[i] = static_cast<std::uint8_t>(i);
    Rng rng(seed);
    for (int i = 255; i > 0; --i) {
      int j = static_cast<int>(rng.uniform_int(0, i));
      std::swap(p[i], p[j]);
    }
    for (int i = 0; i < 512; ++i) perm[i] = p[i & 255];
  }
  static const int grad[12][3] = {
      {1, 1, 0},  {-1, 1, 0},  {1, -1, 0}, {-1, -1, 0},
      {1, 0, 1},  {-1, 0, 1},  {1, 0, -1}, {-1, 0, -1},
      {0, 1, 1},  {0, -1, 1},  {0, 1, -1}, {0, -1, -1}};

  const double F3 = 1.0 / 3.0, G3 = 1.0 / 6.0;
  double skew = (x + y + z) * F3;
  int ci = static_cast<int>(std::floor(x + skew));
  int cj = static_cast<int>(std::floor(y + skew));
  int ck = static_cast<int>(std::floor(z + skew));
  double unskew = (ci + cj + ck) * G3;
  double rx = x - (ci - unskew);
  double ry = y - (cj - unskew);
  double rz = z - (ck - unskew);

  // corner offsets ordered by coordinate rank
  int off[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 1, 1}};
  {
    int first, second;
    if (rx >= ry && rx >= rz) first = 0;
    else if (ry >= rx && ry >= rz) first = 1;
    else first = 2;
    double rest[3] = {rx, ry, rz};
    rest[first] = -std::numeric_limits<double>::infinity();
    if (rest[0] >= rest[1] && rest[0] >= rest[2]) second = 0;
    else if (rest[1] >= rest[0] && rest[1] >= rest[2]) second = 1;
    else second = 2;
    off[1][first] = 1;
    off[2][first] = 1;
    off[2][second] = 1;
  }

  double total = 0.0;
  for (int corner = 0; corner < 4; ++corner) {
    double cx = rx - off[corner][0] + corner * G3;
    double cy = ry - off[corner][1] + corner * G3;
    double cz = rz - off[corner][2] + corner * G3;
    double t = 0.6 - cx * cx - cy * cy - cz * cz;
    if (t <= 0.0) continue;
    int gi = perm[((ci + off[corner][0]) & 255) +
                  perm[((cj + off[corner][1]) & 255) +
                       perm[(ck + off[corner][2]) & 255]]] %
             12;
    double t2 = t * t;
    total += t2 * t2 *
             (grad[gi][0] * cx + grad[gi][1] * cy + grad[gi][2] * cz);
  }
  return 32.0 * total;
}

Volume dense_gaussian_blur(const Volume& x, double sigma_mm) {
  if (sigma_mm == 0.0) return x;
  const Dims& d = x.dims();
  int radius[3];
  std::vector<double> k[3];
  for (int ax = 0; ax < 3; ++ax) {
    double sigma_vox = sigma_mm / x.spacing()[ax];
    radius[ax] = static_cast<int>(std::ceil(3.0 * sigma_vox));
    double sum = 0.0;
    k[ax].resize(2 * radius[ax] + 1);
    for (int i = -radius[ax]; i <= radius[ax]; ++i) {
      double v = std::exp(-0.5 * (i / sigma_vox) * (i / sigma_vox));
      k[ax][i + radius[ax]] = v;
      sum += v;
    }
    for (auto& v : k[ax]) v /= sum;
  }

  std::vector<float> out(x.data().size());
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int xx = 0; xx < d.nx; ++xx) {
        double acc = 0.0;
        for (int dz = -radius[2]; dz <= radius[2]; ++dz) {
          int sz = std::clamp(z + dz, 0, d.nz - 1);
          for (int dy = -radius[1]; dy <= radius[1]; ++dy) {
            int sy = std::clamp(y + dy, 0, d.ny - 1);
            for (int dx = -radius[0]; dx <= radius[0]; ++dx) {
              int sx = std::clamp(xx + dx, 0, d.nx - 1);
              acc += k[2][dz + radius[2]] * k[1][dy + radius[1]] *
                     k[0][dx + radius[0]] *
                     static_cast<double>(x.at(sx, sy, sz));
            }
          }
        }
        out[static_cast<std::size_t>(xx) +
            static_cast<std::size_t>(d.nx) *
                (static_cast<std::size_t>(y) +
                 static_cast<std::size_t>(d.ny) * z)] =
            static_cast<float>(acc);
      }
    }
  }
  return Volume(d, x.spacing(), std::move(out));
}

std::optional<double> allpairs_hausdorff(const BinaryMask& pred,
                                         const BinaryMask& gt,
                                         const Spacing& spacing,
                                         double percentile) {
  auto sx = surface_voxels(pred);
  auto sy = surface_voxels(gt);
  if (sx.empty() || sy.empty()) return std::nullopt;

  auto directed = [&](const std::vector<VoxelCoord>& from,
                      const std::vector<VoxelCoord>& to) {
    std::vector<double> dist;
    dist.reserve(from.size());
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        // same summation grouping as the distance-transform passes
        double dz = (p.z - q.z) * spacing[2];
        double acc = dz * dz;
        double dy = (p.y - q.y) * spacing[1];
        acc += dy * dy;
        double dx = (p.x - q.x) * spacing[0];
        acc += dx * dx;
        best = std::min(best, acc);
      }
      dist.push_back(std::sqrt(best));
    }
    std::sort(dist.begin(), dist.end());
    std::size_t n = dist.size();
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(percentile / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return dist[rank - 1];
  };

  return std::max(directed(sx, sy), directed(sy, sx));
}

Volume random_smooth_volume(Dims dims, const Spacing& spacing, Rng& rng,
                            double lo, double hi) {
  // low-frequency cosine mixture plus a little white noise
  double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0),
         fz = rng.uniform(0.5, 2.0);
  double px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28),
         pz = rng.uniform(0.0, 6.28);
  std::vector<float> data(dims.count());
  std::size_t idx = 0;
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x, ++idx) {
        double u = 0.5 +
                   0.25 * std::cos(fx * x / dims.nx * 6.28 + px) *
                       std::cos(fy * y / dims.ny * 6.28 + py) *
                       std::cos(fz * z / dims.nz * 6.28 + pz) +
                   0.05 * rng.uniform(-1.0, 1.0);
        data[idx] = static_cast<float>(lo + (hi - lo) * (u + 0.3));
      }
    }
  }
  return Volume(dims, spacing, std::move(data));
}

BinaryMask random_mask(Dims dims, double fill_probability, Rng& rng) {
  std::vector<std::uint8_t> data(dims.count());
  for (auto& v : data) v = rng.uniform() < fill_probability ? 1 : 0;
  return BinaryMask(dims, std::move(data));
}

}  // namespace tusim::oracle
