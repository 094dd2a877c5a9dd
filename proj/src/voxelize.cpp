#include "tusim/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tusim/errors.hpp"

namespace tusim {

namespace {

// Moller-Trumbore; returns t > 0 along dir, or NaN on miss.
double ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                    const Vec3& b, const Vec3& c) {
  constexpr double kEps = 1e-12;
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 pvec = cross(dir, e2);
  double det = dot(e1, pvec);
  if (std::abs(det) < kEps) return std::numeric_limits<double>::quiet_NaN();
  double inv = 1.0 / det;
  Vec3 tvec = origin - a;
  double u = dot(tvec, pvec) * inv;
  if (u < -1e-9 || u > 1.0 + 1e-9)
    return std::numeric_limits<double>::quiet_NaN();
  Vec3 qvec = cross(tvec, e1);
  double v = dot(dir, qvec) * inv;
  if (v < -1e-9 || u + v > 1.0 + 1e-9)
    return std::numeric_limits<double>::quiet_NaN();
  double t = dot(e2, qvec) * inv;
  if (t <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return t;
}

// Conservative octant index set for the face's spherical triangle. The
// spherical triangle of a small face is a positive combination of its
// vertex directions, so the per-coordinate sign range bounds it.
int octant_of(const Vec3& u) {
  return (u[0] < 0 ? 1 : 0) | (u[1] < 0 ? 2 : 0) | (u[2] < 0 ? 4 : 0);
}

}  // namespace

BinaryMask voxelize(const TriMesh& mesh, Dims dims, const Spacing& spacing) {
  BinaryMask mask(dims, std::uint8_t{0});
  if (mesh.radii.empty()) return mask;

  // rmax bounds the surface from above (every surface point is a convex
  // combination of its face's vertices). The inside shortcut needs a lower
  // bound on the surface radius: faces dip below the minimum vertex radius,
  // so use the distance from the center to each face's plane, which bounds
  // the distance to every point of that face from below.
  double rmax = *std::max_element(mesh.radii.begin(), mesh.radii.end());
  const Vec3& c = mesh.center;
  double rmin = rmax;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    Vec3 nrm = cross(mesh.vertices[f[1]] - a, mesh.vertices[f[2]] - a);
    double nn = norm(nrm);
    double plane_dist = nn > 0.0 ? std::abs(dot(nrm, a - c)) / nn : 0.0;
    rmin = std::min(rmin, plane_dist);
  }

  // Direction-bucketed face index: a face goes into every octant its
  // vertex-direction sign box touches.
  std::array<std::vector<int>, 8> buckets;
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const auto& f = mesh.faces[fi];
    bool neg[3] = {false, false, false}, pos[3] = {false, false, false};
    for (int k = 0; k < 3; ++k) {
      Vec3 d = mesh.vertices[f[k]] - c;
      for (int ax = 0; ax < 3; ++ax) {
        // treat near-zero components as straddling the plane
        if (d[ax] < 1e-12) neg[ax] = true;
        if (d[ax] > -1e-12) pos[ax] = true;
      }
    }
    for (int o = 0; o < 8; ++o) {
      bool ok = true;
      for (int ax = 0; ax < 3 && ok; ++ax)
        ok = (o >> ax) & 1 ? neg[ax] : pos[ax];
      if (ok) buckets[o].push_back(static_cast<int>(fi));
    }
  }

  auto surface_radius = [&](Vec3 u) -> double {
    for (int attempt = 0; attempt < 4; ++attempt) {
      const auto& cand = buckets[octant_of(u)];
      for (int fi : cand) {
        const auto& f = mesh.faces[fi];
        double t = ray_triangle(c, u, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                mesh.vertices[f[2]]);
        if (std::isfinite(t)) return t;
      }
      // Numerical miss along an edge: nudge the ray ~1e-7 rad and retry.
      Vec3 axis = std::abs(u[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      Vec3 perp = normalized(cross(u, axis));
      u = normalized(u + 1e-7 * (attempt + 1) * perp);
    }
    throw invariant_error("voxelize: degenerate mesh, ray hit no triangle");
  };

  // Voxels clearly inside rmin or outside rmax skip the ray query.
  int x_lo = std::max(0, static_cast<int>(std::ceil((c[0] - rmax) / spacing[0])));
  int x_hi = std::min(dims.nx - 1,
                      static_cast<int>(std::floor((c[0] + rmax) / spacing[0])));
  int y_lo = std::max(0, static_cast<int>(std::ceil((c[1] - rmax) / spacing[1])));
  int y_hi = std::min(dims.ny - 1,
                      static_cast<int>(std::floor((c[1] + rmax) / spacing[1])));
  int z_lo = std::max(0, static_cast<int>(std::ceil((c[2] - rmax) / spacing[2])));
  int z_hi = std::min(dims.nz - 1,
                      static_cast<int>(std::floor((c[2] + rmax) / spacing[2])));

  for (int z = z_lo; z <= z_hi; ++z) {
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        Vec3 p{x * spacing[0], y * spacing[1], z * spacing[2]};
        Vec3 d = p - c;
        double dist = norm(d);
        if (dist >= rmax) continue;
        if (dist < rmin || dist == 0.0) {
          mask.at(x, y, z) = 1;
          continue;
        }
        Vec3 u{d[0] / dist, d[1] / dist, d[2] / dist};
        if (dist <= surface_radius(u)) mask.at(x, y, z) = 1;
      }
    }
  }
  return mask;
}

VoxelCoord sample_center(const BinaryMask& roi, Rng& rng) {
  std::size_t n = roi.count_set();
  if (n == 0) throw invariant_error("sample_center: empty ROI");
  std::size_t target =
      static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  const auto& data = roi.data();
  std::size_t seen = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i]) {
      if (seen == target) {
        int nx = roi.dims().nx, ny = roi.dims().ny;
        std::size_t plane = static_cast<std::size_t>(nx) * ny;
        VoxelCoord vc;
        vc.z = static_cast<int>(i / plane);
        std::size_t rem = i % plane;
        vc.y = static_cast<int>(rem / nx);
        vc.x = static_cast<int>(rem % nx);
        return vc;
      }
      ++seen;
    }
  }
  throw invariant_error("sample_center: internal counting error");
}

}  // namespace tusim
