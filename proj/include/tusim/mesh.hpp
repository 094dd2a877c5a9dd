#pragma once

#include <array>
#include <vector>

#include "tusim/noise.hpp"

namespace tusim {

using Vec3 = std::array<double, 3>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

// Unit quaternion (w, x, y, z) for rigid rotations.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
  Vec3 rotate(const Vec3& v) const;
  static Quat identity() { return {}; }
};

// Closed triangle surface mesh, outward-oriented, star-shaped about the
// origin until placed.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<double> radii;  // per-vertex distance from the star center
  Vec3 center{0.0, 0.0, 0.0};

  void recompute_radii();
  // Checks closed-2-manifold structure (every edge on exactly 2 faces,
  // Euler characteristic 2) and index bounds.
  void validate() const;
};

// Unit geodesic sphere from recursive icosahedron subdivision.
// V = 10*4^level + 2, F = 20*4^level; level in [0, 6].
TriMesh icosphere(int level);

// Radial displacement v -> v * (1 + amplitude * fbm(frequency * v)).
TriMesh perturb_mesh(const TriMesh& mesh, const NoiseParams& noise);

// v -> center + R * (diag(scale) * radius * v).
TriMesh place_mesh(const TriMesh& mesh, const Vec3& center_mm,
                   double radius_mm, const Vec3& scale, const Quat& rotation);

// FNV-1a over the per-vertex radii bit patterns; used for drift detection.
std::uint64_t radii_digest(const TriMesh& mesh);

}  // namespace tusim
