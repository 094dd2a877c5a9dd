#include "tusim/mesh.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <utility>

#include "tusim/errors.hpp"

namespace tusim {

Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

double Quat::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

Vec3 Quat::rotate(const Vec3& v) const {
  // q v q* expanded via the cross-product form
  Vec3 u{x, y, z};
  Vec3 t = 2.0 * cross(u, v);
  return v + (w * t) + cross(u, t);
}

void TriMesh::recompute_radii() {
  radii.resize(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i)
    radii[i] = norm(vertices[i] - center);
}

void TriMesh::validate() const {
  const int nv = static_cast<int>(vertices.size());
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& f : faces) {
    for (int c = 0; c < 3; ++c) {
      if (f[c] < 0 || f[c] >= nv)
        throw invariant_error("mesh face index out of range");
      int a = f[c], b = f[(c + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [e, n] : edge_count)
    if (n != 2)
      throw invariant_error("mesh edge not shared by exactly 2 faces");
  long long V = nv, E = static_cast<long long>(edge_count.size()),
            F = static_cast<long long>(faces.size());
  if (V - E + F != 2)
    throw invariant_error("mesh Euler characteristic != 2");
  for (double r : radii)
    if (!(r > 0.0)) throw invariant_error("mesh vertex radius must be > 0");
}

TriMesh icosphere(int level) {
  if (level < 0 || level > 6)
    throw invariant_error("icosphere level must be in [0, 6]");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh mesh;
  mesh.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                   {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                   {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : mesh.vertices) v = normalized(v);
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = normalized(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
      int idx = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(m);
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  mesh.recompute_radii();
  return mesh;
}

TriMesh perturb_mesh(const TriMesh& mesh, const NoiseParams& noise) {
  noise.validate();
  SimplexNoise gen(noise.seed);
  TriMesh out = mesh;
  for (auto& v : out.vertices) {
    double n = gen.fractal(v[0] * noise.frequency, v[1] * noise.frequency,
                           v[2] * noise.frequency, noise.octaves,
                           noise.persistence);
    v = (1.0 + noise.amplitude * n) * v;
  }
  out.recompute_radii();
  return out;
}

TriMesh place_mesh(const TriMesh& mesh, const Vec3& center_mm,
                   double radius_mm, const Vec3& scale, const Quat& rotation) {
  if (std::abs(rotation.norm() - 1.0) > 1e-6)
    throw invariant_error("place_mesh: rotation quaternion is not unit");
  TriMesh out = mesh;
  for (auto& v : out.vertices) {
    Vec3 s{v[0] * scale[0] * radius_mm, v[1] * scale[1] * radius_mm,
           v[2] * scale[2] * radius_mm};
    v = center_mm + rotation.rotate(s);
  }
  out.center = center_mm;
  out.recompute_radii();
  return out;
}

std::uint64_t radii_digest(const TriMesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double r : mesh.radii) {
    std::uint64_t bits;
    std::memcpy(&bits, &r, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace tusim
