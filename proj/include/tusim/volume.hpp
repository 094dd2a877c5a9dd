#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tusim {

struct Dims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const Dims&) const = default;
};

using Spacing = std::array<double, 3>;  // millimeters per voxel

// Dense 3D scalar field, float32 storage, x-fastest linear order
// (idx = x + nx*(y + ny*z), matching the NIfTI payload layout).
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, Spacing spacing, std::vector<float> data);
  Volume(Dims dims, Spacing spacing, float fill = 0.0f);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  float at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  float& at(int x, int y, int z) { return data_[index(x, y, z)]; }

  // Re-checks the finiteness invariant (for data mutated in place).
  void validate() const;

 private:
  Dims dims_;
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<float> data_;
};

// Dense {0,1} field with the same layout as Volume.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(Dims dims, std::vector<std::uint8_t> data);
  explicit BinaryMask(Dims dims, std::uint8_t fill = 0);

  const Dims& dims() const { return dims_; }
  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  std::uint8_t at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  std::uint8_t& at(int x, int y, int z) { return data_[index(x, y, z)]; }

  std::size_t count_set() const;

 private:
  Dims dims_;
  std::vector<std::uint8_t> data_;
};

enum class DType { Float32, Int16, Uint8 };

struct VolumeHeader {
  Dims dims;
  Spacing spacing{1.0, 1.0, 1.0};
  DType dtype = DType::Float32;
  double scale = 1.0;   // intensity = raw * scale + offset
  double offset = 0.0;
};

enum class Axis { Axial, Coronal, Sagittal };

struct SliceImage {
  int width = 0, height = 0;
  Axis axis = Axis::Axial;
  int slice_index = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width*height
};

// Mean over all voxels, or over region voxels when given; 64-bit accumulation.
double mean_intensity(const Volume& v,
                      const BinaryMask* region = nullptr);

// Linear window [lo,hi] -> [0,255], clamped, round-half-to-even.
SliceImage render_slice(const Volume& v, Axis axis, int index,
                        double lo, double hi);

void require_same_dims(const Dims& a, const Dims& b, const std::string& what);

}  // namespace tusim
