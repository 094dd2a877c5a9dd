#include "tusim/volume.hpp"

#include <cmath>
#include <cstdio>

#include "tusim/errors.hpp"

namespace tusim {

namespace {

void check_geometry(const Dims& d, const Spacing& s) {
  if (d.nx < 1 || d.ny < 1 || d.nz < 1)
    throw invariant_error("volume dims must all be >= 1, got (" +
                          std::to_string(d.nx) + "," + std::to_string(d.ny) +
                          "," + std::to_string(d.nz) + ")");
  for (double sp : s)
    if (!(sp > 0.0))
      throw invariant_error("voxel spacing must be > 0, got " +
                            std::to_string(sp));
}

}  // namespace

Volume::Volume(Dims dims, Spacing spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_geometry(dims_, spacing_);
  if (data_.size() != dims_.count())
    throw invariant_error("volume data length " + std::to_string(data_.size()) +
                          " does not match dims product " +
                          std::to_string(dims_.count()));
  validate();
}

Volume::Volume(Dims dims, Spacing spacing, float fill)
    : dims_(dims), spacing_(spacing) {
  check_geometry(dims_, spacing_);
  if (!std::isfinite(fill)) throw invariant_error("non-finite fill value");
  data_.assign(dims_.count(), fill);
}

void Volume::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw invariant_error("non-finite intensity at linear index " +
                            std::to_string(i));
}

BinaryMask::BinaryMask(Dims dims, std::vector<std::uint8_t> data)
    : dims_(dims), data_(std::move(data)) {
  if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1)
    throw invariant_error("mask dims must all be >= 1");
  if (data_.size() != dims_.count())
    throw invariant_error("mask data length does not match dims product");
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (data_[i] > 1)
      throw invariant_error("mask value not in {0,1} at linear index " +
                            std::to_string(i));
}

BinaryMask::BinaryMask(Dims dims, std::uint8_t fill) : dims_(dims) {
  if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1)
    throw invariant_error("mask dims must all be >= 1");
  if (fill > 1) throw invariant_error("mask fill value not in {0,1}");
  data_.assign(dims_.count(), fill);
}

std::size_t BinaryMask::count_set() const {
  std::size_t n = 0;
  for (std::uint8_t v : data_) n += v;
  return n;
}

void require_same_dims(const Dims& a, const Dims& b, const std::string& what) {
  if (!(a == b))
    throw invariant_error(what + ": dims mismatch (" + std::to_string(a.nx) +
                          "," + std::to_string(a.ny) + "," +
                          std::to_string(a.nz) + ") vs (" +
                          std::to_string(b.nx) + "," + std::to_string(b.ny) +
                          "," + std::to_string(b.nz) + ")");
}

double mean_intensity(const Volume& v, const BinaryMask* region) {
  const auto& data = v.data();
  if (!region) {
    double sum = 0.0;
    for (float x : data) sum += x;
    return sum / static_cast<double>(data.size());
  }
  require_same_dims(v.dims(), region->dims(), "mean_intensity");
  double sum = 0.0;
  std::size_t n = 0;
  const auto& m = region->data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (m[i]) {
      sum += data[i];
      ++n;
    }
  }
  if (n == 0) throw invariant_error("mean_intensity: empty region");
  return sum / static_cast<double>(n);
}

SliceImage render_slice(const Volume& v, Axis axis, int index,
                        double lo, double hi) {
  if (!(lo < hi))
    throw invariant_error("render_slice: window lo must be < hi");
  const Dims& d = v.dims();
  int limit = axis == Axis::Axial ? d.nz : axis == Axis::Coronal ? d.ny : d.nx;
  if (index < 0 || index >= limit)
    throw invariant_error("render_slice: slice index " + std::to_string(index) +
                          " out of range [0," + std::to_string(limit) + ")");

  SliceImage img;
  img.axis = axis;
  img.slice_index = index;
  switch (axis) {
    case Axis::Axial:
      img.width = d.nx;
      img.height = d.ny;
      break;
    case Axis::Coronal:
      img.width = d.nx;
      img.height = d.nz;
      break;
    case Axis::Sagittal:
      img.width = d.ny;
      img.height = d.nz;
      break;
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);

  auto sample = [&](int col, int row) -> float {
    switch (axis) {
      case Axis::Axial:
        return v.at(col, row, index);
      case Axis::Coronal:
        return v.at(col, index, row);
      default:
        return v.at(index, col, row);
    }
  };

  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      double t = (static_cast<double>(sample(col, row)) - lo) / (hi - lo);
      double p = t * 255.0;
      if (p < 0.0) p = 0.0;
      if (p > 255.0) p = 255.0;
      // nearbyint honors the default round-to-nearest-even mode
      img.pixels[static_cast<std::size_t>(row) * img.width + col] =
          static_cast<std::uint8_t>(std::nearbyint(p));
    }
  }
  return img;
}

}  // namespace tusim
