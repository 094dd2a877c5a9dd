#include "tusim/texture.hpp"

#include <algorithm>
#include <cmath>

#include "tusim/errors.hpp"

namespace tusim {

void TextureParams::validate() const {
  if (linear_enabled && (!(ratio_lo > 0.0) || ratio_lo > ratio_hi))
    throw invariant_error("texture ratio range must satisfy 0 < lo <= hi");
  if (blur_enabled &&
      (blur_sigma_lo_mm < 0.0 || blur_sigma_lo_mm > blur_sigma_hi_mm))
    throw invariant_error("texture blur sigma range must be ordered and >= 0");
  if (elastic_enabled) {
    if (elastic_grid_spacing < 4)
      throw invariant_error("elastic control-grid spacing must be >= 4 voxels");
    if (elastic_max_disp < 0.0)
      throw invariant_error("elastic max displacement must be >= 0");
    if (elastic_max_disp >= elastic_grid_spacing)
      throw invariant_error(
          "elastic max displacement must stay below the control-grid spacing");
    if (!(elastic_smooth_sigma > 0.0))
      throw invariant_error("elastic smoothing sigma must be > 0");
  }
}

double DisplacementField::max_magnitude() const {
  double best = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    double m2 = static_cast<double>(dx[i]) * dx[i] +
                static_cast<double>(dy[i]) * dy[i] +
                static_cast<double>(dz[i]) * dz[i];
    best = std::max(best, m2);
  }
  return std::sqrt(best);
}

Volume linear_transform(const Volume& x_src, const Volume& x_ref, double r,
                        const BinaryMask* region) {
  if (!(r > 0.0)) throw invariant_error("linear_transform: r must be > 0");
  double mean_src = mean_intensity(x_src, region);
  if (mean_src == 0.0)
    throw invariant_error("linear_transform: source mean is zero");
  double mean_ref = mean_intensity(x_ref, region);
  double gain = r * mean_ref / mean_src;
  std::vector<float> out(x_src.data().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(gain * x_src.data()[i]);
  return Volume(x_src.dims(), x_src.spacing(), std::move(out));
}

namespace {

std::vector<double> gaussian_kernel(double sigma_vox) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma_vox));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i / sigma_vox) * (i / sigma_vox));
    k[i + radius] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// One clamp-to-edge pass along the given axis (0=x, 1=y, 2=z).
void blur_axis(std::vector<double>& data, const Dims& d, int axis,
               const std::vector<double>& kernel) {
  int radius = static_cast<int>(kernel.size() / 2);
  int n[3] = {d.nx, d.ny, d.nz};
  std::size_t stride[3] = {1, static_cast<std::size_t>(d.nx),
                           static_cast<std::size_t>(d.nx) * d.ny};
  int len = n[axis];
  std::size_t s = stride[axis];
  std::vector<double> line(len);

  int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
  for (int b = 0; b < n[o2]; ++b) {
    for (int a = 0; a < n[o1]; ++a) {
      std::size_t base = static_cast<std::size_t>(a) * stride[o1] +
                         static_cast<std::size_t>(b) * stride[o2];
      for (int i = 0; i < len; ++i) line[i] = data[base + i * s];
      for (int i = 0; i < len; ++i) {
        double acc = 0.0;
        for (int j = -radius; j <= radius; ++j) {
          int src = std::clamp(i + j, 0, len - 1);
          acc += kernel[j + radius] * line[src];
        }
        data[base + i * s] = acc;
      }
    }
  }
}

}  // namespace

Volume gaussian_blur(const Volume& x, double sigma_mm) {
  if (sigma_mm < 0.0) throw invariant_error("gaussian_blur: negative sigma");
  if (sigma_mm == 0.0) return x;

  std::vector<double> work(x.data().begin(), x.data().end());
  for (int axis = 0; axis < 3; ++axis) {
    double sigma_vox = sigma_mm / x.spacing()[axis];
    if (sigma_vox <= 0.0) continue;
    blur_axis(work, x.dims(), axis, gaussian_kernel(sigma_vox));
  }
  std::vector<float> out(work.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(work[i]);
  return Volume(x.dims(), x.spacing(), std::move(out));
}

namespace {

double trilinear(const std::vector<float>& data, const Dims& d, double fx,
                 double fy, double fz) {
  fx = std::clamp(fx, 0.0, static_cast<double>(d.nx - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(d.ny - 1));
  fz = std::clamp(fz, 0.0, static_cast<double>(d.nz - 1));
  int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy),
      z0 = static_cast<int>(fz);
  int x1 = std::min(x0 + 1, d.nx - 1), y1 = std::min(y0 + 1, d.ny - 1),
      z1 = std::min(z0 + 1, d.nz - 1);
  double tx = fx - x0, ty = fy - y0, tz = fz - z0;
  auto at = [&](int xx, int yy, int zz) -> double {
    return data[static_cast<std::size_t>(xx) +
                static_cast<std::size_t>(d.nx) *
                    (static_cast<std::size_t>(yy) +
                     static_cast<std::size_t>(d.ny) * zz)];
  };
  double c00 = at(x0, y0, z0) * (1 - tx) + at(x1, y0, z0) * tx;
  double c10 = at(x0, y1, z0) * (1 - tx) + at(x1, y1, z0) * tx;
  double c01 = at(x0, y0, z1) * (1 - tx) + at(x1, y0, z1) * tx;
  double c11 = at(x0, y1, z1) * (1 - tx) + at(x1, y1, z1) * tx;
  double c0 = c00 * (1 - ty) + c10 * ty;
  double c1 = c01 * (1 - ty) + c11 * ty;
  return c0 * (1 - tz) + c1 * tz;
}

}  // namespace

DisplacementField make_displacement(const TextureParams& params, Rng& rng,
                                    Dims dims) {
  params.validate();
  int g = params.elastic_grid_spacing;
  Dims coarse{dims.nx / g + 2, dims.ny / g + 2, dims.nz / g + 2};

  DisplacementField field;
  field.dims = dims;
  std::size_t n = dims.count();
  field.dx.assign(n, 0.0f);
  field.dy.assign(n, 0.0f);
  field.dz.assign(n, 0.0f);
  if (params.elastic_max_disp == 0.0) return field;

  std::array<std::vector<double>, 3> coarse_off;
  for (auto& c : coarse_off) {
    c.resize(coarse.count());
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);
  }
  // Smooth on the control grid (sigma converted to control-grid cells).
  double sigma_cells = params.elastic_smooth_sigma / g;
  if (sigma_cells > 0.0) {
    auto kernel = gaussian_kernel(std::max(sigma_cells, 0.3));
    for (auto& c : coarse_off)
      for (int axis = 0; axis < 3; ++axis) blur_axis(c, coarse, axis, kernel);
  }

  std::array<std::vector<float>, 3> coarse_f;
  for (int comp = 0; comp < 3; ++comp)
    coarse_f[comp].assign(coarse_off[comp].begin(), coarse_off[comp].end());

  std::vector<float*> out = {field.dx.data(), field.dy.data(), field.dz.data()};
  double max_mag = 0.0;
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        std::size_t idx = static_cast<std::size_t>(x) +
                          static_cast<std::size_t>(dims.nx) *
                              (static_cast<std::size_t>(y) +
                               static_cast<std::size_t>(dims.ny) * z);
        double m2 = 0.0;
        for (int comp = 0; comp < 3; ++comp) {
          double v = trilinear(coarse_f[comp], coarse,
                               static_cast<double>(x) / g,
                               static_cast<double>(y) / g,
                               static_cast<double>(z) / g);
          out[comp][idx] = static_cast<float>(v);
          m2 += v * v;
        }
        max_mag = std::max(max_mag, m2);
      }
    }
  }
  max_mag = std::sqrt(max_mag);
  if (max_mag > 0.0) {
    double scale = params.elastic_max_disp / max_mag;
    for (auto* comp : out)
      for (std::size_t i = 0; i < n; ++i)
        comp[i] = static_cast<float>(comp[i] * scale);
  }
  return field;
}

Volume elastic_deform(const Volume& x, const DisplacementField& field) {
  require_same_dims(x.dims(), field.dims, "elastic_deform");
  const Dims& d = x.dims();
  std::vector<float> out(x.data().size());
  std::size_t idx = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x0 = 0; x0 < d.nx; ++x0, ++idx)
        out[idx] = static_cast<float>(
            trilinear(x.data(), d, x0 + static_cast<double>(field.dx[idx]),
                      y + static_cast<double>(field.dy[idx]),
                      z + static_cast<double>(field.dz[idx])));
  return Volume(d, x.spacing(), std::move(out));
}

std::pair<Volume, TextureDraw> transform_pipeline(const Volume& x_src,
                                                  const Volume& x_ref,
                                                  const TextureParams& params,
                                                  Rng& rng,
                                                  const BinaryMask* region) {
  params.validate();
  TextureDraw draw;
  Volume current = x_src;

  if (params.elastic_enabled && params.elastic_max_disp > 0.0) {
    draw.elastic_applied = true;
    draw.elastic_seed = rng.next_u64();
    Rng field_rng(draw.elastic_seed);
    auto field = make_displacement(params, field_rng, current.dims());
    current = elastic_deform(current, field);
  }
  if (params.blur_enabled) {
    draw.blur_applied = true;
    draw.sigma_mm = rng.uniform(params.blur_sigma_lo_mm, params.blur_sigma_hi_mm);
    current = gaussian_blur(current, draw.sigma_mm);
  }
  if (params.linear_enabled) {
    draw.linear_applied = true;
    draw.r = rng.uniform(params.ratio_lo, params.ratio_hi);
    current = linear_transform(current, x_ref, draw.r, region);
  }
  return {std::move(current), draw};
}

Volume tumor_texture(const BinaryMask& m, const Volume& tex) {
  require_same_dims(m.dims(), tex.dims(), "tumor_texture");
  std::vector<float> out(tex.data().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = m.data()[i] ? tex.data()[i] : 0.0f;
  return Volume(tex.dims(), tex.spacing(), std::move(out));
}

}  // namespace tusim
