#include "tusim/io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "tusim/errors.hpp"

namespace tusim {

namespace {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::string& path, const void* data,
                      std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw io_error("write failed: " + path);
}

void check_payload_finite(const std::vector<float>& data,
                          const std::string& path) {
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw io_error("non-finite value at linear index " + std::to_string(i) +
                     " in " + path);
}

// NIfTI-1 header, 348 bytes. Only the fields this reader/writer touches are
// named individually; the rest live in byte fill.
#pragma pack(push, 1)
struct NiftiHeader {
  std::int32_t sizeof_hdr;
  char unused1[36];
  std::int16_t dim[8];
  char unused2[14];
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  char unused3[136];
  float quatern[6];
  float srow[12];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

std::vector<unsigned char> gz_read_all(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw io_error("cannot open file: " + path);
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0)
    out.insert(out.end(), buf, buf + n);
  if (n < 0) {
    gzclose(f);
    throw io_error("decompression failed: " + path);
  }
  gzclose(f);
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Volume read_raw(const std::string& path, const std::string& sidecar) {
  nlohmann::json meta;
  {
    std::ifstream in(sidecar);
    if (!in) throw io_error("cannot open sidecar: " + sidecar);
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw io_error("malformed sidecar " + sidecar + ": " + e.what());
    }
  }
  auto require_field = [&](const char* key) {
    if (!meta.contains(key))
      throw io_error("sidecar " + sidecar + " missing field '" + key + "'");
  };
  require_field("dims");
  require_field("spacing_mm");
  require_field("dtype");
  if (meta["dtype"].get<std::string>() != "float32")
    throw io_error("sidecar " + sidecar + ": field 'dtype' must be \"float32\"");
  if (!meta["dims"].is_array() || meta["dims"].size() != 3)
    throw io_error("sidecar " + sidecar + ": field 'dims' must be 3 ints");
  if (!meta["spacing_mm"].is_array() || meta["spacing_mm"].size() != 3)
    throw io_error("sidecar " + sidecar +
                   ": field 'spacing_mm' must be 3 numbers");
  Dims dims{meta["dims"][0].get<int>(), meta["dims"][1].get<int>(),
            meta["dims"][2].get<int>()};
  Spacing spacing{meta["spacing_mm"][0].get<double>(),
                  meta["spacing_mm"][1].get<double>(),
                  meta["spacing_mm"][2].get<double>()};

  auto bytes = read_file_bytes(path);
  std::size_t expect = dims.count() * 4;
  if (bytes.size() != expect)
    throw io_error("payload size mismatch for " + path + ": got " +
                   std::to_string(bytes.size()) + " bytes, sidecar dims need " +
                   std::to_string(expect));
  std::vector<float> data(dims.count());
  std::memcpy(data.data(), bytes.data(), expect);
  check_payload_finite(data, path);
  return Volume(dims, spacing, std::move(data));
}

void write_raw(const Volume& v, const std::string& path,
               const std::string& sidecar) {
  nlohmann::json meta;
  meta["dims"] = {v.dims().nx, v.dims().ny, v.dims().nz};
  meta["spacing_mm"] = {v.spacing()[0], v.spacing()[1], v.spacing()[2]};
  meta["dtype"] = "float32";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw io_error("cannot open sidecar for writing: " + sidecar);
  out << meta.dump(2) << "\n";
  if (!out) throw io_error("write failed: " + sidecar);
  write_file_bytes(path, v.data().data(), v.data().size() * 4);
}

Volume read_nifti(const std::string& path) {
  auto bytes = gz_read_all(path);
  if (bytes.size() < sizeof(NiftiHeader))
    throw io_error("truncated NIfTI header in " + path);
  NiftiHeader hdr;
  std::memcpy(&hdr, bytes.data(), sizeof(hdr));

  if (hdr.sizeof_hdr != 348) {
    std::int32_t swapped;
    unsigned char* p = reinterpret_cast<unsigned char*>(&hdr.sizeof_hdr);
    unsigned char q[4] = {p[3], p[2], p[1], p[0]};
    std::memcpy(&swapped, q, 4);
    if (swapped == 348)
      throw io_error("big-endian NIfTI not supported: " + path);
    throw io_error("not a NIfTI-1 file (sizeof_hdr != 348): " + path);
  }
  if (std::strncmp(hdr.magic, "n+1", 3) != 0)
    throw io_error("unsupported NIfTI magic \"" +
                   std::string(hdr.magic, hdr.magic + 3) +
                   "\" (single-file n+1 required): " + path);
  if (hdr.dim[0] != 3)
    throw io_error("only 3D NIfTI supported, dim[0]=" +
                   std::to_string(hdr.dim[0]) + ": " + path);
  Dims dims{hdr.dim[1], hdr.dim[2], hdr.dim[3]};
  Spacing spacing{hdr.pixdim[1], hdr.pixdim[2], hdr.pixdim[3]};

  std::size_t offset = static_cast<std::size_t>(hdr.vox_offset);
  std::size_t n = dims.count();
  int bytes_per = hdr.datatype == kDtFloat32 ? 4
                  : hdr.datatype == kDtInt16 ? 2
                  : hdr.datatype == kDtUint8 ? 1
                                             : 0;
  if (bytes_per == 0)
    throw io_error("unsupported NIfTI datatype " +
                   std::to_string(hdr.datatype) +
                   " (float32/int16/uint8 only): " + path);
  if (bytes.size() < offset + n * bytes_per)
    throw io_error("truncated NIfTI payload in " + path);

  double slope = hdr.scl_slope == 0.0f ? 1.0 : hdr.scl_slope;
  double inter = hdr.scl_inter;
  const unsigned char* payload = bytes.data() + offset;
  std::vector<float> data(n);
  if (hdr.datatype == kDtFloat32) {
    std::memcpy(data.data(), payload, n * 4);
    if (slope != 1.0 || inter != 0.0)
      for (auto& x : data) x = static_cast<float>(x * slope + inter);
  } else if (hdr.datatype == kDtInt16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t raw;
      std::memcpy(&raw, payload + i * 2, 2);
      data[i] = static_cast<float>(raw * slope + inter);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      data[i] = static_cast<float>(payload[i] * slope + inter);
  }
  check_payload_finite(data, path);
  return Volume(dims, spacing, std::move(data));
}

void write_nifti(const Volume& v, const std::string& path) {
  NiftiHeader hdr;
  std::memset(&hdr, 0, sizeof(hdr));
  hdr.sizeof_hdr = 348;
  hdr.dim[0] = 3;
  hdr.dim[1] = static_cast<std::int16_t>(v.dims().nx);
  hdr.dim[2] = static_cast<std::int16_t>(v.dims().ny);
  hdr.dim[3] = static_cast<std::int16_t>(v.dims().nz);
  hdr.dim[4] = hdr.dim[5] = hdr.dim[6] = hdr.dim[7] = 1;
  hdr.datatype = kDtFloat32;
  hdr.bitpix = 32;
  hdr.pixdim[0] = 1.0f;
  hdr.pixdim[1] = static_cast<float>(v.spacing()[0]);
  hdr.pixdim[2] = static_cast<float>(v.spacing()[1]);
  hdr.pixdim[3] = static_cast<float>(v.spacing()[2]);
  hdr.vox_offset = 352.0f;
  hdr.scl_slope = 1.0f;
  hdr.scl_inter = 0.0f;
  std::memcpy(hdr.magic, "n+1\0", 4);

  std::vector<unsigned char> out(352 + v.data().size() * 4, 0);
  std::memcpy(out.data(), &hdr, sizeof(hdr));
  // bytes 348..351 stay zero: no header extensions
  std::memcpy(out.data() + 352, v.data().data(), v.data().size() * 4);

  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw io_error("cannot open file for writing: " + path);
    std::size_t written = 0;
    while (written < out.size()) {
      unsigned chunk = static_cast<unsigned>(
          std::min<std::size_t>(out.size() - written, 1u << 24));
      int n = gzwrite(f, out.data() + written, chunk);
      if (n <= 0) {
        gzclose(f);
        throw io_error("compressed write failed: " + path);
      }
      written += static_cast<std::size_t>(n);
    }
    gzclose(f);
  } else {
    write_file_bytes(path, out.data(), out.size());
  }
}

void write_pgm(const SliceImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw io_error("write failed: " + path);
}

SliceImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255)
    throw io_error("not a maxval-255 P5 PGM: " + path);
  in.get();  // single whitespace after maxval
  SliceImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw io_error("truncated PGM payload: " + path);
  return img;
}

Volume mask_to_volume(const BinaryMask& m, const Spacing& spacing) {
  std::vector<float> data(m.data().size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = m.data()[i] ? 1.0f : 0.0f;
  return Volume(m.dims(), spacing, std::move(data));
}

BinaryMask volume_to_mask(const Volume& v, float threshold) {
  std::vector<std::uint8_t> data(v.data().size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = v.data()[i] >= threshold ? 1 : 0;
  return BinaryMask(v.dims(), std::move(data));
}

}  // namespace tusim
