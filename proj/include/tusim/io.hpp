#pragma once

#include <string>

#include "tusim/volume.hpp"

namespace tusim {

// Raw format: little-endian float32 payload (x-fastest) plus a JSON sidecar
// { "dims": [nx,ny,nz], "spacing_mm": [sx,sy,sz], "dtype": "float32" }.
Volume read_raw(const std::string& path, const std::string& sidecar);
void write_raw(const Volume& v, const std::string& path,
               const std::string& sidecar);

// NIfTI-1 single-file .nii / .nii.gz, 3D only, dtype float32/int16/uint8.
// Integer intensities are mapped through scl_slope/scl_inter (slope 0 -> 1).
// The writer always emits float32, magic "n+1", vox_offset 352.
Volume read_nifti(const std::string& path);
void write_nifti(const Volume& v, const std::string& path);

// Binary PGM (P5, maxval 255).
void write_pgm(const SliceImage& img, const std::string& path);
SliceImage read_pgm(const std::string& path);

// Masks travel as 0/1 float32 volumes.
Volume mask_to_volume(const BinaryMask& m, const Spacing& spacing);
BinaryMask volume_to_mask(const Volume& v, float threshold = 0.5f);

}  // namespace tusim
