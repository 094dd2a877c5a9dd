#pragma once

#include "tusim/mesh.hpp"
#include "tusim/rng.hpp"
#include "tusim/volume.hpp"

namespace tusim {

// Voxel centers live at index * spacing (mm). A voxel is set iff its center
// lies inside the star-shaped mesh: distance from the mesh center <= the
// surface radius along that direction, found by ray-triangle intersection.
// Voxels outside the grid are simply absent (the grid clips the mesh).
BinaryMask voxelize(const TriMesh& mesh, Dims dims, const Spacing& spacing);

// Uniform draw over the set voxels of the ROI.
struct VoxelCoord {
  int x = 0, y = 0, z = 0;
};
VoxelCoord sample_center(const BinaryMask& roi, Rng& rng);

}  // namespace tusim
