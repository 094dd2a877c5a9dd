#pragma once

#include <optional>
#include <vector>

#include "tusim/voxelize.hpp"
#include "tusim/volume.hpp"

namespace tusim {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricReport {
  double dice = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> hd95_mm;  // undefined when either surface is empty
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

// Dice = 2TP / (FP + 2TP + FN); both-empty convention: 1.0.
double dice(const ConfusionCounts& c);
// TP/(TP+FN) and TN/(TN+FP); nullopt on a zero denominator.
std::optional<double> sensitivity(const ConfusionCounts& c);
std::optional<double> specificity(const ConfusionCounts& c);

// Set voxels with a 6-neighbor of value 0 or on the grid boundary.
std::vector<VoxelCoord> surface_voxels(const BinaryMask& m);

// 95th-percentile Hausdorff distance between surface voxel centers, mm.
// Nearest-rank percentile per directed distance set, then the max of the
// two directed values. nullopt when either surface is empty.
std::optional<double> hd95(const BinaryMask& pred, const BinaryMask& gt,
                           const Spacing& spacing);
// Same but for an arbitrary percentile in (0, 100]; 100 gives the full
// Hausdorff distance.
std::optional<double> hausdorff_percentile(const BinaryMask& pred,
                                           const BinaryMask& gt,
                                           const Spacing& spacing,
                                           double percentile);

MetricReport evaluate_masks(const BinaryMask& pred, const BinaryMask& gt,
                            const Spacing& spacing);

}  // namespace tusim
