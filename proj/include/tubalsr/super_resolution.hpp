#pragma once

#include <Eigen/Core>

#include <vector>

#include "tubalsr/dict_learning.hpp"
#include "tubalsr/radio_map.hpp"
#include "tubalsr/sparse_coding.hpp"

namespace tubalsr {

/// Patch tiling of a rows x cols grid: top-left corners step by the stride and
/// the last position per axis is clamped so every cell is covered.
struct PatchGrid {
  Eigen::Index rows = 0, cols = 0;
  Eigen::Index patch_rows = 0, patch_cols = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> positions;
};

PatchGrid make_patch_grid(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_rows,
                          Eigen::Index patch_cols, Eigen::Index stride_rows, Eigen::Index stride_cols);

/// Vectorized patches: (patch_rows*patch_cols) x npatches x depth, full AP
/// depth per patch.
Tensor3d extract_patches(const Tensor3d& t, const PatchGrid& grid);

/// Inverse of extract_patches with per-cell averaging of overlapping patches.
Tensor3d assemble_patches(const Tensor3d& samples, const PatchGrid& grid, Eigen::Index depth);

/// s x s block mean per AP slice; grid spacing multiplies by s.
RadioMap downsample(const RadioMap& map, int s);

/// Per-AP-slice bilinear interpolation to s-times resolution. Fine sample i
/// reads the coarse field at coordinate i/s; coordinates past the last coarse
/// sample replicate the edge. The AP dimension is categorical and never
/// interpolated.
RadioMap upsample_interp(const RadioMap& map, int s);

/// Aligned (fine, coarse) patch samples extracted from a fine ground-truth map
/// and its s-times downsampling, in map units (dBm).
struct PatchPairSet {
  Tensor3d fine;    // (s*p1 * s*p2) x npatches x depth
  Tensor3d coarse;  // (p1*p2) x npatches x depth
  PatchGrid coarse_grid;
};

PatchPairSet extract_patch_pairs(const RadioMap& fine, int s, Eigen::Index patch_rows,
                                 Eigen::Index patch_cols, Eigen::Index stride_rows,
                                 Eigen::Index stride_cols);

struct SrTrainOptions {
  DictTrainConfig dict;
  int scale = 2;
  int patch_rows = 4, patch_cols = 4;
  int stride_rows = 2, stride_cols = 2;
};

/// Trains the coupled pair on patch pairs from `fine` (all patches, or only
/// the listed patch indices), normalizing by the fine map's dynamic range.
/// The returned pair carries the geometry and normalization used.
JointTrainResult train_sr_pair(const RadioMap& fine, const SrTrainOptions& opt,
                               const std::vector<Eigen::Index>& patch_subset = {});

/// Optional overrides for the generator's refined path: per-iteration coding
/// thresholds (unrolled solver) and a linear output map applied to every
/// frontal slice of each reconstructed fine patch.
struct PatchTransform {
  std::vector<double> thresholds;
  Eigen::MatrixXd output_map;  // (fine patch dim) square; empty = identity
};

/// Patchwise sparse-coding super-resolution: codes each coarse patch against
/// the coarse dictionary, reconstructs through the fine dictionary, assembles
/// with overlap averaging. Output spacing is the input's divided by s.
RadioMap super_resolve(const RadioMap& coarse, const DictionaryPair& pair, const IstaConfig& cfg, int s,
                       const PatchTransform* refine = nullptr);

/// 20*log10(range(reference) / rmse); +infinity for identical maps.
double psnr(const RadioMap& reference, const RadioMap& estimate);

}  // namespace tubalsr
