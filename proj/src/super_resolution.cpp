#include "tubalsr/super_resolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tubalsr/tensor_ops.hpp"

namespace tubalsr {

using Eigen::Index;

PatchGrid make_patch_grid(Index rows, Index cols, Index patch_rows, Index patch_cols, Index stride_rows,
                          Index stride_cols) {
  if (patch_rows < 1 || patch_cols < 1 || stride_rows < 1 || stride_cols < 1)
    throw std::invalid_argument("make_patch_grid: patch and stride must be positive");
  if (patch_rows > rows || patch_cols > cols)
    throw std::invalid_argument("make_patch_grid: patch larger than the map");

  auto axis_positions = [](Index n, Index p, Index s) {
    std::vector<Index> pos;
    for (Index x = 0;; x += s) {
      if (x + p >= n) {
        pos.push_back(n - p);  // clamp the last patch so coverage is complete
        break;
      }
      pos.push_back(x);
    }
    return pos;
  };

  PatchGrid g;
  g.rows = rows;
  g.cols = cols;
  g.patch_rows = patch_rows;
  g.patch_cols = patch_cols;
  for (Index i : axis_positions(rows, patch_rows, stride_rows))
    for (Index j : axis_positions(cols, patch_cols, stride_cols)) g.positions.emplace_back(i, j);
  return g;
}

Tensor3d extract_patches(const Tensor3d& t, const PatchGrid& grid) {
  if (t.n1() != grid.rows || t.n2() != grid.cols)
    throw std::invalid_argument("extract_patches: grid built for different dims");
  const Index dim = grid.patch_rows * grid.patch_cols;
  Tensor3d out(dim, static_cast<Index>(grid.positions.size()), t.n3());
  for (std::size_t p = 0; p < grid.positions.size(); ++p) {
    const auto [pi, pj] = grid.positions[p];
    Index row = 0;
    for (Index i = 0; i < grid.patch_rows; ++i)
      for (Index j = 0; j < grid.patch_cols; ++j, ++row)
        out.tube(row, static_cast<Index>(p)) = t.tube(pi + i, pj + j);
  }
  return out;
}

Tensor3d assemble_patches(const Tensor3d& samples, const PatchGrid& grid, Index depth) {
  if (samples.n1() != grid.patch_rows * grid.patch_cols)
    throw std::invalid_argument("assemble_patches: sample dim does not match patch size");
  if (samples.n2() != static_cast<Index>(grid.positions.size()))
    throw std::invalid_argument("assemble_patches: sample count does not match grid");
  if (samples.n3() != depth) throw std::invalid_argument("assemble_patches: depth mismatch");

  Tensor3d acc(grid.rows, grid.cols, depth);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  for (std::size_t p = 0; p < grid.positions.size(); ++p) {
    const auto [pi, pj] = grid.positions[p];
    Index row = 0;
    for (Index i = 0; i < grid.patch_rows; ++i)
      for (Index j = 0; j < grid.patch_cols; ++j, ++row) {
        acc.tube(pi + i, pj + j) += samples.tube(row, static_cast<Index>(p));
        counts(pi + i, pj + j) += 1.0;
      }
  }
  for (Index i = 0; i < grid.rows; ++i)
    for (Index j = 0; j < grid.cols; ++j) {
      if (counts(i, j) == 0.0) throw std::logic_error("assemble_patches: uncovered cell");
      acc.tube(i, j) /= counts(i, j);
    }
  return acc;
}

RadioMap downsample(const RadioMap& map, int s) {
  if (s < 1) throw std::invalid_argument("downsample: s must be >= 1");
  if (map.rows() % s != 0 || map.cols() % s != 0)
    throw std::invalid_argument("downsample: dims not divisible by s");
  RadioMap out;
  out.rss = Tensor3d(map.rows() / s, map.cols() / s, map.ap_count());
  out.origin_x = map.origin_x;
  out.origin_y = map.origin_y;
  out.spacing_x = map.spacing_x * s;
  out.spacing_y = map.spacing_y * s;
  const double inv = 1.0 / static_cast<double>(s) / static_cast<double>(s);
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) {
      auto tube = out.rss.tube(i, j);
      for (int bi = 0; bi < s; ++bi)
        for (int bj = 0; bj < s; ++bj) tube += map.rss.tube(i * s + bi, j * s + bj);
      tube *= inv;
    }
  return out;
}

RadioMap upsample_interp(const RadioMap& map, int s) {
  if (s < 1) throw std::invalid_argument("upsample_interp: s must be >= 1");
  RadioMap out;
  out.rss = Tensor3d(map.rows() * s, map.cols() * s, map.ap_count());
  out.origin_x = map.origin_x;
  out.origin_y = map.origin_y;
  out.spacing_x = map.spacing_x / s;
  out.spacing_y = map.spacing_y / s;

  for (Index i = 0; i < out.rows(); ++i) {
    const double u = std::min(static_cast<double>(i) / s, static_cast<double>(map.rows() - 1));
    const Index i0 = std::min(static_cast<Index>(u), map.rows() - 1);
    const Index i1 = std::min(i0 + 1, map.rows() - 1);
    const double fu = u - static_cast<double>(i0);
    for (Index j = 0; j < out.cols(); ++j) {
      const double v = std::min(static_cast<double>(j) / s, static_cast<double>(map.cols() - 1));
      const Index j0 = std::min(static_cast<Index>(v), map.cols() - 1);
      const Index j1 = std::min(j0 + 1, map.cols() - 1);
      const double fv = v - static_cast<double>(j0);
      out.rss.tube(i, j) = (1 - fu) * (1 - fv) * map.rss.tube(i0, j0) + (1 - fu) * fv * map.rss.tube(i0, j1) +
                           fu * (1 - fv) * map.rss.tube(i1, j0) + fu * fv * map.rss.tube(i1, j1);
    }
  }
  return out;
}

namespace {

PatchGrid fine_grid_of(const PatchGrid& coarse, int s) {
  PatchGrid g;
  g.rows = coarse.rows * s;
  g.cols = coarse.cols * s;
  g.patch_rows = coarse.patch_rows * s;
  g.patch_cols = coarse.patch_cols * s;
  for (const auto& [i, j] : coarse.positions) g.positions.emplace_back(i * s, j * s);
  return g;
}

Tensor3d normalize01(const Tensor3d& t, double lo, double hi) {
  Tensor3d out = t;
  out.flat() = (out.flat().array() - lo) / (hi - lo);
  return out;
}

}  // namespace

PatchPairSet extract_patch_pairs(const RadioMap& fine, int s, Index patch_rows, Index patch_cols,
                                 Index stride_rows, Index stride_cols) {
  if (s < 1) throw std::invalid_argument("extract_patch_pairs: s must be >= 1");
  const RadioMap coarse = downsample(fine, s);
  PatchPairSet set;
  set.coarse_grid = make_patch_grid(coarse.rows(), coarse.cols(), patch_rows, patch_cols, stride_rows, stride_cols);
  set.coarse = extract_patches(coarse.rss, set.coarse_grid);
  set.fine = extract_patches(fine.rss, fine_grid_of(set.coarse_grid, s));
  return set;
}

JointTrainResult train_sr_pair(const RadioMap& fine, const SrTrainOptions& opt,
                               const std::vector<Index>& patch_subset) {
  fine.validate();
  PatchPairSet set = extract_patch_pairs(fine, opt.scale, opt.patch_rows, opt.patch_cols, opt.stride_rows,
                                         opt.stride_cols);

  double lo = fine.rss.flat().minCoeff();
  double hi = fine.rss.flat().maxCoeff();
  if (hi - lo < 1e-9) hi = lo + 1.0;  // constant map; any range works

  Tensor3d fine_n = normalize01(set.fine, lo, hi);
  Tensor3d coarse_n = normalize01(set.coarse, lo, hi);

  if (!patch_subset.empty()) {
    auto select = [&](const Tensor3d& t) {
      Tensor3d out(t.n1(), static_cast<Index>(patch_subset.size()), t.n3());
      for (std::size_t c = 0; c < patch_subset.size(); ++c) {
        if (patch_subset[c] < 0 || patch_subset[c] >= t.n2())
          throw std::invalid_argument("train_sr_pair: patch index out of range");
        for (Index i = 0; i < t.n1(); ++i) out.tube(i, static_cast<Index>(c)) = t.tube(i, patch_subset[c]);
      }
      return out;
    };
    fine_n = select(fine_n);
    coarse_n = select(coarse_n);
  }

  JointTrainResult res = train_joint(fine_n, coarse_n, opt.dict);
  res.pair.scale = opt.scale;
  res.pair.patch_rows = opt.patch_rows;
  res.pair.patch_cols = opt.patch_cols;
  res.pair.stride_rows = opt.stride_rows;
  res.pair.stride_cols = opt.stride_cols;
  res.pair.norm_lo = lo;
  res.pair.norm_hi = hi;
  return res;
}

RadioMap super_resolve(const RadioMap& coarse, const DictionaryPair& pair, const IstaConfig& cfg, int s,
                       const PatchTransform* refine) {
  coarse.validate();
  if (s != pair.scale) throw std::invalid_argument("super_resolve: s does not match the trained pair");
  if (pair.coarse.atoms.n1() != pair.patch_rows * pair.patch_cols)
    throw std::invalid_argument("super_resolve: coarse dictionary does not match its patch size");
  if (pair.fine.atoms.n1() != pair.coarse.atoms.n1() * s * s)
    throw std::invalid_argument("super_resolve: fine dictionary does not match the scale");
  if (coarse.ap_count() != pair.coarse.atoms.n3())
    throw std::invalid_argument("super_resolve: AP depth does not match the trained pair");

  const PatchGrid grid = make_patch_grid(coarse.rows(), coarse.cols(), pair.patch_rows, pair.patch_cols,
                                         pair.stride_rows, pair.stride_cols);
  const Tensor3d samples = normalize01(extract_patches(coarse.rss, grid), pair.norm_lo, pair.norm_hi);

  Tensor3d code;
  if (refine && !refine->thresholds.empty())
    code = lista_t(pair.coarse.atoms, samples, refine->thresholds).code;
  else
    code = ista_t(pair.coarse.atoms, samples, cfg).code.code;

  Tensor3d fine_samples = tprod(pair.fine.atoms, code);
  if (refine && refine->output_map.size() > 0) {
    if (refine->output_map.rows() != fine_samples.n1() || refine->output_map.cols() != fine_samples.n1())
      throw std::invalid_argument("super_resolve: output map does not match the fine patch dim");
    for (Index k = 0; k < fine_samples.n3(); ++k)
      fine_samples.set_slice(k, refine->output_map * fine_samples.slice(k));
  }

  RadioMap out;
  out.rss = assemble_patches(fine_samples, fine_grid_of(grid, s), coarse.ap_count());
  out.rss.flat() = (out.rss.flat().array() * (pair.norm_hi - pair.norm_lo) + pair.norm_lo)
                       .cwiseMax(kRssFloorDbm)
                       .cwiseMin(kRssCeilDbm);
  if (!out.rss.all_finite()) throw std::runtime_error("super_resolve: non-finite output");
  out.origin_x = coarse.origin_x;
  out.origin_y = coarse.origin_y;
  out.spacing_x = coarse.spacing_x / s;
  out.spacing_y = coarse.spacing_y / s;
  return out;
}

double psnr(const RadioMap& reference, const RadioMap& estimate) {
  if (!reference.rss.same_dims(estimate.rss)) throw std::invalid_argument("psnr: dimension mismatch");
  const double range = reference.rss.flat().maxCoeff() - reference.rss.flat().minCoeff();
  const double rmse =
      fro_norm(reference.rss - estimate.rss) / std::sqrt(static_cast<double>(reference.rss.size()));
  if (rmse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(range / rmse);
}

}  // namespace tubalsr
