#pragma once

#include <cstdint>
#include <vector>

#include "tubalsr/radio_map.hpp"
#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// Log-distance path-loss model with spatially correlated log-normal
/// shadowing. Stands in for trace data: the generated maps carry the smooth
/// distance structure plus correlated texture that gives them an approximate
/// low-tubal-rank profile.
struct PathLossParams {
  double tx_power_dbm = -30.0;  // received power at the reference distance
  double path_loss_exponent = 2.7;
  double reference_distance_m = 1.0;
  double shadow_sigma_db = 4.0;
  double shadow_corr_m = 3.0;  // correlation length of the shadowing field
  // Fraction of shadowing variance shared by all APs (obstacles attenuate
  // every link crossing them); the rest is per-AP.
  double shadow_ap_corr = 0.5;
  int ap_count = 14;  // used when ap_positions is empty
  std::vector<std::pair<double, double>> ap_positions;  // meters; empty = seeded uniform placement
  std::uint64_t seed = 0;
};

/// Exact low-tubal-rank tensor: t-product of two seeded Gaussian factors.
/// r = 0 gives the zero tensor.
Tensor3d gen_low_tubal_rank(Eigen::Index n1, Eigen::Index n2, Eigen::Index n3, Eigen::Index r,
                            std::uint64_t seed);

/// Radio map over a len1_m x len2_m region at square grid spacing. RSS is
/// clamped to [-110, 0] dBm.
RadioMap gen_radiomap(double len1_m, double len2_m, double spacing_m, const PathLossParams& params);

}  // namespace tubalsr
