#pragma once

#include <filesystem>
#include <utility>

#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// RSS fingerprint map: tensor of dBm readings over a physical grid of
/// reference points (rows x cols) by access point (depth). Cell (i, j) is
/// centered at origin + (i + 1/2, j + 1/2) * spacing.
struct RadioMap {
  Tensor3d rss;  // rows x cols x ap_count, dBm in [-110, 0]
  double origin_x = 0.0, origin_y = 0.0;
  double spacing_x = 1.0, spacing_y = 1.0;

  Eigen::Index rows() const { return rss.n1(); }
  Eigen::Index cols() const { return rss.n2(); }
  Eigen::Index ap_count() const { return rss.n3(); }

  std::pair<double, double> cell_center(Eigen::Index i, Eigen::Index j) const {
    return {origin_x + (static_cast<double>(i) + 0.5) * spacing_x,
            origin_y + (static_cast<double>(j) + 0.5) * spacing_y};
  }

  /// Throws unless spacing is positive, values are finite and within the dBm
  /// range [-110, 0].
  void validate() const;
};

constexpr double kRssFloorDbm = -110.0;
constexpr double kRssCeilDbm = 0.0;

/// Writes base.tns3 plus base.json (grid geometry).
void save_radiomap(const std::filesystem::path& dir, const std::string& base, const RadioMap& map);
RadioMap load_radiomap(const std::filesystem::path& dir, const std::string& base);

}  // namespace tubalsr
