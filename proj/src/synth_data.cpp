#include "tubalsr/synth_data.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

#include "tubalsr/io.hpp"
#include "tubalsr/rng.hpp"
#include "tubalsr/tensor_ops.hpp"

namespace tubalsr {

void RadioMap::validate() const {
  if (!(spacing_x > 0) || !(spacing_y > 0)) throw std::invalid_argument("RadioMap: spacing must be positive");
  if (!rss.all_finite()) throw std::invalid_argument("RadioMap: non-finite RSS");
  for (Eigen::Index i = 0; i < rss.size(); ++i) {
    const double v = rss.data()[i];
    if (v < kRssFloorDbm - 1e-9 || v > kRssCeilDbm + 1e-9)
      throw std::invalid_argument("RadioMap: RSS outside [-110, 0] dBm");
  }
}

void save_radiomap(const std::filesystem::path& dir, const std::string& base, const RadioMap& map) {
  std::filesystem::create_directories(dir);
  write_tns3(dir / (base + ".tns3"), map.rss);
  nlohmann::json meta{{"origin", {map.origin_x, map.origin_y}},
                      {"spacing", {map.spacing_x, map.spacing_y}},
                      {"ap_count", map.ap_count()}};
  write_text_file(dir / (base + ".json"), meta.dump(2) + "\n");
}

RadioMap load_radiomap(const std::filesystem::path& dir, const std::string& base) {
  RadioMap map;
  map.rss = read_tns3(dir / (base + ".tns3"));
  const auto meta = nlohmann::json::parse(read_text_file(dir / (base + ".json")));
  map.origin_x = meta.at("origin")[0].get<double>();
  map.origin_y = meta.at("origin")[1].get<double>();
  map.spacing_x = meta.at("spacing")[0].get<double>();
  map.spacing_y = meta.at("spacing")[1].get<double>();
  if (meta.at("ap_count").get<Eigen::Index>() != map.ap_count())
    throw std::runtime_error("load_radiomap: sidecar ap_count does not match tensor");
  map.validate();
  return map;
}

Tensor3d gen_low_tubal_rank(Eigen::Index n1, Eigen::Index n2, Eigen::Index n3, Eigen::Index r,
                            std::uint64_t seed) {
  if (r < 0 || r > std::min(n1, n2)) throw std::invalid_argument("gen_low_tubal_rank: r out of range");
  if (r == 0) return Tensor3d(n1, n2, n3);
  Rng rng(seed);
  const Tensor3d g1 = rng.gaussian_tensor(n1, r, n3);
  const Tensor3d g2 = rng.gaussian_tensor(r, n2, n3);
  return tprod(g1, g2);
}

namespace {

// Separable Gaussian blur with a truncated, per-position-renormalized kernel.
Eigen::MatrixXd smooth_field(const Eigen::MatrixXd& field, double sigma_cells) {
  if (sigma_cells <= 0) return field;
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_cells)));
  Eigen::VectorXd kernel(2 * half + 1);
  for (int o = -half; o <= half; ++o)
    kernel[o + half] = std::exp(-0.5 * (o / sigma_cells) * (o / sigma_cells));

  auto blur_cols = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double acc = 0.0, wsum = 0.0;
        for (int o = -half; o <= half; ++o) {
          const Eigen::Index jj = j + o;
          if (jj < 0 || jj >= m.cols()) continue;
          acc += kernel[o + half] * m(i, jj);
          wsum += kernel[o + half];
        }
        out(i, j) = acc / wsum;
      }
    return out;
  };
  Eigen::MatrixXd tmp = blur_cols(field);
  return blur_cols(tmp.transpose()).transpose();
}

}  // namespace

RadioMap gen_radiomap(double len1_m, double len2_m, double spacing_m, const PathLossParams& params) {
  if (!(len1_m > 0) || !(len2_m > 0) || !(spacing_m > 0))
    throw std::invalid_argument("gen_radiomap: invalid geometry");
  if (!(params.path_loss_exponent > 0)) throw std::invalid_argument("gen_radiomap: exponent must be positive");
  if (params.shadow_sigma_db < 0) throw std::invalid_argument("gen_radiomap: negative shadowing sigma");

  const Eigen::Index rows = static_cast<Eigen::Index>(std::llround(len1_m / spacing_m));
  const Eigen::Index cols = static_cast<Eigen::Index>(std::llround(len2_m / spacing_m));
  if (rows < 1 || cols < 1) throw std::invalid_argument("gen_radiomap: region smaller than one cell");

  Rng rng(params.seed);
  std::vector<std::pair<double, double>> aps = params.ap_positions;
  if (aps.empty()) {
    if (params.ap_count < 1) throw std::invalid_argument("gen_radiomap: empty AP list");
    for (int a = 0; a < params.ap_count; ++a) aps.emplace_back(rng.uniform(0.0, len1_m), rng.uniform(0.0, len2_m));
  }

  if (params.shadow_ap_corr < 0 || params.shadow_ap_corr > 1)
    throw std::invalid_argument("gen_radiomap: shadow_ap_corr must be in [0, 1]");

  RadioMap map;
  map.rss = Tensor3d(rows, cols, static_cast<Eigen::Index>(aps.size()));
  map.spacing_x = spacing_m;
  map.spacing_y = spacing_m;

  auto unit_field = [&]() {
    Eigen::MatrixXd noise(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) noise(i, j) = rng.normal();
    Eigen::MatrixXd f = smooth_field(noise, params.shadow_corr_m / spacing_m);
    const double sd = std::sqrt(f.array().square().mean() - f.mean() * f.mean());
    if (sd > 0) f /= sd;
    return f;
  };

  const bool shadowing = params.shadow_sigma_db > 0;
  const Eigen::MatrixXd common = shadowing ? unit_field() : Eigen::MatrixXd::Zero(rows, cols);
  const double wc = std::sqrt(params.shadow_ap_corr);
  const double wp = std::sqrt(1.0 - params.shadow_ap_corr);

  for (std::size_t a = 0; a < aps.size(); ++a) {
    Eigen::MatrixXd shadow = Eigen::MatrixXd::Zero(rows, cols);
    if (shadowing) shadow = params.shadow_sigma_db * (wc * common + wp * unit_field());

    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        const auto [cx, cy] = map.cell_center(i, j);
        const double d = std::hypot(cx - aps[a].first, cy - aps[a].second);
        const double dd = std::max(d, params.reference_distance_m);
        double v = params.tx_power_dbm -
                   10.0 * params.path_loss_exponent * std::log10(dd / params.reference_distance_m) +
                   shadow(i, j);
        map.rss(i, j, static_cast<Eigen::Index>(a)) = std::clamp(v, kRssFloorDbm, kRssCeilDbm);
      }
  }
  map.validate();
  return map;
}

}  // namespace tubalsr
