#include "tubalsr/localization.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tubalsr/io.hpp"
#include "tubalsr/rng.hpp"

namespace tubalsr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Inputs are mapped from [-110, 0] dBm to [0, 1] before the network.
double scale_rss(double dbm) { return (dbm - kRssFloorDbm) / (kRssCeilDbm - kRssFloorDbm); }

VectorXd scaled_input(const VectorXd& rss) {
  return rss.unaryExpr([](double v) { return scale_rss(v); });
}

void check_fingerprint(const Fingerprint& fp, Index ap_count) {
  if (fp.rss.size() != ap_count) throw std::invalid_argument("fingerprint length does not match AP count");
  if (!fp.rss.allFinite()) throw std::invalid_argument("fingerprint has non-finite entries");
}

}  // namespace

LocationEstimate wknn_locate(const Fingerprint& fp, const RadioMap& map, int k) {
  const Index cells = map.rows() * map.cols();
  if (k < 1 || k > cells) throw std::invalid_argument("wknn_locate: k out of range");
  check_fingerprint(fp, map.ap_count());

  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(cells));
  for (Index i = 0; i < map.rows(); ++i)
    for (Index j = 0; j < map.cols(); ++j) {
      const Index cell = i * map.cols() + j;
      dist[static_cast<std::size_t>(cell)] = {(map.rss.tube(i, j) - fp.rss).norm(), cell};
    }
  std::stable_sort(dist.begin(), dist.end());

  LocationEstimate est;
  if (dist.front().first == 0.0) {  // exact match: return that reference point
    const Index cell = dist.front().second;
    est.cell_row = cell / map.cols();
    est.cell_col = cell % map.cols();
    std::tie(est.x, est.y) = map.cell_center(est.cell_row, est.cell_col);
    est.confidence = 1.0;
    return est;
  }

  double wsum = 0.0, x = 0.0, y = 0.0, wbest = 0.0;
  for (int q = 0; q < k; ++q) {
    const auto [d, cell] = dist[static_cast<std::size_t>(q)];
    const double w = 1.0 / (d + 1e-6);
    const auto [cx, cy] = map.cell_center(cell / map.cols(), cell % map.cols());
    x += w * cx;
    y += w * cy;
    wsum += w;
    if (q == 0) wbest = w;
  }
  est.x = x / wsum;
  est.y = y / wsum;
  est.confidence = wbest / wsum;

  // nearest grid cell to the continuous estimate
  auto clamp_idx = [](double v, Index n) {
    return std::min(std::max(static_cast<Index>(std::floor(v)), Index{0}), n - 1);
  };
  est.cell_row = clamp_idx((est.x - map.origin_x) / map.spacing_x, map.rows());
  est.cell_col = clamp_idx((est.y - map.origin_y) / map.spacing_y, map.cols());
  return est;
}

namespace {

struct ClassifierForward {
  MatrixXd z1, h1, z2;  // z2: cells x batch
  MatrixXd probs;
};

ClassifierForward classifier_batch_forward(const Classifier& c, const MatrixXd& x01) {
  ClassifierForward f;
  f.z1 = (c.w1 * x01).colwise() + c.b1;
  f.h1 = f.z1.cwiseMax(0.0);  // rectifier
  f.z2 = (c.w2 * f.h1).colwise() + c.b2;
  f.probs.resize(f.z2.rows(), f.z2.cols());
  for (Index j = 0; j < f.z2.cols(); ++j) {
    const VectorXd shifted = f.z2.col(j).array() - f.z2.col(j).maxCoeff();
    const VectorXd e = shifted.array().exp();
    f.probs.col(j) = e / e.sum();
  }
  return f;
}

MatrixXd scaled_batch(const MatrixXd& fingerprints) {
  return fingerprints.unaryExpr([](double v) { return scale_rss(v); });
}

}  // namespace

VectorXd classifier_probs(const Classifier& c, const Fingerprint& fp) {
  check_fingerprint(fp, c.w1.cols());
  return classifier_batch_forward(c, scaled_input(fp.rss)).probs.col(0);
}

LocationEstimate classify(const Classifier& c, const Fingerprint& fp) {
  const VectorXd p = classifier_probs(c, fp);
  Index best = 0;
  p.maxCoeff(&best);
  LocationEstimate est;
  est.cell_row = best / c.grid_cols;
  est.cell_col = best % c.grid_cols;
  est.x = c.origin_x + (static_cast<double>(est.cell_row) + 0.5) * c.spacing_x;
  est.y = c.origin_y + (static_cast<double>(est.cell_col) + 0.5) * c.spacing_y;
  est.confidence = p[best];
  return est;
}

double classifier_loss(const Classifier& c, const MatrixXd& fingerprints, const std::vector<Index>& labels) {
  if (fingerprints.cols() != static_cast<Index>(labels.size()) || labels.empty())
    throw std::invalid_argument("classifier_loss: label/batch mismatch");
  const ClassifierForward f = classifier_batch_forward(c, scaled_batch(fingerprints));
  double loss = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j)
    loss += -std::log(std::max(f.probs(labels[j], static_cast<Index>(j)), 1e-300));
  return loss / static_cast<double>(labels.size());
}

ClassifierGrads classifier_grad(const Classifier& c, const MatrixXd& fingerprints,
                                const std::vector<Index>& labels) {
  if (fingerprints.cols() != static_cast<Index>(labels.size()) || labels.empty())
    throw std::invalid_argument("classifier_grad: label/batch mismatch");
  const MatrixXd x01 = scaled_batch(fingerprints);
  const ClassifierForward f = classifier_batch_forward(c, x01);
  const double inv_b = 1.0 / static_cast<double>(labels.size());

  MatrixXd dz2 = f.probs;
  for (std::size_t j = 0; j < labels.size(); ++j) dz2(labels[j], static_cast<Index>(j)) -= 1.0;
  dz2 *= inv_b;

  ClassifierGrads g;
  g.w2 = dz2 * f.h1.transpose();
  g.b2 = dz2.rowwise().sum();
  MatrixXd dh1 = c.w2.transpose() * dz2;
  MatrixXd dz1 = dh1.cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = dz1 * x01.transpose();
  g.b1 = dz1.rowwise().sum();
  return g;
}

namespace {

// nearest label-grid cell for a physical point, ties toward the lower index
Index label_of_point(double x, double y, const Classifier& grid) {
  auto nearest = [](double v, double origin, double spacing, Index n) {
    const double u = (v - origin) / spacing - 0.5;
    Index i = static_cast<Index>(std::llround(u));
    return std::min(std::max(i, Index{0}), n - 1);
  };
  const Index r = nearest(x, grid.origin_x, grid.spacing_x, grid.grid_rows);
  const Index col = nearest(y, grid.origin_y, grid.spacing_y, grid.grid_cols);
  return r * grid.grid_cols + col;
}

}  // namespace

Classifier train_classifier(const RadioMap& map, const std::optional<RadioMap>& aug,
                            const ClassifierConfig& cfg) {
  map.validate();
  if (aug) {
    aug->validate();
    if (aug->ap_count() != map.ap_count())
      throw std::invalid_argument("train_classifier: augmentation AP depth differs");
  }
  const RadioMap& grid_src = aug ? *aug : map;
  if (grid_src.rows() * grid_src.cols() < 2)
    throw std::invalid_argument("train_classifier: need at least two cells");
  if (cfg.hidden < 1 || cfg.epochs < 0 || cfg.batch_size < 1 || cfg.samples_per_cell < 1)
    throw std::invalid_argument("train_classifier: bad config");

  Classifier c;
  c.grid_rows = grid_src.rows();
  c.grid_cols = grid_src.cols();
  c.origin_x = grid_src.origin_x;
  c.origin_y = grid_src.origin_y;
  c.spacing_x = grid_src.spacing_x;
  c.spacing_y = grid_src.spacing_y;

  Rng rng(cfg.seed);
  const Index n3 = map.ap_count();
  c.w1.resize(cfg.hidden, n3);
  for (Index i = 0; i < c.w1.size(); ++i) c.w1.data()[i] = rng.normal() / std::sqrt(static_cast<double>(n3));
  c.b1 = VectorXd::Zero(cfg.hidden);
  c.w2 = MatrixXd::Zero(c.cell_count(), cfg.hidden);  // uniform softmax at init
  c.b2 = VectorXd::Zero(c.cell_count());

  // Training set: noisy copies of every source fingerprint, labeled by the
  // nearest label-grid cell.
  std::vector<const RadioMap*> sources{&map};
  if (aug) sources.push_back(&*aug);
  std::vector<VectorXd> xs;
  std::vector<Index> ys;
  for (const RadioMap* src : sources)
    for (Index i = 0; i < src->rows(); ++i)
      for (Index j = 0; j < src->cols(); ++j) {
        const auto [cx, cy] = src->cell_center(i, j);
        const Index label = label_of_point(cx, cy, c);
        for (int s = 0; s < cfg.samples_per_cell; ++s) {
          VectorXd fp = src->rss.tube(i, j);
          for (Index a = 0; a < n3; ++a)
            fp[a] = std::clamp(fp[a] + cfg.noise_sigma_db * rng.normal(), kRssFloorDbm, kRssCeilDbm);
          xs.push_back(std::move(fp));
          ys.push_back(label);
        }
      }

  std::vector<Index> order(xs.size());
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t hi = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      MatrixXd x(n3, static_cast<Index>(hi - at));
      std::vector<Index> lab(hi - at);
      for (std::size_t q = at; q < hi; ++q) {
        x.col(static_cast<Index>(q - at)) = xs[static_cast<std::size_t>(order[q])];
        lab[q - at] = ys[static_cast<std::size_t>(order[q])];
      }
      const ClassifierGrads g = classifier_grad(c, x, lab);
      c.w1 -= cfg.learning_rate * g.w1;
      c.b1 -= cfg.learning_rate * g.b1;
      c.w2 -= cfg.learning_rate * g.w2;
      c.b2 -= cfg.learning_rate * g.b2;
    }
  }
  return c;
}

double loc_error(const LocationEstimate& est, double true_x, double true_y) {
  if (!std::isfinite(est.x) || !std::isfinite(est.y) || !std::isfinite(true_x) || !std::isfinite(true_y))
    throw std::invalid_argument("loc_error: non-finite coordinates");
  return std::hypot(est.x - true_x, est.y - true_y);
}

std::vector<std::pair<double, double>> error_cdf(std::vector<double> errors) {
  if (errors.empty()) return {};
  std::sort(errors.begin(), errors.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const bool last_of_value = (i + 1 == errors.size()) || (errors[i + 1] != errors[i]);
    if (last_of_value) cdf.emplace_back(errors[i], static_cast<double>(i + 1) / n);
  }
  cdf.back().second = 1.0;
  return cdf;
}

void save_classifier(const std::filesystem::path& dir, const std::string& name, const Classifier& c) {
  std::filesystem::create_directories(dir);
  auto as_tensor = [](const MatrixXd& m) {
    Tensor3d t(m.rows(), m.cols(), 1);
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) t(i, j, 0) = m(i, j);
    return t;
  };
  write_tns3(dir / (name + "_w1.tns3"), as_tensor(c.w1));
  write_tns3(dir / (name + "_w2.tns3"), as_tensor(c.w2));
  Tensor3d biases(c.b1.size() + c.b2.size(), 1, 1);
  for (Index i = 0; i < c.b1.size(); ++i) biases(i, 0, 0) = c.b1[i];
  for (Index i = 0; i < c.b2.size(); ++i) biases(c.b1.size() + i, 0, 0) = c.b2[i];
  write_tns3(dir / (name + "_b.tns3"), biases);
  nlohmann::json meta{{"grid", {c.grid_rows, c.grid_cols}},
                      {"origin", {c.origin_x, c.origin_y}},
                      {"spacing", {c.spacing_x, c.spacing_y}},
                      {"hidden", c.w1.rows()},
                      {"ap_count", c.w1.cols()},
                      {"byte_size", c.byte_size()}};
  write_text_file(dir / (name + ".json"), meta.dump(2) + "\n");
}

}  // namespace tubalsr
