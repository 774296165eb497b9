#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tubalsr/radio_map.hpp"

namespace tubalsr {

/// One RSS reading per AP, dBm; missing APs carry the -110 floor.
struct Fingerprint {
  Eigen::VectorXd rss;
};

struct LocationEstimate {
  double x = 0.0, y = 0.0;  // meters
  Eigen::Index cell_row = 0, cell_col = 0;
  double confidence = 0.0;
};

/// Inverse-distance-weighted centroid of the k nearest reference points in
/// RSS space. An exact fingerprint match returns that cell directly. The
/// reported cell is the grid cell nearest the continuous estimate.
LocationEstimate wknn_locate(const Fingerprint& fp, const RadioMap& map, int k);

/// One-hidden-layer softmax classifier over grid cells. The output layer is
/// zero-initialized, so an untrained classifier is exactly uniform.
struct Classifier {
  Eigen::MatrixXd w1;  // hidden x ap_count
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // cells x hidden
  Eigen::VectorXd b2;
  Eigen::Index grid_rows = 0, grid_cols = 0;
  double origin_x = 0.0, origin_y = 0.0, spacing_x = 1.0, spacing_y = 1.0;

  Eigen::Index cell_count() const { return grid_rows * grid_cols; }
  std::size_t byte_size() const {
    return sizeof(double) * static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }
};

/// Softmax cell probabilities (sums to one).
Eigen::VectorXd classifier_probs(const Classifier& c, const Fingerprint& fp);

/// Argmax cell, its center coordinates and softmax confidence.
LocationEstimate classify(const Classifier& c, const Fingerprint& fp);

struct ClassifierConfig {
  int hidden = 128;
  int epochs = 200;
  double learning_rate = 0.1;
  int batch_size = 32;
  int samples_per_cell = 20;     // noisy fingerprints drawn per grid cell
  double noise_sigma_db = 2.0;   // training-noise standard deviation
  std::uint64_t seed = 0;
};

/// Trains over the map's grid cells; when `aug` (a super-resolved finer map)
/// is given, the label grid becomes the finer grid and the original map's
/// fingerprints are relabeled to their nearest finer cells.
Classifier train_classifier(const RadioMap& map, const std::optional<RadioMap>& aug,
                            const ClassifierConfig& cfg);

struct ClassifierGrads {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

/// Mean cross-entropy over a batch of raw-dBm fingerprint columns, and its
/// analytic gradients (used by training; exposed for gradient checks).
double classifier_loss(const Classifier& c, const Eigen::MatrixXd& fingerprints,
                       const std::vector<Eigen::Index>& labels);
ClassifierGrads classifier_grad(const Classifier& c, const Eigen::MatrixXd& fingerprints,
                                const std::vector<Eigen::Index>& labels);

double loc_error(const LocationEstimate& est, double true_x, double true_y);

/// Sorted (error, cumulative fraction) pairs, one row per distinct error value;
/// the final fraction is exactly 1.
std::vector<std::pair<double, double>> error_cdf(std::vector<double> errors);

void save_classifier(const std::filesystem::path& dir, const std::string& name, const Classifier& c);

}  // namespace tubalsr
