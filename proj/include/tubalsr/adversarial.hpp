#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "tubalsr/dict_learning.hpp"
#include "tubalsr/radio_map.hpp"
#include "tubalsr/rng.hpp"
#include "tubalsr/super_resolution.hpp"

namespace tubalsr {

/// Two-hidden-layer fully connected discriminator over flattened fine patches
/// (leaky-rectifier slope 0.2, logistic output).
struct Discriminator {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;
  double b3 = 0.0;

  Eigen::Index input_dim() const { return w1.cols(); }
  static Discriminator init(Eigen::Index input_dim, Eigen::Index h1, Eigen::Index h2, Rng& rng);
};

/// Probability that `patch` is a real fine patch; strictly inside (0, 1).
double disc_forward(const Discriminator& d, const Eigen::Ref<const Eigen::VectorXd>& patch);

struct DiscGrads {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;
  double b3 = 0.0;
};

/// Mean binary cross-entropy over the batch (columns of `patches`, labels 1 =
/// real), with analytic backpropagation. Probabilities are clamped to
/// [1e-7, 1-1e-7] in the loss; gradients use the exact (p - y) form, which
/// stays finite for any parameters.
double disc_loss(const Discriminator& d, const Eigen::MatrixXd& patches, const Eigen::VectorXd& labels);
DiscGrads disc_grad(const Discriminator& d, const Eigen::MatrixXd& patches, const Eigen::VectorXd& labels);

/// Trainable refinement of the sparse-coding generator: per-iteration
/// shrinkage thresholds of the unrolled solver plus a linear map applied to
/// every frontal slice of each reconstructed fine patch. Identity-initialized
/// (default thresholds, identity map) it reproduces the unrefined generator
/// bit for bit.
struct GeneratorRefiner {
  std::vector<double> thresholds;
  Eigen::MatrixXd output_map;

  PatchTransform transform() const { return {thresholds, output_map}; }
  static GeneratorRefiner identity(const Tensor3d& coarse_atoms, double lambda, int iters,
                                   Eigen::Index fine_patch_dim);
};

/// Generator forward pass on a batch of normalized coarse patches
/// (dim x batch x depth): unrolled coding, fine reconstruction, output map.
Tensor3d generator_forward(const GeneratorRefiner& g, const DictionaryPair& pair, const Tensor3d& coarse);

struct GenGrads {
  std::vector<double> thresholds;
  Eigen::MatrixXd output_map;
};

/// Loss and analytic gradients of content + eta * adversarial (non-saturating)
/// for the refiner parameters, at fixed dictionaries and discriminator.
struct GenEval {
  double content_loss = 0.0;
  double adv_loss = 0.0;
  GenGrads grads;
};
GenEval gen_grad(const GeneratorRefiner& g, const DictionaryPair& pair, const Discriminator& d,
                 const Tensor3d& coarse, const Tensor3d& fine_truth, double eta);

struct TganConfig {
  double content_weight = 1.0;  // fixed by the objective; kept for reporting
  double eta = 1e-3;            // adversarial-loss weight
  double learning_rate = 0.005;
  double momentum = 0.9;
  int epochs = 40;
  int batch_size = 16;
  int lista_iters = 16;
  int disc_pretrain_epochs = 30;
  double holdout_fraction = 0.25;
  int disc_hidden1 = 64, disc_hidden2 = 32;
  std::uint64_t seed = 0;
};

struct TganEpoch {
  int epoch = 0;  // 0 = after discriminator pretraining, before refinement
  double content_loss = 0.0;
  double adv_loss = 0.0;
  double disc_accuracy = 0.0;  // held-out real-vs-generated accuracy
};

struct TganResult {
  GeneratorRefiner refiner;
  Discriminator discriminator;
  std::vector<TganEpoch> history;
};

/// Adversarial refinement at desk scale: dictionaries stay frozen; the
/// discriminator pretrains against the unrefined generator, then discriminator
/// and refiner alternate one SGD step each per batch. Aborts if the content
/// loss exceeds ten times its initial value.
TganResult train_tgan(const std::vector<RadioMap>& fine_maps, const std::vector<RadioMap>& coarse_maps,
                      const DictionaryPair& pair, const TganConfig& cfg);

void save_tgan(const std::filesystem::path& dir, const std::string& name, const TganResult& result);
void write_tgan_history_csv(const std::filesystem::path& path, const std::vector<TganEpoch>& history);

}  // namespace tubalsr
