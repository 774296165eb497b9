#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "tubalsr/sparse_coding.hpp"
#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// Thrown when the frequency-domain normal system A_hat A_hat^H + Lambda is
/// singular (all duals zero with a rank-deficient code); callers add a ridge
/// or restrict to live atoms.
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dictionary of r atoms, each an n1 x n3 block with |atom|_F^2 <= 1.
struct Dictionary {
  Tensor3d atoms;  // n1 x r x n3
  Eigen::Index atom_count() const { return atoms.n2(); }
  double atom_sq_norm(Eigen::Index j) const;
  bool feasible(double slack = 1e-9) const;
};

/// Coupled dictionaries sharing one sparse representation: codes solved against
/// `coarse` reconstruct through `fine`. Carries the patch geometry and the
/// dBm range the training data was normalized with.
struct DictionaryPair {
  Dictionary fine;
  Dictionary coarse;
  int scale = 2;
  int patch_rows = 4, patch_cols = 4;    // coarse-grid patch size
  int stride_rows = 2, stride_cols = 2;  // coarse-grid stride
  double norm_lo = -110.0, norm_hi = 0.0;
  double lambda = 0.1;
};

/// Nonnegative multipliers for the per-atom norm constraints.
struct DualVariables {
  Eigen::VectorXd lambdas;
  explicit DualVariables(Eigen::Index r = 0) : lambdas(Eigen::VectorXd::Zero(r)) {}
  explicit DualVariables(Eigen::VectorXd v) : lambdas(std::move(v)) {}
};

/// Closed-form dictionary given the duals, slice by slice in frequency domain:
/// Dhat_k = (That_k Ahat_k^H)(Ahat_k Ahat_k^H + Lambda)^{-1}.
FreqTensor3 dict_from_dual(const FreqTensor3& t_hat, const FreqTensor3& a_hat, const DualVariables& dual);

struct DualEval {
  double value;              // Lagrange dual with the dictionary eliminated
  Eigen::VectorXd gradient;  // d/d lambda_j = sum_k |Dhat_k(:,j)|^2 - n3
  Eigen::MatrixXd hessian;   // negative semidefinite
};

/// Dual function value, gradient and Hessian at `dual`. The constraint bound is
/// n3 per atom in frequency domain, i.e. a unit spatial Frobenius norm.
DualEval dual_objective(const DualVariables& dual, const FreqTensor3& t_hat, const FreqTensor3& a_hat);

struct NewtonResult {
  DualVariables dual{0};
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;  // Hessian solve failed; gradient ascent took over
};

/// Projected Newton ascent on the dual (multipliers clamped at zero), with step
/// halving and a gradient-ascent fallback when the Hessian solve fails.
NewtonResult newton_solve_dual(const FreqTensor3& t_hat, const FreqTensor3& a_hat, const DualVariables& init,
                               int max_iters = 50, double tol = 1e-6);

struct DictTrainConfig {
  int atom_count = 16;
  double lambda = 0.1;
  int iters = 10;  // outer alternations
  std::uint64_t seed = 0;
  IstaConfig ista{0.1, 200, 1e-10};
  int newton_iters = 50;
  double newton_tol = 1e-10;
};

struct DictTrainResult {
  Dictionary dictionary;
  Tensor3d code;                        // final sparse representation of the samples
  std::vector<double> objective_trace;  // entry 0 at init, then one per outer iteration
  NewtonResult last_newton;             // dual state of the final dictionary update
  std::vector<Eigen::Index> last_live;  // atoms the final update solved for
};

/// Alternating training: seeded Gaussian init, then per outer iteration a
/// sparse-coding pass (warm-started from the previous code) followed by the
/// frequency-domain dual update. Samples pack one patch per column of the
/// second dimension.
DictTrainResult train_dictionary(const Tensor3d& samples, const DictTrainConfig& cfg);

struct JointTrainResult {
  DictionaryPair pair;
  std::vector<double> objective_trace;
};

/// Trains one dictionary on fine patches stacked over coarse patches (each
/// block scaled by 1/sqrt(block rows)), then splits the rows back out. Both
/// halves of an atom are rescaled by one shared factor so the coupled code
/// transfer survives renormalization.
JointTrainResult train_joint(const Tensor3d& fine_patches, const Tensor3d& coarse_patches,
                             const DictTrainConfig& cfg);

void save_dictionary_pair(const std::filesystem::path& dir, const std::string& name, const DictionaryPair& pair);
DictionaryPair load_dictionary_pair(const std::filesystem::path& dir, const std::string& name);

}  // namespace tubalsr
