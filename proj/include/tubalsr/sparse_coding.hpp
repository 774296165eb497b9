#pragma once

#include <vector>

#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// Sparse coefficient tensor (r x n2 x n3) together with the fraction of
/// entries below 1e-12 in magnitude.
struct SparseCode {
  Tensor3d code;
  double sparsity_fraction = 0.0;
};

struct IstaConfig {
  double lambda = 0.1;   // sparsity weight
  int max_iters = 500;
  // Stop when the relative objective decrease and the relative iterate step
  // both drop below this; the step condition makes a converged code a fixed
  // point of the proximal map.
  double rel_tol = 1e-8;
};

/// sign(x) * max(|x| - tau, 0).
double soft_threshold(double x, double tau);
Tensor3d soft_threshold(const Tensor3d& t, double tau);

/// Step-size bound L = sum_k |Dhat_k^H Dhat_k|_F^2. A loose upper bound on the
/// gradient's Lipschitz constant; see lipschitz_slack for how loose.
double lipschitz_const(const Tensor3d& d);

/// Diagnostic ratio L / max_k sigma_max(Dhat_k)^2 (paper bound over the exact
/// per-slice spectral constant). Values well above 2 mean the fixed step is
/// conservative but safe.
double lipschitz_slack(const Tensor3d& d);

/// Step bound the solvers actually use: lipschitz_const(d) unless that falls
/// under the exact gradient Lipschitz constant 2*max_k sigma_max(Dhat_k)^2
/// (possible for near-degenerate dictionaries, where the fixed step would
/// cycle instead of descend), in which case the exact constant takes over.
double effective_step_bound(const Tensor3d& d);

/// Gradient of f(A) = |D*A - T|_F^2, i.e. 2 * D^T * (D*A - T).
Tensor3d grad_f(const Tensor3d& d, const Tensor3d& a, const Tensor3d& t);

/// |D*A - T|_F^2 + lambda * |A|_1.
double objective(const Tensor3d& d, const Tensor3d& a, const Tensor3d& t, double lambda);

struct IstaResult {
  SparseCode code;
  std::vector<double> trace;  // objective values; trace[0] is at the initial code
  bool converged = false;     // stopped by rel_tol rather than max_iters
  int iterations = 0;
  double step_bound = 0.0;    // the L actually used
  double step_slack = 0.0;    // lipschitz_slack(d)
};

/// Proximal-gradient solver for min_A |D*A - T|_F^2 + lambda*|A|_1 with fixed
/// step 1/L, starting from A = 0.
IstaResult ista_t(const Tensor3d& d, const Tensor3d& t, const IstaConfig& cfg);

/// Same solver started from a caller-supplied code (used by the alternating
/// dictionary trainer, where each round continues from the previous code).
IstaResult ista_t_warm(const Tensor3d& d, const Tensor3d& t, const IstaConfig& cfg, const Tensor3d& init);

/// Unrolled variant: exactly thresholds.size() proximal iterations, iteration p
/// using shrinkage threshold thresholds[p]. With all thresholds equal to
/// lambda/L this reproduces ISTA-T truncated to the same iteration count bit
/// for bit (no early stopping, same arithmetic).
SparseCode lista_t(const Tensor3d& d, const Tensor3d& t, const std::vector<double>& thresholds);

/// The untuned LISTA-T schedule: iters copies of lambda / lipschitz_const(d).
std::vector<double> default_lista_thresholds(const Tensor3d& d, double lambda, int iters = 16);

}  // namespace tubalsr
