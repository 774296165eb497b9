#pragma once

#include <vector>

#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// Forward DFT along the third dimension, unnormalized (frequency slice k holds
/// the k-th DFT coefficient of every tube). Transforms of real tensors are
/// exactly conjugate-symmetric: slice k and slice n3-k pair up.
FreqTensor3 dft3(const Tensor3d& t);

/// Inverse DFT along the third dimension with the 1/n3 factor. The input must
/// be (numerically) conjugate-symmetric: imaginary residuals below 1e-10
/// relative to the largest magnitude are discarded, anything above throws.
Tensor3d idft3(const FreqTensor3& f);

/// t-product C = A * B: tube-wise circular convolution, computed as slice-wise
/// matrix products in the frequency domain.
Tensor3d tprod(const Tensor3d& a, const Tensor3d& b);

/// Slice-wise product of frequency-domain tensors (no transforms applied).
FreqTensor3 freq_prod(const FreqTensor3& a, const FreqTensor3& b);

/// Tensor transpose: slice 0 transposed; slices 1..n3-1 transposed and reversed
/// in order. This is the convention under which dft3(ttranspose(T)) equals the
/// slice-wise conjugate transpose of dft3(T), so tprod(T, ttranspose(T)) is
/// symmetric and orthogonality behaves like the matrix case.
Tensor3d ttranspose(const Tensor3d& t);

/// Frequency-domain adjoint: every slice conjugate-transposed (equals
/// dft3(ttranspose(idft3(.))) without the round trips).
FreqTensor3 freq_adjoint(const FreqTensor3& f);

struct TSvdFactors {
  Tensor3d u;      // n1 x n1 x n3, orthogonal
  Tensor3d theta;  // n1 x n2 x n3, f-diagonal
  Tensor3d v;      // n2 x n2 x n3, orthogonal
  /// Frobenius norms of the singular tubes theta(i,i,:), sorted nonincreasing.
  std::vector<double> tube_norms;
};

/// t-SVD via per-frequency-slice matrix SVDs. Singular tubes are reported in
/// order of decreasing tube Frobenius norm (one global permutation applied to
/// all slices; per-slice values are then not individually sorted).
TSvdFactors tsvd(const Tensor3d& t);

/// Number of singular tubes with norm > tol * (largest tube norm).
int tubal_rank(const Tensor3d& t, double tol);

/// Cumulative normalized squared singular-tube energies from the t-SVD,
/// nondecreasing with last element 1. Throws on a zero tensor.
std::vector<double> energy_cdf(const Tensor3d& t);

/// Same cumulative-energy curve for the matrix SVD of the mode-3 unfolding
/// (n3 x n1*n2; each row one AP slice flattened).
std::vector<double> energy_cdf_matrix(const Tensor3d& t);

/// First index m (1-based) with cdf[m-1] >= level.
int components_to_energy(const std::vector<double>& cdf, double level);

}  // namespace tubalsr
