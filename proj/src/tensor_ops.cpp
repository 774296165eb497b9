#include "tubalsr/tensor_ops.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace tubalsr {
namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using cd = std::complex<double>;

// DFT matrix with exact conjugate pairing between rows k and n-k: entries of
// the upper half are built as literal conjugates of the lower half, so
// transforms of real data are conjugate-symmetric to the last bit.
MatrixXcd dft_matrix(Index n) {
  MatrixXcd w(n, n);
  for (Index k = 0; k <= n / 2; ++k) {
    for (Index l = 0; l < n; ++l) {
      const Index m = (k * l) % n;  // reduced phase for accuracy at large k*l
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
      w(k, l) = cd(std::cos(ang), std::sin(ang));
    }
  }
  // The Nyquist row is +-1 exactly; sin(-pi) roundoff would otherwise leave a
  // stray imaginary part on a row that must be self-conjugate.
  if (n % 2 == 0)
    for (Index l = 0; l < n; ++l) w(n / 2, l) = (l % 2 == 0) ? cd(1.0, 0.0) : cd(-1.0, 0.0);
  for (Index k = n / 2 + 1; k < n; ++k)
    for (Index l = 0; l < n; ++l) w(k, l) = std::conj(w(n - k, l));
  return w;
}

void require_finite(const Tensor3d& t, const char* who) {
  if (!t.all_finite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

}  // namespace

FreqTensor3 dft3(const Tensor3d& t) {
  require_finite(t, "dft3");
  const MatrixXcd w = dft_matrix(t.n3());
  FreqTensor3 f(t.n1(), t.n2(), t.n3());
  // Tubes are rows; x_hat = x * W^T = x * W (W symmetric).
  f.tubes() = t.tubes().cast<cd>() * w;
  return f;
}

Tensor3d idft3(const FreqTensor3& f) {
  if (!f.all_finite()) throw std::invalid_argument("idft3: non-finite input");
  const Index n3 = f.n3();
  const MatrixXcd winv = dft_matrix(n3).conjugate() / static_cast<double>(n3);
  FreqTensor3 s(f.n1(), f.n2(), f.n3());
  s.tubes() = f.tubes() * winv;

  double max_mag = 0.0, max_imag = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    max_mag = std::max(max_mag, std::abs(s.data()[i]));
    max_imag = std::max(max_imag, std::abs(s.data()[i].imag()));
  }
  if (max_imag > 1e-10 * std::max(1.0, max_mag))
    throw std::invalid_argument("idft3: input is not conjugate-symmetric (imaginary residual too large)");

  Tensor3d out(f.n1(), f.n2(), f.n3());
  for (Index i = 0; i < s.size(); ++i) out.data()[i] = s.data()[i].real();
  return out;
}

FreqTensor3 freq_prod(const FreqTensor3& a, const FreqTensor3& b) {
  if (a.n2() != b.n1() || a.n3() != b.n3()) throw std::invalid_argument("freq_prod: dimension mismatch");
  FreqTensor3 c(a.n1(), b.n2(), a.n3());
  for (Index k = 0; k < a.n3(); ++k) c.set_slice(k, a.slice(k) * b.slice(k));
  return c;
}

Tensor3d tprod(const Tensor3d& a, const Tensor3d& b) {
  if (a.n2() != b.n1() || a.n3() != b.n3()) throw std::invalid_argument("tprod: dimension mismatch");
  return idft3(freq_prod(dft3(a), dft3(b)));
}

Tensor3d ttranspose(const Tensor3d& t) {
  Tensor3d out(t.n2(), t.n1(), t.n3());
  for (Index k = 0; k < t.n3(); ++k) {
    const Index src = (k == 0) ? 0 : t.n3() - k;
    out.set_slice(k, t.slice(src).transpose());
  }
  return out;
}

FreqTensor3 freq_adjoint(const FreqTensor3& f) {
  FreqTensor3 out(f.n2(), f.n1(), f.n3());
  for (Index k = 0; k < f.n3(); ++k) out.set_slice(k, f.slice(k).adjoint());
  return out;
}

TSvdFactors tsvd(const Tensor3d& t) {
  require_finite(t, "tsvd");
  const Index n1 = t.n1(), n2 = t.n2(), n3 = t.n3();
  const Index nmin = std::min(n1, n2);
  const FreqTensor3 f = dft3(t);

  FreqTensor3 uh(n1, n1, n3), th(n1, n2, n3), vh(n2, n2, n3);
  // SVD only the lower half; mirror conjugates into the upper half so the
  // factors stay exactly conjugate-symmetric (hence exactly real after idft3).
  // DC and Nyquist slices are self-conjugate, so their factors must be real:
  // a complex SVD would attach arbitrary unit phases there.
  for (Index k = 0; k <= n3 / 2; ++k) {
    MatrixXcd theta = MatrixXcd::Zero(n1, n2);
    if (k == 0 || 2 * k == n3) {
      Eigen::JacobiSVD<MatrixXd> svd(f.slice(k).real(), Eigen::ComputeFullU | Eigen::ComputeFullV);
      uh.set_slice(k, svd.matrixU().cast<cd>());
      vh.set_slice(k, svd.matrixV().cast<cd>());
      for (Index i = 0; i < nmin; ++i) theta(i, i) = svd.singularValues()[i];
    } else {
      Eigen::JacobiSVD<MatrixXcd> svd(f.slice(k), Eigen::ComputeFullU | Eigen::ComputeFullV);
      uh.set_slice(k, svd.matrixU());
      vh.set_slice(k, svd.matrixV());
      for (Index i = 0; i < nmin; ++i) theta(i, i) = svd.singularValues()[i];
    }
    th.set_slice(k, theta);
  }
  for (Index k = n3 / 2 + 1; k < n3; ++k) {
    uh.set_slice(k, uh.slice(n3 - k).conjugate());
    th.set_slice(k, th.slice(n3 - k).conjugate());
    vh.set_slice(k, vh.slice(n3 - k).conjugate());
  }

  // One global tube permutation, by decreasing tube energy. Frequency-domain
  // energies order the same as spatial ones (Parseval).
  std::vector<double> energy(nmin, 0.0);
  for (Index i = 0; i < nmin; ++i)
    for (Index k = 0; k < n3; ++k) energy[i] += std::norm(th(i, i, k));
  std::vector<Index> perm(nmin);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::stable_sort(perm.begin(), perm.end(), [&](Index a, Index b) { return energy[a] > energy[b]; });

  FreqTensor3 up(n1, n1, n3), tp(n1, n2, n3), vp(n2, n2, n3);
  for (Index k = 0; k < n3; ++k) {
    MatrixXcd us = uh.slice(k), vs = vh.slice(k), ts = th.slice(k);
    MatrixXcd us2 = us, vs2 = vs;
    MatrixXcd ts2 = MatrixXcd::Zero(n1, n2);
    for (Index i = 0; i < nmin; ++i) {
      us2.col(i) = us.col(perm[i]);
      vs2.col(i) = vs.col(perm[i]);
      ts2(i, i) = ts(perm[i], perm[i]);
    }
    up.set_slice(k, us2);
    vp.set_slice(k, vs2);
    tp.set_slice(k, ts2);
  }

  TSvdFactors out;
  out.u = idft3(up);
  out.theta = idft3(tp);
  out.v = idft3(vp);
  out.tube_norms.resize(nmin);
  for (Index i = 0; i < nmin; ++i) out.tube_norms[i] = std::sqrt(energy[perm[i]] / static_cast<double>(n3));
  return out;
}

int tubal_rank(const Tensor3d& t, double tol) {
  if (tol < 0) throw std::invalid_argument("tubal_rank: tol must be nonnegative");
  const TSvdFactors f = tsvd(t);
  if (f.tube_norms.empty()) return 0;
  const double top = f.tube_norms.front();
  int r = 0;
  for (double n : f.tube_norms)
    if (n > tol * top && n > 0.0) ++r;
  return r;
}

namespace {

std::vector<double> cumulative_energy(std::vector<double> energies, const char* who) {
  const double total = std::accumulate(energies.begin(), energies.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument(std::string(who) + ": zero tensor has no energy distribution");
  std::sort(energies.begin(), energies.end(), std::greater<>());
  std::vector<double> cdf(energies.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    acc += energies[i];
    cdf[i] = acc / total;
  }
  cdf.back() = 1.0;  // pin the tail against roundoff
  return cdf;
}

}  // namespace

std::vector<double> energy_cdf(const Tensor3d& t) {
  const TSvdFactors f = tsvd(t);
  std::vector<double> e(f.tube_norms.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = f.tube_norms[i] * f.tube_norms[i];
  return cumulative_energy(std::move(e), "energy_cdf");
}

std::vector<double> energy_cdf_matrix(const Tensor3d& t) {
  require_finite(t, "energy_cdf_matrix");
  MatrixXd unfold(t.n3(), t.n1() * t.n2());
  for (Index k = 0; k < t.n3(); ++k) {
    Index col = 0;
    for (Index i = 0; i < t.n1(); ++i)
      for (Index j = 0; j < t.n2(); ++j, ++col) unfold(k, col) = t(i, j, k);
  }
  Eigen::JacobiSVD<MatrixXd> svd(unfold);
  std::vector<double> e(svd.singularValues().size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double s = svd.singularValues()[static_cast<Index>(i)];
    e[i] = s * s;
  }
  return cumulative_energy(std::move(e), "energy_cdf_matrix");
}

int components_to_energy(const std::vector<double>& cdf, double level) {
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (cdf[i] >= level) return static_cast<int>(i) + 1;
  return static_cast<int>(cdf.size());
}

}  // namespace tubalsr
