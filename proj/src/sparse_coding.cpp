#include "tubalsr/sparse_coding.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

#include "tubalsr/tensor_ops.hpp"

namespace tubalsr {
namespace {

using Eigen::Index;
using Eigen::MatrixXcd;

std::vector<MatrixXcd> slices_of(const FreqTensor3& f) {
  std::vector<MatrixXcd> s(static_cast<std::size_t>(f.n3()));
  for (Index k = 0; k < f.n3(); ++k) s[static_cast<std::size_t>(k)] = f.slice(k);
  return s;
}

// (paper step bound, max per-slice spectral norm squared) from the dictionary's
// frequency slices; both come from the same Gram matrices.
std::pair<double, double> detail_step_bounds(const std::vector<MatrixXcd>& d_hat) {
  double paper = 0.0, spectral_sq = 0.0;
  for (const MatrixXcd& s : d_hat) {
    const MatrixXcd gram = s.adjoint() * s;
    paper += gram.squaredNorm();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
    spectral_sq = std::max(spectral_sq, eig.eigenvalues().maxCoeff());
  }
  if (paper == 0.0) throw std::invalid_argument("lipschitz_const: zero dictionary");
  return {paper, spectral_sq};
}

void check_coding_shapes(const Tensor3d& d, const Tensor3d& t) {
  if (d.n1() != t.n1() || d.n3() != t.n3())
    throw std::invalid_argument("sparse_coding: dictionary/target shape mismatch");
  if (d.size() == 0 || t.size() == 0) throw std::invalid_argument("sparse_coding: empty input");
}

double sparsity_fraction(const Tensor3d& a) {
  Index small = 0;
  for (Index i = 0; i < a.size(); ++i)
    if (std::abs(a.data()[i]) < 1e-12) ++small;
  return a.size() ? static_cast<double>(small) / static_cast<double>(a.size()) : 0.0;
}

// One shared proximal loop for ISTA-T and LISTA-T. When `thresholds` is
// non-empty it fixes both the iteration count and the per-iteration shrinkage;
// otherwise lambda/L is used every iteration and rel_tol may stop early.
IstaResult proximal_loop(const Tensor3d& d, const Tensor3d& t, const IstaConfig& cfg, Tensor3d a,
                         const std::vector<double>* thresholds) {
  check_coding_shapes(d, t);
  if (a.n1() != d.n2() || a.n2() != t.n2() || a.n3() != t.n3())
    throw std::invalid_argument("sparse_coding: initial code shape mismatch");
  if (!thresholds) {
    if (!(cfg.lambda > 0)) throw std::invalid_argument("IstaConfig: lambda must be positive");
    if (cfg.max_iters < 1) throw std::invalid_argument("IstaConfig: max_iters must be >= 1");
    if (cfg.rel_tol < 0) throw std::invalid_argument("IstaConfig: rel_tol must be nonnegative");
  }

  const Index n3 = t.n3();
  const auto d_hat = slices_of(dft3(d));
  const auto t_hat = slices_of(dft3(t));
  const auto bounds = detail_step_bounds(d_hat);
  const double big_l = std::max(bounds.first, 2.0 * bounds.second);

  const int iters = thresholds ? static_cast<int>(thresholds->size()) : cfg.max_iters;

  FreqTensor3 g_hat(a.n1(), a.n2(), n3);
  std::vector<MatrixXcd> r_hat(static_cast<std::size_t>(n3));

  auto refresh_residual = [&](const Tensor3d& code) {
    const FreqTensor3 code_hat = dft3(code);
    double fsq = 0.0;
    for (Index k = 0; k < n3; ++k) {
      auto& r = r_hat[static_cast<std::size_t>(k)];
      r = d_hat[static_cast<std::size_t>(k)] * code_hat.slice(k) - t_hat[static_cast<std::size_t>(k)];
      fsq += r.squaredNorm();
    }
    return fsq / static_cast<double>(n3);  // Parseval
  };

  IstaResult out;
  out.step_bound = big_l;
  out.step_slack = bounds.first / bounds.second;

  double obj = refresh_residual(a) + cfg.lambda * l1_norm(a);
  out.trace.push_back(obj);

  for (int p = 0; p < iters; ++p) {
    for (Index k = 0; k < n3; ++k)
      g_hat.set_slice(k, 2.0 * (d_hat[static_cast<std::size_t>(k)].adjoint() * r_hat[static_cast<std::size_t>(k)]));
    const Tensor3d grad = idft3(g_hat);

    const double tau = thresholds ? (*thresholds)[static_cast<std::size_t>(p)] : cfg.lambda / big_l;
    const Tensor3d prev = a;
    a.flat() = a.flat() - grad.flat() / big_l;
    a = soft_threshold(a, tau);
    if (!a.all_finite()) throw std::runtime_error("ista_t: non-finite iterate (check lambda and step bound)");

    const double obj_new = refresh_residual(a) + cfg.lambda * l1_norm(a);
    out.trace.push_back(obj_new);
    out.iterations = p + 1;

    if (!thresholds) {
      // Converged means both the objective stalled and the iterate stopped
      // moving (relative to rel_tol). The step criterion is what makes a
      // "converged" code an actual fixed point of the proximal map: the next
      // step can be no longer than this one.
      const double decrease = obj - obj_new;
      const double rel = (obj > 0.0) ? decrease / obj : 0.0;
      const double step_norm = fro_norm(a - prev);
      if (rel < cfg.rel_tol && (step_norm == 0.0 || step_norm < cfg.rel_tol * fro_norm(a))) {
        out.converged = true;
        obj = obj_new;
        break;
      }
    }
    obj = obj_new;
  }

  out.code.code = std::move(a);
  out.code.sparsity_fraction = sparsity_fraction(out.code.code);
  return out;
}

}  // namespace

double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

Tensor3d soft_threshold(const Tensor3d& t, double tau) {
  if (tau < 0) throw std::invalid_argument("soft_threshold: tau must be nonnegative");
  Tensor3d out = t;
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = soft_threshold(out.data()[i], tau);
  return out;
}

double lipschitz_const(const Tensor3d& d) {
  if (fro_norm(d) == 0.0) throw std::invalid_argument("lipschitz_const: zero dictionary");
  const FreqTensor3 f = dft3(d);
  double sum = 0.0;
  for (Index k = 0; k < d.n3(); ++k) {
    const MatrixXcd s = f.slice(k);
    sum += (s.adjoint() * s).squaredNorm();
  }
  return sum;
}

double lipschitz_slack(const Tensor3d& d) {
  const auto b = detail_step_bounds(slices_of(dft3(d)));
  return b.first / b.second;
}

double effective_step_bound(const Tensor3d& d) {
  const auto b = detail_step_bounds(slices_of(dft3(d)));
  return std::max(b.first, 2.0 * b.second);
}

Tensor3d grad_f(const Tensor3d& d, const Tensor3d& a, const Tensor3d& t) {
  check_coding_shapes(d, t);
  return 2.0 * tprod(ttranspose(d), tprod(d, a) - t);
}

double objective(const Tensor3d& d, const Tensor3d& a, const Tensor3d& t, double lambda) {
  if (lambda < 0) throw std::invalid_argument("objective: lambda must be nonnegative");
  const double r = fro_norm(tprod(d, a) - t);
  return r * r + lambda * l1_norm(a);
}

IstaResult ista_t(const Tensor3d& d, const Tensor3d& t, const IstaConfig& cfg) {
  return proximal_loop(d, t, cfg, Tensor3d(d.n2(), t.n2(), t.n3()), nullptr);
}

IstaResult ista_t_warm(const Tensor3d& d, const Tensor3d& t, const IstaConfig& cfg, const Tensor3d& init) {
  return proximal_loop(d, t, cfg, init, nullptr);
}

SparseCode lista_t(const Tensor3d& d, const Tensor3d& t, const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("lista_t: need at least one threshold");
  for (double tau : thresholds)
    if (!(tau >= 0)) throw std::invalid_argument("lista_t: thresholds must be nonnegative");
  IstaConfig cfg;
  cfg.lambda = 0.0;  // objective trace bookkeeping only; shrinkage comes from `thresholds`
  cfg.max_iters = static_cast<int>(thresholds.size());
  cfg.rel_tol = 0.0;
  return proximal_loop(d, t, cfg, Tensor3d(d.n2(), t.n2(), t.n3()), &thresholds).code;
}

std::vector<double> default_lista_thresholds(const Tensor3d& d, double lambda, int iters) {
  if (iters < 1) throw std::invalid_argument("default_lista_thresholds: iters must be >= 1");
  return std::vector<double>(static_cast<std::size_t>(iters), lambda / effective_step_bound(d));
}

}  // namespace tubalsr
