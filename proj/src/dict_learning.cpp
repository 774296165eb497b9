#include "tubalsr/dict_learning.hpp"

#include <Eigen/Dense>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "tubalsr/io.hpp"
#include "tubalsr/rng.hpp"
#include "tubalsr/tensor_ops.hpp"

namespace tubalsr {
namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_dual_shapes(const FreqTensor3& t_hat, const FreqTensor3& a_hat, const DualVariables& dual) {
  if (t_hat.n2() != a_hat.n2() || t_hat.n3() != a_hat.n3())
    throw std::invalid_argument("dict_from_dual: sample/code shape mismatch");
  if (dual.lambdas.size() != a_hat.n1()) throw std::invalid_argument("dict_from_dual: dual size != atom count");
  if ((dual.lambdas.array() < 0).any()) throw std::invalid_argument("dict_from_dual: negative dual variable");
}

struct SliceSystem {
  MatrixXcd m_inv;  // (Ahat Ahat^H + Lambda)^{-1}
  MatrixXcd d_hat;  // That Ahat^H M^{-1}
  MatrixXcd p;      // That Ahat^H
};

SliceSystem solve_slice(const MatrixXcd& t_slice, const MatrixXcd& a_slice, const VectorXd& lambdas) {
  const Index r = a_slice.rows();
  MatrixXcd m = a_slice * a_slice.adjoint();
  m.diagonal() += lambdas.cast<std::complex<double>>();
  Eigen::LDLT<MatrixXcd> ldlt(m);
  const VectorXd diag = ldlt.vectorD().real();
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmax > 0) || diag.minCoeff() <= dmax * 1e-14)
    throw SingularSystemError("dict_from_dual: A A^H + Lambda is singular; add a ridge or drop dead atoms");
  SliceSystem s;
  s.p = t_slice * a_slice.adjoint();
  s.m_inv = ldlt.solve(MatrixXcd::Identity(r, r));
  s.d_hat = s.p * s.m_inv;
  return s;
}

}  // namespace

double Dictionary::atom_sq_norm(Eigen::Index j) const {
  double s = 0.0;
  for (Index i = 0; i < atoms.n1(); ++i) s += atoms.tube(i, j).squaredNorm();
  return s;
}

bool Dictionary::feasible(double slack) const {
  for (Index j = 0; j < atom_count(); ++j)
    if (atom_sq_norm(j) > 1.0 + slack) return false;
  return true;
}

FreqTensor3 dict_from_dual(const FreqTensor3& t_hat, const FreqTensor3& a_hat, const DualVariables& dual) {
  check_dual_shapes(t_hat, a_hat, dual);
  FreqTensor3 d_hat(t_hat.n1(), a_hat.n1(), t_hat.n3());
  for (Index k = 0; k < t_hat.n3(); ++k)
    d_hat.set_slice(k, solve_slice(t_hat.slice(k), a_hat.slice(k), dual.lambdas).d_hat);
  return d_hat;
}

DualEval dual_objective(const DualVariables& dual, const FreqTensor3& t_hat, const FreqTensor3& a_hat) {
  check_dual_shapes(t_hat, a_hat, dual);
  const Index r = a_hat.n1(), n3 = t_hat.n3();
  const double bound = static_cast<double>(n3);  // unit spatial atom norm, by Parseval

  DualEval out;
  out.value = -bound * dual.lambdas.sum();
  out.gradient = VectorXd::Constant(r, -bound);
  out.hessian = MatrixXd::Zero(r, r);

  for (Index k = 0; k < n3; ++k) {
    const SliceSystem s = solve_slice(t_hat.slice(k), a_hat.slice(k), dual.lambdas);
    out.value += t_hat.slice(k).squaredNorm() - s.d_hat.cwiseProduct(s.p.conjugate()).sum().real();
    out.gradient += s.d_hat.colwise().squaredNorm().real().transpose();
    const MatrixXcd q = s.d_hat.adjoint() * s.d_hat;
    out.hessian.noalias() += -2.0 * q.cwiseProduct(s.m_inv.conjugate()).real();
  }
  return out;
}

namespace {

double kkt_residual_of(const VectorXd& lambdas, const VectorXd& grad) {
  double worst = 0.0;
  for (Index j = 0; j < lambdas.size(); ++j) {
    const double res = (lambdas[j] > 0.0) ? std::abs(grad[j]) : std::max(grad[j], 0.0);
    worst = std::max(worst, res);
  }
  return worst;
}

}  // namespace

NewtonResult newton_solve_dual(const FreqTensor3& t_hat, const FreqTensor3& a_hat, const DualVariables& init,
                               int max_iters, double tol) {
  if ((init.lambdas.array() < 0).any()) throw std::invalid_argument("newton_solve_dual: init must be nonnegative");

  NewtonResult out;
  VectorXd lambdas = init.lambdas;
  std::optional<DualEval> eval;
  try {
    eval = dual_objective(DualVariables(lambdas), t_hat, a_hat);
  } catch (const SingularSystemError&) {
    // Rank-deficient code at the starting point: nudge the duals off zero.
    double scale = 0.0;
    for (Index k = 0; k < a_hat.n3(); ++k) scale += a_hat.slice(k).squaredNorm();
    scale = std::max(scale / static_cast<double>(std::max<Index>(1, a_hat.n1() * a_hat.n3())), 1e-30);
    lambdas.array() += 1e-8 * scale;
    eval = dual_objective(DualVariables(lambdas), t_hat, a_hat);
  }

  for (int it = 0; it < max_iters; ++it) {
    out.kkt_residual = kkt_residual_of(lambdas, eval->gradient);
    if (out.kkt_residual < tol) {
      out.converged = true;
      break;
    }

    // Coordinates pinned at zero whose gradient points further down are
    // excluded from the Newton system; leaving them in drags the free
    // coordinates' step toward the infeasible unclamped optimum.
    std::vector<Index> free_set;
    for (Index j = 0; j < lambdas.size(); ++j)
      if (lambdas[j] > 0.0 || eval->gradient[j] > 0.0) free_set.push_back(j);

    VectorXd dir = VectorXd::Zero(lambdas.size());
    if (!free_set.empty()) {
      const Index nf = static_cast<Index>(free_set.size());
      MatrixXd h(nf, nf);
      VectorXd g(nf);
      for (Index p = 0; p < nf; ++p) {
        g[p] = eval->gradient[free_set[static_cast<std::size_t>(p)]];
        for (Index q = 0; q < nf; ++q)
          h(p, q) = eval->hessian(free_set[static_cast<std::size_t>(p)], free_set[static_cast<std::size_t>(q)]);
      }
      h.diagonal().array() -= 1e-10;
      Eigen::LDLT<MatrixXd> ldlt(h);
      VectorXd step;
      if (ldlt.info() == Eigen::Success) step = ldlt.solve(-g);
      if (step.size() == 0 || !step.allFinite() || g.dot(step) <= 0.0) {
        out.used_fallback = true;  // ascend along the gradient with a diminishing step
        step = g / ((1.0 + g.cwiseAbs().maxCoeff()) * (1.0 + it));
      }
      for (Index p = 0; p < nf; ++p) dir[free_set[static_cast<std::size_t>(p)]] = step[p];
    }

    bool stepped = false;
    double alpha = 1.0;
    for (int bt = 0; bt < 40; ++bt, alpha *= 0.5) {
      const VectorXd trial = (lambdas + alpha * dir).cwiseMax(0.0);
      if ((trial - lambdas).cwiseAbs().maxCoeff() == 0.0) continue;
      std::optional<DualEval> trial_eval;
      try {
        trial_eval = dual_objective(DualVariables(trial), t_hat, a_hat);
      } catch (const SingularSystemError&) {
        continue;
      }
      // Near the optimum the quadratic improvement sinks below the roundoff of
      // the value itself; a noise-sized slack lets the last Newton steps land.
      if (trial_eval->value >= eval->value - 1e-12 * (1.0 + std::abs(eval->value))) {
        lambdas = trial;
        eval = std::move(trial_eval);
        stepped = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!stepped) break;  // no ascent step available; report the residual we are at
    out.kkt_residual = kkt_residual_of(lambdas, eval->gradient);
    if (out.kkt_residual < tol) {
      out.converged = true;
      break;
    }
  }

  out.dual = DualVariables(lambdas);
  return out;
}

namespace {

Tensor3d gather_rows(const Tensor3d& a, const std::vector<Index>& rows) {
  Tensor3d out(static_cast<Index>(rows.size()), a.n2(), a.n3());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < a.n2(); ++j) out.tube(static_cast<Index>(i), j) = a.tube(rows[i], j);
  return out;
}

void scatter_columns(Tensor3d& d, const Tensor3d& d_sub, const std::vector<Index>& cols) {
  for (Index i = 0; i < d.n1(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) d.tube(i, cols[j]) = d_sub.tube(i, static_cast<Index>(j));
}

void clamp_atoms(Tensor3d& atoms) {
  for (Index j = 0; j < atoms.n2(); ++j) {
    double sq = 0.0;
    for (Index i = 0; i < atoms.n1(); ++i) sq += atoms.tube(i, j).squaredNorm();
    if (sq > 1.0) {
      const double s = 1.0 / std::sqrt(sq);
      for (Index i = 0; i < atoms.n1(); ++i) atoms.tube(i, j) *= s;
    }
  }
}

}  // namespace

DictTrainResult train_dictionary(const Tensor3d& samples, const DictTrainConfig& cfg) {
  if (samples.size() == 0) throw std::invalid_argument("train_dictionary: empty samples");
  if (cfg.atom_count < 1) throw std::invalid_argument("train_dictionary: atom_count must be >= 1");
  if (cfg.iters < 1) throw std::invalid_argument("train_dictionary: iters must be >= 1");
  if (!(cfg.lambda > 0)) throw std::invalid_argument("train_dictionary: lambda must be positive");

  const Index n1 = samples.n1(), m = samples.n2(), n3 = samples.n3(), r = cfg.atom_count;

  Rng rng(cfg.seed);
  Tensor3d atoms = rng.gaussian_tensor(n1, r, n3);
  for (Index j = 0; j < r; ++j) {
    double sq = 0.0;
    for (Index i = 0; i < n1; ++i) sq += atoms.tube(i, j).squaredNorm();
    const double s = 1.0 / std::sqrt(sq);
    for (Index i = 0; i < n1; ++i) atoms.tube(i, j) *= s;
  }

  IstaConfig ista_cfg = cfg.ista;
  ista_cfg.lambda = cfg.lambda;

  Tensor3d code(r, m, n3);
  DictTrainResult out;
  out.objective_trace.push_back(objective(atoms, code, samples, cfg.lambda));

  const FreqTensor3 t_hat = dft3(samples);

  for (int outer = 0; outer < cfg.iters; ++outer) {
    code = ista_t_warm(atoms, samples, ista_cfg, code).code.code;

    // Atoms whose code row is identically zero have no say in the LS fit;
    // keep their previous value and solve the dual on the live block only.
    std::vector<Index> live;
    for (Index j = 0; j < r; ++j) {
      bool any = false;
      for (Index c = 0; c < m && !any; ++c) any = code.tube(j, c).cwiseAbs().maxCoeff() > 0.0;
      if (any) live.push_back(j);
    }

    if (!live.empty()) {
      const FreqTensor3 a_hat = dft3(gather_rows(code, live));
      NewtonResult nr =
          newton_solve_dual(t_hat, a_hat, DualVariables(static_cast<Index>(live.size())), cfg.newton_iters, cfg.newton_tol);
      const Tensor3d d_live = idft3(dict_from_dual(t_hat, a_hat, nr.dual));
      scatter_columns(atoms, d_live, live);
      clamp_atoms(atoms);
      out.last_newton = std::move(nr);
      out.last_live = live;
    }

    out.objective_trace.push_back(objective(atoms, code, samples, cfg.lambda));
  }

  out.dictionary.atoms = std::move(atoms);
  out.code = std::move(code);
  return out;
}

JointTrainResult train_joint(const Tensor3d& fine_patches, const Tensor3d& coarse_patches,
                             const DictTrainConfig& cfg) {
  if (fine_patches.n2() != coarse_patches.n2() || fine_patches.n3() != coarse_patches.n3())
    throw std::invalid_argument("train_joint: mismatched patch counts or depth");

  const Index df = fine_patches.n1(), dc = coarse_patches.n1();
  const Index m = fine_patches.n2(), n3 = fine_patches.n3();
  const double wf = 1.0 / std::sqrt(static_cast<double>(df));
  const double wc = 1.0 / std::sqrt(static_cast<double>(dc));

  Tensor3d stacked(df + dc, m, n3);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < df; ++i) stacked.tube(i, j) = wf * fine_patches.tube(i, j);
    for (Index i = 0; i < dc; ++i) stacked.tube(df + i, j) = wc * coarse_patches.tube(i, j);
  }

  DictTrainResult trained = train_dictionary(stacked, cfg);

  Tensor3d fine_atoms(df, cfg.atom_count, n3), coarse_atoms(dc, cfg.atom_count, n3);
  for (Index j = 0; j < cfg.atom_count; ++j) {
    for (Index i = 0; i < df; ++i) fine_atoms.tube(i, j) = trained.dictionary.atoms.tube(i, j) / wf;
    for (Index i = 0; i < dc; ++i) coarse_atoms.tube(i, j) = trained.dictionary.atoms.tube(df + i, j) / wc;
  }

  // One shared scale per atom keeps tprod(fine, code) and tprod(coarse, code)
  // consistent after renormalization.
  for (Index j = 0; j < cfg.atom_count; ++j) {
    double fsq = 0.0, csq = 0.0;
    for (Index i = 0; i < df; ++i) fsq += fine_atoms.tube(i, j).squaredNorm();
    for (Index i = 0; i < dc; ++i) csq += coarse_atoms.tube(i, j).squaredNorm();
    const double s = std::max({1.0, std::sqrt(fsq), std::sqrt(csq)});
    if (s > 1.0) {
      for (Index i = 0; i < df; ++i) fine_atoms.tube(i, j) /= s;
      for (Index i = 0; i < dc; ++i) coarse_atoms.tube(i, j) /= s;
    }
  }

  JointTrainResult out;
  out.pair.fine.atoms = std::move(fine_atoms);
  out.pair.coarse.atoms = std::move(coarse_atoms);
  out.pair.lambda = cfg.lambda;
  out.objective_trace = std::move(trained.objective_trace);
  return out;
}

void save_dictionary_pair(const std::filesystem::path& dir, const std::string& name, const DictionaryPair& pair) {
  std::filesystem::create_directories(dir);
  write_tns3(dir / (name + "_fine.tns3"), pair.fine.atoms);
  write_tns3(dir / (name + "_coarse.tns3"), pair.coarse.atoms);
  nlohmann::json meta{{"atom_count", pair.fine.atom_count()},
                      {"lambda", pair.lambda},
                      {"constraint_bound", 1.0},
                      {"scale", pair.scale},
                      {"patch", {pair.patch_rows, pair.patch_cols}},
                      {"stride", {pair.stride_rows, pair.stride_cols}},
                      {"norm_lo", pair.norm_lo},
                      {"norm_hi", pair.norm_hi}};
  write_text_file(dir / (name + ".json"), meta.dump(2) + "\n");
}

DictionaryPair load_dictionary_pair(const std::filesystem::path& dir, const std::string& name) {
  DictionaryPair pair;
  pair.fine.atoms = read_tns3(dir / (name + "_fine.tns3"));
  pair.coarse.atoms = read_tns3(dir / (name + "_coarse.tns3"));
  const auto meta = nlohmann::json::parse(read_text_file(dir / (name + ".json")));
  pair.lambda = meta.at("lambda").get<double>();
  pair.scale = meta.at("scale").get<int>();
  pair.patch_rows = meta.at("patch")[0].get<int>();
  pair.patch_cols = meta.at("patch")[1].get<int>();
  pair.stride_rows = meta.at("stride")[0].get<int>();
  pair.stride_cols = meta.at("stride")[1].get<int>();
  pair.norm_lo = meta.at("norm_lo").get<double>();
  pair.norm_hi = meta.at("norm_hi").get<double>();
  if (pair.fine.atom_count() != pair.coarse.atom_count())
    throw std::runtime_error("load_dictionary_pair: fine/coarse atom counts differ");
  if (meta.at("atom_count").get<Eigen::Index>() != pair.fine.atom_count())
    throw std::runtime_error("load_dictionary_pair: sidecar atom_count does not match tensors");
  return pair;
}

}  // namespace tubalsr
