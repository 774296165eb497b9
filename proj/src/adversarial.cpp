#include "tubalsr/adversarial.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tubalsr/io.hpp"
#include "tubalsr/sparse_coding.hpp"
#include "tubalsr/tensor_ops.hpp"

namespace tubalsr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kProbClamp = 1e-7;

MatrixXd leaky(const MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0 ? v : kLeakySlope * v; });
}

MatrixXd leaky_mask(const MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0 ? 1.0 : kLeakySlope; });
}

struct DiscForward {
  MatrixXd z1, h1, z2, h2;
  RowVectorXd z3;
  RowVectorXd p;  // unclamped sigmoid
};

DiscForward disc_batch_forward(const Discriminator& d, const MatrixXd& x) {
  DiscForward f;
  f.z1 = (d.w1 * x).colwise() + d.b1;
  f.h1 = leaky(f.z1);
  f.z2 = (d.w2 * f.h1).colwise() + d.b2;
  f.h2 = leaky(f.z2);
  f.z3 = (d.w3 * f.h2).array() + d.b3;
  f.p = f.z3.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  return f;
}

// dL/dx for loss already differentiated to dL/dz3, shared by disc and gen.
MatrixXd disc_input_grad(const Discriminator& d, const DiscForward& f, const RowVectorXd& dz3) {
  MatrixXd dh2 = d.w3.transpose() * dz3;
  MatrixXd dz2 = dh2.cwiseProduct(leaky_mask(f.z2));
  MatrixXd dh1 = d.w2.transpose() * dz2;
  MatrixXd dz1 = dh1.cwiseProduct(leaky_mask(f.z1));
  return d.w1.transpose() * dz1;
}

double bce(const RowVectorXd& p, const VectorXd& labels) {
  double loss = 0.0;
  for (Index j = 0; j < p.size(); ++j) {
    const double pc = std::clamp(p[j], kProbClamp, 1.0 - kProbClamp);
    loss += labels[j] > 0.5 ? -std::log(pc) : -std::log(1.0 - pc);
  }
  return loss / static_cast<double>(p.size());
}

VectorXd flatten_column(const Tensor3d& t, Index j) {
  VectorXd v(t.n1() * t.n3());
  for (Index i = 0; i < t.n1(); ++i) v.segment(i * t.n3(), t.n3()) = t.tube(i, j);
  return v;
}

MatrixXd flatten_batch(const Tensor3d& t) {
  MatrixXd x(t.n1() * t.n3(), t.n2());
  for (Index j = 0; j < t.n2(); ++j) x.col(j) = flatten_column(t, j);
  return x;
}

Tensor3d unflatten_batch(const MatrixXd& x, Index dim, Index depth) {
  Tensor3d t(dim, x.cols(), depth);
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < dim; ++i) t.tube(i, j) = x.col(j).segment(i * depth, depth);
  return t;
}

}  // namespace

Discriminator Discriminator::init(Index input_dim, Index h1, Index h2, Rng& rng) {
  Discriminator d;
  auto gauss = [&rng](Index r, Index c, double scale) {
    MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
    return m;
  };
  d.w1 = gauss(h1, input_dim, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  d.b1 = VectorXd::Zero(h1);
  d.w2 = gauss(h2, h1, 1.0 / std::sqrt(static_cast<double>(h1)));
  d.b2 = VectorXd::Zero(h2);
  d.w3 = gauss(1, h2, 1.0 / std::sqrt(static_cast<double>(h2)));
  d.b3 = 0.0;
  return d;
}

double disc_forward(const Discriminator& d, const Eigen::Ref<const VectorXd>& patch) {
  if (patch.size() != d.input_dim()) throw std::invalid_argument("disc_forward: input size mismatch");
  const DiscForward f = disc_batch_forward(d, patch);
  return std::clamp(f.p[0], kProbClamp, 1.0 - kProbClamp);
}

double disc_loss(const Discriminator& d, const MatrixXd& patches, const VectorXd& labels) {
  if (patches.cols() != labels.size() || patches.cols() == 0)
    throw std::invalid_argument("disc_loss: empty batch or label mismatch");
  return bce(disc_batch_forward(d, patches).p, labels);
}

DiscGrads disc_grad(const Discriminator& d, const MatrixXd& patches, const VectorXd& labels) {
  if (patches.cols() != labels.size() || patches.cols() == 0)
    throw std::invalid_argument("disc_grad: empty batch or label mismatch");
  const DiscForward f = disc_batch_forward(d, patches);
  const double inv_b = 1.0 / static_cast<double>(patches.cols());

  const RowVectorXd dz3 = (f.p - labels.transpose()) * inv_b;  // exact d(mean BCE)/dz3
  DiscGrads g;
  g.w3 = dz3 * f.h2.transpose();
  g.b3 = dz3.sum();
  MatrixXd dh2 = d.w3.transpose() * dz3;
  MatrixXd dz2 = dh2.cwiseProduct(leaky_mask(f.z2));
  g.w2 = dz2 * f.h1.transpose();
  g.b2 = dz2.rowwise().sum();
  MatrixXd dh1 = d.w2.transpose() * dz2;
  MatrixXd dz1 = dh1.cwiseProduct(leaky_mask(f.z1));
  g.w1 = dz1 * patches.transpose();
  g.b1 = dz1.rowwise().sum();
  return g;
}

GeneratorRefiner GeneratorRefiner::identity(const Tensor3d& coarse_atoms, double lambda, int iters,
                                            Index fine_patch_dim) {
  GeneratorRefiner g;
  g.thresholds = default_lista_thresholds(coarse_atoms, lambda, iters);
  g.output_map = MatrixXd::Identity(fine_patch_dim, fine_patch_dim);
  return g;
}

namespace {

// Forward pass of the unrolled coder with all intermediates kept for the
// backward sweep. Arithmetic matches lista_t step for step.
struct GenForward {
  std::vector<Tensor3d> iterates;   // A_0 .. A_K
  std::vector<Tensor3d> preshrink;  // Z_p = A_p - G_p / L, p = 0..K-1
  Tensor3d fine_raw;                // Df * A_K
  Tensor3d output;                  // M applied per slice
  double step_bound = 0.0;
};

GenForward gen_forward_full(const GeneratorRefiner& g, const DictionaryPair& pair, const Tensor3d& coarse) {
  if (coarse.n1() != pair.coarse.atoms.n1() || coarse.n3() != pair.coarse.atoms.n3())
    throw std::invalid_argument("generator_forward: coarse batch does not match the pair");
  const Index fine_dim = pair.fine.atoms.n1();
  if (g.output_map.rows() != fine_dim || g.output_map.cols() != fine_dim)
    throw std::invalid_argument("generator_forward: output map does not match the fine patch dim");

  GenForward f;
  f.step_bound = effective_step_bound(pair.coarse.atoms);
  const Tensor3d& dc = pair.coarse.atoms;
  Tensor3d a(dc.n2(), coarse.n2(), coarse.n3());
  f.iterates.push_back(a);
  for (double tau : g.thresholds) {
    const Tensor3d grad = 2.0 * tprod(ttranspose(dc), tprod(dc, a) - coarse);
    Tensor3d z = a;
    z.flat() = a.flat() - grad.flat() / f.step_bound;
    f.preshrink.push_back(z);
    a = soft_threshold(z, tau);
    f.iterates.push_back(a);
  }
  f.fine_raw = tprod(pair.fine.atoms, a);
  f.output = f.fine_raw;
  for (Index k = 0; k < f.output.n3(); ++k) f.output.set_slice(k, g.output_map * f.fine_raw.slice(k));
  return f;
}

}  // namespace

Tensor3d generator_forward(const GeneratorRefiner& g, const DictionaryPair& pair, const Tensor3d& coarse) {
  return gen_forward_full(g, pair, coarse).output;
}

GenEval gen_grad(const GeneratorRefiner& g, const DictionaryPair& pair, const Discriminator& d,
                 const Tensor3d& coarse, const Tensor3d& fine_truth, double eta) {
  if (!fine_truth.same_dims(Tensor3d(pair.fine.atoms.n1(), coarse.n2(), coarse.n3())))
    throw std::invalid_argument("gen_grad: fine truth shape mismatch");

  const GenForward f = gen_forward_full(g, pair, coarse);
  const Index batch = coarse.n2();
  const double inv_b = 1.0 / static_cast<double>(batch);

  GenEval out;
  {
    Tensor3d resid = f.output - fine_truth;
    out.content_loss = inv_b * fro_norm(resid) * fro_norm(resid);
  }

  // dL/d(output): content part.
  Tensor3d dout = f.output - fine_truth;
  dout *= 2.0 * inv_b;

  // Adversarial part (non-saturating: -log D(G)) backpropagated through the
  // frozen discriminator into the generated patches.
  const MatrixXd fake = flatten_batch(f.output);
  const DiscForward df = disc_batch_forward(d, fake);
  for (Index j = 0; j < batch; ++j) {
    const double pc = std::clamp(df.p[j], kProbClamp, 1.0 - kProbClamp);
    out.adv_loss += -std::log(pc);
  }
  out.adv_loss *= inv_b;
  if (eta != 0.0) {
    const RowVectorXd dz3 = (df.p.array() - 1.0).matrix() * inv_b;  // d/dz of mean -log sigmoid(z)
    const MatrixXd dfake = disc_input_grad(d, df, dz3);
    const Tensor3d dout_adv = unflatten_batch(dfake, f.output.n1(), f.output.n3());
    dout.flat() += eta * dout_adv.flat();
  }

  // Output map: dL/dM = sum_k dout_k * fine_raw_k^T; then into the coder.
  out.grads.output_map = MatrixXd::Zero(g.output_map.rows(), g.output_map.cols());
  Tensor3d dfine(f.fine_raw.n1(), batch, f.fine_raw.n3());
  for (Index k = 0; k < f.output.n3(); ++k) {
    const MatrixXd dk = dout.slice(k);
    out.grads.output_map.noalias() += dk * f.fine_raw.slice(k).transpose();
    dfine.set_slice(k, g.output_map.transpose() * dk);
  }

  Tensor3d da = tprod(ttranspose(pair.fine.atoms), dfine);

  // Backward through the unrolled proximal iterations.
  const Tensor3d& dc = pair.coarse.atoms;
  out.grads.thresholds.assign(g.thresholds.size(), 0.0);
  for (int p = static_cast<int>(g.thresholds.size()) - 1; p >= 0; --p) {
    const Tensor3d& z = f.preshrink[static_cast<std::size_t>(p)];
    const double tau = g.thresholds[static_cast<std::size_t>(p)];
    Tensor3d dz = da;
    double dtau = 0.0;
    for (Index i = 0; i < z.size(); ++i) {
      if (std::abs(z.data()[i]) > tau) {
        dtau -= (z.data()[i] > 0 ? 1.0 : -1.0) * da.data()[i];
      } else {
        dz.data()[i] = 0.0;
      }
    }
    out.grads.thresholds[static_cast<std::size_t>(p)] = dtau;
    // dA_p = (I - (2/L) Dc^T * Dc *) dz
    const Tensor3d back = 2.0 * tprod(ttranspose(dc), tprod(dc, dz));
    da = dz;
    da.flat() -= back.flat() / f.step_bound;
  }
  return out;
}

namespace {

struct PatchDataset {
  Tensor3d coarse;  // coarse patch dim x N x depth, normalized
  Tensor3d fine;    // fine patch dim x N x depth, normalized
};

PatchDataset build_dataset(const std::vector<RadioMap>& fine_maps, const std::vector<RadioMap>& coarse_maps,
                           const DictionaryPair& pair) {
  if (fine_maps.empty() || fine_maps.size() != coarse_maps.size())
    throw std::invalid_argument("train_tgan: need matching nonempty fine/coarse map lists");

  std::vector<Tensor3d> cs, fs;
  Index total = 0;
  for (std::size_t m = 0; m < fine_maps.size(); ++m) {
    const RadioMap& fine = fine_maps[m];
    const RadioMap& coarse = coarse_maps[m];
    if (coarse.rows() * pair.scale != fine.rows() || coarse.cols() * pair.scale != fine.cols() ||
        coarse.ap_count() != fine.ap_count())
      throw std::invalid_argument("train_tgan: coarse map is not the fine map at 1/scale");
    const PatchGrid cg = make_patch_grid(coarse.rows(), coarse.cols(), pair.patch_rows, pair.patch_cols,
                                         pair.stride_rows, pair.stride_cols);
    PatchGrid fg;
    fg.rows = cg.rows * pair.scale;
    fg.cols = cg.cols * pair.scale;
    fg.patch_rows = cg.patch_rows * pair.scale;
    fg.patch_cols = cg.patch_cols * pair.scale;
    for (auto [i, j] : cg.positions) fg.positions.emplace_back(i * pair.scale, j * pair.scale);

    Tensor3d c = extract_patches(coarse.rss, cg);
    Tensor3d f = extract_patches(fine.rss, fg);
    c.flat() = (c.flat().array() - pair.norm_lo) / (pair.norm_hi - pair.norm_lo);
    f.flat() = (f.flat().array() - pair.norm_lo) / (pair.norm_hi - pair.norm_lo);
    total += c.n2();
    cs.push_back(std::move(c));
    fs.push_back(std::move(f));
  }

  PatchDataset ds;
  ds.coarse = Tensor3d(cs.front().n1(), total, cs.front().n3());
  ds.fine = Tensor3d(fs.front().n1(), total, fs.front().n3());
  Index at = 0;
  for (std::size_t m = 0; m < cs.size(); ++m) {
    for (Index j = 0; j < cs[m].n2(); ++j, ++at) {
      for (Index i = 0; i < ds.coarse.n1(); ++i) ds.coarse.tube(i, at) = cs[m].tube(i, j);
      for (Index i = 0; i < ds.fine.n1(); ++i) ds.fine.tube(i, at) = fs[m].tube(i, j);
    }
  }
  return ds;
}

Tensor3d gather_cols(const Tensor3d& t, const std::vector<Index>& cols) {
  Tensor3d out(t.n1(), static_cast<Index>(cols.size()), t.n3());
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (Index i = 0; i < t.n1(); ++i) out.tube(i, static_cast<Index>(c)) = t.tube(i, cols[c]);
  return out;
}

void sgd_disc(Discriminator& d, const DiscGrads& g, DiscGrads& vel, bool& vel_ready, double lr, double mu) {
  if (!vel_ready) {
    vel = g;
    vel_ready = true;
  } else {
    vel.w1 = mu * vel.w1 + g.w1;
    vel.b1 = mu * vel.b1 + g.b1;
    vel.w2 = mu * vel.w2 + g.w2;
    vel.b2 = mu * vel.b2 + g.b2;
    vel.w3 = mu * vel.w3 + g.w3;
    vel.b3 = mu * vel.b3 + g.b3;
  }
  d.w1 -= lr * vel.w1;
  d.b1 -= lr * vel.b1;
  d.w2 -= lr * vel.w2;
  d.b2 -= lr * vel.b2;
  d.w3 -= lr * vel.w3;
  d.b3 -= lr * vel.b3;
}

}  // namespace

TganResult train_tgan(const std::vector<RadioMap>& fine_maps, const std::vector<RadioMap>& coarse_maps,
                      const DictionaryPair& pair, const TganConfig& cfg) {
  if (cfg.eta < 0 || !(cfg.learning_rate > 0)) throw std::invalid_argument("train_tgan: bad config");
  if (cfg.batch_size < 1 || cfg.lista_iters < 1) throw std::invalid_argument("train_tgan: bad config");

  const PatchDataset ds = build_dataset(fine_maps, coarse_maps, pair);
  const Index n = ds.coarse.n2();
  Rng rng(cfg.seed);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  const Index held = std::max<Index>(1, static_cast<Index>(std::floor(cfg.holdout_fraction * static_cast<double>(n))));
  if (n - held < 1) throw std::invalid_argument("train_tgan: not enough patches for a train/holdout split");
  std::vector<Index> holdout(order.begin(), order.begin() + held);
  std::vector<Index> train(order.begin() + held, order.end());

  const Tensor3d train_c = gather_cols(ds.coarse, train), train_f = gather_cols(ds.fine, train);
  const Tensor3d held_c = gather_cols(ds.coarse, holdout), held_f = gather_cols(ds.fine, holdout);

  TganResult out;
  out.refiner = GeneratorRefiner::identity(pair.coarse.atoms, pair.lambda, cfg.lista_iters, pair.fine.atoms.n1());
  out.discriminator = Discriminator::init(pair.fine.atoms.n1() * pair.fine.atoms.n3(), cfg.disc_hidden1,
                                          cfg.disc_hidden2, rng);

  const MatrixXd held_real = flatten_batch(held_f);
  auto holdout_accuracy = [&]() {
    const MatrixXd held_fake = flatten_batch(generator_forward(out.refiner, pair, held_c));
    double correct = 0.0;
    for (Index j = 0; j < held; ++j) {
      if (disc_forward(out.discriminator, held_real.col(j)) > 0.5) correct += 1.0;
      if (disc_forward(out.discriminator, held_fake.col(j)) <= 0.5) correct += 1.0;
    }
    return correct / static_cast<double>(2 * held);
  };

  DiscGrads disc_vel;
  bool disc_vel_ready = false;
  GenGrads gen_vel;
  bool gen_vel_ready = false;

  auto disc_step = [&](const Tensor3d& real_batch, const Tensor3d& fake_batch) {
    const Index b = real_batch.n2();
    MatrixXd x(real_batch.n1() * real_batch.n3(), 2 * b);
    x.leftCols(b) = flatten_batch(real_batch);
    x.rightCols(b) = flatten_batch(fake_batch);
    VectorXd y(2 * b);
    y.head(b).setOnes();
    y.tail(b).setZero();
    sgd_disc(out.discriminator, disc_grad(out.discriminator, x, y), disc_vel, disc_vel_ready,
             cfg.learning_rate, cfg.momentum);
  };

  std::vector<Index> sweep(train.size());
  std::iota(sweep.begin(), sweep.end(), Index{0});

  // Discriminator warmup against the unrefined generator (its output is
  // constant while the refiner is untouched).
  {
    const Tensor3d fakes = generator_forward(out.refiner, pair, train_c);
    for (int e = 0; e < cfg.disc_pretrain_epochs; ++e) {
      rng.shuffle(sweep);
      for (std::size_t at = 0; at < sweep.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
        std::vector<Index> batch(sweep.begin() + static_cast<std::ptrdiff_t>(at),
                                 sweep.begin() + static_cast<std::ptrdiff_t>(
                                                     std::min(sweep.size(), at + static_cast<std::size_t>(cfg.batch_size))));
        disc_step(gather_cols(train_f, batch), gather_cols(fakes, batch));
      }
    }
  }

  auto epoch_metrics = [&](int epoch) {
    GenEval eval = gen_grad(out.refiner, pair, out.discriminator, train_c, train_f, cfg.eta);
    TganEpoch row;
    row.epoch = epoch;
    row.content_loss = eval.content_loss;
    row.adv_loss = eval.adv_loss;
    row.disc_accuracy = holdout_accuracy();
    out.history.push_back(row);
    return eval.content_loss;
  };

  const double initial_content = epoch_metrics(0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(sweep);
    for (std::size_t at = 0; at < sweep.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<Index> batch(sweep.begin() + static_cast<std::ptrdiff_t>(at),
                               sweep.begin() + static_cast<std::ptrdiff_t>(
                                                   std::min(sweep.size(), at + static_cast<std::size_t>(cfg.batch_size))));
      const Tensor3d bc = gather_cols(train_c, batch), bf = gather_cols(train_f, batch);

      disc_step(bf, generator_forward(out.refiner, pair, bc));

      GenEval eval = gen_grad(out.refiner, pair, out.discriminator, bc, bf, cfg.eta);
      if (!gen_vel_ready) {
        gen_vel = eval.grads;
        gen_vel_ready = true;
      } else {
        for (std::size_t i = 0; i < gen_vel.thresholds.size(); ++i)
          gen_vel.thresholds[i] = cfg.momentum * gen_vel.thresholds[i] + eval.grads.thresholds[i];
        gen_vel.output_map = cfg.momentum * gen_vel.output_map + eval.grads.output_map;
      }
      for (std::size_t i = 0; i < out.refiner.thresholds.size(); ++i)
        out.refiner.thresholds[i] =
            std::max(0.0, out.refiner.thresholds[i] - cfg.learning_rate * gen_vel.thresholds[i]);
      out.refiner.output_map -= cfg.learning_rate * gen_vel.output_map;
    }

    const double content = epoch_metrics(epoch);
    if (!std::isfinite(content) || content > 10.0 * std::max(initial_content, 1e-12))
      throw std::runtime_error("train_tgan: content loss diverged (exceeded 10x its initial value)");
  }
  return out;
}

void save_tgan(const std::filesystem::path& dir, const std::string& name, const TganResult& result) {
  std::filesystem::create_directories(dir);
  auto as_tensor = [](const MatrixXd& m) {
    Tensor3d t(m.rows(), m.cols(), 1);
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) t(i, j, 0) = m(i, j);
    return t;
  };
  const Discriminator& d = result.discriminator;
  write_tns3(dir / (name + "_disc_w1.tns3"), as_tensor(d.w1));
  write_tns3(dir / (name + "_disc_w2.tns3"), as_tensor(d.w2));
  write_tns3(dir / (name + "_disc_w3.tns3"), as_tensor(d.w3));
  write_tns3(dir / (name + "_disc_b.tns3"), [&] {
    Tensor3d t(d.b1.size() + d.b2.size() + 1, 1, 1);
    Index at = 0;
    for (Index i = 0; i < d.b1.size(); ++i) t(at++, 0, 0) = d.b1[i];
    for (Index i = 0; i < d.b2.size(); ++i) t(at++, 0, 0) = d.b2[i];
    t(at, 0, 0) = d.b3;
    return t;
  }());
  write_tns3(dir / (name + "_gen_map.tns3"), as_tensor(result.refiner.output_map));
  write_tns3(dir / (name + "_gen_thresholds.tns3"), [&] {
    Tensor3d t(static_cast<Index>(result.refiner.thresholds.size()), 1, 1);
    for (std::size_t i = 0; i < result.refiner.thresholds.size(); ++i)
      t(static_cast<Index>(i), 0, 0) = result.refiner.thresholds[i];
    return t;
  }());
  nlohmann::json meta{{"disc_hidden", {d.w1.rows(), d.w2.rows()}},
                      {"input_dim", d.input_dim()},
                      {"lista_iters", result.refiner.thresholds.size()},
                      {"epochs_recorded", result.history.size()}};
  write_text_file(dir / (name + ".json"), meta.dump(2) + "\n");
}

void write_tgan_history_csv(const std::filesystem::path& path, const std::vector<TganEpoch>& history) {
  std::vector<std::vector<double>> rows;
  for (const TganEpoch& e : history)
    rows.push_back({static_cast<double>(e.epoch), e.content_loss, e.adv_loss, e.disc_accuracy});
  write_csv(path, {"epoch", "content_loss", "adv_loss", "disc_accuracy"}, rows);
}

}  // namespace tubalsr
