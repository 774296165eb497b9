#include "tubalsr/cli.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "tubalsr/adversarial.hpp"
#include "tubalsr/dict_learning.hpp"
#include "tubalsr/io.hpp"
#include "tubalsr/localization.hpp"
#include "tubalsr/rng.hpp"
#include "tubalsr/sparse_coding.hpp"
#include "tubalsr/super_resolution.hpp"
#include "tubalsr/synth_data.hpp"
#include "tubalsr/tensor_ops.hpp"

namespace tubalsr::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using Eigen::Index;

namespace {

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void bail(int code, const std::string& message) { throw CliError{code, message}; }

json load_config(const CliOptions& opts) {
  if (opts.config.empty()) bail(kUsage, "missing --config");
  if (!fs::exists(opts.config)) bail(kMissingFile, "config not found: " + opts.config.string());
  json cfg;
  try {
    cfg = json::parse(read_text_file(opts.config));
  } catch (const std::exception& e) {
    bail(kBadConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) bail(kBadConfig, "config root must be a JSON object");
  if (opts.seed) cfg["seed"] = *opts.seed;
  return cfg;
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const std::exception&) {
    bail(kBadConfig, "field '" + key + "' has the wrong type");
  }
}

template <typename T>
T require(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) bail(kBadConfig, "missing required field '" + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const std::exception&) {
    bail(kBadConfig, "field '" + key + "' has the wrong type");
  }
}

fs::path existing_file(const json& cfg, const std::string& key) {
  const fs::path p = require<std::string>(cfg, key);
  if (!fs::exists(p)) bail(kMissingFile, "file referenced by '" + key + "' not found: " + p.string());
  return p;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash12(const json& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.dump())));
  return std::string(buf).substr(0, 12);
}

// "dir/base.tns3" -> load_radiomap(dir, base)
RadioMap load_map_file(const fs::path& tns3) {
  if (!fs::exists(tns3)) bail(kMissingFile, "map not found: " + tns3.string());
  fs::path base = tns3.stem();
  if (!fs::exists(tns3.parent_path() / (base.string() + ".json")))
    bail(kMissingFile, "map geometry sidecar not found for " + tns3.string());
  return load_radiomap(tns3.parent_path(), base.string());
}

PathLossParams params_from(const json& j, std::uint64_t seed) {
  PathLossParams p;
  p.seed = seed;
  p.tx_power_dbm = get_or(j, "tx_power_dbm", p.tx_power_dbm);
  p.path_loss_exponent = get_or(j, "path_loss_exponent", p.path_loss_exponent);
  p.reference_distance_m = get_or(j, "reference_distance_m", p.reference_distance_m);
  p.shadow_sigma_db = get_or(j, "shadow_sigma_db", p.shadow_sigma_db);
  p.shadow_corr_m = get_or(j, "shadow_corr_m", p.shadow_corr_m);
  p.shadow_ap_corr = get_or(j, "shadow_ap_corr", p.shadow_ap_corr);
  p.ap_count = get_or(j, "ap_count", p.ap_count);
  if (j.contains("ap_positions"))
    for (const auto& xy : j.at("ap_positions"))
      p.ap_positions.emplace_back(xy.at(0).get<double>(), xy.at(1).get<double>());
  return p;
}

IstaConfig ista_from(const json& cfg, double lambda, const IstaConfig& defaults) {
  IstaConfig c = defaults;
  c.lambda = lambda;
  if (cfg.contains("ista")) {
    const json& j = cfg.at("ista");
    c.max_iters = get_or(j, "max_iters", c.max_iters);
    c.rel_tol = get_or(j, "rel_tol", c.rel_tol);
  }
  return c;
}

SrTrainOptions sr_options_from(const json& cfg, std::uint64_t seed) {
  SrTrainOptions opt;
  opt.scale = get_or(cfg, "scale", 2);
  if (cfg.contains("patch")) {
    opt.patch_rows = cfg.at("patch").at(0).get<int>();
    opt.patch_cols = cfg.at("patch").at(1).get<int>();
  }
  if (cfg.contains("stride")) {
    opt.stride_rows = cfg.at("stride").at(0).get<int>();
    opt.stride_cols = cfg.at("stride").at(1).get<int>();
  }
  opt.dict.atom_count = get_or(cfg, "atoms", 32);
  opt.dict.lambda = get_or(cfg, "lambda", 0.01);
  opt.dict.iters = get_or(cfg, "iters", 10);
  opt.dict.seed = seed;
  opt.dict.ista = ista_from(cfg, opt.dict.lambda, {opt.dict.lambda, 120, 1e-9});
  return opt;
}

struct RunContext {
  fs::path dir;
  json manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  bool verbose = false;

  void note_output(const std::string& name) { manifest["outputs"].push_back(name); }
  void log(const std::string& msg) const {
    if (verbose) std::cerr << "[tubalsr] " << msg << "\n";
  }
  void finish() {
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    manifest["timings_ms"] = ms;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

RunContext open_run(const std::string& command, const CliOptions& opts, const json& cfg) {
  RunContext ctx;
  ctx.dir = opts.out / (command + "_" + hash12(cfg));
  fs::create_directories(ctx.dir);
  ctx.manifest = json{{"command", command},
                      {"config", cfg},
                      {"config_hash", hash12(cfg)},
                      {"version", "tubalsr 0.1.0"},
                      {"threads", []() {
                         const char* t = std::getenv("TUBALSR_THREADS");
                         return t ? std::atoi(t) : 1;
                       }()},
                      {"outputs", json::array()}};
  ctx.verbose = opts.verbose;
  return ctx;
}

// ---------------------------------------------------------------------------

void cmd_synth(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const std::string type = require<std::string>(cfg, "type");
  const std::string name = get_or<std::string>(cfg, "name", "tensor");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 0);
  RunContext ctx = open_run("synth", opts, cfg);

  if (type == "radiomap") {
    const auto region = require<std::vector<double>>(cfg, "region_m");
    if (region.size() != 2) bail(kBadConfig, "region_m must have two entries");
    const double spacing = get_or(cfg, "spacing_m", 1.0);
    const PathLossParams params = params_from(cfg.contains("params") ? cfg.at("params") : json::object(), seed);
    const RadioMap map = gen_radiomap(region[0], region[1], spacing, params);
    save_radiomap(ctx.dir, name, map);
    ctx.note_output(name + ".tns3");
    ctx.note_output(name + ".json");
    ctx.manifest["grid"] = {map.rows(), map.cols(), map.ap_count()};
  } else if (type == "low_tubal_rank") {
    const auto dims = require<std::vector<Index>>(cfg, "dims");
    if (dims.size() != 3) bail(kBadConfig, "dims must have three entries");
    const Index r = require<Index>(cfg, "r");
    const Tensor3d t = gen_low_tubal_rank(dims[0], dims[1], dims[2], r, seed);
    write_tns3(ctx.dir / (name + ".tns3"), t);
    ctx.note_output(name + ".tns3");
  } else {
    bail(kBadConfig, "unknown synth type '" + type + "'");
  }
  ctx.finish();
}

void cmd_svd_report(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const fs::path tensor_path = existing_file(cfg, "tensor");
  const bool center = get_or(cfg, "center", true);
  const double level = get_or(cfg, "level", 0.95);
  RunContext ctx = open_run("svd-report", opts, cfg);

  Tensor3d t = read_tns3(tensor_path);
  if (center) t.flat().array() -= t.flat().mean();

  const auto tsvd_cdf = energy_cdf(t);
  const auto mat_cdf = energy_cdf_matrix(t);
  const std::size_t n = std::max(tsvd_cdf.size(), mat_cdf.size());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({static_cast<double>(i + 1), i < tsvd_cdf.size() ? tsvd_cdf[i] : 1.0,
                    i < mat_cdf.size() ? mat_cdf[i] : 1.0});
  write_csv(ctx.dir / "svd_cdf.csv", {"component", "tsvd_energy_cdf", "matrix_svd_energy_cdf"}, rows);
  ctx.note_output("svd_cdf.csv");
  ctx.manifest["components_to_level"] = {{"level", level},
                                         {"tsvd", components_to_energy(tsvd_cdf, level)},
                                         {"matrix_svd", components_to_energy(mat_cdf, level)},
                                         {"centered", center}};
  ctx.finish();
}

std::vector<Index> seeded_patch_subset(Index total, double fraction, std::uint64_t seed,
                                       std::vector<Index>* complement) {
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (fraction >= 1.0) return idx;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  rng.shuffle(idx);
  const Index keep = std::max<Index>(1, static_cast<Index>(std::floor(fraction * static_cast<double>(total))));
  if (complement) complement->assign(idx.begin() + keep, idx.end());
  idx.resize(static_cast<std::size_t>(keep));
  return idx;
}

void cmd_train_dict(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const RadioMap fine = load_map_file(existing_file(cfg, "fine_map"));
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 0);
  const SrTrainOptions opt = sr_options_from(cfg, seed);
  const double fraction = get_or(cfg, "train_fraction", 1.0);
  RunContext ctx = open_run("train-dict", opts, cfg);

  const PatchPairSet pairs =
      extract_patch_pairs(fine, opt.scale, opt.patch_rows, opt.patch_cols, opt.stride_rows, opt.stride_cols);
  const std::vector<Index> subset = seeded_patch_subset(pairs.coarse.n2(), fraction, seed, nullptr);

  ctx.log("training joint dictionary on " + std::to_string(subset.size()) + " patch pairs");
  const JointTrainResult res = train_sr_pair(fine, opt, fraction >= 1.0 ? std::vector<Index>{} : subset);
  save_dictionary_pair(ctx.dir, "dict", res.pair);
  ctx.note_output("dict_fine.tns3");
  ctx.note_output("dict_coarse.tns3");
  ctx.note_output("dict.json");

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.objective_trace.size(); ++i)
    rows.push_back({static_cast<double>(i), res.objective_trace[i]});
  write_csv(ctx.dir / "objective_trace.csv", {"iteration", "objective"}, rows);
  ctx.note_output("objective_trace.csv");
  ctx.finish();
}

void cmd_super_resolve(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const RadioMap coarse = load_map_file(existing_file(cfg, "coarse_map"));
  const fs::path dict_base = require<std::string>(cfg, "dict");
  RunContext ctx = open_run("super-resolve", opts, cfg);

  DictionaryPair pair;
  try {
    pair = load_dictionary_pair(dict_base.parent_path(), dict_base.filename().string());
  } catch (const std::exception& e) {
    bail(kMissingFile, std::string("cannot load dictionary pair: ") + e.what());
  }
  const int s = get_or(cfg, "scale", pair.scale);
  const IstaConfig icfg = ista_from(cfg, pair.lambda, {pair.lambda, 300, 1e-9});

  const RadioMap sr = super_resolve(coarse, pair, icfg, s);
  save_radiomap(ctx.dir, "sr", sr);
  ctx.note_output("sr.tns3");
  ctx.note_output("sr.json");

  const RadioMap baseline = upsample_interp(coarse, s);
  save_radiomap(ctx.dir, "trilinear", baseline);
  ctx.note_output("trilinear.tns3");

  if (cfg.contains("reference_map")) {
    const RadioMap ref = load_map_file(existing_file(cfg, "reference_map"));
    std::vector<std::vector<double>> rows{{0.0, psnr(ref, sr)}, {1.0, psnr(ref, baseline)}};
    write_csv(ctx.dir / "psnr.csv", {"method", "psnr_db"}, rows);
    ctx.note_output("psnr.csv");
    ctx.manifest["psnr_db"] = {{"sparse_coding", rows[0][1]}, {"trilinear", rows[1][1]}};
    ctx.manifest["psnr_method_key"] = {{"0", "sparse_coding"}, {"1", "trilinear"}};
  }

  // diagnostic only: how far the output drifts from the input it upsampled
  ctx.manifest["coarse_consistency_rel"] =
      fro_norm(downsample(sr, s).rss - coarse.rss) / std::max(1e-300, fro_norm(coarse.rss));
  ctx.finish();
}

TganConfig tgan_from(const json& cfg, std::uint64_t seed) {
  TganConfig t;
  t.eta = get_or(cfg, "eta", t.eta);
  t.learning_rate = get_or(cfg, "learning_rate", t.learning_rate);
  t.momentum = get_or(cfg, "momentum", t.momentum);
  t.epochs = get_or(cfg, "epochs", t.epochs);
  t.batch_size = get_or(cfg, "batch_size", t.batch_size);
  t.lista_iters = get_or(cfg, "lista_iters", t.lista_iters);
  t.disc_pretrain_epochs = get_or(cfg, "disc_pretrain_epochs", t.disc_pretrain_epochs);
  t.holdout_fraction = get_or(cfg, "holdout_fraction", t.holdout_fraction);
  t.seed = seed;
  return t;
}

void cmd_train_tgan(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const RadioMap fine = load_map_file(existing_file(cfg, "fine_map"));
  const fs::path dict_base = require<std::string>(cfg, "dict");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 0);
  RunContext ctx = open_run("train-tgan", opts, cfg);

  DictionaryPair pair;
  try {
    pair = load_dictionary_pair(dict_base.parent_path(), dict_base.filename().string());
  } catch (const std::exception& e) {
    bail(kMissingFile, std::string("cannot load dictionary pair: ") + e.what());
  }
  const RadioMap coarse = cfg.contains("coarse_map")
                              ? load_map_file(existing_file(cfg, "coarse_map"))
                              : downsample(fine, pair.scale);
  const TganConfig tcfg = tgan_from(cfg, seed);

  const TganResult res = train_tgan({fine}, {coarse}, pair, tcfg);
  save_tgan(ctx.dir, "tgan", res);
  write_tgan_history_csv(ctx.dir / "history.csv", res.history);
  ctx.note_output("history.csv");

  const PatchTransform tf = res.refiner.transform();
  const IstaConfig icfg{pair.lambda, tcfg.lista_iters, 0.0};
  const RadioMap refined = super_resolve(coarse, pair, icfg, pair.scale, &tf);
  save_radiomap(ctx.dir, "refined_sr", refined);
  ctx.note_output("refined_sr.tns3");
  ctx.manifest["refined_psnr_db"] = psnr(fine, refined);
  ctx.manifest["final_disc_accuracy"] = res.history.back().disc_accuracy;
  ctx.finish();
}

ClassifierConfig classifier_from(const json& cfg, std::uint64_t seed) {
  ClassifierConfig c;
  c.hidden = get_or(cfg, "hidden", c.hidden);
  c.epochs = get_or(cfg, "epochs", c.epochs);
  c.learning_rate = get_or(cfg, "learning_rate", c.learning_rate);
  c.batch_size = get_or(cfg, "batch_size", c.batch_size);
  c.samples_per_cell = get_or(cfg, "samples_per_cell", c.samples_per_cell);
  c.noise_sigma_db = get_or(cfg, "noise_sigma_db", c.noise_sigma_db);
  c.seed = seed;
  return c;
}

struct LocalizeOutcome {
  double median_wknn = 0.0, median_coarse = 0.0, median_aug = 0.0;
};

LocalizeOutcome run_localize(RunContext& ctx, const RadioMap& fine, const DictionaryPair& pair,
                             const json& cfg, std::uint64_t seed) {
  const int k = get_or(cfg, "k", 3);
  const int queries_per_cell = get_or(cfg, "queries_per_cell", 10);
  const double noise = get_or(cfg, "query_noise_db", 2.0);
  const RadioMap coarse = downsample(fine, pair.scale);
  const IstaConfig icfg{pair.lambda, 300, 1e-9};
  const RadioMap sr = super_resolve(coarse, pair, icfg, pair.scale);

  ClassifierConfig ccfg = classifier_from(cfg.contains("classifier") ? cfg.at("classifier") : json::object(), seed);
  ctx.log("training classifiers");
  const Classifier clf_coarse = train_classifier(coarse, std::nullopt, ccfg);
  ClassifierConfig ccfg_aug = ccfg;
  ccfg_aug.seed = seed + 1;
  const Classifier clf_aug = train_classifier(coarse, sr, ccfg_aug);

  Rng rng(seed + 0xabcdef);
  std::vector<double> err_wknn, err_coarse, err_aug;
  for (Index i = 0; i < fine.rows(); ++i)
    for (Index j = 0; j < fine.cols(); ++j) {
      const auto [tx, ty] = fine.cell_center(i, j);
      for (int q = 0; q < queries_per_cell; ++q) {
        Fingerprint fp{fine.rss.tube(i, j)};
        for (Index a = 0; a < fp.rss.size(); ++a)
          fp.rss[a] = std::clamp(fp.rss[a] + noise * rng.normal(), kRssFloorDbm, kRssCeilDbm);
        err_wknn.push_back(loc_error(wknn_locate(fp, coarse, k), tx, ty));
        err_coarse.push_back(loc_error(classify(clf_coarse, fp), tx, ty));
        err_aug.push_back(loc_error(classify(clf_aug, fp), tx, ty));
      }
    }

  auto emit = [&](const std::string& name, std::vector<double> errs) {
    std::vector<std::vector<double>> rows;
    for (const auto& [e, f] : error_cdf(errs)) rows.push_back({e, f});
    write_csv(ctx.dir / name, {"error_m", "fraction"}, rows);
    ctx.note_output(name);
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };
  LocalizeOutcome out;
  out.median_wknn = emit("cdf_wknn.csv", err_wknn);
  out.median_coarse = emit("cdf_classifier_coarse.csv", err_coarse);
  out.median_aug = emit("cdf_classifier_augmented.csv", err_aug);
  ctx.manifest["median_error_m"] = {
      {"wknn", out.median_wknn}, {"classifier_coarse", out.median_coarse}, {"classifier_augmented", out.median_aug}};
  save_classifier(ctx.dir, "classifier_augmented", clf_aug);
  ctx.note_output("classifier_augmented.json");
  return out;
}

void cmd_localize(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const RadioMap fine = load_map_file(existing_file(cfg, "fine_map"));
  const fs::path dict_base = require<std::string>(cfg, "dict");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 0);
  RunContext ctx = open_run("localize", opts, cfg);
  DictionaryPair pair;
  try {
    pair = load_dictionary_pair(dict_base.parent_path(), dict_base.filename().string());
  } catch (const std::exception& e) {
    bail(kMissingFile, std::string("cannot load dictionary pair: ") + e.what());
  }
  run_localize(ctx, fine, pair, cfg, seed);
  ctx.finish();
}

void cmd_pipeline(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 0);
  RunContext ctx = open_run("pipeline", opts, cfg);

  // 1. synthesize the ground-truth fine map
  const json scen = cfg.contains("scenario") ? cfg.at("scenario") : json::object();
  const auto region = get_or<std::vector<double>>(scen, "region_m", {6.0, 16.0});
  const double spacing = get_or(scen, "spacing_m", 0.5);
  const PathLossParams params = params_from(scen.contains("params") ? scen.at("params") : json::object(), seed);
  ctx.log("synthesizing ground truth map");
  const RadioMap fine = gen_radiomap(region[0], region[1], spacing, params);
  save_radiomap(ctx.dir, "fine", fine);
  ctx.note_output("fine.tns3");

  // 2. train the coupled dictionary pair
  json sr_cfg = cfg.contains("sr") ? cfg.at("sr") : json::object();
  if (!sr_cfg.contains("patch")) sr_cfg["patch"] = {2, 2};
  if (!sr_cfg.contains("stride")) sr_cfg["stride"] = {1, 1};
  if (!sr_cfg.contains("atoms")) sr_cfg["atoms"] = 24;
  SrTrainOptions opt = sr_options_from(sr_cfg, seed);
  ctx.log("training dictionary pair");
  const JointTrainResult dict_res = train_sr_pair(fine, opt);
  save_dictionary_pair(ctx.dir, "dict", dict_res.pair);
  ctx.note_output("dict_fine.tns3");
  ctx.note_output("dict_coarse.tns3");
  {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < dict_res.objective_trace.size(); ++i)
      rows.push_back({static_cast<double>(i), dict_res.objective_trace[i]});
    write_csv(ctx.dir / "objective_trace.csv", {"iteration", "objective"}, rows);
    ctx.note_output("objective_trace.csv");
  }

  // 3. super-resolve the coarse map and compare with the baseline
  ctx.log("super-resolving");
  const RadioMap coarse = downsample(fine, opt.scale);
  save_radiomap(ctx.dir, "coarse", coarse);
  ctx.note_output("coarse.tns3");
  const IstaConfig icfg{opt.dict.lambda, 300, 1e-9};
  const RadioMap sr = super_resolve(coarse, dict_res.pair, icfg, opt.scale);
  save_radiomap(ctx.dir, "sr", sr);
  ctx.note_output("sr.tns3");
  const RadioMap baseline = upsample_interp(coarse, opt.scale);
  {
    std::vector<std::vector<double>> rows{{0.0, psnr(fine, sr)}, {1.0, psnr(fine, baseline)}};
    write_csv(ctx.dir / "psnr.csv", {"method", "psnr_db"}, rows);
    ctx.note_output("psnr.csv");
    ctx.manifest["psnr_db"] = {{"sparse_coding", rows[0][1]}, {"trilinear", rows[1][1]}};
    ctx.manifest["coarse_consistency_rel"] =
        fro_norm(downsample(sr, opt.scale).rss - coarse.rss) / std::max(1e-300, fro_norm(coarse.rss));
  }

  // 4. adversarial refinement (short by default at pipeline scale)
  json tgan_cfg = cfg.contains("tgan") ? cfg.at("tgan") : json::object();
  if (!tgan_cfg.contains("epochs")) tgan_cfg["epochs"] = 10;
  if (!tgan_cfg.contains("disc_pretrain_epochs")) tgan_cfg["disc_pretrain_epochs"] = 20;
  ctx.log("adversarial refinement");
  const TganResult tgan = train_tgan({fine}, {coarse}, dict_res.pair, tgan_from(tgan_cfg, seed));
  save_tgan(ctx.dir, "tgan", tgan);
  write_tgan_history_csv(ctx.dir / "history.csv", tgan.history);
  ctx.note_output("history.csv");

  // 5. localization comparison
  ctx.log("localization evaluation");
  const json loc_cfg = cfg.contains("localize") ? cfg.at("localize") : json::object();
  run_localize(ctx, fine, dict_res.pair, loc_cfg, seed);

  ctx.manifest["seed"] = seed;
  ctx.finish();
}

void cmd_slice_csv(const CliOptions& opts) {
  const json cfg = load_config(opts);
  const fs::path tensor_path = existing_file(cfg, "tensor");
  const Index k = get_or<Index>(cfg, "slice", 0);
  RunContext ctx = open_run("slice-csv", opts, cfg);
  const Tensor3d t = read_tns3(tensor_path);
  if (k < 0 || k >= t.n3()) bail(kBadConfig, "slice index out of range");
  write_slice_csv(ctx.dir / ("slice_" + std::to_string(k) + ".csv"), t, k);
  ctx.note_output("slice_" + std::to_string(k) + ".csv");
  ctx.finish();
}

}  // namespace

fs::path run_dir_for(const std::string& command, const CliOptions& opts) {
  const json cfg = load_config(opts);
  return opts.out / (command + "_" + hash12(cfg));
}

int run_command(const std::string& command, const CliOptions& opts) {
  try {
    if (command == "synth")
      cmd_synth(opts);
    else if (command == "svd-report")
      cmd_svd_report(opts);
    else if (command == "train-dict")
      cmd_train_dict(opts);
    else if (command == "super-resolve")
      cmd_super_resolve(opts);
    else if (command == "train-tgan")
      cmd_train_tgan(opts);
    else if (command == "localize")
      cmd_localize(opts);
    else if (command == "pipeline")
      cmd_pipeline(opts);
    else if (command == "slice-csv")
      cmd_slice_csv(opts);
    else {
      std::cerr << json{{"error", {{"exit_code", kUsage}, {"message", "unknown command '" + command + "'"}}}}
                << "\n";
      return kUsage;
    }
    return kOk;
  } catch (const CliError& e) {
    std::cerr << json{{"error", {{"exit_code", e.code}, {"message", e.message}}}} << "\n";
    return e.code;
  } catch (const SingularSystemError& e) {
    std::cerr << json{{"error", {{"exit_code", kSolverFailure}, {"message", e.what()}}}} << "\n";
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", {{"exit_code", kBadConfig}, {"message", e.what()}}}} << "\n";
    return kBadConfig;
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    const int code = msg.find("diverged") != std::string::npos ? kSolverFailure : kInternal;
    std::cerr << json{{"error", {{"exit_code", code}, {"message", msg}}}} << "\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"exit_code", kInternal}, {"message", e.what()}}}} << "\n";
    return kInternal;
  }
}

}  // namespace tubalsr::cli
