// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "glean/data_synth.hpp"
#include "glean/experiment.hpp"
#include "glean/io.hpp"

namespace fs = std::filesystem;
using namespace glean;

namespace {

void cmd_train(const std::string& config, const std::string& resume) {
  ExperimentSpec spec = load_spec_file(config);
  apply_env_seed(&spec);
  const TrainOutcome out = run_training(spec, resume);
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "final checkpoint: " << out.checkpoint_path << "\n";
  if (!out.bank_checkpoint_path.empty())
    std::cout << "bank checkpoint: " << out.bank_checkpoint_path << "\n";
  std::cout << "val psnr " << out.val_psnr << " db (bicubic baseline "
            << out.baseline_psnr << " db), cosine " << out.val_cosine << "\n";
}

void cmd_eval(const std::string& ckpt, const std::string& val_dir,
              const std::string& metrics, size_t limit, const std::string& out_jsonl) {
  std::vector<std::string> want;
  std::stringstream ss(metrics);
  for (std::string tok; std::getline(ss, tok, ',');) {
    GLEAN_REQUIRE(tok == "psnr" || tok == "cosine", " unknown metric '", tok, "'");
    want.push_back(tok);
  }
  GLEAN_REQUIRE(!want.empty(), " --metrics needs at least one of psnr,cosine");

  const EvalSummary s = run_eval(ckpt, val_dir, limit);
  const bool do_psnr = std::count(want.begin(), want.end(), "psnr") > 0;
  const bool do_cos = std::count(want.begin(), want.end(), "cosine") > 0;

  size_t w = 4;
  for (const auto& r : s.rows) w = std::max(w, r.name.size());
  std::cout << std::left << std::setw(static_cast<int>(w + 2)) << "name" << std::right;
  if (do_psnr) std::cout << std::setw(10) << "psnr(db)";
  if (do_cos) std::cout << std::setw(10) << "cosine";
  std::cout << "\n" << std::fixed << std::setprecision(4);
  for (const auto& r : s.rows) {
    std::cout << std::left << std::setw(static_cast<int>(w + 2)) << r.name << std::right;
    if (do_psnr) std::cout << std::setw(10) << r.psnr;
    if (do_cos) std::cout << std::setw(10) << r.cosine;
    std::cout << "\n";
  }
  std::cout << std::left << std::setw(static_cast<int>(w + 2)) << "mean" << std::right;
  if (do_psnr) std::cout << std::setw(10) << s.mean_psnr();
  if (do_cos) std::cout << std::setw(10) << s.mean_cosine();
  std::cout << "\n";
  if (!out_jsonl.empty()) write_jsonl(out_jsonl, s);
}

void cmd_degrade(const std::string& in_dir, const std::string& out_dir,
                 uint64_t seed, double sigma, double r, double delta, int q) {
  GLEAN_REQUIRE(fs::is_directory(in_dir), " '", in_dir, "' is not a directory");
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(in_dir))
    if (e.is_regular_file() && has_image_extension(e.path().string()))
      paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  GLEAN_REQUIRE(!paths.empty(), " no images in '", in_dir, "'");
  fs::create_directories(out_dir);

  size_t idx = 0;
  for (const auto& p : paths) {
    ImageTensor img;
    try {
      img = read_image(p.string());
    } catch (const std::exception& e) {
      std::cerr << "glean: skipping '" << p.string() << "': " << e.what() << "\n";
      ++idx;
      continue;
    }
    Rng rng(mix_seed(seed, 0xde62ade, idx));
    DegradationParams dp = sample_degradation(rng);
    if (sigma >= 0) dp.sigma = sigma;
    if (r >= 0) dp.r = r;
    if (delta >= 0) dp.delta = delta;
    if (q >= 0) dp.quality = q;
    dp.validate();
    const ImageTensor out = degrade(img, dp, rng);
    write_png(out_dir + "/" + p.stem().string() + ".png", out);
    std::cout << p.filename().string() << " sigma " << dp.sigma << " r " << dp.r
              << " delta " << dp.delta << " q " << dp.quality << "\n";
    ++idx;
  }
}

void cmd_complexity(const std::string& config) {
  ExperimentSpec spec = load_spec_file(config);
  const Model<float> model(spec.model);
  const ComplexityReport r = complexity(model);
  std::cout << "params total " << r.params_total << " (encoder " << r.params_encoder
            << ", generator " << r.params_generator << ", decoder "
            << r.params_decoder << ")\n";
  std::cout << "macs   total " << r.macs_total << " (encoder " << r.macs_encoder
            << ", generator " << r.macs_generator << ", decoder " << r.macs_decoder
            << ", fusion " << r.macs_fusion << ")\n";
}

void cmd_ablate(const std::string& config) {
  ExperimentSpec spec = load_spec_file(config);
  apply_env_seed(&spec);
  const AblationReport r = run_ablation_spec(spec);
  std::cout << r.table();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GLEAN super-resolution / colorization toolkit"};
  app.require_subcommand(1);

  std::string config, resume, ckpt, in_dir, out_dir, val_dir, metrics = "psnr,cosine";
  std::string out_jsonl;
  uint64_t seed = 0;
  size_t limit = 0;
  double f_sigma = -1, f_r = -1, f_delta = -1;
  int f_q = -1, count = 500, size = 128;

  CLI::App* train = app.add_subcommand("train", "train a model from a JSON spec");
  train->add_option("--config", config, "experiment spec path")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App* infer = app.add_subcommand("infer", "super-resolve a directory");
  infer->add_option("--ckpt", ckpt, "training checkpoint")->required();
  infer->add_option("--in", in_dir, "input image directory")->required();
  infer->add_option("--out", out_dir, "output directory")->required();

  CLI::App* colorize = app.add_subcommand("colorize", "colorize a directory");
  colorize->add_option("--ckpt", ckpt, "training checkpoint")->required();
  colorize->add_option("--in", in_dir, "input image directory")->required();
  colorize->add_option("--out", out_dir, "output directory")->required();

  CLI::App* degrade = app.add_subcommand("degrade", "apply the degradation pipeline");
  degrade->add_option("--in", in_dir, "input image directory")->required();
  degrade->add_option("--out", out_dir, "output directory")->required();
  degrade->add_option("--seed", seed, "sampling seed")->required();
  degrade->add_option("--sigma", f_sigma, "fix the blur std-dev");
  degrade->add_option("--r", f_r, "fix the downsampling factor");
  degrade->add_option("--delta", f_delta, "fix the noise std-dev (8-bit units)");
  degrade->add_option("--q", f_q, "fix the JPEG quality");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt, "training checkpoint")->required();
  eval->add_option("--val", val_dir, "validation directory (default: spec's)");
  eval->add_option("--metrics", metrics, "comma list of psnr,cosine");
  eval->add_option("--limit", limit, "evaluate only the first N items");
  eval->add_option("--jsonl", out_jsonl, "also write rows to this JSONL file");

  CLI::App* cplx = app.add_subcommand("complexity", "print parameter/MAC counts");
  cplx->add_option("--config", config, "experiment spec path")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "encoder-feature ablation sweep");
  ablate->add_option("--config", config, "experiment spec path")->required();

  CLI::App* datagen = app.add_subcommand("datagen", "write a procedural corpus");
  datagen->add_option("--out", out_dir, "output directory")->required();
  datagen->add_option("--count", count, "number of scenes");
  datagen->add_option("--size", size, "scene size in px");
  datagen->add_option("--seed", seed, "scene seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) cmd_train(config, resume);
    else if (*infer) run_infer(ckpt, in_dir, out_dir, Task::kSR);
    else if (*colorize) run_infer(ckpt, in_dir, out_dir, Task::kColorization);
    else if (*degrade) cmd_degrade(in_dir, out_dir, seed, f_sigma, f_r, f_delta, f_q);
    else if (*eval) cmd_eval(ckpt, val_dir, metrics, limit, out_jsonl);
    else if (*cplx) cmd_complexity(config);
    else if (*ablate) cmd_ablate(config);
    else if (*datagen) write_synth_dataset(out_dir, count, size, seed);
  } catch (const contract_error& e) {
    std::cerr << "glean: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "glean: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
