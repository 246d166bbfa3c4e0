// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "glean/data_synth.hpp"
#include "glean/io.hpp"
#include "json.hpp"

namespace glean {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* task_name(Task t) { return t == Task::kSR ? "sr" : "colorization"; }
const char* variant_name(Variant v) { return v == Variant::kGlean ? "glean" : "light"; }
const char* mode_name(PairMode m) {
  switch (m) {
    case PairMode::kBicubic: return "bicubic";
    case PairMode::kBlind: return "blind";
    case PairMode::kColorization: return "colorization";
  }
  return "bicubic";
}

Task task_of(const std::string& s) {
  if (s == "sr") return Task::kSR;
  if (s == "colorization") return Task::kColorization;
  throw contract_error("glean: unknown task '" + s + "'");
}
Variant variant_of(const std::string& s) {
  if (s == "glean") return Variant::kGlean;
  if (s == "light") return Variant::kLight;
  throw contract_error("glean: unknown variant '" + s + "'");
}
PairMode mode_of(const std::string& s) {
  if (s == "bicubic") return PairMode::kBicubic;
  if (s == "blind") return PairMode::kBlind;
  if (s == "colorization") return PairMode::kColorization;
  throw contract_error("glean: unknown pair_mode '" + s + "'");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    bool ok = false;
    for (const char* a : allowed)
      if (k == a) {
        ok = true;
        break;
      }
    GLEAN_REQUIRE(ok, " unknown key '", k, "' in ", where);
  }
}

std::string zero_pad(int64_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*lld", width, static_cast<long long>(v));
  return buf;
}

Dataset synth_corpus(int count, int size, uint64_t seed, uint64_t salt) {
  GLEAN_REQUIRE(count > 0, " synth corpus needs a positive count");
  Dataset ds;
  ds.size = size;
  for (int i = 0; i < count; ++i) {
    ds.images.push_back(synth_scene(mix_seed(seed, salt, static_cast<uint64_t>(i)), size));
    ds.names.push_back("scene_" + zero_pad(i, 5) + ".png");
  }
  return ds;
}

std::vector<Tensor<float>> real_batch(const Dataset& ds, uint64_t seed,
                                      int64_t step, int n) {
  std::vector<Tensor<float>> out;
  out.reserve(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    Rng r(mix_seed(seed, static_cast<uint64_t>(step), static_cast<uint64_t>(s)));
    out.push_back(ds.images[r.below(ds.images.size())]);
  }
  return out;
}

void put_adam(Checkpoint& ck, Adam<float>& a, const std::string& prefix) {
  const ParamList<float>& ps = a.params();
  for (size_t i = 0; i < ps.size(); ++i) {
    ck.arrays.emplace(prefix + ".m." + ps[i].name, a.m_state()[i]);
    ck.arrays.emplace(prefix + ".v." + ps[i].name, a.v_state()[i]);
  }
  ck.counters[prefix + ".t"] = a.t();
}

void load_adam(const Checkpoint& ck, Adam<float>& a, const std::string& prefix) {
  const ParamList<float>& ps = a.params();
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto im = ck.arrays.find(prefix + ".m." + ps[i].name);
    const auto iv = ck.arrays.find(prefix + ".v." + ps[i].name);
    GLEAN_REQUIRE(im != ck.arrays.end() && iv != ck.arrays.end(),
                  " checkpoint lacks optimizer state for '", ps[i].name, "'");
    a.m_state()[i] = im->second;
    a.v_state()[i] = iv->second;
  }
  const auto it = ck.counters.find(prefix + ".t");
  GLEAN_REQUIRE(it != ck.counters.end(), " checkpoint lacks counter ", prefix, ".t");
  a.set_t(it->second);
}

Checkpoint snapshot_trainer(const ExperimentSpec& spec, Model<float>& model,
                            GanTrainer<float>& tr) {
  Checkpoint ck;
  ck.kind = "trainer";
  ck.config_json = spec_to_json(spec);
  ck.step = tr.step();
  put_params(ck, model.params());
  put_params(ck, tr.disc_params());
  put_adam(ck, tr.adam_g(), "opt.g");
  put_adam(ck, tr.adam_d(), "opt.d");
  for (const auto& p : model.params())
    if (!*p.trainable) ck.frozen.push_back(p.name);
  return ck;
}

void restore_trainer(const Checkpoint& ck, Model<float>* model,
                     GanTrainer<float>* tr) {
  load_params(ck, model->params(), /*require_all=*/true);
  load_params(ck, tr->disc_params(), /*require_all=*/true);
  load_adam(ck, tr->adam_g(), "opt.g");
  load_adam(ck, tr->adam_d(), "opt.d");
  // Frozen-ness is state, not config: restore exactly what was saved so a
  // resumed run matches the straight run even when nothing was frozen.
  for (auto& p : model->params())
    *p.trainable = std::find(ck.frozen.begin(), ck.frozen.end(), p.name) ==
                   ck.frozen.end();
  tr->set_step(ck.step);
}

// Pretrains a GLEAN-shaped plain generator and saves it as a bank
// checkpoint. LightGLEAN later adopts the blocks it shares (>= i0).
std::string pretrain_bank(const ExperimentSpec& spec, const Dataset& train_data) {
  ModelConfig pcfg = spec.model;
  pcfg.variant = Variant::kGlean;
  Rng brng(mix_seed(spec.model.init_seed, 0xba6b, 1));
  LatentBank<float> bank(pcfg.bank_config(), brng);

  TrainConfig ptc = spec.train;
  ptc.total_iters = spec.pretrain.iters;
  BankPretrainer<float> pre(&bank, ptc);
  const uint64_t dseed = mix_seed(spec.train.seed, 0x707265, 0);
  for (int t = 0; t < spec.pretrain.iters; ++t) {
    const double dl =
        pre.train_step(real_batch(train_data, dseed, t, spec.train.batch_size));
    if (spec.log_every > 0 && t % spec.log_every == 0)
      std::cerr << "pretrain iter " << t << " disc " << dl << "\n";
  }

  Checkpoint ck;
  ck.kind = "bank";
  ck.config_json = spec_to_json(spec);
  ck.step = spec.pretrain.iters;
  ParamList<float> bp;
  bank.collect("bank", bp);
  put_params(ck, bp);
  const std::string path = spec.out_dir + "/bank.ckpt";
  save_checkpoint(path, ck);
  return path;
}

std::string ensure_bank(const ExperimentSpec& spec, const Dataset& train_data) {
  if (!spec.pretrain.load.empty()) return spec.pretrain.load;
  if (spec.pretrain.iters > 0) return pretrain_bank(spec, train_data);
  return "";
}

void write_trace(const std::string& path, const std::vector<LossBreakdown>& trace,
                 int64_t first_iter) {
  std::ofstream f(path, std::ios::trunc);
  GLEAN_REQUIRE(f.good(), " cannot open '", path, "' for writing");
  for (size_t i = 0; i < trace.size(); ++i) {
    const LossBreakdown& b = trace[i];
    json j{{"iter", first_iter + static_cast<int64_t>(i)}, {"mse", b.mse},
           {"percep", b.percep}, {"gen", b.gen},           {"total", b.total},
           {"disc", b.disc}};
    f << j.dump() << "\n";
  }
}

}  // namespace

void ExperimentSpec::validate() const {
  model.validate();
  train.validate();
  GLEAN_REQUIRE(pretrain.iters >= 0, " pretrain.iters must be >= 0");
  GLEAN_REQUIRE(checkpoint_every >= 0, " checkpoint_every must be >= 0");
  GLEAN_REQUIRE(log_every >= 0, " log_every must be >= 0");
  GLEAN_REQUIRE(!out_dir.empty(), " out_dir must be set");
  const bool color_task = model.task == Task::kColorization;
  GLEAN_REQUIRE(color_task == (pair_mode == PairMode::kColorization),
                " colorization task and colorization pair_mode go together");
  if (!data.train_dir.empty() && !data.val_dir.empty())
    GLEAN_REQUIRE(fs::path(data.train_dir).lexically_normal() !=
                      fs::path(data.val_dir).lexically_normal(),
                  " train and val directories must be disjoint");
  GLEAN_REQUIRE(data.synth_count > 0 && data.synth_val_count > 0,
                " synth corpus sizes must be positive");
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw contract_error(std::string("glean: bad spec JSON: ") + e.what());
  }
  check_keys(j,
             {"task", "variant", "in_size", "out_size", "model", "train",
              "pair_mode", "data", "pretrain", "out_dir", "checkpoint_every",
              "log_every", "eval_limit"},
             "spec");
  ExperimentSpec s;
  s.model.task = task_of(j.value("task", "sr"));
  s.model.variant = variant_of(j.value("variant", "glean"));
  s.model.in_size = j.value("in_size", s.model.in_size);
  s.model.out_size = j.value("out_size", s.model.out_size);
  if (s.model.task == Task::kColorization) {
    s.model.out_size = s.model.in_size;
    s.pair_mode = PairMode::kColorization;
  }

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m,
               {"enc_base_channels", "n_rrdb_blocks", "rrdb_growth", "d_latent",
                "head_channels", "enc_max_channels", "fmap_base", "fmap_min",
                "fmap_max", "dec_width", "color_widths", "alpha_percep",
                "alpha_gen", "non_saturating_gen", "use_decoder",
                "enc_feats_upto", "bank_taps_upto", "init_seed"},
               "spec.model");
    ModelConfig& mc = s.model;
    mc.enc_base_channels = m.value("enc_base_channels", mc.enc_base_channels);
    mc.n_rrdb_blocks = m.value("n_rrdb_blocks", mc.n_rrdb_blocks);
    mc.rrdb_growth = m.value("rrdb_growth", mc.rrdb_growth);
    mc.d_latent = m.value("d_latent", mc.d_latent);
    mc.head_channels = m.value("head_channels", mc.head_channels);
    mc.enc_max_channels = m.value("enc_max_channels", mc.enc_max_channels);
    mc.fmap_base = m.value("fmap_base", mc.fmap_base);
    mc.fmap_min = m.value("fmap_min", mc.fmap_min);
    mc.fmap_max = m.value("fmap_max", mc.fmap_max);
    mc.dec_width = m.value("dec_width", mc.dec_width);
    if (m.contains("color_widths"))
      mc.color_widths = m["color_widths"].get<std::vector<int>>();
    mc.alpha_percep = m.value("alpha_percep", mc.alpha_percep);
    mc.alpha_gen = m.value("alpha_gen", mc.alpha_gen);
    mc.non_saturating_gen = m.value("non_saturating_gen", mc.non_saturating_gen);
    mc.use_decoder = m.value("use_decoder", mc.use_decoder);
    mc.enc_feats_upto = m.value("enc_feats_upto", mc.enc_feats_upto);
    mc.bank_taps_upto = m.value("bank_taps_upto", mc.bank_taps_upto);
    mc.init_seed = m.value("init_seed", mc.init_seed);
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t,
               {"total_iters", "batch_size", "lr0", "lr_min", "seed",
                "embedder_seed", "disc_base_channels", "disc_max_channels"},
               "spec.train");
    TrainConfig& tc = s.train;
    tc.total_iters = t.value("total_iters", tc.total_iters);
    tc.batch_size = t.value("batch_size", tc.batch_size);
    tc.lr0 = t.value("lr0", tc.lr0);
    tc.lr_min = t.value("lr_min", tc.lr_min);
    tc.seed = t.value("seed", tc.seed);
    tc.embedder_seed = t.value("embedder_seed", tc.embedder_seed);
    tc.disc_base_channels = t.value("disc_base_channels", tc.disc_base_channels);
    tc.disc_max_channels = t.value("disc_max_channels", tc.disc_max_channels);
  }

  if (j.contains("pair_mode")) s.pair_mode = mode_of(j["pair_mode"].get<std::string>());

  if (j.contains("data")) {
    const json& d = j["data"];
    check_keys(d, {"train_dir", "val_dir", "synth_count", "synth_val_count",
                   "synth_seed"},
               "spec.data");
    s.data.train_dir = d.value("train_dir", s.data.train_dir);
    s.data.val_dir = d.value("val_dir", s.data.val_dir);
    s.data.synth_count = d.value("synth_count", s.data.synth_count);
    s.data.synth_val_count = d.value("synth_val_count", s.data.synth_val_count);
    s.data.synth_seed = d.value("synth_seed", s.data.synth_seed);
  }

  if (j.contains("pretrain")) {
    const json& p = j["pretrain"];
    check_keys(p, {"iters", "load"}, "spec.pretrain");
    s.pretrain.iters = p.value("iters", s.pretrain.iters);
    s.pretrain.load = p.value("load", s.pretrain.load);
  }

  s.out_dir = j.value("out_dir", s.out_dir);
  s.checkpoint_every = j.value("checkpoint_every", s.checkpoint_every);
  s.log_every = j.value("log_every", s.log_every);
  s.eval_limit = j.value("eval_limit", s.eval_limit);
  s.validate();
  return s;
}

std::string spec_to_json(const ExperimentSpec& s) {
  const ModelConfig& mc = s.model;
  const TrainConfig& tc = s.train;
  json j{
      {"task", task_name(mc.task)},
      {"variant", variant_name(mc.variant)},
      {"in_size", mc.in_size},
      {"out_size", mc.out_size},
      {"model",
       {{"enc_base_channels", mc.enc_base_channels},
        {"n_rrdb_blocks", mc.n_rrdb_blocks},
        {"rrdb_growth", mc.rrdb_growth},
        {"d_latent", mc.d_latent},
        {"head_channels", mc.head_channels},
        {"enc_max_channels", mc.enc_max_channels},
        {"fmap_base", mc.fmap_base},
        {"fmap_min", mc.fmap_min},
        {"fmap_max", mc.fmap_max},
        {"dec_width", mc.dec_width},
        {"color_widths", mc.color_widths},
        {"alpha_percep", mc.alpha_percep},
        {"alpha_gen", mc.alpha_gen},
        {"non_saturating_gen", mc.non_saturating_gen},
        {"use_decoder", mc.use_decoder},
        {"enc_feats_upto", mc.enc_feats_upto},
        {"bank_taps_upto", mc.bank_taps_upto},
        {"init_seed", mc.init_seed}}},
      {"train",
       {{"total_iters", tc.total_iters},
        {"batch_size", tc.batch_size},
        {"lr0", tc.lr0},
        {"lr_min", tc.lr_min},
        {"seed", tc.seed},
        {"embedder_seed", tc.embedder_seed},
        {"disc_base_channels", tc.disc_base_channels},
        {"disc_max_channels", tc.disc_max_channels}}},
      {"pair_mode", mode_name(s.pair_mode)},
      {"data",
       {{"train_dir", s.data.train_dir},
        {"val_dir", s.data.val_dir},
        {"synth_count", s.data.synth_count},
        {"synth_val_count", s.data.synth_val_count},
        {"synth_seed", s.data.synth_seed}}},
      {"pretrain", {{"iters", s.pretrain.iters}, {"load", s.pretrain.load}}},
      {"out_dir", s.out_dir},
      {"checkpoint_every", s.checkpoint_every},
      {"log_every", s.log_every},
      {"eval_limit", s.eval_limit}};
  return j.dump();
}

ExperimentSpec load_spec_file(const std::string& path) {
  std::ifstream f(path);
  GLEAN_REQUIRE(f.good(), " cannot open spec '", path, "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return spec_from_json(ss.str());
}

void apply_env_seed(ExperimentSpec* s) {
  const char* v = std::getenv("GLEAN_SEED");
  if (!v || !*v) return;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(v, &end, 10);
  GLEAN_REQUIRE(end && *end == '\0', " GLEAN_SEED must be an unsigned integer, got '",
                v, "'");
  s->train.seed = seed;
  s->model.init_seed = seed;
}

Dataset prepare_train_data(const ExperimentSpec& s) {
  if (!s.data.train_dir.empty()) return ingest_dir(s.data.train_dir, s.model.out_size);
  return synth_corpus(s.data.synth_count, s.model.out_size, s.data.synth_seed, 0xda7a);
}

Dataset prepare_val_data(const ExperimentSpec& s) {
  if (!s.data.val_dir.empty()) return ingest_dir(s.data.val_dir, s.model.out_size);
  return synth_corpus(s.data.synth_val_count, s.model.out_size, s.data.synth_seed,
                      0x76a1);
}

TrainOutcome run_training(const ExperimentSpec& spec, const std::string& resume) {
  spec.validate();
  fs::create_directories(spec.out_dir);

  const Dataset train_data = prepare_train_data(spec);
  Model<float> model(spec.model);
  TrainOutcome out;

  if (resume.empty()) {
    out.bank_checkpoint_path = ensure_bank(spec, train_data);
    if (!out.bank_checkpoint_path.empty()) {
      const Checkpoint bck = load_checkpoint(out.bank_checkpoint_path);
      const size_t copied = load_subtree(bck, model.params(), "bank");
      GLEAN_REQUIRE(copied > 0, " bank checkpoint '", out.bank_checkpoint_path,
                    "' donated no arrays");
      model.freeze_bank();
    }
  }
  // On resume the checkpoint carries the bank state and the frozen set;
  // restore_trainer below re-applies both.

  GanTrainer<float> trainer(&model, spec.train);
  if (!resume.empty()) {
    const Checkpoint ck = load_checkpoint(resume);
    GLEAN_REQUIRE(ck.kind == "trainer", " '", resume, "' is a ", ck.kind,
                  " checkpoint, not a training state");
    require_config_match(ck, spec_to_json(spec));
    restore_trainer(ck, &model, &trainer);
  }

  PairSampler sampler(&train_data, spec.pair_mode, spec.model.in_size,
                      spec.train.seed);
  const int64_t first_iter = trainer.step();
  for (int64_t t = first_iter; t < spec.train.total_iters; ++t) {
    const LossBreakdown lb =
        trainer.train_step(sampler.batch(t, spec.train.batch_size));
    out.trace.push_back(lb);
    if (spec.log_every > 0 &&
        (t % spec.log_every == 0 || t + 1 == spec.train.total_iters))
      std::cerr << "iter " << t << " mse " << lb.mse << " percep " << lb.percep
                << " gen " << lb.gen << " disc " << lb.disc << " total "
                << lb.total << "\n";
    if (spec.checkpoint_every > 0 && (t + 1) % spec.checkpoint_every == 0 &&
        t + 1 < spec.train.total_iters)
      save_checkpoint(spec.out_dir + "/ckpt_" + zero_pad(t + 1, 6) + ".ckpt",
                      snapshot_trainer(spec, model, trainer));
  }

  out.checkpoint_path = spec.out_dir + "/final.ckpt";
  save_checkpoint(out.checkpoint_path, snapshot_trainer(spec, model, trainer));
  write_trace(spec.out_dir + "/loss_trace.jsonl", out.trace, first_iter);

  const Dataset val_data = prepare_val_data(spec);
  PairSampler vsampler(&val_data, spec.pair_mode, spec.model.in_size,
                       spec.train.seed);
  const EvalSummary es = eval_model(model, vsampler, spec.eval_limit);
  const EvalSummary bs = eval_bicubic_baseline(vsampler, spec.eval_limit);
  out.val_psnr = es.mean_psnr();
  out.val_cosine = es.mean_cosine();
  out.baseline_psnr = bs.mean_psnr();

  {
    std::ofstream f(spec.out_dir + "/eval.txt", std::ios::trunc);
    f << format_table(es, "validation") << "\n"
      << format_table(bs, "bicubic baseline");
  }
  write_jsonl(spec.out_dir + "/eval.jsonl", es);
  {
    json j{{"val_psnr", out.val_psnr},
           {"val_cosine", out.val_cosine},
           {"baseline_psnr", out.baseline_psnr},
           {"checkpoint", out.checkpoint_path},
           {"bank_checkpoint", out.bank_checkpoint_path},
           {"iters_run", out.trace.size()}};
    std::ofstream f(spec.out_dir + "/outcome.json", std::ios::trunc);
    f << j.dump(2) << "\n";
  }
  return out;
}

ExperimentSpec spec_from_checkpoint(const Checkpoint& ck) {
  GLEAN_REQUIRE(!ck.config_json.empty(), " checkpoint has no config echo");
  return spec_from_json(ck.config_json);
}

Model<float> model_from_checkpoint(const Checkpoint& ck) {
  GLEAN_REQUIRE(ck.kind == "trainer", " expected a training checkpoint, got '",
                ck.kind, "'");
  const ExperimentSpec spec = spec_from_checkpoint(ck);
  Model<float> model(spec.model);
  load_params(ck, model.params(), /*require_all=*/true);
  return model;
}

EvalSummary run_eval(const std::string& ckpt_path, const std::string& val_dir,
                     size_t limit) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const ExperimentSpec spec = spec_from_checkpoint(ck);
  const Model<float> model = model_from_checkpoint(ck);
  const Dataset val = val_dir.empty()
                          ? prepare_val_data(spec)
                          : ingest_dir(val_dir, spec.model.out_size);
  PairSampler sampler(&val, spec.pair_mode, spec.model.in_size, spec.train.seed);
  return eval_model(model, sampler, limit);
}

void run_infer(const std::string& ckpt_path, const std::string& in_dir,
               const std::string& out_dir, Task want) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const ExperimentSpec spec = spec_from_checkpoint(ck);
  GLEAN_REQUIRE(spec.model.task == want, " checkpoint task is ",
                task_name(spec.model.task), ", expected ", task_name(want));
  const Model<float> model = model_from_checkpoint(ck);
  const bool color = spec.model.task == Task::kColorization;

  const Dataset din = ingest_dir(in_dir, spec.model.in_size);
  fs::create_directories(out_dir);
  for (size_t i = 0; i < din.images.size(); ++i) {
    Tensor<float> x;
    if (color) {
      x = lab_encode_norm(rgb_to_lab(din.images[i]));
      const float neutral = 128.0f / 255.0f;
      for (int y = 0; y < x.dim(0); ++y)
        for (int xx = 0; xx < x.dim(1); ++xx) {
          x(y, xx, 1) = neutral;
          x(y, xx, 2) = neutral;
        }
    } else {
      x = din.images[i];
    }
    const Tensor<float> yhat = model.forward(x, nullptr);
    const ImageTensor rgb = to_display_rgb(yhat, color);
    const std::string stem = fs::path(din.names[i]).stem().string();
    write_png(out_dir + "/" + stem + ".png", rgb);
  }
}

AblationReport run_ablation_spec(const ExperimentSpec& spec) {
  spec.validate();
  fs::create_directories(spec.out_dir);
  const Dataset train_data = prepare_train_data(spec);
  const Dataset val_data = prepare_val_data(spec);
  const std::string bank_path = ensure_bank(spec, train_data);
  Checkpoint bck;
  if (!bank_path.empty()) bck = load_checkpoint(bank_path);
  AblationReport r =
      run_ablation(spec.model, spec.train, train_data, val_data, spec.pair_mode,
                   bank_path.empty() ? nullptr : &bck, spec.eval_limit);
  std::ofstream f(spec.out_dir + "/ablation.txt", std::ios::trunc);
  f << r.table();
  return r;
}

}  // namespace glean
