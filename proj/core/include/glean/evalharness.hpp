// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/dataset.hpp"
#include "glean/embedder.hpp"
#include "glean/model.hpp"

namespace glean {

struct EvalRow {
  std::string name;
  double psnr = 0.0;
  double cosine = 0.0;  // pooled-embedding cosine, an identity proxy
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_psnr() const;
  double mean_cosine() const;
};

// Fixed-width text table with a mean footer.
std::string format_table(const EvalSummary& s, const std::string& title);

// One JSON object per row, then a summary object.
void write_jsonl(const std::string& path, const EvalSummary& s);

// No-learning baseline: bicubic upscale of the input (SR modes) or the
// neutral-chroma decode (colorization).
EvalSummary eval_bicubic_baseline(const PairSampler& sampler, size_t limit = 0);

// Converts a model-space output to displayable RGB. SR outputs are already
// RGB; colorization outputs are normalized Lab.
ImageTensor to_display_rgb(const ImageTensor& out, bool colorization);

// Deterministic sweep over the corpus (first `limit` items; 0 = all).
template <class T>
EvalSummary eval_model(const Model<T>& model, const PairSampler& sampler,
                       size_t limit = 0) {
  const bool color = model.config().task == Task::kColorization;
  const FixedConvEmbedder<float> emb;
  const size_t n = limit == 0 ? sampler.data().images.size()
                              : std::min(limit, sampler.data().images.size());
  EvalSummary s;
  for (size_t i = 0; i < n; ++i) {
    const TrainPair<float> pair = sampler.pair_for(i);
    const Tensor<T> x = pair.input.template cast<T>();
    const Tensor<T> y = model.forward(x, nullptr);
    const ImageTensor out = to_display_rgb(y.template cast<float>(), color);
    const ImageTensor ref = to_display_rgb(pair.target, color);
    EvalRow row;
    row.name = sampler.data().names[i];
    row.psnr = psnr(out, ref);
    row.cosine = embedding_cosine(emb, out, ref);
    s.rows.push_back(std::move(row));
  }
  return s;
}

}  // namespace glean
