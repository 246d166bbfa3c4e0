// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/evalharness.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace glean {

double EvalSummary::mean_psnr() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.psnr;
  return s / static_cast<double>(rows.size());
}

double EvalSummary::mean_cosine() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.cosine;
  return s / static_cast<double>(rows.size());
}

std::string format_table(const EvalSummary& s, const std::string& title) {
  size_t w = 4;
  for (const auto& r : s.rows) w = std::max(w, r.name.size());
  std::ostringstream os;
  os << "== " << title << " ==\n";
  os << std::left << std::setw(static_cast<int>(w + 2)) << "name"
     << std::right << std::setw(10) << "psnr(db)" << std::setw(10) << "cosine"
     << "\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : s.rows)
    os << std::left << std::setw(static_cast<int>(w + 2)) << r.name << std::right
       << std::setw(10) << r.psnr << std::setw(10) << r.cosine << "\n";
  os << std::left << std::setw(static_cast<int>(w + 2)) << "mean" << std::right
     << std::setw(10) << s.mean_psnr() << std::setw(10) << s.mean_cosine() << "\n";
  return os.str();
}

void write_jsonl(const std::string& path, const EvalSummary& s) {
  std::ofstream f(path, std::ios::trunc);
  GLEAN_REQUIRE(f.good(), " cannot open '", path, "' for writing");
  for (const auto& r : s.rows) {
    nlohmann::json j{{"name", r.name}, {"psnr", r.psnr}, {"cosine", r.cosine}};
    f << j.dump() << "\n";
  }
  nlohmann::json tail{{"mean_psnr", s.mean_psnr()},
                      {"mean_cosine", s.mean_cosine()},
                      {"count", s.rows.size()}};
  f << tail.dump() << "\n";
  GLEAN_REQUIRE(f.good(), " write to '", path, "' failed");
}

ImageTensor to_display_rgb(const ImageTensor& out, bool colorization) {
  // Models emit linear values; displayable RGB is clamped.
  if (colorization) return lab_to_rgb(lab_decode_norm(out));
  ImageTensor c = out;
  for (size_t i = 0; i < c.numel(); ++i) c[i] = std::clamp(c[i], 0.0f, 1.0f);
  return c;
}

EvalSummary eval_bicubic_baseline(const PairSampler& sampler, size_t limit) {
  const bool color = sampler.mode() == PairMode::kColorization;
  const FixedConvEmbedder<float> emb;
  const size_t n = limit == 0 ? sampler.data().images.size()
                              : std::min(limit, sampler.data().images.size());
  EvalSummary s;
  for (size_t i = 0; i < n; ++i) {
    const TrainPair<float> pair = sampler.pair_for(i);
    const ImageTensor ref = to_display_rgb(pair.target, color);
    ImageTensor out;
    if (color) {
      out = to_display_rgb(pair.input, true);
    } else {
      out = resize(pair.input, ref.dim(0), ref.dim(1), ResizeFilter::kBicubic);
    }
    EvalRow row;
    row.name = sampler.data().names[i];
    row.psnr = psnr(out, ref);
    row.cosine = embedding_cosine(emb, out, ref);
    s.rows.push_back(std::move(row));
  }
  return s;
}

}  // namespace glean
