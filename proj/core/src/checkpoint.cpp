// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "glean/digest.hpp"
#include "json.hpp"

namespace glean {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'L', 'E', 'A', 'N', 'C', 'K', '1'};
constexpr uint32_t kVersion = 1;

std::string tensor_digest(const Tensor<float>& t) {
  return sha256_hex(reinterpret_cast<const unsigned char*>(t.data()),
                    t.numel() * sizeof(float));
}

}  // namespace

std::string param_digest(const Tensor<float>& t) { return tensor_digest(t); }

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json h;
  h["kind"] = ck.kind;
  h["config"] = ck.config_json;
  h["step"] = ck.step;
  h["rng"] = ck.rng_state;
  h["frozen"] = ck.frozen;
  h["counters"] = ck.counters;
  nlohmann::json arr = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : ck.arrays) {
    nlohmann::json a;
    a["name"] = name;
    a["shape"] = t.shape();
    a["offset"] = offset;
    a["count"] = t.numel();
    a["sha256"] = tensor_digest(t);
    arr.push_back(std::move(a));
    offset += t.numel();
  }
  h["arrays"] = std::move(arr);
  const std::string header = h.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  GLEAN_REQUIRE(f.good(), " cannot open '", path, "' for writing");
  f.write(kMagic, sizeof(kMagic));
  const uint32_t ver = kVersion;
  f.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const uint64_t hlen = header.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : ck.arrays) {
    (void)name;
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
  f.flush();
  GLEAN_REQUIRE(f.good(), " write to '", path, "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  GLEAN_REQUIRE(f.good(), " cannot open checkpoint '", path, "'");

  char magic[8];
  f.read(magic, sizeof(magic));
  GLEAN_REQUIRE(f.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
                " '", path, "' is not a checkpoint file");
  uint32_t ver = 0;
  f.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  GLEAN_REQUIRE(f.good() && ver == kVersion, " unsupported checkpoint version ", ver);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  GLEAN_REQUIRE(f.good() && hlen > 0 && hlen < (1ull << 30),
                " corrupt checkpoint header length");
  std::string header(hlen, '\0');
  f.read(header.data(), static_cast<std::streamsize>(hlen));
  GLEAN_REQUIRE(f.good(), " truncated checkpoint header in '", path, "'");

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw contract_error(std::string("glean: corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  ck.kind = h.value("kind", "");
  ck.config_json = h.value("config", "");
  ck.step = h.value("step", int64_t{0});
  ck.rng_state = h.value("rng", "");
  if (h.contains("frozen")) ck.frozen = h["frozen"].get<std::vector<std::string>>();
  if (h.contains("counters"))
    ck.counters = h["counters"].get<std::map<std::string, int64_t>>();

  const std::streampos payload_start = f.tellg();
  for (const auto& a : h.at("arrays")) {
    const std::string name = a.at("name").get<std::string>();
    const auto shape = a.at("shape").get<std::vector<int>>();
    const uint64_t offset = a.at("offset").get<uint64_t>();
    const uint64_t count = a.at("count").get<uint64_t>();
    const std::string want = a.at("sha256").get<std::string>();
    Tensor<float> t(shape);
    GLEAN_REQUIRE(t.numel() == count, " array '", name, "' shape/count mismatch");
    f.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(float)));
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
    GLEAN_REQUIRE(f.good(), " truncated payload for array '", name, "'");
    const std::string got = tensor_digest(t);
    GLEAN_REQUIRE(got == want, " digest mismatch for array '", name,
                  "' (checkpoint corrupt)");
    ck.arrays.emplace(name, std::move(t));
  }
  return ck;
}

void put_params(Checkpoint& ck, const ParamList<float>& params,
                const std::string& prefix) {
  for (const auto& p : params) {
    auto [it, fresh] = ck.arrays.emplace(prefix + p.name, *p.value);
    GLEAN_REQUIRE(fresh, " duplicate array name '", it->first, "'");
  }
}

void load_params(const Checkpoint& ck, ParamList<float>& params, bool require_all,
                 const std::string& prefix) {
  for (auto& p : params) {
    const auto it = ck.arrays.find(prefix + p.name);
    if (it == ck.arrays.end()) {
      GLEAN_REQUIRE(!require_all, " checkpoint is missing array '", prefix + p.name, "'");
      continue;
    }
    GLEAN_REQUIRE(it->second.same_shape(*p.value), " array '", it->first,
                  "' has shape ", it->second.shape_str(), ", model expects ",
                  p.value->shape_str());
    *p.value = it->second;
  }
}

size_t load_subtree(const Checkpoint& ck, ParamList<float>& params,
                    const std::string& subtree) {
  size_t copied = 0;
  for (auto& p : params) {
    if (p.name != subtree && p.name.rfind(subtree + ".", 0) != 0) continue;
    const auto it = ck.arrays.find(p.name);
    if (it == ck.arrays.end()) continue;
    GLEAN_REQUIRE(it->second.same_shape(*p.value), " array '", it->first,
                  "' has shape ", it->second.shape_str(), ", model expects ",
                  p.value->shape_str());
    *p.value = it->second;
    ++copied;
  }
  return copied;
}

void require_config_match(const Checkpoint& ck, const std::string& config_json) {
  nlohmann::json a, b;
  try {
    a = nlohmann::json::parse(ck.config_json);
    b = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception&) {
    GLEAN_REQUIRE(ck.config_json == config_json,
                  " checkpoint config does not match the current run");
    return;
  }
  GLEAN_REQUIRE(a == b, " checkpoint config does not match the current run;",
                " refusing to resume (saved: ", ck.config_json, ")");
}

}  // namespace glean
