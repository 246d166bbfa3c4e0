// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "glean/nn/params.hpp"
#include "glean/tensor.hpp"

namespace glean {

// Binary checkpoint container: magic "GLEANCK1", a JSON header describing the
// payload, then all arrays as little-endian float32. Every array carries a
// SHA-256 digest that is verified on load, so silent corruption is caught and
// frozen-parameter identity can be asserted byte-for-byte across runs.
struct Checkpoint {
  std::string kind;         // e.g. "model", "bank", "trainer-state"
  std::string config_json;  // opaque config echo; resume requires a match
  int64_t step = 0;
  std::string rng_state;
  std::vector<std::string> frozen;          // names frozen at save time
  std::map<std::string, int64_t> counters;  // e.g. optimizer step counts
  std::map<std::string, Tensor<float>> arrays;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Digest of a tensor's float32 payload bytes.
std::string param_digest(const Tensor<float>& t);

// Copies registry values into / out of a checkpoint. `prefix` is prepended to
// (on put) or stripped from (on load) every registry name. With require_all,
// a registry entry without a matching array is an error; shape mismatches
// always are.
void put_params(Checkpoint& ck, const ParamList<float>& params,
                const std::string& prefix = "");
void load_params(const Checkpoint& ck, ParamList<float>& params,
                 bool require_all = true, const std::string& prefix = "");

// Loads only arrays whose name equals `subtree` or starts with `subtree.`,
// matching registry names verbatim. Extra checkpoint arrays are ignored, so a
// differently shaped source model can donate a shared subtree (bank transfer).
// Returns the number of arrays copied.
size_t load_subtree(const Checkpoint& ck, ParamList<float>& params,
                    const std::string& subtree);

void require_config_match(const Checkpoint& ck, const std::string& config_json);

}  // namespace glean
