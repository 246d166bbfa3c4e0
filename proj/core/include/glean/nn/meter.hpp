// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace glean {

// Records multiply-accumulate counts during a forward pass, attributed to the
// enclosing scope ("encoder", "bank.fusion", ...). With dry_run set, layers
// propagate exact output shapes but skip the arithmetic, so paper-scale
// complexity audits finish in milliseconds.
struct Meter {
  bool dry_run = false;
  std::map<std::string, uint64_t> macs;      // leaf scope -> MACs
  std::vector<int> bank_blocks_invoked;      // style block indices, in order
  std::vector<std::string> scope_stack;

  std::string scope() const {
    std::string s;
    for (const auto& part : scope_stack) {
      if (!s.empty()) s += '.';
      s += part;
    }
    return s.empty() ? "unscoped" : s;
  }

  void add_macs(uint64_t n) { macs[scope()] += n; }

  uint64_t total() const {
    uint64_t t = 0;
    for (const auto& [k, v] : macs) t += v;
    return t;
  }

  // Sum of all scopes equal to `prefix` or underneath it.
  uint64_t total_under(const std::string& prefix) const {
    uint64_t t = 0;
    for (const auto& [k, v] : macs)
      if (k == prefix || k.rfind(prefix + ".", 0) == 0) t += v;
    return t;
  }
};

class MeterScope {
 public:
  MeterScope(Meter* m, const char* name) : m_(m) {
    if (m_) m_->scope_stack.emplace_back(name);
  }
  ~MeterScope() {
    if (m_) m_->scope_stack.pop_back();
  }
  MeterScope(const MeterScope&) = delete;
  MeterScope& operator=(const MeterScope&) = delete;

 private:
  Meter* m_;
};

}  // namespace glean
