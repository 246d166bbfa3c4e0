// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace glean {

// SHA-256 hex digest of a byte range (OpenSSL backed).
std::string sha256_hex(const void* data, size_t nbytes);

template <class T>
std::string sha256_hex(const std::vector<T>& v) {
  return sha256_hex(v.data(), v.size() * sizeof(T));
}

}  // namespace glean
