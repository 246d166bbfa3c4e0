// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/digest.hpp"

#include <openssl/evp.h>

#include "glean/common.hpp"

namespace glean {

std::string sha256_hex(const void* data, size_t nbytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  const int ok = EVP_Digest(data, nbytes, md, &md_len, EVP_sha256(), nullptr);
  GLEAN_REQUIRE(ok == 1, " sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out(md_len * 2, '0');
  for (unsigned int i = 0; i < md_len; ++i) {
    out[2 * i] = hex[md[i] >> 4];
    out[2 * i + 1] = hex[md[i] & 0xf];
  }
  return out;
}

}  // namespace glean
