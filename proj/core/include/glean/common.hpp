// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace glean {

// Thrown whenever a caller violates a documented interface contract
// (bad shapes, out-of-range parameters, malformed files). The CLI maps
// these to a nonzero exit status.
class contract_error : public std::invalid_argument {
 public:
  explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {
template <class... Args>
[[noreturn]] inline void throw_contract(const char* expr, Args&&... parts) {
  std::ostringstream os;
  os << "contract violation: " << expr;
  ((os << parts), ...);
  throw contract_error(os.str());
}
}  // namespace detail

}  // namespace glean

// Contract check with an optional streamed message:
//   GLEAN_REQUIRE(x > 0, " x=", x);
#define GLEAN_REQUIRE(cond, ...)                                      \
  do {                                                                \
    if (!(cond)) ::glean::detail::throw_contract(#cond, ##__VA_ARGS__); \
  } while (0)
