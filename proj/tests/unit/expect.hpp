#pragma once

#include <doctest.h>

#include "clearline/error.hpp"

namespace clearline::testing {

/// Runs `fn` and returns the ErrorCode it raised; fails the test if nothing was thrown.
template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected clearline::Error");
  return ErrorCode::InvalidConfig;
}

}  // namespace clearline::testing
