#pragma once

#include "doctest.h"
#include "tailmean/errors.hpp"

namespace support {

// Kind of the tailmean::Error thrown by fn; fails the test if nothing throws.
inline tailmean::ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const tailmean::Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return tailmean::ErrorKind::Domain;
}

}  // namespace support
