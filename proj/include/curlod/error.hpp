#pragma once

#include <stdexcept>
#include <string>

namespace curlod {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear solve or factorization failed; the message names the offending
/// pivot, row or entity.
class SolverError : public Error {
 public:
  using Error::Error;
};

#define CURLOD_REQUIRE(cond, msg)                                   \
  do {                                                              \
    if (!(cond)) throw ::curlod::Error(std::string(__func__) + ": " + (msg)); \
  } while (0)

}  // namespace curlod
