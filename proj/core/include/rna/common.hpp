#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rna {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable input file.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents; message carries the offending line where known.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent shapes / settings between model and data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical routine failed to converge or produced non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent named substreams derived from one run seed. Components draw
// from their own stream so that disabling one of them does not shift the
// randomness seen by the others.
enum class Stream : std::uint64_t {
  kParamInit = 1,
  kShuffle,
  kGumbel,
  kKMeans,
  kDropout,
  kSynthetic,
};

inline std::mt19937_64 substream(std::uint64_t seed, Stream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(
      seed ^ splitmix64(static_cast<std::uint64_t>(stream) ^
                        splitmix64(a ^ splitmix64(b ^ 0x5bf03635ULL))));
  return std::mt19937_64(h);
}

}  // namespace rna
