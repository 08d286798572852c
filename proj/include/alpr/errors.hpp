#pragma once

#include <stdexcept>
#include <string>

namespace alpr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or directory I/O failure.
struct IoError : Error {
  using Error::Error;
};

// Model file problems. Each kind is distinct so callers can report precisely.
struct ModelError : Error {
  enum class Kind { BadMagic, BadVersion, Truncated, Corrupt };
  Kind kind;
  ModelError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

// Benchmark manifest parse failure; line is 1-based.
struct ManifestError : Error {
  int line;
  ManifestError(int line_number, const std::string& msg)
      : Error(msg), line(line_number) {}
};

// Caller violated an operation precondition (shape mismatch, bad argument).
struct InvalidArgument : Error {
  using Error::Error;
};

// Input is degenerate for the requested operation (e.g. thresholding a
// constant image). The caller decides the fallback.
struct DegenerateInput : Error {
  using Error::Error;
};

}  // namespace alpr
