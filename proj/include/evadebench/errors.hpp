#pragma once

#include <stdexcept>
#include <string>

namespace evadebench {

// Base of every error the harness raises. Callers that only care about
// "the harness refused" catch this; the subclasses exist so tests and the
// CLI can tell input problems from backend problems.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or contract-violating input (bad record, bad parameter, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// A language-model / detector backend failed, timed out, or answered
// something that does not fit the protocol.
class BackendError : public Error {
 public:
  using Error::Error;
};

// A score is mathematically undefined for the given input (e.g. LRR on an
// all-rank-1 text, Fast-DetectGPT with zero variance at every position).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace evadebench
