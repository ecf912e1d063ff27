#pragma once

#include <stdexcept>
#include <string>

namespace dfscope {

// Base class for all library errors so callers can catch the whole family.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layer geometry that violates the ofmap relationship (negative or
// non-divisible (X - R + 2Pd) / St, window larger than the feature map, ...).
class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

// Model-level consistency failure: layer shapes do not chain, pooling does
// not divide the ofmap, rectangular filters, ...
class InvalidModel : public Error {
 public:
  using Error::Error;
};

class UnknownModel : public Error {
 public:
  using Error::Error;
};

// Trace writer fed records out of cycle order.
class EncodingError : public Error {
 public:
  using Error::Error;
};

// Trace bytes that do not parse back into a record stream.
class MalformedTrace : public Error {
 public:
  using Error::Error;
};

// Cycle prefix ends before the targeted event.
class TruncatedTrace : public Error {
 public:
  using Error::Error;
};

// Brute-force oracle guardrail exceeded.
class TooLarge : public Error {
 public:
  using Error::Error;
};

// Totals violate the dense fully-connected identity W_r == I_r * O_w.
class NotAnFcLayer : public Error {
 public:
  using Error::Error;
};

// Conv recovery filtered out every candidate (trace/config mismatch).
class NoCandidates : public Error {
 public:
  using Error::Error;
};

// Pooling search exhausted without a window/stride pair matching N_pool.
class NoPoolSolution : public Error {
 public:
  using Error::Error;
};

// Global trace carries neither configuration-phase nor DRAM signals.
class BoundaryUndetectable : public Error {
 public:
  using Error::Error;
};

// Whole-model recovery could not produce a single consistent structure set.
class RecoveryFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace dfscope
