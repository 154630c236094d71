// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <stdexcept>
#include <string>

namespace codial {

// Base class for all library errors. Everything thrown on purpose derives
// from this so callers can catch one type at the CLI boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors/images. Message names both shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// backward() called on a non-scalar tensor.
class RankError : public Error {
 public:
  using Error::Error;
};

// Class label outside [0, num_classes).
class LabelError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (bad range, unknown key, inconsistent fields).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized artifact (bad magic, version, or truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure (missing file, write failure).
class IoError : public Error {
 public:
  using Error::Error;
};

// Train-mode batch statistics undefined (batch of one).
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

// Supervised routine received labels with fewer than two classes.
class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

// Contrastive objective received an empty negative set.
class NoNegativesError : public Error {
 public:
  using Error::Error;
};

// Non-finite value detected where finiteness is required (loss watchdog).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Always-on invariant check; these fire on internal contract violations.
#define CODIAL_CHECK(cond, msg)                                  \
  do {                                                           \
    if (!(cond)) throw ::codial::Error(std::string("internal invariant failed: ") + (msg)); \
  } while (0)

// Typed precondition check; throws the named error type on violation.
#define CODIAL_REQUIRE(cond, ErrType, msg)      \
  do {                                          \
    if (!(cond)) throw ::codial::ErrType(msg);  \
  } while (0)

}  // namespace codial
