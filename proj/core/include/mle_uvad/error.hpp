// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mle_uvad {

// Base for every error the library raises. The CLI maps each subclass onto a
// distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A loss or metric became non-finite or is mathematically undefined.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mle_uvad
