// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace antispoof {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command line or configuration. CLI exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed, missing or inconsistent data (files, ids, labels). CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or failed numerical procedures. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace antispoof
