// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dlmcache {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration problems map to CLI exit code 2; everything else is a runtime
// failure (exit code 3).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

class CacheStateError : public Error {
 public:
  using Error::Error;
};

// Retention leaves no cached entries while a reuse step still follows.
class DegenerateCacheError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class TraceUnavailableError : public Error {
 public:
  using Error::Error;
};

class ComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace dlmcache
