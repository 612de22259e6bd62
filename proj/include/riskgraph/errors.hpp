#pragma once

#include <stdexcept>
#include <string>

namespace riskgraph {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data problems: missing files, malformed records, dangling ids.
class LoadError : public Error {
 public:
  using Error::Error;
};

class FormatError : public LoadError {
 public:
  using LoadError::LoadError;
};

class IntegrityError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor dimension disagreement; always a programming or model/data mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskgraph
