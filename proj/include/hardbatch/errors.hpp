#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hardbatch {

// Error taxonomy, mapped onto CLI exit codes:
//   usage/configuration -> 1, data/parse/format/io/shape -> 2, divergence -> 3.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a training loss turns non-finite. Carries enough context to
// write a diagnostic marker next to the partial run artifacts.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, std::int64_t backprop_count, int batch_id)
      : std::runtime_error(msg), backprop_count(backprop_count), batch_id(batch_id) {}

  std::int64_t backprop_count = 0;
  int batch_id = -1;
};

}  // namespace hardbatch
