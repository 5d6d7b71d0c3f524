#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace autm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument values (bad step counts, tolerances...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix extents that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared where a finite one is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The latent trajectory left the guard box |v| <= V_max (or became non-finite).
class DivergenceError : public NumericalError {
 public:
  DivergenceError(double value, double time);

  double value() const { return value_; }
  double time() const { return time_; }
  std::optional<int> layer() const { return layer_; }
  std::optional<int> coordinate() const { return coordinate_; }

  void set_layer(int layer);
  void set_coordinate(int coordinate);

  const char* what() const noexcept override { return message_.c_str(); }

 private:
  void rebuild_message();

  double value_;
  double time_;
  std::optional<int> layer_;
  std::optional<int> coordinate_;
  std::string message_;
};

/// One or more examples in a batch failed; carries the offending row indices.
class BatchError : public NumericalError {
 public:
  BatchError(std::vector<std::size_t> indices, const std::string& first_reason);
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace autm
