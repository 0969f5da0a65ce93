#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tvacal {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data (dimension mismatch, non-finite values, empty input).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its admissible range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A dataset file that does not parse. Row and column are 0-based; the label
/// column is reported as column L. Header problems use row = npos.
class FormatError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  FormatError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + position_suffix(row, column)), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string position_suffix(std::size_t row, std::size_t column) {
    if (row == npos) return " (header)";
    std::string s = " (row " + std::to_string(row);
    if (column != npos) s += ", column " + std::to_string(column);
    return s + ")";
  }

  std::size_t row_;
  std::size_t column_;
};

class OptimizationFailure : public Error {
 public:
  OptimizationFailure(const std::string& what, std::size_t iteration)
      : Error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// A metric that is not defined for the given data (e.g. AUROC with one class).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// A fit whose data cannot identify the model (e.g. single-class targets).
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

}  // namespace tvacal
