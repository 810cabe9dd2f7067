#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thirdgrade {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A physical or numerical parameter breaks one of its admissibility
// inequalities. The message names the inequality.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line = 0, std::string field = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line),
        field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  NumericalBlowup(const std::string& message, std::size_t step)
      : Error(message + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class LipschitzViolation : public Error {
 public:
  using Error::Error;
};

class EstimateViolation : public Error {
 public:
  EstimateViolation(const std::string& term, const std::string& message)
      : Error(term + ": " + message), term_(term) {}

  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

class MonotonicityViolation : public Error {
 public:
  using Error::Error;
};

class ManifestCorrupt : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace thirdgrade
