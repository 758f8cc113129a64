#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mckv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid input when building a measure, flow or model.
class ConstructionError : public Error {
public:
  using Error::Error;
};

/// A time outside the covered window with no extension rule.
class RangeError : public Error {
public:
  using Error::Error;
};

/// Coefficient evaluation produced a non-finite value.
class ModelError : public Error {
public:
  ModelError(const std::string& what, double t, std::vector<double> x);
  double t() const noexcept { return t_; }
  const std::vector<double>& x() const noexcept { return x_; }

private:
  double t_;
  std::vector<double> x_;
};

/// Operation needs a quasi-periodic representation the model does not carry.
class UnsupportedModelError : public Error {
public:
  using Error::Error;
};

/// Exact assignment was asked for more atoms than it accepts.
class SizeLimitError : public Error {
public:
  using Error::Error;
};

/// Particle state became non-finite during integration.
class BlowUpError : public Error {
public:
  BlowUpError(double t, double norm, double last_healthy_time);
  double t() const noexcept { return t_; }
  double norm() const noexcept { return norm_; }
  double last_healthy_time() const noexcept { return last_healthy_; }

private:
  double t_;
  double norm_;
  double last_healthy_;
};

/// The dissipativity profile has a non-negative long-run average of alpha + beta.
class NotDissipativeError : public Error {
public:
  explicit NotDissipativeError(double measured_average);
  double measured_average() const noexcept { return average_; }

private:
  double average_;
};

/// Run specification failed validation; `field()` is a dotted path.
class ValidationError : public Error {
public:
  ValidationError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Run specification text could not be parsed.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace mckv
