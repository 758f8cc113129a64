#include "mckv/errors.hpp"

#include <sstream>

namespace mckv {

namespace {

std::string describe_point(const std::string& what, double t, const std::vector<double>& x) {
  std::ostringstream os;
  os << what << " (t=" << t << ", x=[";
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << (i ? ", " : "") << x[i];
  }
  os << "])";
  return os.str();
}

}  // namespace

ModelError::ModelError(const std::string& what, double t, std::vector<double> x)
    : Error(describe_point(what, t, x)), t_(t), x_(std::move(x)) {}

BlowUpError::BlowUpError(double t, double norm, double last_healthy_time)
    : Error("numerical blow-up at t=" + std::to_string(t) + " (|x|=" + std::to_string(norm) +
            ", last healthy time " + std::to_string(last_healthy_time) + ")"),
      t_(t),
      norm_(norm),
      last_healthy_(last_healthy_time) {}

NotDissipativeError::NotDissipativeError(double measured_average)
    : Error("profile is not dissipative on average: mean of alpha+beta is " +
            std::to_string(measured_average) + " (must be < 0)"),
      average_(measured_average) {}

ValidationError::ValidationError(std::string field, const std::string& message)
    : Error(field + ": " + message), field_(std::move(field)) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error("parse error at line " + std::to_string(line) + ": " + message), line_(line) {}

}  // namespace mckv
