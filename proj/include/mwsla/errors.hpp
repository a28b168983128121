#pragma once

#include <stdexcept>
#include <string>

namespace mwsla {

// Shapes or lengths that do not line up (N mismatch, empty SLA, ...).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mathematically undefined input, e.g. a non-positive KL reference point.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid user-supplied configuration (experiment files, workload shapes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed trace input. Carries the offending 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A load source ran dry, or another failure that only shows up mid-run.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A runtime-checked invariant (growth monitor, conservation, phase growth) failed.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Both SLA normalisations over an active set need a positive SLA mass.
class DegenerateSlaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mwsla
