#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fitnet {

enum class ErrorCode {
  invalid_geometry,
  phantom_edge,
  invalid_material,
  nonphysical_resistivity,
  open_branch,
  shape_error,
  singular_system,
  no_convergence,
  missing_ground,
  parse_error,
  invalid_input,
};

const char* to_string(ErrorCode code) noexcept;

// Base class of every error raised by the library. The code lets callers
// (the CLI in particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(double time, double residual, int iterations);

  double time() const noexcept { return time_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double time_;
  double residual_;
  int iterations_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fitnet
