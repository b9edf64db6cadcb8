#include "fitnet/error.hpp"

#include <cstdio>

namespace fitnet {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_geometry: return "InvalidGeometry";
    case ErrorCode::phantom_edge: return "PhantomEdge";
    case ErrorCode::invalid_material: return "InvalidMaterial";
    case ErrorCode::nonphysical_resistivity: return "NonphysicalResistivity";
    case ErrorCode::open_branch: return "OpenBranch";
    case ErrorCode::shape_error: return "ShapeError";
    case ErrorCode::singular_system: return "SingularSystem";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::missing_ground: return "MissingGround";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::invalid_input: return "InvalidInput";
  }
  return "Unknown";
}

namespace {

std::string no_convergence_message(double time, double residual, int iterations) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "Newton iteration did not converge at t=%.6e s after %d iterations "
                "(scaled residual %.3e)",
                time, iterations, residual);
  return buf;
}

}  // namespace

NoConvergence::NoConvergence(double time, double residual, int iterations)
    : Error(ErrorCode::no_convergence, no_convergence_message(time, residual, iterations)),
      time_(time),
      residual_(residual),
      iterations_(iterations) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + message),
      line_(line) {}

}  // namespace fitnet
