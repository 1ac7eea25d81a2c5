#pragma once

#include <stdexcept>
#include <string>

namespace icw {

enum class ErrorKind {
  validation,      // malformed input (weights, configs, parameters)
  dimension,       // mismatched sizes
  size,            // instance too large for the requested method
  representation,  // method needs an integer weight lattice and none exists
  regime,          // parameters outside the uniqueness regime
  solver,          // root finder did not converge
  degeneracy,      // vanishing curvature at the fixed point
  quadrature,      // adaptive integration did not reach tolerance
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::size: return "size";
    case ErrorKind::representation: return "representation";
    case ErrorKind::regime: return "regime";
    case ErrorKind::solver: return "solver";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::quadrature: return "quadrature";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace icw
