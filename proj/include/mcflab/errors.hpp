#ifndef MCFLAB_ERRORS_HPP
#define MCFLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcflab {

/// Failure categories. The CLI maps each one onto a distinct exit code.
enum class ErrorKind {
  Precondition,
  GridMismatch,
  DomainTooSmall,
  Instability,
  NotRegular,
  OutOfInterval,
  NotMeanConvex,
  Singular,
  NonConvergence,
  Separation,
  Parse,
  Resolution,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::DomainTooSmall: return "domain-too-small";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::NotRegular: return "not-regular";
    case ErrorKind::OutOfInterval: return "out-of-interval";
    case ErrorKind::NotMeanConvex: return "not-mean-convex";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Separation: return "separation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mcflab

#endif  // MCFLAB_ERRORS_HPP
