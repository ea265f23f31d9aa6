#pragma once

#include <stdexcept>
#include <string>

namespace mpsteer {

enum class ErrorKind {
  DegenerateSpectrum,
  SingularComplement,
  SizeLimit,
  SingularPoint,
  ParentUndefined,
  DimensionMismatch,
  ZeroTangent,
  OrthogonalSubspaces,
  IllConditionedTangent,
  TruncationOverflow,
  NoImprovement,
  InvalidArgument,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::SingularComplement: return "SingularComplement";
    case ErrorKind::SizeLimit: return "SizeLimit";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::ParentUndefined: return "ParentUndefined";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroTangent: return "ZeroTangent";
    case ErrorKind::OrthogonalSubspaces: return "OrthogonalSubspaces";
    case ErrorKind::IllConditionedTangent: return "IllConditionedTangent";
    case ErrorKind::TruncationOverflow: return "TruncationOverflow";
    case ErrorKind::NoImprovement: return "NoImprovement";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Configuration problems exit with 2; every numerical failure exits with 3.
  int exit_code() const noexcept {
    return (kind_ == ErrorKind::ConfigError || kind_ == ErrorKind::InvalidArgument ||
            kind_ == ErrorKind::IoError)
               ? 2
               : 3;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace mpsteer
