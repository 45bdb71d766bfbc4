#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shapedyn {

enum class ErrorKind {
  NotTangent,
  DegenerateConfiguration,
  DegenerateUnit,
  SingularInertia,
  SingularConfiguration,
  SingularMass,
  ChartDomain,
  ChartExit,
  Collision,
  CollisionDuringIntegration,
  StepUnderflow,
  TurningPoint,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotTangent: return "NotTangent";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::DegenerateUnit: return "DegenerateUnit";
    case ErrorKind::SingularInertia: return "SingularInertia";
    case ErrorKind::SingularConfiguration: return "SingularConfiguration";
    case ErrorKind::SingularMass: return "SingularMass";
    case ErrorKind::ChartDomain: return "ChartDomain";
    case ErrorKind::ChartExit: return "ChartExit";
    case ErrorKind::Collision: return "Collision";
    case ErrorKind::CollisionDuringIntegration: return "CollisionDuringIntegration";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::TurningPoint: return "TurningPoint";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library. `kind()` distinguishes the failure;
/// integration failures also carry the simulation time at which they occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<double> time = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), time_(time) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<double> time() const noexcept { return time_; }

 private:
  ErrorKind kind_;
  std::optional<double> time_;
};

}  // namespace shapedyn
