#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace stplan {

enum class ErrorCode {
  TooFewWaypoints,
  DegenerateWaypoints,
  OutOfRange,
  OffsetExceedsRadius,
  ProjectionDiverged,
  PointTooFar,
  NegativeTime,
  InvalidHorizon,
  TauOutOfHorizon,
  EmptyRange,
  NoFeasibleCorridor,
  IllConditioned,
  AllInfeasible,
  SteeringSingular,
  BadProblem,
  QpInfeasible,
  HorizonMismatch,
  CorridorGap,
  NoFeasiblePlan,
  UnknownScenario,
  InvalidScenarioFile,
  UnknownMethod,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::TooFewWaypoints: return "TooFewWaypoints";
    case ErrorCode::DegenerateWaypoints: return "DegenerateWaypoints";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::OffsetExceedsRadius: return "OffsetExceedsRadius";
    case ErrorCode::ProjectionDiverged: return "ProjectionDiverged";
    case ErrorCode::PointTooFar: return "PointTooFar";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::TauOutOfHorizon: return "TauOutOfHorizon";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::NoFeasibleCorridor: return "NoFeasibleCorridor";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::AllInfeasible: return "AllInfeasible";
    case ErrorCode::SteeringSingular: return "SteeringSingular";
    case ErrorCode::BadProblem: return "BadProblem";
    case ErrorCode::QpInfeasible: return "QpInfeasible";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::CorridorGap: return "CorridorGap";
    case ErrorCode::NoFeasiblePlan: return "NoFeasiblePlan";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::InvalidScenarioFile: return "InvalidScenarioFile";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r = kPi;
  return r;
}

inline double square(double x) { return x * x; }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
  /// Distance from x to the interval (0 when inside).
  double distance_to(double x) const {
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
  }
};

}  // namespace stplan
