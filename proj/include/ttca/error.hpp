#pragma once

#include <stdexcept>
#include <string>

namespace ttca {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query point lies on or beyond a road edge singularity.
class EdgeSingularity : public Error {
 public:
  using Error::Error;
};

// Obstacle safety distance is not positive and clamping is disabled.
class NonpositiveSafetyDistance : public Error {
 public:
  using Error::Error;
};

// Gradient vanished before the descent reached its target.
class LocalMinimumStall : public Error {
 public:
  using Error::Error;
};

class MaxStepsExceeded : public Error {
 public:
  using Error::Error;
};

// Weighted normal matrix is singular (fewer than four distinct abscissae).
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class EmptyWindow : public Error {
 public:
  using Error::Error;
};

// No cubic satisfies the corridor constraints.
class Infeasible : public Error {
 public:
  using Error::Error;
};

class NumericBlowup : public Error {
 public:
  using Error::Error;
};

class TrackingDiverged : public Error {
 public:
  using Error::Error;
};

class NoLaneChangeDetected : public Error {
 public:
  using Error::Error;
};

// TTC gate refused the lane change; the ego must brake first.
class BrakeFirst : public Error {
 public:
  BrakeFirst(double ttc_seconds, double threshold)
      : Error("time to collision " + std::to_string(ttc_seconds) +
              " s is below the " + std::to_string(threshold) +
              " s gate: brake first"),
        ttc_seconds_(ttc_seconds) {}

  double ttc_seconds() const noexcept { return ttc_seconds_; }

 private:
  double ttc_seconds_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ttca
