#pragma once

#include <stdexcept>
#include <string>

namespace nes {

/// Base of every error raised by the simulator and orchestrator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MalformedTimelineError : public Error {
 public:
  using Error::Error;
};

/// A gap is shorter than the deep-sleep qualifying length.
class IneligibleGapError : public Error {
 public:
  using Error::Error;
};

class InfeasibleLoadError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class UnknownFeatureError : public Error {
 public:
  using Error::Error;
};

/// A plan names a feature that exists only as a descriptor.
class NotSimulatableError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nes
