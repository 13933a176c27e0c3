#pragma once

#include <stdexcept>
#include <string>

namespace dero {

// Base class for all recoverable pipeline errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
class GimbalLock : public Error {
 public:
  explicit GimbalLock(const std::string& msg = "pitch too close to +/-90 deg") : Error(msg) {}
};

// sensor / calibration
class ZeroRange : public Error {
 public:
  explicit ZeroRange(const std::string& msg = "radar target at zero range") : Error(msg) {}
};

class InvalidCalibration : public Error {
 public:
  explicit InvalidCalibration(const std::string& msg) : Error(msg) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

// ego-velocity estimation
class RankDeficient : public Error {
 public:
  explicit RankDeficient(const std::string& msg = "target direction matrix rank < 3") : Error(msg) {}
};

class InsufficientInliers : public Error {
 public:
  explicit InsufficientInliers(const std::string& msg = "RANSAC consensus below minimum") : Error(msg) {}
};

// scan matching
class TooFewPoints : public Error {
 public:
  explicit TooFewPoints(const std::string& msg = "point cloud below minimum size") : Error(msg) {}
};

class DegenerateGeometry : public Error {
 public:
  explicit DegenerateGeometry(const std::string& msg = "degenerate correspondence geometry") : Error(msg) {}
};

// filter
class NotStationary : public Error {
 public:
  explicit NotStationary(const std::string& msg = "alignment window not stationary") : Error(msg) {}
};

class WindowTooShort : public Error {
 public:
  explicit WindowTooShort(const std::string& msg = "alignment window shorter than 1 s") : Error(msg) {}
};

class FreeFall : public Error {
 public:
  explicit FreeFall(const std::string& msg = "specific force too small for tilt") : Error(msg) {}
};

class StaleClone : public Error {
 public:
  explicit StaleClone(const std::string& msg = "cloned state too old for range update") : Error(msg) {}
};

class SingularInnovation : public Error {
 public:
  explicit SingularInnovation(const std::string& msg = "innovation covariance ill-conditioned") : Error(msg) {}
};

class EmptyStream : public Error {
 public:
  explicit EmptyStream(const std::string& msg) : Error(msg) {}
};

// dataset I/O
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

class NonMonotoneTime : public Error {
 public:
  explicit NonMonotoneTime(const std::string& msg) : Error(msg) {}
};

// evaluation
class TooFewPairs : public Error {
 public:
  explicit TooFewPairs(const std::string& msg = "need at least 2 associated pairs") : Error(msg) {}
};

}  // namespace dero
