#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stewart {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Rot3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using HomMat = Eigen::Matrix<Scalar, 4, 4>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;

constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Raised when a caller breaks a documented precondition (bad index, dt <= 0, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnreachablePose : public std::runtime_error {
 public:
  explicit UnreachablePose(int leg)
      : std::runtime_error("pose unreachable for leg " + std::to_string(leg + 1)), leg_(leg) {}
  /// Zero-based leg index.
  int leg() const { return leg_; }

 private:
  int leg_;
};

class DegenerateGeometry : public std::runtime_error {
 public:
  explicit DegenerateGeometry(int leg)
      : std::runtime_error("degenerate horn geometry for leg " + std::to_string(leg + 1)),
        leg_(leg) {}
  int leg() const { return leg_; }

 private:
  int leg_;
};

class DivisionByZeroTime : public std::domain_error {
 public:
  DivisionByZeroTime() : std::domain_error("error derivative needs two distinct sample times") {}
};

class NoRulesError : public std::runtime_error {
 public:
  explicit NoRulesError(const std::string& controller)
      : std::runtime_error("controller '" + controller + "' has no rules") {}
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BallNotFound : public std::runtime_error {
 public:
  BallNotFound() : std::runtime_error("no blob qualifies as the ball") {}
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stewart
