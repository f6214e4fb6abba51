#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace surftrap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kMicron = 1e-6;

inline Vec3 um_to_m(const Vec3& p_um) { return p_um * kMicron; }
inline Vec3 m_to_um(const Vec3& p_m) { return p_m / kMicron; }

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Stable machine-readable tag, used by the CLI error block.
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_parameter"; }
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "out_of_domain"; }
};

/// An iterative search gave up; carries the best iterate it reached.
class SearchFailed : public Error {
 public:
  SearchFailed(const std::string& what, Vec3 best_um, double residual)
      : Error(what), best_um_(std::move(best_um)), residual_(residual) {}
  const char* kind() const noexcept override { return "search_failed"; }
  const Vec3& best_um() const noexcept { return best_um_; }
  double residual() const noexcept { return residual_; }

 private:
  Vec3 best_um_;
  double residual_;
};

class NoEscapePoint : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "no_escape_point"; }
};

class NotAMinimum : public Error {
 public:
  NotAMinimum(const std::string& what, int axis) : Error(what), axis_(axis) {}
  const char* kind() const noexcept override { return "not_a_minimum"; }
  /// 0, 1, 2 for x, y, z.
  int axis() const noexcept { return axis_; }

 private:
  int axis_;
};

/// Two sensing zones at the same position.
class ZeroBaseline : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "zero_baseline"; }
};

/// Constraint cannot be met; `items` names the offending electrodes/steps.
class Infeasible : public Error {
 public:
  Infeasible(const std::string& what, std::vector<std::string> items = {})
      : Error(what), items_(std::move(items)) {}
  const char* kind() const noexcept override { return "infeasible"; }
  const std::vector<std::string>& items() const noexcept { return items_; }

 private:
  std::vector<std::string> items_;
};

}  // namespace surftrap
