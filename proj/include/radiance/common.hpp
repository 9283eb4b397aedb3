#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Bad arguments: out-of-range pixels, negative densities, shape mismatches.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf. `stage` names where (e.g. an MLP layer index).
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int stage = -1)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

// API misuse, e.g. consuming a gradient tape twice.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or inconsistent files on disk.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace rf
