// ctcasr/common.hpp

// Copyright 2026  The ctcasr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CTCASR_COMMON_HPP_
#define CTCASR_COMMON_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace ctcasr {

/// Row-major dense matrix; for sequences, one row per frame.
template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Failure classes; the CLI maps them onto exit codes.
enum class ErrorKind { kUsage = 1, kData = 2, kNumerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what) : Error(ErrorKind::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string &what)
      : Error(ErrorKind::kNumerical, what) {}
};

namespace detail {

inline void AppendAll(std::ostringstream &) {}

template <typename T, typename... Rest>
void AppendAll(std::ostringstream &os, const T &first, const Rest &...rest) {
  os << first;
  AppendAll(os, rest...);
}

}  // namespace detail

/// Concatenates the arguments with operator<<.
template <typename... Args>
std::string StrCat(const Args &...args) {
  std::ostringstream os;
  detail::AppendAll(os, args...);
  return os.str();
}

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; handles -inf on either side.
inline double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

inline double SafeLog(double x) { return x > 0.0 ? std::log(x) : kLogZero; }

/// Row-wise softmax of a logit matrix.
template <typename Real>
Matrix<Real> SoftmaxRows(const Matrix<Real> &logits) {
  Matrix<Real> out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Real mx = logits.row(t).maxCoeff();
    out.row(t) = (logits.row(t).array() - mx).exp();
    out.row(t) /= out.row(t).sum();
  }
  return out;
}

static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

}  // namespace ctcasr

#endif  // CTCASR_COMMON_HPP_
