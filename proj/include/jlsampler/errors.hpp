// Copyright 2026 The jlsampler Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef JLSAMPLER_ERRORS_HPP
#define JLSAMPLER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace jlsampler {

/// Invalid argument or shape: a violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a special function (overflow, runaway series).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method did not reach its tolerance. Carries the best value
/// found so that callers can still inspect it.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_value)
      : std::runtime_error(what), best_value_(best_value) {}
  double best_value() const noexcept { return best_value_; }

 private:
  double best_value_;
};

/// No constant on the calibration grid meets the failure budget.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-constants descent saw a step that missed its guaranteed decrease,
/// meaning the supplied L or K underestimates the true constant.
class ConstantMisestimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monte Carlo training blew up.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jlsampler

#endif  // JLSAMPLER_ERRORS_HPP
