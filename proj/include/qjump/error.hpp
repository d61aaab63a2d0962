// Copyright 2026 The qjump Authors.
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

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qjump {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument is malformed: NaN, infinite, wrong size.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Argument is well formed but outside the region where the quantity exists.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Quadrature or root finding did not converge, or a value overflowed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The integrator left its stable regime (dt too large for the rates).
class StepTooLarge : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

// Soft warnings (coarse grids, asymptotic formulas outside their range).
// The default handler prints to stderr.
using WarningHandler = std::function<void(std::string_view)>;

WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

// Collects warnings for the lifetime of the object; restores the previous
// handler on destruction.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool empty() const { return messages_.empty(); }

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

}  // namespace qjump
