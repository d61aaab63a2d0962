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

#include "qjump/params.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qjump/error.hpp"

namespace qjump {

QbitParams::QbitParams(double p, double lambda, double gamma, double omega)
    : p_(p), lambda_(lambda), gamma_(gamma), omega_(omega) {
  if (!std::isfinite(p) || !std::isfinite(lambda) || !std::isfinite(gamma) ||
      !std::isfinite(omega)) {
    throw InvalidInput("QbitParams: non-finite parameter");
  }
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream os;
    os << "QbitParams: p must lie in (0, 1), got " << p;
    throw DomainError(os.str());
  }
  if (lambda < 0.0 || gamma < 0.0) {
    throw DomainError("QbitParams: lambda and gamma must be non-negative");
  }
}

QbitParams QbitParams::from_sigma(double p, double sigma, double lambda, double omega) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw DomainError("QbitParams::from_sigma: sigma must be positive");
  }
  if (!(lambda > 0.0)) throw DomainError("QbitParams::from_sigma: lambda must be positive");
  return QbitParams(p, lambda, std::sqrt(2.0 * lambda / sigma), omega);
}

double QbitParams::sigma() const {
  if (gamma_ == 0.0) throw DomainError("sigma undefined without measurement (gamma = 0)");
  return 2.0 * lambda_ / (gamma_ * gamma_);
}

double QbitParams::tau_therm() const noexcept {
  return lambda_ > 0.0 ? 1.0 / lambda_ : std::numeric_limits<double>::infinity();
}

double QbitParams::tau_meas() const noexcept {
  return gamma_ > 0.0 ? 1.0 / (gamma_ * gamma_) : std::numeric_limits<double>::infinity();
}

double QbitParams::beta_omega() const noexcept { return std::log(p_ / (1.0 - p_)); }

}  // namespace qjump
