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

namespace qjump {

// Physical parameters of a measured two-level system in contact with a bath.
//
//   p      equilibrium ground-state population, 0 < p < 1
//   lambda thermal relaxation rate (1 / tau_therm)
//   gamma  measurement coupling, gamma^2 = 1 / tau_meas
//   omega  level splitting; only enters as a phase in the density matrix
//
// lambda = 0 or gamma = 0 switch the corresponding mechanism off. The
// dimensionless ratio sigma = 2 lambda / gamma^2 is always recomputed.
class QbitParams {
 public:
  QbitParams(double p, double lambda, double gamma, double omega = 0.0);

  // lambda and gamma chosen so that 2 lambda / gamma^2 == sigma.
  static QbitParams from_sigma(double p, double sigma, double lambda = 1.0,
                               double omega = 0.0);

  double p() const noexcept { return p_; }
  double lambda() const noexcept { return lambda_; }
  double gamma() const noexcept { return gamma_; }
  double omega() const noexcept { return omega_; }

  double sigma() const;
  double tau_therm() const noexcept;
  double tau_meas() const noexcept;
  // beta * omega, from p = 1 / (1 + exp(-beta omega)).
  double beta_omega() const noexcept;

  // Same physics seen through Q -> 1 - Q.
  QbitParams mirrored() const { return QbitParams(1.0 - p_, lambda_, gamma_, omega_); }

 private:
  double p_;
  double lambda_;
  double gamma_;
  double omega_;
};

}  // namespace qjump
