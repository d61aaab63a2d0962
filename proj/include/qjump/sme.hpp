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

#include <array>
#include <complex>

#include "qjump/params.hpp"

namespace qjump {

// 2x2 density matrix in the {|0>, |1>} energy basis; |0> is the ground state
// and sigma_z = diag(1, -1).
class DensityMatrix2 {
 public:
  using complex = std::complex<double>;

  DensityMatrix2() = default;
  DensityMatrix2(complex e00, complex e01, complex e10, complex e11) noexcept
      : e_{e00, e01, e10, e11} {}

  static DensityMatrix2 diagonal(double q) noexcept { return {q, 0.0, 0.0, 1.0 - q}; }
  static DensityMatrix2 gibbs(double p) noexcept { return diagonal(p); }
  static DensityMatrix2 maximally_mixed() noexcept { return diagonal(0.5); }

  complex operator()(int row, int col) const noexcept { return e_[2 * row + col]; }
  complex& operator()(int row, int col) noexcept { return e_[2 * row + col]; }

  // Q = <0|rho|0>.
  double ground_population() const noexcept { return e_[0].real(); }
  complex trace() const noexcept { return e_[0] + e_[3]; }
  double sigma_z_expectation() const noexcept { return (e_[0] - e_[3]).real(); }

  double hermiticity_defect() const noexcept;
  double min_eigenvalue() const noexcept;
  // Hermitian to 1e-12, unit trace to 1e-12, eigenvalues >= -1e-10.
  bool is_valid() const noexcept;

  DensityMatrix2& operator+=(const DensityMatrix2& other) noexcept;
  DensityMatrix2& operator*=(double factor) noexcept;
  friend DensityMatrix2 operator+(DensityMatrix2 a, const DensityMatrix2& b) noexcept {
    return a += b;
  }
  friend DensityMatrix2 operator*(double s, DensityMatrix2 a) noexcept { return a *= s; }

 private:
  std::array<complex, 4> e_{};
};

// Thermal generator: level-splitting phase plus decay |1> -> |0> at rate
// lambda p and excitation |0> -> |1> at rate lambda (1 - p). The Gibbs state
// diag(p, 1 - p) is stationary.
DensityMatrix2 thermal_generator(const DensityMatrix2& rho, const QbitParams& params);

// Dephasing from continuous sigma_z monitoring: -(gamma^2 / 32) [sz, [sz, rho]].
DensityMatrix2 measurement_generator(const DensityMatrix2& rho, const QbitParams& params);

// Innovation term: (gamma / 4) ({sz, rho} - 2 rho tr(rho sz)).
DensityMatrix2 measurement_diffusion(const DensityMatrix2& rho, const QbitParams& params);

// exp(dt (thermal + measurement)) rho, in closed form.
DensityMatrix2 propagate_deterministic(const DensityMatrix2& rho, const QbitParams& params,
                                       double dt);

// One step of the normalized stochastic master equation. The linear part is
// propagated exactly, the innovation term with Euler-Maruyama; the result is
// Hermitian-symmetrized and renormalized to unit trace. Throws StepTooLarge
// if an eigenvalue drops below -1e-6.
DensityMatrix2 step_sme(const DensityMatrix2& rho, const QbitParams& params, double dt,
                        double dB);

}  // namespace qjump
