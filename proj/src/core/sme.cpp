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

#include "qjump/sme.hpp"

#include <cmath>
#include <sstream>

#include "qjump/error.hpp"

namespace qjump {
namespace {

using M = DensityMatrix2;
using C = std::complex<double>;

M mul(const M& a, const M& b) {
  return {a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
          a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1)};
}

M adjoint(const M& a) {
  return {std::conj(a(0, 0)), std::conj(a(1, 0)), std::conj(a(0, 1)), std::conj(a(1, 1))};
}

M scaled(const M& a, C s) { return {s * a(0, 0), s * a(0, 1), s * a(1, 0), s * a(1, 1)}; }

M commutator(const M& a, const M& b) { return mul(a, b) + -1.0 * mul(b, a); }
M anticommutator(const M& a, const M& b) { return mul(a, b) + mul(b, a); }

// c rho c^dag - {c^dag c, rho} / 2
M dissipator(const M& c, const M& rho) {
  const M cd = adjoint(c);
  return mul(mul(c, rho), cd) + -0.5 * anticommutator(mul(cd, c), rho);
}

const M kSigmaZ{1.0, 0.0, 0.0, -1.0};
const M kLower{0.0, 1.0, 0.0, 0.0};  // |0><1|
const M kRaise{0.0, 0.0, 1.0, 0.0};  // |1><0|

void require_finite(const M& rho) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (!std::isfinite(rho(i, j).real()) || !std::isfinite(rho(i, j).imag()))
        throw InvalidInput("density matrix has non-finite entries");
}

}  // namespace

double DensityMatrix2::hermiticity_defect() const noexcept {
  return std::max({std::abs(e_[0].imag()), std::abs(e_[3].imag()),
                   std::abs(e_[1] - std::conj(e_[2]))});
}

double DensityMatrix2::min_eigenvalue() const noexcept {
  const double a = e_[0].real();
  const double d = e_[3].real();
  const C b = 0.5 * (e_[1] + std::conj(e_[2]));
  const double half_diff = 0.5 * (a - d);
  return 0.5 * (a + d) - std::sqrt(half_diff * half_diff + std::norm(b));
}

bool DensityMatrix2::is_valid() const noexcept {
  return hermiticity_defect() <= 1e-12 && std::abs(trace() - 1.0) <= 1e-12 &&
         min_eigenvalue() >= -1e-10;
}

DensityMatrix2& DensityMatrix2::operator+=(const DensityMatrix2& other) noexcept {
  for (int i = 0; i < 4; ++i) e_[i] += other.e_[i];
  return *this;
}

DensityMatrix2& DensityMatrix2::operator*=(double factor) noexcept {
  for (auto& e : e_) e *= factor;
  return *this;
}

DensityMatrix2 thermal_generator(const DensityMatrix2& rho, const QbitParams& params) {
  const double lambda = params.lambda();
  const double p = params.p();
  const M phase = scaled(commutator(kSigmaZ, rho), C(0.0, -0.5 * params.omega()));
  return phase + (lambda * p) * dissipator(kLower, rho) +
         (lambda * (1.0 - p)) * dissipator(kRaise, rho);
}

DensityMatrix2 measurement_generator(const DensityMatrix2& rho, const QbitParams& params) {
  const double g = params.gamma();
  return (-g * g / 32.0) * commutator(kSigmaZ, commutator(kSigmaZ, rho));
}

DensityMatrix2 measurement_diffusion(const DensityMatrix2& rho, const QbitParams& params) {
  const double z = (mul(rho, kSigmaZ).trace()).real();
  return (0.25 * params.gamma()) * (anticommutator(kSigmaZ, rho) + (-2.0 * z) * rho);
}

DensityMatrix2 propagate_deterministic(const DensityMatrix2& rho, const QbitParams& params,
                                       double dt) {
  const double lambda = params.lambda();
  const double g = params.gamma();
  const C tr = rho.trace();
  const double decay = std::exp(-lambda * dt);
  const C ground = params.p() * tr + (rho(0, 0) - params.p() * tr) * decay;
  const double coherence_rate = 0.5 * lambda + g * g / 8.0;
  const C rot = std::exp(C(-coherence_rate * dt, -params.omega() * dt));
  return {ground, rho(0, 1) * rot, rho(1, 0) * std::conj(rot), tr - ground};
}

DensityMatrix2 step_sme(const DensityMatrix2& rho, const QbitParams& params, double dt,
                        double dB) {
  if (!std::isfinite(dt) || !std::isfinite(dB)) throw InvalidInput("step_sme: non-finite dt or dB");
  if (!(dt > 0.0)) throw InvalidInput("step_sme: dt must be positive");
  require_finite(rho);
  M next = propagate_deterministic(rho, params, dt) + dB * measurement_diffusion(rho, params);
  const C off = 0.5 * (next(0, 1) + std::conj(next(1, 0)));
  const double tr = next(0, 0).real() + next(1, 1).real();
  if (!(tr > 0.0)) throw StepTooLarge("step_sme: trace collapsed; reduce dt");
  const double ground = next(0, 0).real() / tr;
  next = M(ground, off / tr, std::conj(off) / tr, 1.0 - ground);
  const double lowest = next.min_eigenvalue();
  if (lowest < -1e-6) {
    std::ostringstream os;
    os << "step_sme: eigenvalue " << lowest << " below -1e-6; reduce dt";
    throw StepTooLarge(os.str());
  }
  return next;
}

}  // namespace qjump
