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
#include <span>
#include <vector>

namespace qjump {

// The Q diffusion with time measured in units of tau_meas:
//   dQ = (sigma / 2) (p - Q) dt + Q (1 - Q) dB.
// Everything below is expressed through
//   phi(Q) = sigma (p / Q + (1 - p) / (1 - Q) + (2p - 1) log((1 - Q) / Q)),
// the log of the scale density (s' = exp(phi)); the stationary density is
// exp(-phi) / g^2 with g = Q (1 - Q).
class DiffusionSpec {
 public:
  DiffusionSpec(double p, double sigma);

  double p() const noexcept { return p_; }
  double sigma() const noexcept { return sigma_; }
  double a_sigma() const noexcept { return sigma_ * (2.0 * p_ - 1.0); }

  double drift(double q) const noexcept { return 0.5 * sigma_ * (p_ - q); }
  double diffusion(double q) const noexcept { return q * (1.0 - q); }

  double log_scale_density(double q) const noexcept;
  // Same function of x = log(Q / (1 - Q)); exact for |x| up to ~700.
  double log_scale_density_logit(double x) const noexcept;
  // d phi / dx.
  double log_scale_density_logit_slope(double x) const noexcept;
  // phi(x + offset) - phi(x) without cancellation, also when phi(x) is huge.
  double log_scale_density_change(double x, double offset) const noexcept;

  double log_stationary_density(double q) const noexcept;

 private:
  double p_;
  double sigma_;
};

// s(Q) = offset + factor * int_p^Q exp(phi(q)) dq.
class ScaleFunction {
 public:
  explicit ScaleFunction(DiffusionSpec spec, double factor = 1.0, double offset = 0.0);

  const DiffusionSpec& spec() const noexcept { return spec_; }
  double factor() const noexcept { return factor_; }
  double offset() const noexcept { return offset_; }

  ScaleFunction affine(double factor, double offset) const;

  double log_derivative(double q) const;
  double derivative(double q) const;
  double value(double q) const;
  // log(s(b) - s(a)) for a < b, evaluated without forming s itself.
  double log_increment(double a, double b) const;

 private:
  DiffusionSpec spec_;
  double factor_;
  double offset_;
  double log_factor_;
};

// ---- stationary law ------------------------------------------------------

// Unnormalized density Q^(a-2) (1-Q)^(-a-2) exp(-sigma (p/Q + (1-p)/(1-Q))),
// a = sigma (2p - 1). Zero at the endpoints.
double stationary_density(double q, double p, double sigma);
double stationary_normalization(double p, double sigma);
// Probability of [lo, hi] under the normalized law.
double stationary_mass(double lo, double hi, double p, double sigma);
double stationary_expectation(const std::function<double(double)>& f, double p, double sigma);

// ---- double-well picture in X = log(Q / (1 - Q)) -------------------------

double potential_v(double x, double p, double sigma);
double potential_slope(double x, double p, double sigma);

struct DoubleWell {
  double lower;    // Q at the lower extremum of interest
  double barrier;  // Q at the separating extremum
  double upper;
};

// Minima of V (and the maximum between them), returned as Q values.
DoubleWell well_bottoms(double p, double sigma);
// Local maxima of the stationary density in the Q coordinate, and the
// minimum between them.
DoubleWell density_peaks(double p, double sigma);
// V(barrier) - V(lower minimum).
double barrier_height(double p, double sigma);

// ---- scale function and exit probabilities -------------------------------

double scale_function(double q, double p, double sigma);
double exit_probability(double q, double q_lo, double q_hi, double p, double sigma);
double exit_probability(const ScaleFunction& scale, double q, double q_lo, double q_hi);

// ---- waiting times --------------------------------------------------------

// Mean time to go from q_start up to q_target (q_start < q_target).
double mean_waiting_time(double q_start, double q_target, double p, double sigma, double gamma);
// Mean time to go from q_start down to q_target (q_start > q_target).
double mean_waiting_time_down(double q_start, double q_target, double p, double sigma,
                              double gamma);

// Small-sigma law of the waiting time (in units of tau_therm): an atom at
// zero of mass dirac_weight plus an exponential of rate exp_rate.
struct WaitingTimeLaw {
  double dirac_weight = 0.0;
  double exp_rate = 0.0;

  double mean() const noexcept { return (1.0 - dirac_weight) / exp_rate; }
  double laplace(double u) const noexcept;
  double cdf(double s) const noexcept;
};

WaitingTimeLaw waiting_time_law(double q_start, double q_target, double p);

// Max-abs residual over the grid of
//   sigma (-u + (p - Q) phi) + Q^2 (1 - Q)^2 (phi' + phi^2)
// with phi' from three-point finite differences.
double waiting_time_laplace_ode_residual(std::span<const double> grid,
                                         std::span<const double> phi, double u, double p,
                                         double sigma);

// ---- transitions -----------------------------------------------------------

// Drift (tau_meas units) of the path conditioned to escape upward before
// returning to q_start: f + g^2 s'(Q) / (s(Q) - s(q_start)).
double conditioned_drift(double q, double q_start, double p, double sigma);

// int_{qi}^{qf} A C / ((A + C) g^2) dQ with A = int_{qi}^Q s'/s'(Q) and
// C = int_Q^{qf} s'/s'(Q); the mean transit time is 2 tau_meas times this.
double transition_integral(double q_start, double q_end, double p, double sigma);
double transition_integral(const ScaleFunction& scale, double q_start, double q_end);
double mean_transition_time(double q_start, double q_end, double p, double sigma, double gamma);

// The sigma -> 0 limit of transition_integral, in closed form.
double transition_time_i0(double q_start, double q_end);

// int_0^1 (e^u - 1 - u) / u^2 du.
double appendix_constant();

// 2 tau_meas (-2 log sigma + 2 (J - 1) - log p (1 - p)) with J the constant
// above, for transits between the well bottoms p sigma and 1 - (1 - p) sigma.
double transition_time_refined(double p, double sigma, double gamma);

// ---- generator -------------------------------------------------------------

// (A F)(Q) = lambda (p - Q) F'(Q) + (gamma^2 / 2) Q^2 (1 - Q)^2 F''(Q).
double generator_action(double q, double f_prime, double f_second, double p, double lambda,
                        double gamma) noexcept;
std::vector<double> generator_apply(std::span<const double> grid, std::span<const double> f,
                                    double p, double lambda, double gamma);

}  // namespace qjump
