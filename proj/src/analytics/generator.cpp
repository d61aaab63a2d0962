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

#include <cmath>

#include "numerics.hpp"
#include "qjump/analytics.hpp"
#include "qjump/error.hpp"

namespace qjump {

double generator_action(double q, double f_prime, double f_second, double p, double lambda,
                        double gamma) noexcept {
  const double g = q * (1.0 - q);
  return lambda * (p - q) * f_prime + 0.5 * gamma * gamma * g * g * f_second;
}

std::vector<double> generator_apply(std::span<const double> grid, std::span<const double> f,
                                    double p, double lambda, double gamma) {
  if (grid.size() != f.size()) throw InvalidInput("generator_apply: grid and values differ in size");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("generator_apply: p must lie in (0, 1)");
  if (!(lambda >= 0.0) || !(gamma >= 0.0)) throw DomainError("generator_apply: rates must be non-negative");
  const auto der =
      detail::finite_differences(grid.data(), f.data(), grid.size(), 1e-3, "generator_apply");
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = generator_action(grid[i], der.first[i], der.second[i], p, lambda, gamma);
  }
  return out;
}

}  // namespace qjump
