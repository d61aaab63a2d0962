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
#include <vector>

namespace qjump {

// Globally adaptive Gauss-Kronrod integration of f over [breaks.front(),
// breaks.back()], starting from the given pieces. Throws NumericalError when
// the error estimate stays above rel_tol times the L1 norm.
double integrate_adaptive(const std::function<double(double)>& f, const std::vector<double>& breaks,
                          double rel_tol = 1e-10);

}  // namespace qjump
