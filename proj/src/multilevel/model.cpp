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


#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qjump/error.hpp"
#include "qjump/multilevel.hpp"

namespace qjump {

namespace {

std::string level_name(const char* prefix, Eigen::Index a) {
  std::ostringstream os;
  os << prefix << "[" << a << "]";
  return os.str();
}

}  // namespace

MultiLevelModel MultiLevelModel::two_level(double p, double lambda, double gamma) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("two_level: p must lie in (0, 1)");
  if (!(lambda >= 0.0) || !(gamma >= 0.0)) throw DomainError("two_level: rates must be non-negative");
  MultiLevelModel m;
  m.rates = Eigen::MatrixXd::Zero(2, 2);
  m.rates(0, 1) = lambda * p;
  m.rates(1, 0) = lambda * (1.0 - p);
  m.boltzmann = Eigen::Vector2d(p, 1.0 - p);
  m.couplings.resize(2, 2);
  m.couplings << 0.5 * gamma, -0.5 * gamma, -0.5 * gamma, 0.5 * gamma;
  m.probe = Eigen::Vector2d(0.5, 0.5);
  return m;
}

std::vector<Violation> validate_model(const MultiLevelModel& model, double tolerance) {
  std::vector<Violation> out;
  const auto n = model.rates.rows();
  if (n < 2 || model.rates.cols() != n) {
    out.push_back({"L must be square with at least two levels", static_cast<double>(n)});
    return out;
  }
  if (model.boltzmann.size() != n) {
    out.push_back({"boltzmann length differs from n", static_cast<double>(model.boltzmann.size())});
    return out;
  }
  if (model.couplings.cols() != n) {
    out.push_back({"Gamma must have n columns", static_cast<double>(model.couplings.cols())});
    return out;
  }
  if (model.probe.size() != model.couplings.rows() || model.probe.size() == 0) {
    out.push_back({"p0 length differs from the rows of Gamma", static_cast<double>(model.probe.size())});
    return out;
  }
  const bool finite = model.rates.allFinite() && model.boltzmann.allFinite() &&
                      model.couplings.allFinite() && model.probe.allFinite();
  if (!finite) {
    out.push_back({"non-finite entry", std::numeric_limits<double>::infinity()});
    return out;
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (a != c && model.rates(a, c) < 0.0) {
        std::ostringstream os;
        os << "negative rate L[" << a << "][" << c << "]";
        out.push_back({os.str(), -model.rates(a, c)});
      }
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    if (model.boltzmann(a) < 0.0) out.push_back({level_name("negative boltzmann", a), -model.boltzmann(a)});
  }
  const double bsum = model.boltzmann.sum();
  if (std::abs(bsum - 1.0) > tolerance) out.push_back({"boltzmann does not sum to 1", std::abs(bsum - 1.0)});
  for (Eigen::Index i = 0; i < model.probe.size(); ++i) {
    if (model.probe(i) < 0.0) out.push_back({level_name("negative p0", i), -model.probe(i)});
  }
  const double psum = model.probe.sum();
  if (std::abs(psum - 1.0) > tolerance) out.push_back({"p0 does not sum to 1", std::abs(psum - 1.0)});

  // Gibbs stationarity: sum_c L_ac p_c = l_a p_a, with l_a the column sum.
  const Eigen::VectorXd escape = model.rates.colwise().sum().transpose();
  for (Eigen::Index a = 0; a < n; ++a) {
    double in = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) in += model.rates(a, c) * model.boltzmann(c);
    const double defect = std::abs(in - escape(a) * model.boltzmann(a));
    const double scale = std::max(1.0, escape.cwiseAbs().maxCoeff());
    if (defect > tolerance * scale) out.push_back({level_name("Gibbs balance violated at level", a), defect});
  }
  // Couplings must be centered under p0.
  const Eigen::VectorXd centered = model.couplings.transpose() * model.probe;
  const double gscale = std::max(1.0, model.couplings.cwiseAbs().maxCoeff());
  for (Eigen::Index a = 0; a < n; ++a) {
    if (std::abs(centered(a)) > tolerance * gscale) {
      out.push_back({level_name("coupling not centered for level", a), std::abs(centered(a))});
    }
  }
  const Eigen::MatrixXd gbar = gamma_bar(model);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gbar);
  const double low = eig.eigenvalues().minCoeff();
  if (low < -1e-10 * std::max(1.0, gbar.cwiseAbs().maxCoeff())) {
    out.push_back({"Gbar is not positive semidefinite", -low});
  }
  return out;
}

void require_valid(const MultiLevelModel& model, double tolerance) {
  const auto violations = validate_model(model, tolerance);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid multilevel model:";
  for (const auto& v : violations) os << "\n  " << v.what << " (magnitude " << v.magnitude << ")";
  throw ModelError(os.str());
}

Eigen::MatrixXd gamma_bar(const MultiLevelModel& model) {
  if (model.probe.size() != model.couplings.rows()) {
    throw ModelError("gamma_bar: p0 length differs from the rows of Gamma");
  }
  const Eigen::MatrixXd g = model.couplings.transpose() * model.probe.asDiagonal() * model.couplings;
  return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& gbar) {
  const auto n = gbar.rows();
  if (gbar.cols() != n) throw ModelError("noise_factor: Gbar must be square");
  const double scale = gbar.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gbar);
  if (ldlt.info() != Eigen::Success) throw ModelError("noise_factor: LDL^T factorization failed");
  Eigen::VectorXd d = ldlt.vectorD();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (d(k) < -1e-10 * scale) {
      std::ostringstream os;
      os << "noise_factor: Gbar has a negative pivot " << d(k);
      throw ModelError(os.str());
    }
    // Pivots at rounding level are structural zeros.
    d(k) = d(k) > 1e-14 * scale ? std::sqrt(d(k)) : 0.0;
  }
  const Eigen::MatrixXd lower = ldlt.matrixL();
  // Gbar = P^T L D L^T P.
  Eigen::MatrixXd f = ldlt.transpositionsP().transpose() * (lower * d.asDiagonal());
  return f;
}

Eigen::MatrixXd thermal_matrix(const MultiLevelModel& model) {
  Eigen::MatrixXd a = model.rates;
  const Eigen::VectorXd escape = model.rates.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < a.rows(); ++c) a(c, c) -= escape(c);
  return a;
}

Eigen::VectorXd predicted_dwell_times(const MultiLevelModel& model) {
  const auto n = model.rates.rows();
  Eigen::VectorXd t(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    double out = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a != c) out += model.rates(a, c);
    }
    if (out > 0.0) {
      t(c) = 1.0 / out;
    } else {
      t(c) = std::numeric_limits<double>::infinity();
      warn(level_name("absorbing level: infinite dwell time for level", c));
    }
  }
  return t;
}

Eigen::MatrixXd predicted_collapse_rates(const MultiLevelModel& model) {
  const Eigen::MatrixXd g = gamma_bar(model);
  const auto n = g.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index c = 0; c < n; ++c) {
      r(a, c) = a == c ? 0.0 : 0.5 * (g(a, a) - 2.0 * g(a, c) + g(c, c));
    }
  }
  return r;
}

double multilevel_step_limit(const MultiLevelModel& model) {
  const double escape = thermal_matrix(model).diagonal().cwiseAbs().maxCoeff();
  const double meas = gamma_bar(model).diagonal().maxCoeff();
  double limit = std::numeric_limits<double>::infinity();
  if (escape > 0.0) limit = std::min(limit, 1.0 / escape);
  if (meas > 0.0) limit = std::min(limit, 1.0 / meas);
  return limit;
}

}  // namespace qjump
