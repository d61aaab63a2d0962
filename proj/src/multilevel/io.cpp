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


#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "qjump/error.hpp"
#include "qjump/multilevel.hpp"

namespace qjump {

namespace {

class ModelReader {
 public:
  explicit ModelReader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Mark& mark, const std::string& message) const {
    std::ostringstream os;
    os << origin_;
    if (!mark.is_null()) os << ":" << mark.line + 1 << ":" << mark.column + 1;
    os << ": " << message;
    throw ModelError(os.str());
  }

  YAML::Node require(const YAML::Node& root, const char* key) const {
    const YAML::Node node = root[key];
    if (!node) fail(root.Mark(), std::string("missing key '") + key + "'");
    return node;
  }

  double scalar(const YAML::Node& node, const char* what) const {
    if (!node.IsScalar()) fail(node.Mark(), std::string(what) + " must be a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node.Mark(), std::string(what) + " must be a number, got '" + node.Scalar() + "'");
    }
  }

  // Flat list of rows * cols numbers or a list of rows; cols fixed, rows
  // inferred when negative.
  Eigen::MatrixXd matrix(const YAML::Node& node, long rows, long cols, const char* what) const {
    if (!node.IsSequence() || node.size() == 0) fail(node.Mark(), std::string(what) + " must be a non-empty list");
    std::vector<double> values;
    long found_rows = 0;
    if (node[0].IsSequence()) {
      for (const auto& row : node) {
        if (!row.IsSequence() || static_cast<long>(row.size()) != cols) {
          std::ostringstream os;
          os << what << " rows must have " << cols << " entries";
          fail(row.Mark(), os.str());
        }
        for (const auto& v : row) values.push_back(scalar(v, what));
        ++found_rows;
      }
    } else {
      for (const auto& v : node) values.push_back(scalar(v, what));
      if (values.size() % static_cast<std::size_t>(cols) != 0) {
        std::ostringstream os;
        os << what << " has " << values.size() << " entries, not a multiple of " << cols;
        fail(node.Mark(), os.str());
      }
      found_rows = static_cast<long>(values.size()) / cols;
    }
    if (rows >= 0 && found_rows != rows) {
      std::ostringstream os;
      os << what << " must have " << rows << " rows, found " << found_rows;
      fail(node.Mark(), os.str());
    }
    Eigen::MatrixXd m(found_rows, cols);
    for (long r = 0; r < found_rows; ++r) {
      for (long c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
    }
    return m;
  }

  Eigen::VectorXd vector(const YAML::Node& node, long size, const char* what) const {
    if (!node.IsSequence()) fail(node.Mark(), std::string(what) + " must be a list");
    if (size >= 0 && static_cast<long>(node.size()) != size) {
      std::ostringstream os;
      os << what << " must have " << size << " entries, found " << node.size();
      fail(node.Mark(), os.str());
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Eigen::Index>(i)) = scalar(node[i], what);
    return v;
  }

  MultiLevelModel read(const YAML::Node& root) const {
    if (!root.IsMap()) fail(root.Mark(), "model document must be a mapping");
    const YAML::Node n_node = require(root, "n");
    const double n_value = scalar(n_node, "n");
    if (!(n_value >= 2.0) || n_value != static_cast<double>(static_cast<long>(n_value))) {
      fail(n_node.Mark(), "n must be an integer >= 2");
    }
    const long n = static_cast<long>(n_value);
    MultiLevelModel model;
    model.rates = matrix(require(root, "L"), n, n, "L");
    model.boltzmann = vector(require(root, "boltzmann"), n, "boltzmann");
    const YAML::Node gamma_node = require(root, "Gamma");
    model.couplings = matrix(gamma_node, -1, n, "Gamma");
    const YAML::Node p0_node = require(root, "p0");
    model.probe = vector(p0_node, model.couplings.rows(), "p0");
    const auto violations = validate_model(model);
    if (!violations.empty()) {
      std::ostringstream os;
      os << "invalid model:";
      for (const auto& v : violations) os << " " << v.what << " (magnitude " << v.magnitude << ");";
      fail(root.Mark(), os.str());
    }
    return model;
  }

 private:
  std::string origin_;
};

}  // namespace

MultiLevelModel parse_model(const std::string& text, const std::string& origin) {
  ModelReader reader(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    reader.fail(e.mark, e.msg);
  }
  return reader.read(root);
}

MultiLevelModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str(), path);
}

}  // namespace qjump
