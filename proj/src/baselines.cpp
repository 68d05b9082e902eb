/*
 * Copyright 2026 The fvsr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "error.hpp"

namespace fvsr {

ExpressionTree LinearModel::toTree() const {
  ExpressionTree tree = makeConstant(intercept);
  for (std::size_t j = 0; j < inputColumns.size(); ++j) {
    const std::string& name = schema[inputColumns[j]].name;
    if (std::find(dropped.begin(), dropped.end(), name) != dropped.end()) continue;
    const auto term = makeBinary(NodeType::kMul, makeConstant(coefficients[j]),
                                 makeVariable(static_cast<std::uint32_t>(inputColumns[j])));
    tree = makeBinary(NodeType::kAdd, tree, term);
  }
  return tree;
}

std::vector<double> LinearModel::predict(const Dataset& data) const { return evaluate(toTree(), data); }

LinearModel fitOls(const Dataset& data) {
  const Schema& s = data.schema();
  if (!data.hasTarget()) throw DataError("linear regression needs a target column");
  if (!s.inputs(ColumnKind::kNominal).empty()) {
    throw DataError("linear regression needs numeric inputs; one-hot encode nominal columns first");
  }

  LinearModel model;
  model.schema = s;
  model.inputColumns = s.inputs(ColumnKind::kNumeric);
  model.coefficients.assign(model.inputColumns.size(), 0.0);

  // Reference-level coding: the last indicator of every group goes.
  std::vector<bool> keep(model.inputColumns.size(), true);
  for (std::size_t j = 0; j < model.inputColumns.size(); ++j) {
    const Column& col = s[model.inputColumns[j]];
    if (!col.isIndicator()) continue;
    bool last = true;
    for (std::size_t m = j + 1; m < model.inputColumns.size(); ++m) {
      if (s[model.inputColumns[m]].indicatorOf == col.indicatorOf) last = false;
    }
    if (last) {
      keep[j] = false;
      model.dropped.push_back(col.name);
    }
  }

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j]) active.push_back(j);
  }
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto target = data.target();
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) y(r) = target[static_cast<std::size_t>(r)];

  auto design = [&](const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()) + 1);
    x.col(0).setOnes();
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto values = data.numericColumn(model.inputColumns[cols[k]]);
      for (Eigen::Index r = 0; r < n; ++r) x(r, static_cast<Eigen::Index>(k) + 1) = values[static_cast<std::size_t>(r)];
    }
    return x;
  };

  Eigen::MatrixXd x = design(active);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    // Columns past the numerical rank in pivot order are dependent on the
    // ones before them.
    std::set<std::size_t> dependent;
    for (Eigen::Index p = qr.rank(); p < x.cols(); ++p) {
      const auto col = qr.colsPermutation().indices()(p);
      if (col == 0) {
        model.warnings.push_back("intercept is collinear with the inputs");
        continue;
      }
      dependent.insert(active[static_cast<std::size_t>(col - 1)]);
    }
    std::vector<std::size_t> remaining;
    for (std::size_t j : active) {
      if (dependent.count(j)) {
        model.dropped.push_back(s[model.inputColumns[j]].name);
        model.warnings.push_back("dropped linearly dependent column '" + s[model.inputColumns[j]].name + "'");
      } else {
        remaining.push_back(j);
      }
    }
    active = std::move(remaining);
    x = design(active);
    qr.compute(x);
  }
  if (data.rows() <= static_cast<std::size_t>(x.cols())) {
    throw DataError("linear regression needs more rows (" + std::to_string(data.rows()) + ") than parameters (" +
                    std::to_string(x.cols()) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  model.intercept = beta(0);
  for (std::size_t k = 0; k < active.size(); ++k) model.coefficients[active[k]] = beta(static_cast<Eigen::Index>(k) + 1);
  return model;
}

ErrorReport computeErrors(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw InvalidArgument("prediction and target lengths differ");
  if (targets.empty()) throw InvalidArgument("error metrics need at least one row");
  ErrorReport rep;
  rep.rowCount = targets.size();
  double sse = 0.0;
  double mean = 0.0;
  double relative = 0.0;
  std::size_t relativeRows = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sse += e * e;
    mean += targets[i];
    if (targets[i] == 0.0) {
      ++rep.zeroTargetRows;
    } else {
      relative += std::abs(e) / std::abs(targets[i]);
      ++relativeRows;
    }
  }
  if (relativeRows == 0) throw DataError("every target is zero; relative error is undefined");
  const double n = static_cast<double>(targets.size());
  mean /= n;
  double tss = 0.0;
  for (double t : targets) tss += (t - mean) * (t - mean);
  rep.mse = std::isfinite(sse) ? sse / n : std::numeric_limits<double>::infinity();
  rep.rmse = std::sqrt(rep.mse);
  rep.averageRelativeErrorPercent = 100.0 * relative / static_cast<double>(relativeRows);
  rep.r2 = tss > 0.0 ? 1.0 - sse / tss : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::string formatErrorReport(const ErrorReport& r, const std::string& prefix) {
  std::string out;
  out += prefix + "rows=" + std::to_string(r.rowCount) + "\n";
  out += prefix + "mse=" + formatDouble(r.mse) + "\n";
  out += prefix + "rmse=" + formatDouble(r.rmse) + "\n";
  out += prefix + "average_relative_error_percent=" + formatDouble(r.averageRelativeErrorPercent) + "\n";
  out += prefix + "r2=" + formatDouble(r.r2) + "\n";
  out += prefix + "zero_target_rows=" + std::to_string(r.zeroTargetRows) + "\n";
  return out;
}

}  // namespace fvsr
