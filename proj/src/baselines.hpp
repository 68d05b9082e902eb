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

#ifndef FVSR_BASELINES_HPP_
#define FVSR_BASELINES_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "expr.hpp"

namespace fvsr {

// Ordinary least squares on the numeric inputs of a dataset, with intercept.
struct LinearModel {
  Schema schema;
  std::vector<std::size_t> inputColumns;  // schema indices
  std::vector<double> coefficients;       // one per input column, 0 if dropped
  double intercept = 0.0;
  std::vector<std::string> dropped;       // columns removed as linearly dependent
  std::vector<std::string> warnings;

  // intercept + sum(coef * x) as an expression tree over schema; dropped
  // columns are left out.
  ExpressionTree toTree() const;
  std::vector<double> predict(const Dataset& data) const;
};

// Fits y on every numeric input. With an intercept the last indicator of each
// one-hot group is dropped (reference-level coding); remaining dependencies
// are found with a column-pivoted QR and dropped with a warning. Throws
// DataError for nominal inputs or when rows <= fitted parameters.
LinearModel fitOls(const Dataset& data);

struct ErrorReport {
  double mse = 0.0;
  double rmse = 0.0;
  // 100 * mean(|pred - y| / |y|) over rows with y != 0.
  double averageRelativeErrorPercent = 0.0;
  double r2 = 0.0;
  std::size_t rowCount = 0;
  std::size_t zeroTargetRows = 0;
};

// Throws InvalidArgument for length mismatch or no rows, DataError when every
// target is zero.
ErrorReport computeErrors(std::span<const double> predictions, std::span<const double> targets);

// Flat "key=value" lines, each key prefixed with prefix (e.g. "test.").
std::string formatErrorReport(const ErrorReport& report, const std::string& prefix = {});

}  // namespace fvsr

#endif  // FVSR_BASELINES_HPP_
