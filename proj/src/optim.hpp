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

#ifndef FVSR_OPTIM_HPP_
#define FVSR_OPTIM_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "data.hpp"
#include "expr.hpp"

namespace fvsr {

struct LmConfig {
  // Every solve attempt counts, accepted or rejected.
  int maxIterations = 10;
  double initialDamping = 1e-3;
  double dampingUp = 10.0;
  double dampingDown = 0.1;
  // Stop once ||step|| <= minStep * (||theta|| + minStep).
  double minStep = 1e-12;
  double maxDamping = 1e16;
  // Candidates with more non-finite rows than this fraction are left alone.
  double maxSkippedFraction = 0.5;

  // Throws InvalidArgument on out-of-range values.
  void validate() const;
};

struct LmResult {
  std::vector<double> theta;  // final parameters (the initial ones when not accepted)
  double sseBefore = 0.0;
  double sseAfter = 0.0;
  int iterationsUsed = 0;
  bool accepted = false;
  // Rows excluded from the normal equations in the last linearization.
  std::size_t skippedRows = 0;
  // More than maxSkippedFraction of the rows were non-finite.
  bool degenerate = false;
};

// Sum of squared residuals over every row; +inf when any residual is not
// finite. Requires a target column.
double sse(const ExpressionTree& tree, const Dataset& data);
double mse(const ExpressionTree& tree, const Dataset& data);

// Budgeted Levenberg-Marquardt on the squared error. The optimized
// parameters are written into tree only when they lower the SSE; otherwise
// tree is left untouched. Throws InvalidArgument for a parameterless tree or
// empty data, NumericError ("degenerate fit") when no row is finite.
LmResult refine(ExpressionTree& tree, const Dataset& data, const LmConfig& config);

// Same as refine() but reports the all-rows-non-finite case as an
// unaccepted, degenerate result instead of throwing. Parameterless trees
// return an unaccepted result with zero iterations.
LmResult tryRefine(ExpressionTree& tree, const Dataset& data, const LmConfig& config);

}  // namespace fvsr

#endif  // FVSR_OPTIM_HPP_
