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

#include "optim.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "autodiff.hpp"
#include "error.hpp"

namespace fvsr {

void LmConfig::validate() const {
  if (maxIterations < 1) throw InvalidArgument("LM maxIterations must be >= 1");
  if (!(initialDamping > 0.0)) throw InvalidArgument("LM initial damping must be > 0");
  if (!(dampingUp > 1.0)) throw InvalidArgument("LM damping increase factor must be > 1");
  if (!(dampingDown > 0.0 && dampingDown < 1.0)) throw InvalidArgument("LM damping decrease factor must be in (0, 1)");
  if (!(minStep >= 0.0)) throw InvalidArgument("LM minimum step must be >= 0");
  if (!(maxSkippedFraction >= 0.0 && maxSkippedFraction <= 1.0)) {
    throw InvalidArgument("LM skipped-row fraction must be in [0, 1]");
  }
}

namespace {

double sumSquares(std::span<const double> predicted, std::span<const double> target) {
  double s = 0.0;
  for (std::size_t r = 0; r < predicted.size(); ++r) {
    const double e = predicted[r] - target[r];
    if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
    s += e * e;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

struct Linearization {
  Eigen::MatrixXd normal;    // J^T J over usable rows
  Eigen::VectorXd gradient;  // J^T r over usable rows
  std::size_t skipped = 0;
};

Linearization linearize(const Jacobian& jac, std::span<const double> target) {
  const auto n = static_cast<Eigen::Index>(target.size());
  const auto k = jac.matrix.cols();
  std::vector<Eigen::Index> usable;
  usable.reserve(target.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const double e = jac.values[static_cast<std::size_t>(r)] - target[static_cast<std::size_t>(r)];
    if (jac.finite[static_cast<std::size_t>(r)] && std::isfinite(e)) usable.push_back(r);
  }
  Linearization lin;
  lin.skipped = target.size() - usable.size();
  Eigen::VectorXd residual(static_cast<Eigen::Index>(usable.size()));
  RowMajorMatrix rows(static_cast<Eigen::Index>(usable.size()), k);
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const auto r = usable[i];
    rows.row(static_cast<Eigen::Index>(i)) = jac.matrix.row(r);
    residual(static_cast<Eigen::Index>(i)) = jac.values[static_cast<std::size_t>(r)] - target[static_cast<std::size_t>(r)];
  }
  lin.normal = Eigen::MatrixXd::Zero(k, k);
  lin.normal.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  lin.normal.triangularView<Eigen::StrictlyUpper>() = lin.normal.transpose();
  lin.gradient = rows.transpose() * residual;
  return lin;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

LmResult refineImpl(ExpressionTree& tree, const Dataset& data, const LmConfig& config, bool throwOnDegenerate) {
  config.validate();
  if (data.rows() == 0) throw InvalidArgument("refine needs at least one row");
  const auto target = data.target();
  const GradientEvaluator eval(tree, data);
  const std::size_t k = eval.parameterCount();

  LmResult result;
  result.theta = extractParameters(tree).values;
  if (k == 0) {
    if (throwOnDegenerate) throw InvalidArgument("refine needs a tree with at least one parameter");
    std::vector<double> pred(data.rows());
    eval.values(result.theta, pred);
    result.sseBefore = result.sseAfter = sumSquares(pred, target);
    return result;
  }

  std::vector<double> current = result.theta;
  Jacobian jac = eval.jacobian(current);
  double currentSse = sumSquares(jac.values, target);
  result.sseBefore = currentSse;
  result.sseAfter = currentSse;

  Linearization lin = linearize(jac, target);
  result.skippedRows = lin.skipped;
  if (lin.skipped == data.rows()) {
    if (throwOnDegenerate) throw NumericError("degenerate fit: every row is non-finite");
    result.degenerate = true;
    return result;
  }
  if (static_cast<double>(lin.skipped) > config.maxSkippedFraction * static_cast<double>(data.rows())) {
    result.degenerate = true;
    return result;
  }

  double lambda = config.initialDamping;
  std::vector<double> trial(k);
  std::vector<double> trialPred(data.rows());
  Eigen::MatrixXd system(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  bool done = currentSse == 0.0;

  while (!done && result.iterationsUsed < config.maxIterations) {
    ++result.iterationsUsed;
    system = lin.normal;
    const Eigen::VectorXd diag = lin.normal.diagonal();
    if ((diag.array() > 0.0).all()) {
      system.diagonal() += lambda * diag;
    } else {
      system.diagonal().array() += lambda;
    }
    ldlt.compute(system);
    Eigen::VectorXd step;
    bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (solved) {
      step = -ldlt.solve(lin.gradient);
      solved = step.allFinite();
    }
    if (!solved) {
      lambda *= config.dampingUp;
      if (lambda > config.maxDamping) break;
      continue;
    }

    for (std::size_t j = 0; j < k; ++j) trial[j] = current[j] + step(static_cast<Eigen::Index>(j));
    eval.values(trial, trialPred);
    const double trialSse = sumSquares(trialPred, target);
    const double stepNorm = step.norm();
    const bool tiny = stepNorm <= config.minStep * (norm(current) + config.minStep);

    if (trialSse < currentSse) {
      current = trial;
      currentSse = trialSse;
      lambda = std::max(lambda * config.dampingDown, std::numeric_limits<double>::min());
      if (tiny || currentSse == 0.0) break;
      if (result.iterationsUsed < config.maxIterations) {
        jac = eval.jacobian(current);
        lin = linearize(jac, target);
        result.skippedRows = lin.skipped;
        if (lin.skipped == data.rows()) break;
      }
    } else {
      if (tiny) break;
      lambda *= config.dampingUp;
      if (lambda > config.maxDamping) break;
    }
  }

  if (currentSse < result.sseBefore) {
    result.accepted = true;
    result.sseAfter = currentSse;
    result.theta = current;
    writeBack(tree, std::span<const double>(current));
  }
  return result;
}

}  // namespace

double sse(const ExpressionTree& tree, const Dataset& data) {
  const auto pred = evaluate(tree, data);
  return sumSquares(pred, data.target());
}

double mse(const ExpressionTree& tree, const Dataset& data) {
  if (data.rows() == 0) throw InvalidArgument("mse of an empty dataset");
  return sse(tree, data) / static_cast<double>(data.rows());
}

LmResult refine(ExpressionTree& tree, const Dataset& data, const LmConfig& config) {
  return refineImpl(tree, data, config, true);
}

LmResult tryRefine(ExpressionTree& tree, const Dataset& data, const LmConfig& config) {
  return refineImpl(tree, data, config, false);
}

}  // namespace fvsr
