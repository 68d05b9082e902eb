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

// Forward-mode derivatives of a tree's output with respect to its flattened
// parameter vector theta (all constants and all factor levels).
//
// theta is laid out in prefix order: each constant takes one slot, each
// factor variable takes one slot per level in level-table order. Because
// subtrees are contiguous in prefix order, the parameters of any subtree form
// one contiguous slot range, and a node's dual gradient only ever needs to be
// stored on that range. Propagation therefore works in place on a single
// gradient buffer per row.

#ifndef FVSR_AUTODIFF_HPP_
#define FVSR_AUTODIFF_HPP_

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "data.hpp"
#include "expr.hpp"

namespace fvsr {

enum class SlotKind : std::uint8_t { kConstant, kFactorLevel };

struct ParameterSlot {
  std::size_t node = 0;
  SlotKind kind = SlotKind::kConstant;
  std::uint32_t level = 0;

  bool operator==(const ParameterSlot&) const = default;
};

struct ParameterVector {
  std::vector<double> values;
  std::vector<ParameterSlot> layout;

  std::size_t size() const { return values.size(); }
};

ParameterVector extractParameters(const ExpressionTree& tree);

// Throws InvalidArgument when theta's layout does not match the tree.
void writeBack(ExpressionTree& tree, const ParameterVector& theta);
// Writes raw values in the tree's own layout order.
void writeBack(ExpressionTree& tree, std::span<const double> values);

struct DualValue {
  double value = 0.0;
  std::vector<double> gradient;
  // False when any intermediate value or gradient entry is non-finite; value
  // and gradient are then not meaningful.
  bool finite = true;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Jacobian {
  RowMajorMatrix matrix;        // rows x |theta|
  std::vector<double> values;   // model output per row
  std::vector<std::uint8_t> finite;  // per-row finite flag
  std::size_t nonFiniteRows = 0;
};

// Evaluates a fixed tree structure under varying theta. Construction caches
// the slot offsets of every node; the tree must outlive the evaluator and
// must not change structure while it is in use.
class GradientEvaluator {
 public:
  GradientEvaluator(const ExpressionTree& tree, const Dataset& data);

  std::size_t parameterCount() const { return slotBegin_.back(); }

  // Output for one row; grad (length parameterCount()) receives df/dtheta.
  // Returns false when an intermediate is non-finite.
  bool evaluate(std::size_t row, std::span<const double> theta, double& value,
                std::span<double> grad) const;

  // Output only, for every row.
  void values(std::span<const double> theta, std::span<double> out) const;

  Jacobian jacobian(std::span<const double> theta) const;

 private:
  double forward(std::size_t& i, std::size_t row, const double* theta, double* grad, bool& ok) const;
  double valueOnly(std::size_t& i, std::size_t row, const double* theta) const;

  const ExpressionTree& tree_;
  const Dataset& data_;
  // slotBegin_[i] = number of parameter slots in nodes [0, i); one extra
  // trailing entry holds the total.
  std::vector<std::size_t> slotBegin_;
  std::vector<std::size_t> subtreeEnd_;
};

DualValue evaluateWithGradient(const ExpressionTree& tree, const Dataset& data, std::size_t row,
                               std::span<const double> theta);

Jacobian jacobian(const ExpressionTree& tree, const Dataset& data, std::span<const double> theta);

}  // namespace fvsr

#endif  // FVSR_AUTODIFF_HPP_
