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

#include "autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace fvsr {

ParameterVector extractParameters(const ExpressionTree& tree) {
  ParameterVector theta;
  const auto& nodes = tree.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.type == NodeType::kConstant) {
      theta.values.push_back(n.value);
      theta.layout.push_back({i, SlotKind::kConstant, 0});
    } else if (n.type == NodeType::kFactor) {
      for (std::size_t l = 0; l < n.factorValues.size(); ++l) {
        theta.values.push_back(n.factorValues[l]);
        theta.layout.push_back({i, SlotKind::kFactorLevel, static_cast<std::uint32_t>(l)});
      }
    }
  }
  return theta;
}

void writeBack(ExpressionTree& tree, const ParameterVector& theta) {
  if (theta.values.size() != theta.layout.size() || extractParameters(tree).layout != theta.layout) {
    throw InvalidArgument("parameter layout does not match the tree");
  }
  writeBack(tree, std::span<const double>(theta.values));
}

void writeBack(ExpressionTree& tree, std::span<const double> values) {
  if (values.size() != tree.parameterCount()) {
    throw InvalidArgument("parameter vector has " + std::to_string(values.size()) + " entries, tree has " +
                          std::to_string(tree.parameterCount()));
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const NodeType t = tree.node(i).type;
    if (t == NodeType::kConstant) {
      tree.constantValue(i) = values[k++];
    } else if (t == NodeType::kFactor) {
      for (double& v : tree.factorValues(i)) v = values[k++];
    }
  }
}

// ---------------------------------------------------------------- evaluator

GradientEvaluator::GradientEvaluator(const ExpressionTree& tree, const Dataset& data)
    : tree_(tree), data_(data) {
  validate(tree, data.schema());
  const std::size_t n = tree.size();
  slotBegin_.resize(n + 1);
  subtreeEnd_.resize(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    slotBegin_[i] = k;
    k += tree.node(i).parameterCount();
  }
  slotBegin_[n] = k;
  // Subtree ends from the back: a node's subtree ends where its last child's
  // subtree ends.
  for (std::size_t i = n; i-- > 0;) {
    std::size_t end = i + 1;
    for (int c = 0; c < tree.node(i).arity(); ++c) end = subtreeEnd_[end];
    subtreeEnd_[i] = end;
  }
}

double GradientEvaluator::forward(std::size_t& i, std::size_t row, const double* theta, double* grad,
                                  bool& ok) const {
  const std::size_t self = i++;
  const Node& n = tree_.nodes()[self];
  double v = 0.0;
  switch (n.type) {
    case NodeType::kConstant:
      grad[slotBegin_[self]] = 1.0;
      v = theta[slotBegin_[self]];
      break;
    case NodeType::kVariable:
      v = data_.numeric(n.column, row);
      break;
    case NodeType::kFactor: {
      const std::size_t begin = slotBegin_[self];
      std::fill(grad + begin, grad + slotBegin_[self + 1], 0.0);
      const std::uint32_t level = data_.level(n.column, row);
      grad[begin + level] = 1.0;
      v = theta[begin + level];
      break;
    }
    case NodeType::kAdd:
    case NodeType::kSub:
    case NodeType::kMul:
    case NodeType::kDiv: {
      const std::size_t leftBegin = slotBegin_[self + 1];
      const double a = forward(i, row, theta, grad, ok);
      const std::size_t rightBegin = slotBegin_[i];
      const double b = forward(i, row, theta, grad, ok);
      const std::size_t end = slotBegin_[i];
      double* l = grad + leftBegin;
      double* r = grad + rightBegin;
      const std::size_t nl = rightBegin - leftBegin;
      const std::size_t nr = end - rightBegin;
      switch (n.type) {
        case NodeType::kAdd:
          v = a + b;
          break;
        case NodeType::kSub:
          v = a - b;
          for (std::size_t k = 0; k < nr; ++k) r[k] = -r[k];
          break;
        case NodeType::kMul:
          v = a * b;
          for (std::size_t k = 0; k < nl; ++k) l[k] *= b;
          for (std::size_t k = 0; k < nr; ++k) r[k] *= a;
          break;
        default: {
          v = a / b;
          const double dl = 1.0 / b;
          const double dr = -a / (b * b);
          for (std::size_t k = 0; k < nl; ++k) l[k] *= dl;
          for (std::size_t k = 0; k < nr; ++k) r[k] *= dr;
          break;
        }
      }
      break;
    }
    case NodeType::kLog:
    case NodeType::kExp: {
      const std::size_t begin = slotBegin_[self + 1];
      const double a = forward(i, row, theta, grad, ok);
      const std::size_t end = slotBegin_[i];
      double d;
      if (n.type == NodeType::kLog) {
        v = std::log(a);
        d = 1.0 / a;
      } else {
        v = std::exp(a);
        d = v;
      }
      for (std::size_t k = begin; k < end; ++k) grad[k] *= d;
      break;
    }
  }
  if (!std::isfinite(v)) ok = false;
  return v;
}

double GradientEvaluator::valueOnly(std::size_t& i, std::size_t row, const double* theta) const {
  const std::size_t self = i++;
  const Node& n = tree_.nodes()[self];
  switch (n.type) {
    case NodeType::kConstant:
      return theta[slotBegin_[self]];
    case NodeType::kVariable:
      return data_.numeric(n.column, row);
    case NodeType::kFactor:
      return theta[slotBegin_[self] + data_.level(n.column, row)];
    case NodeType::kAdd: {
      const double a = valueOnly(i, row, theta);
      return a + valueOnly(i, row, theta);
    }
    case NodeType::kSub: {
      const double a = valueOnly(i, row, theta);
      return a - valueOnly(i, row, theta);
    }
    case NodeType::kMul: {
      const double a = valueOnly(i, row, theta);
      return a * valueOnly(i, row, theta);
    }
    case NodeType::kDiv: {
      const double a = valueOnly(i, row, theta);
      return a / valueOnly(i, row, theta);
    }
    case NodeType::kLog:
      return std::log(valueOnly(i, row, theta));
    case NodeType::kExp:
      return std::exp(valueOnly(i, row, theta));
  }
  return 0.0;
}

bool GradientEvaluator::evaluate(std::size_t row, std::span<const double> theta, double& value,
                                 std::span<double> grad) const {
  if (theta.size() != parameterCount() || grad.size() != parameterCount()) {
    throw InvalidArgument("parameter vector length does not match the tree");
  }
  bool ok = true;
  std::size_t i = 0;
  value = forward(i, row, theta.data(), grad.data(), ok);
  if (ok) {
    ok = std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
  }
  return ok;
}

void GradientEvaluator::values(std::span<const double> theta, std::span<double> out) const {
  if (theta.size() != parameterCount()) throw InvalidArgument("parameter vector length does not match the tree");
  for (std::size_t r = 0; r < data_.rows(); ++r) {
    std::size_t i = 0;
    out[r] = valueOnly(i, r, theta.data());
  }
}

Jacobian GradientEvaluator::jacobian(std::span<const double> theta) const {
  const std::size_t n = data_.rows();
  const std::size_t k = parameterCount();
  Jacobian out;
  out.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  out.values.resize(n);
  out.finite.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::span<double> row(out.matrix.row(static_cast<Eigen::Index>(r)).data(), k);
    const bool ok = evaluate(r, theta, out.values[r], row);
    out.finite[r] = ok ? 1 : 0;
    if (!ok) ++out.nonFiniteRows;
  }
  return out;
}

// ---------------------------------------------------------------- free functions

DualValue evaluateWithGradient(const ExpressionTree& tree, const Dataset& data, std::size_t row,
                               std::span<const double> theta) {
  if (row >= data.rows()) throw InvalidArgument("row out of range");
  GradientEvaluator eval(tree, data);
  DualValue out;
  out.gradient.assign(eval.parameterCount(), 0.0);
  out.finite = eval.evaluate(row, theta, out.value, out.gradient);
  return out;
}

Jacobian jacobian(const ExpressionTree& tree, const Dataset& data, std::span<const double> theta) {
  return GradientEvaluator(tree, data).jacobian(theta);
}

}  // namespace fvsr
