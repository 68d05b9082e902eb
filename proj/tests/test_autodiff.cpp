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

#include <gtest/gtest.h>

#include <cmath>

#include "autodiff.hpp"
#include "error.hpp"
#include "oracle.hpp"

namespace fvsr {
namespace {

using testing::twoFactorData;
using testing::twoFactorTree;

const std::vector<double> kTwoFactorTheta{1.0, 2.0, 1.5, 1.0, 2.0, 1.0};

TEST(Parameters, TwoFactorLayout) {
  const ParameterVector p = extractParameters(twoFactorTree());
  EXPECT_EQ(p.values, kTwoFactorTheta);
  ASSERT_EQ(p.layout.size(), 6u);
  EXPECT_EQ(p.layout[0], (ParameterSlot{1, SlotKind::kFactorLevel, 0}));
  EXPECT_EQ(p.layout[2], (ParameterSlot{1, SlotKind::kFactorLevel, 2}));
  EXPECT_EQ(p.layout[3], (ParameterSlot{4, SlotKind::kFactorLevel, 0}));
}

TEST(Parameters, TerminalsOnly) {
  EXPECT_EQ(extractParameters(makeConstant(7)).values, std::vector<double>{7.0});
  EXPECT_TRUE(extractParameters(makeVariable(0)).values.empty());
}

TEST(WriteBack, RoundTripLeavesOutputs) {
  const Dataset d = twoFactorData();
  ExpressionTree t = twoFactorTree();
  const auto before = evaluate(t, d);
  writeBack(t, extractParameters(t));
  EXPECT_EQ(evaluate(t, d), before);
  EXPECT_EQ(t, twoFactorTree());
}

TEST(WriteBack, ChangesOutput) {
  const Dataset d = twoFactorData();
  ExpressionTree t = twoFactorTree();
  ParameterVector p = extractParameters(t);
  p.values[0] = 5.0;
  writeBack(t, p);
  EXPECT_EQ(evaluate(t, d, 0), 8.0);
  EXPECT_EQ(extractParameters(t).values, p.values);
}

TEST(WriteBack, EmptyThetaOnParameterlessTree) {
  ExpressionTree t = makeVariable(0);
  writeBack(t, extractParameters(t));
  writeBack(t, std::span<const double>{});
  EXPECT_EQ(t, makeVariable(0));
}

TEST(WriteBack, LayoutMismatch) {
  ExpressionTree t = twoFactorTree();
  ParameterVector p = extractParameters(t);
  p.values.pop_back();
  p.layout.pop_back();
  EXPECT_THROW(writeBack(t, p), InvalidArgument);
  ParameterVector q = extractParameters(t);
  q.layout[0].level = 1;
  EXPECT_THROW(writeBack(t, q), InvalidArgument);
  const std::vector<double> shortValues{1.0};
  EXPECT_THROW(writeBack(t, shortValues), InvalidArgument);
}

TEST(Gradient, Table1RowAExact) {
  const DualValue v = evaluateWithGradient(twoFactorTree(), twoFactorData(), 0, kTwoFactorTheta);
  EXPECT_TRUE(v.finite);
  EXPECT_EQ(v.value, 4.0);
  EXPECT_EQ(v.gradient, (std::vector<double>{1, 0, 0, 3, 0, 0}));
}

// Rows B and C are checked against the finite-difference oracle under the
// depth-first, level-order layout.
TEST(Gradient, TwoFactorRowsBAndCAgainstOracle) {
  const Dataset d = twoFactorData();
  const ExpressionTree t = twoFactorTree();
  const testing::Oracle oracle(t, d);
  for (std::size_t row : {1u, 2u}) {
    const DualValue v = evaluateWithGradient(t, d, row, kTwoFactorTheta);
    EXPECT_EQ(v.value, oracle(row, kTwoFactorTheta));
    const auto fd = oracle.gradient(row, kTwoFactorTheta);
    for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_NEAR(v.gradient[i], fd[i], 1e-8);
  }
  EXPECT_EQ(evaluateWithGradient(t, d, 1, kTwoFactorTheta).gradient, (std::vector<double>{0, 1, 0, 0, 2, 0}));
  EXPECT_EQ(evaluateWithGradient(t, d, 2, kTwoFactorTheta).gradient, (std::vector<double>{0, 0, 1, 0, 0, 1}));
}

TEST(Gradient, Constant) {
  const Dataset d = twoFactorData();
  const DualValue v = evaluateWithGradient(makeConstant(2.5), d, 1, std::vector<double>{2.5});
  EXPECT_EQ(v.value, 2.5);
  EXPECT_EQ(v.gradient, std::vector<double>{1.0});
}

TEST(Gradient, NonFiniteIsFlagged) {
  const Dataset d = twoFactorData();
  const auto t = makeUnary(NodeType::kLog, makeBinary(NodeType::kSub, makeConstant(0.0), makeVariable(0)));
  EXPECT_FALSE(evaluateWithGradient(t, d, 0, std::vector<double>{0.0}).finite);
}

TEST(Gradient, FiniteDifferenceProperty) {
  Random rng(101);
  std::size_t checked = 0;
  for (int k = 0; k < 400; ++k) {
    const Dataset d = testing::randomData(rng, 4, 1 + rng.uniformIndex(4));
    const ExpressionTree t = testing::randomTree(rng, d.schema(), 25);
    if (t.parameterCount() == 0) continue;
    const testing::Oracle oracle(t, d);
    std::vector<double> theta = oracle.theta();
    for (double& v : theta) v += rng.normal(0.0, 0.1);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const DualValue dv = evaluateWithGradient(t, d, r, theta);
      const double want = oracle(r, theta);
      if (!dv.finite || !std::isfinite(want) || std::abs(want) > 1e8) continue;
      EXPECT_NEAR(dv.value, want, 1e-14 * std::max(1.0, std::abs(want)));
      const auto fd = oracle.gradient(r, theta);
      for (std::size_t i = 0; i < fd.size(); ++i) {
        if (!std::isfinite(fd[i])) continue;
        const double scale = std::max({1.0, std::abs(fd[i]), std::abs(dv.gradient[i])});
        EXPECT_LE(std::abs(dv.gradient[i] - fd[i]) / scale, 1e-4) << "tree " << k << " row " << r << " slot " << i;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Gradient, FactorSparsity) {
  Random rng(7);
  for (int k = 0; k < 100; ++k) {
    const Dataset d = testing::randomData(rng, 6, 3);
    const ExpressionTree t = testing::randomTree(rng, d.schema(), 25);
    const ParameterVector p = extractParameters(t);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const DualValue v = evaluateWithGradient(t, d, r, p.values);
      if (!v.finite) continue;
      for (std::size_t i = 0; i < p.layout.size(); ++i) {
        const ParameterSlot& s = p.layout[i];
        if (s.kind != SlotKind::kFactorLevel) continue;
        if (d.level(t.node(s.node).column, r) != s.level) EXPECT_EQ(v.gradient[i], 0.0);
      }
    }
  }
}

TEST(Jacobian, TwoFactor) {
  const Jacobian j = jacobian(twoFactorTree(), twoFactorData(), kTwoFactorTheta);
  ASSERT_EQ(j.matrix.rows(), 3);
  ASSERT_EQ(j.matrix.cols(), 6);
  const std::vector<double> rowA(j.matrix.row(0).data(), j.matrix.row(0).data() + 6);
  EXPECT_EQ(rowA, (std::vector<double>{1, 0, 0, 3, 0, 0}));
  EXPECT_EQ(j.values, (std::vector<double>{4.0, 6.0, 2.5}));
  EXPECT_EQ(j.nonFiniteRows, 0u);
}

TEST(Jacobian, RowsMatchPerRowGradient) {
  Random rng(3);
  const Dataset d = testing::randomData(rng, 10, 3);
  for (int k = 0; k < 50; ++k) {
    const ExpressionTree t = testing::randomTree(rng, d.schema(), 25);
    const auto theta = extractParameters(t).values;
    const Jacobian j = jacobian(t, d, theta);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const DualValue v = evaluateWithGradient(t, d, r, theta);
      EXPECT_EQ(static_cast<bool>(j.finite[r]), v.finite);
      if (!v.finite) continue;
      EXPECT_EQ(j.values[r], v.value);
      for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_EQ(j.matrix(r, i), v.gradient[i]);
    }
  }
}

TEST(Jacobian, SingleRowAndParameterless) {
  const Dataset d = twoFactorData();
  const std::vector<std::size_t> one{1};
  const Dataset single = d.selectRows(one);
  const Jacobian j = jacobian(twoFactorTree(), single, kTwoFactorTheta);
  ASSERT_EQ(j.matrix.rows(), 1);
  const DualValue v = evaluateWithGradient(twoFactorTree(), single, 0, kTwoFactorTheta);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(j.matrix(0, i), v.gradient[i]);
  const Jacobian empty = jacobian(makeVariable(0), d, std::vector<double>{});
  EXPECT_EQ(empty.matrix.rows(), 3);
  EXPECT_EQ(empty.matrix.cols(), 0);
}

TEST(Jacobian, ValueMatchesWriteBackEvaluation) {
  Random rng(9);
  const Dataset d = testing::randomData(rng, 8, 2);
  for (int k = 0; k < 50; ++k) {
    ExpressionTree t = testing::randomTree(rng, d.schema(), 25);
    std::vector<double> theta = extractParameters(t).values;
    for (double& v : theta) v *= 1.1;
    const Jacobian j = jacobian(t, d, theta);
    writeBack(t, theta);
    const auto plain = evaluate(t, d);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      if (j.finite[r]) EXPECT_NEAR(j.values[r], plain[r], 1e-14 * std::max(1.0, std::abs(plain[r])));
    }
  }
}

}  // namespace
}  // namespace fvsr
