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
#include <numeric>
#include <set>

#include "error.hpp"
#include "gp.hpp"
#include "oracle.hpp"

namespace fvsr {
namespace {

using testing::twoFactorData;
using testing::twoFactorTree;

bool sameStructure(const ExpressionTree& a, const ExpressionTree& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Node& x = a.node(i);
    const Node& y = b.node(i);
    if (x.type != y.type || x.column != y.column || x.factorValues.size() != y.factorValues.size()) return false;
  }
  return true;
}

TEST(Config, DefaultsAndValidation) {
  GpConfig c;
  EXPECT_EQ(c.populationSize, 200u);
  EXPECT_EQ(c.generations, 100u);
  EXPECT_EQ(c.maxTreeNodes, 25u);
  EXPECT_EQ(c.functionSet.size(), 6u);
  EXPECT_EQ(c.tournamentSize, 5u);
  EXPECT_EQ(c.crossoverProbability, 0.9);
  EXPECT_EQ(c.mutationProbability, 0.25);
  EXPECT_EQ(c.factorMutationSigma, 0.05);
  EXPECT_EQ(c.elitism, 1u);
  EXPECT_EQ(c.lm.maxIterations, 10);
  EXPECT_NO_THROW(c.validate());
  c.populationSize = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = GpConfig{};
  c.maxTreeNodes = 2;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = GpConfig{};
  c.mutationProbability = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = GpConfig{};
  c.useConstants = c.useNumericVariables = c.useFactorVariables = false;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Config, TextRoundTrip) {
  GpConfig c;
  applyConfigText(c,
                  "# comment\n"
                  "population_size = 50\n"
                  "function_set = add, mul, exp\n"
                  "seed = 18446744073709551615\n"
                  "factor_mutation_sigma = 0.125  # trailing\n"
                  "use_constants = false\n"
                  "lm_max_iterations = 3\n");
  EXPECT_EQ(c.populationSize, 50u);
  EXPECT_EQ(c.functionSet, (std::vector<NodeType>{NodeType::kAdd, NodeType::kMul, NodeType::kExp}));
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.factorMutationSigma, 0.125);
  EXPECT_FALSE(c.useConstants);
  EXPECT_EQ(c.lm.maxIterations, 3);
  GpConfig d;
  applyConfigText(d, formatConfig(c));
  EXPECT_EQ(formatConfig(d), formatConfig(c));
}

TEST(Config, Errors) {
  GpConfig c;
  EXPECT_THROW(setConfigValue(c, "bogus", "1"), InvalidArgument);
  EXPECT_THROW(setConfigValue(c, "population_size", "-3"), InvalidArgument);
  EXPECT_THROW(setConfigValue(c, "population_size", "2.5"), InvalidArgument);
  EXPECT_THROW(setConfigValue(c, "function_set", "add,sqrt"), InvalidArgument);
  EXPECT_THROW(setConfigValue(c, "use_constants", "maybe"), InvalidArgument);
  EXPECT_THROW(applyConfigText(c, "no equals sign\n"), InvalidArgument);
}

TEST(Ptc2, TargetOneIsTerminal) {
  Random rng(1);
  const Dataset d = twoFactorData();
  for (int i = 0; i < 50; ++i) {
    const ExpressionTree t = randomTreePtc2(GpConfig{}, d.schema(), 1, rng);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_TRUE(t.node(0).isTerminal());
  }
}

TEST(Ptc2, SizeBoundsAndDistribution) {
  Random rng(2);
  const Dataset d = twoFactorData();
  double total = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ExpressionTree t = randomTreePtc2(GpConfig{}, d.schema(), 25, rng);
    EXPECT_LE(t.size(), 27u);
    EXPECT_GE(t.size(), 25u);
    EXPECT_EQ(countNodes(t), t.size());
    validate(t, d.schema());
    total += static_cast<double>(t.size());
  }
  EXPECT_NEAR(total / 1000.0, 25.5, 1.0);
}

TEST(Ptc2, FactorOnlyTerminals) {
  Random rng(3);
  const Dataset d = twoFactorData();
  GpConfig c;
  c.useConstants = false;
  c.useNumericVariables = false;
  for (int i = 0; i < 100; ++i) {
    const ExpressionTree t = randomTreePtc2(c, d.schema(), 10, rng);
    for (const Node& n : t.nodes()) {
      if (!n.isTerminal()) continue;
      EXPECT_EQ(n.type, NodeType::kFactor);
      EXPECT_EQ(n.column, 1u);
      EXPECT_EQ(n.factorValues.size(), 3u);
    }
  }
}

TEST(Ptc2, EmptyTerminalSet) {
  Random rng(4);
  GpConfig c;
  c.useConstants = c.useNumericVariables = c.useFactorVariables = false;
  EXPECT_THROW(randomTreePtc2(c, twoFactorData().schema(), 5, rng), InvalidArgument);
}

TEST(FactorTerminal, Initialization) {
  Schema s({Column{"m", ColumnKind::kNominal, {"A", "B", "C", "D"}, {}, {}, {}},
            Column{"one", ColumnKind::kNominal, {"only"}, {}, {}, {}},
            Column{"y", ColumnKind::kNumeric, {}, {}, {}, {}}},
           "y");
  Random a(9);
  Random b(9);
  const Node n = initFactorTerminal(s, 0, a);
  EXPECT_EQ(n.factorValues.size(), 4u);
  EXPECT_EQ(initFactorTerminal(s, 0, b), n);
  EXPECT_EQ(initFactorTerminal(s, 1, a).factorValues.size(), 1u);
  EXPECT_THROW(initFactorTerminal(s, 2, a), InvalidArgument);

  // Values follow N(0, 1).
  Random rng(10);
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < 5000; ++i) {
    for (double v : initFactorTerminal(s, 0, rng).factorValues) {
      sum += v;
      sq += v * v;
    }
  }
  EXPECT_NEAR(sum / 20000.0, 0.0, 0.03);
  EXPECT_NEAR(sq / 20000.0, 1.0, 0.05);
}

TEST(Mutation, ConstantShift) {
  Random rng(5);
  const ExpressionTree t = makeConstant(0.5);
  const ExpressionTree m = mutate(t, MutationKind::kConstant, GpConfig{}, twoFactorData().schema(), rng);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.node(0).type, NodeType::kConstant);
  EXPECT_NE(m.node(0).value, 0.5);
  EXPECT_EQ(applicableMutations(t, GpConfig{}),
            (std::vector<MutationKind>{MutationKind::kConstant, MutationKind::kSubtree}));
}

TEST(Mutation, FactorVectorShiftsEveryLevel) {
  Random rng(6);
  const ExpressionTree t = makeFactor(1, {1.0, 2.0, 1.5});
  const ExpressionTree m = mutate(t, MutationKind::kFactorVector, GpConfig{}, twoFactorData().schema(), rng);
  ASSERT_TRUE(sameStructure(m, t));
  for (std::size_t l = 0; l < 3; ++l) EXPECT_NE(m.node(0).factorValues[l], t.node(0).factorValues[l]);
}

TEST(Mutation, FactorVectorOnTwoFactorLeftLeaf) {
  const ExpressionTree t = twoFactorTree();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Random rng(seed);
    const ExpressionTree m = mutate(t, MutationKind::kFactorVector, GpConfig{}, twoFactorData().schema(), rng);
    ASSERT_TRUE(sameStructure(m, t));
    if (m.node(1).factorValues == t.node(1).factorValues) continue;  // the right leaf was picked
    for (std::size_t l = 0; l < 3; ++l) EXPECT_NE(m.node(1).factorValues[l], t.node(1).factorValues[l]);
    EXPECT_EQ(m.node(4).factorValues, t.node(4).factorValues);
    return;
  }
  FAIL() << "left leaf never selected";
}

TEST(Mutation, FactorValueShiftsOneLevel) {
  Random rng(7);
  const ExpressionTree t = makeFactor(1, {1.0, 2.0, 1.5});
  const ExpressionTree m = mutate(t, MutationKind::kFactorValue, GpConfig{}, twoFactorData().schema(), rng);
  int changed = 0;
  for (std::size_t l = 0; l < 3; ++l) changed += m.node(0).factorValues[l] != t.node(0).factorValues[l];
  EXPECT_EQ(changed, 1);
}

TEST(Mutation, FunctionSwapKeepsArity) {
  Random rng(8);
  const ExpressionTree t = twoFactorTree();
  for (int i = 0; i < 50; ++i) {
    const ExpressionTree m = mutate(t, MutationKind::kFunction, GpConfig{}, twoFactorData().schema(), rng);
    ASSERT_EQ(m.size(), t.size());
    int changed = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (m.node(k).type != t.node(k).type) {
        ++changed;
        EXPECT_EQ(arity(m.node(k).type), arity(t.node(k).type));
      }
    }
    EXPECT_EQ(changed, 1);
  }
}

TEST(Mutation, NoSiteIsNoOp) {
  Random rng(9);
  const ExpressionTree t = makeVariable(0);
  EXPECT_EQ(mutate(t, MutationKind::kConstant, GpConfig{}, twoFactorData().schema(), rng), t);
  EXPECT_EQ(mutate(t, MutationKind::kFactorValue, GpConfig{}, twoFactorData().schema(), rng), t);
  EXPECT_EQ(mutate(t, MutationKind::kFunction, GpConfig{}, twoFactorData().schema(), rng), t);
}

TEST(Mutation, SubtreeRespectsSizeLimit) {
  Random rng(10);
  const Dataset d = twoFactorData();
  GpConfig c;
  for (int i = 0; i < 1000; ++i) {
    ExpressionTree t = randomTreePtc2(c, d.schema(), 1 + rng.uniformIndex(24), rng);
    if (t.size() > 25) continue;
    const ExpressionTree m = mutate(t, MutationKind::kSubtree, c, d.schema(), rng);
    EXPECT_LE(m.size(), 25u);
    validate(m, d.schema());
  }
}

TEST(Mutation, RandomKindsStayValid) {
  Random rng(11);
  const Dataset d = twoFactorData();
  GpConfig c;
  std::set<MutationKind> seen;
  for (int i = 0; i < 2000; ++i) {
    const ExpressionTree t = randomTreePtc2(c, d.schema(), 1 + rng.uniformIndex(24), rng);
    MutationKind kind = MutationKind::kNone;
    const ExpressionTree m = mutate(t, c, d.schema(), rng, &kind);
    seen.insert(kind);
    EXPECT_LE(m.size(), 25u);
    validate(m, d.schema());
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Crossover, SingleTerminalParents) {
  Random rng(12);
  const ExpressionTree a = makeConstant(1.0);
  const ExpressionTree b = makeVariable(0);
  for (int i = 0; i < 20; ++i) {
    const ExpressionTree child = crossover(a, b, GpConfig{}, rng);
    EXPECT_TRUE(child == a || child == b);
  }
}

TEST(Crossover, SelfCrossoverUsesOwnMaterial) {
  Random rng(13);
  const ExpressionTree t = twoFactorTree();
  std::set<NodeType> types;
  for (const Node& n : t.nodes()) types.insert(n.type);
  for (int i = 0; i < 100; ++i) {
    const ExpressionTree child = crossover(t, t, GpConfig{}, rng);
    for (const Node& n : child.nodes()) EXPECT_TRUE(types.count(n.type));
  }
}

TEST(Crossover, RespectsSizeLimit) {
  Random rng(14);
  const Dataset d = twoFactorData();
  GpConfig c;
  for (int i = 0; i < 1000; ++i) {
    const ExpressionTree a = randomTreePtc2(c, d.schema(), 1 + rng.uniformIndex(24), rng);
    const ExpressionTree b = randomTreePtc2(c, d.schema(), 1 + rng.uniformIndex(24), rng);
    const ExpressionTree child = crossover(a, b, c, rng);
    EXPECT_LE(child.size(), 25u);
    validate(child, d.schema());
  }
}

TEST(Evaluation, CorrectStructureFitsExactly) {
  const Dataset d = generateSynthetic({});
  const auto x = makeVariable(0);
  const auto t = makeBinary(
      NodeType::kSub,
      makeBinary(NodeType::kSub,
                 makeBinary(NodeType::kMul, makeFactor(1, {1.05, 0.95, 1.45, 2.05}),
                            makeUnary(NodeType::kExp, makeBinary(NodeType::kMul, makeConstant(-0.08), x))),
                 makeUnary(NodeType::kExp, makeBinary(NodeType::kMul, makeFactor(1, {-0.17, -0.31, -0.82, -1.58}), x))),
      makeConstant(0.1));
  const Individual ind = evaluateIndividual(t, d, GpConfig{});
  EXPECT_LE(ind.fitness, 1e-10);
  EXPECT_TRUE(ind.lm.accepted);
}

TEST(Evaluation, NonFiniteIsInfinite) {
  const Dataset d = generateSynthetic({});
  const auto t = makeUnary(NodeType::kLog, makeBinary(NodeType::kSub, makeConstant(-1.0),
                                                      makeBinary(NodeType::kMul, makeVariable(0), makeVariable(0))));
  EXPECT_TRUE(std::isinf(evaluateIndividual(t, d, GpConfig{}).fitness));
}

TEST(Evaluation, MeanConstantScoresVariance) {
  const Dataset d = generateSynthetic({});
  const auto y = d.target();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  const Individual ind = evaluateIndividual(makeConstant(mean), d, GpConfig{});
  EXPECT_NEAR(ind.fitness, var, 1e-15);
}

TEST(Evaluation, NeverWorseThanBeforeRefinement) {
  Random rng(15);
  const Dataset d = testing::randomData(rng, 30, 3);
  for (int i = 0; i < 200; ++i) {
    const ExpressionTree t = testing::randomTree(rng, d.schema(), 25);
    const double before = mse(t, d);
    const Individual ind = evaluateIndividual(t, d, GpConfig{});
    if (std::isfinite(before)) {
      EXPECT_LE(ind.fitness, before);
    }
  }
}

TEST(Tournament, PicksBestOfDraws) {
  std::vector<Individual> pop(5);
  for (std::size_t i = 0; i < pop.size(); ++i) pop[i].fitness = static_cast<double>(5 - i);
  Random rng(16);
  // A tournament as large as the population almost always contains the best.
  int best = 0;
  for (int i = 0; i < 200; ++i) best += tournamentSelect(pop, 50, rng) == 4;
  EXPECT_EQ(best, 200);
  for (int i = 0; i < 50; ++i) EXPECT_LT(tournamentSelect(pop, 1, rng), 5u);
}

GpConfig smallConfig(std::uint64_t seed) {
  GpConfig c;
  c.populationSize = 30;
  c.generations = 5;
  c.seed = seed;
  return c;
}

TEST(Evolve, ZeroGenerationsReturnsBestInitial) {
  const Dataset d = generateSynthetic({});
  GpConfig c = smallConfig(1);
  c.generations = 0;
  const RunReport r = evolve(c, d);
  EXPECT_EQ(r.generationsRun, 0u);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.best.fitness, r.history[0].bestFitness);
  EXPECT_EQ(r.evaluations, 30u);
}

TEST(Evolve, ElitistMonotoneAndSizeLaw) {
  const Dataset d = generateSynthetic({});
  GpConfig c = smallConfig(2);
  c.generations = 15;
  std::vector<GenerationRecord> seen;
  const RunReport r = evolve(c, d, [&](const GenerationRecord& g) { seen.push_back(g); });
  ASSERT_EQ(seen.size(), 16u);
  for (std::size_t g = 1; g < r.history.size(); ++g) {
    EXPECT_LE(r.history[g].bestFitness, r.history[g - 1].bestFitness);
    EXPECT_LE(r.history[g].meanSize, 25.0);
    EXPECT_LE(r.history[g].bestSize, 25u);
  }
  EXPECT_LE(r.best.tree.size(), 25u);
  EXPECT_EQ(r.best.fitness, r.history.back().bestFitness);
}

TEST(Evolve, SeedDeterminismAcrossThreadCounts) {
  const Dataset d = generateSynthetic({});
  GpConfig a = smallConfig(3);
  a.threads = 1;
  GpConfig b = smallConfig(3);
  b.threads = 4;
  const RunReport ra = evolve(a, d);
  const RunReport rb = evolve(b, d);
  EXPECT_EQ(ra.best.tree, rb.best.tree);
  EXPECT_EQ(ra.best.fitness, rb.best.fitness);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t g = 0; g < ra.history.size(); ++g) EXPECT_EQ(ra.history[g].bestFitness, rb.history[g].bestFitness);
  const RunReport again = evolve(a, d);
  EXPECT_EQ(again.best.tree, ra.best.tree);
}

TEST(Evolve, DifferentSeedsDiffer) {
  const Dataset d = generateSynthetic({});
  EXPECT_NE(evolve(smallConfig(4), d).best.tree, evolve(smallConfig(5), d).best.tree);
}

TEST(Evolve, StopFitnessEndsEarly) {
  const Dataset d = generateSynthetic({});
  GpConfig c = smallConfig(6);
  c.generations = 50;
  c.stopFitness = 1e300;
  const RunReport r = evolve(c, d);
  EXPECT_EQ(r.generationsRun, 0u);
}

TEST(Evolve, OneHotModeHasNoFactors) {
  const Dataset d = oneHot(generateSynthetic({}));
  GpConfig c = smallConfig(7);
  c.useFactorVariables = false;
  c.maxTreeNodes = 50;
  const RunReport r = evolve(c, d);
  for (const Node& n : r.best.tree.nodes()) EXPECT_NE(n.type, NodeType::kFactor);
  EXPECT_LE(r.best.tree.size(), 50u);
}

TEST(Evolve, Errors) {
  const Dataset d = generateSynthetic({});
  GpConfig c = smallConfig(8);
  c.populationSize = 1;
  EXPECT_THROW(evolve(c, d), InvalidArgument);
  const std::vector<std::size_t> none;
  EXPECT_THROW(evolve(smallConfig(8), d.selectRows(none)), DataError);
}

}  // namespace
}  // namespace fvsr
