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

// Tree-based genetic programming with factor-variable terminals and memetic
// Levenberg-Marquardt parameter fitting.

#ifndef FVSR_GP_HPP_
#define FVSR_GP_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "expr.hpp"
#include "optim.hpp"
#include "random.hpp"

namespace fvsr {

struct GpConfig {
  std::size_t populationSize = 200;
  std::size_t generations = 100;
  // 25 for factor-variable runs, 50 for one-hot runs.
  std::size_t maxTreeNodes = 25;
  std::vector<NodeType> functionSet{NodeType::kAdd, NodeType::kSub, NodeType::kMul,
                                    NodeType::kDiv, NodeType::kLog, NodeType::kExp};
  bool useConstants = true;
  bool useNumericVariables = true;
  bool useFactorVariables = true;
  std::size_t tournamentSize = 5;
  double crossoverProbability = 0.9;
  double mutationProbability = 0.25;
  double factorMutationSigma = 0.05;
  double constantMin = -1.0;
  double constantMax = 1.0;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;
  // Ends the run early once the best training MSE is <= this value.
  // Negative disables early stopping.
  double stopFitness = -1.0;
  // Worker threads for population evaluation; 0 picks the hardware count.
  // Results do not depend on this value.
  std::size_t threads = 0;
  LmConfig lm;

  // Throws InvalidArgument.
  void validate() const;
};

// Sets one configuration key from its textual value, e.g.
// ("population_size", "200") or ("function_set", "add,sub,mul,div,log,exp").
// Throws InvalidArgument on unknown keys or malformed values.
void setConfigValue(GpConfig& config, std::string_view key, std::string_view value);
// "key = value" lines; '#' starts a comment.
void applyConfigText(GpConfig& config, std::string_view text);
// All keys with their current values, in applyConfigText() syntax.
std::string formatConfig(const GpConfig& config);

struct LmSummary {
  bool accepted = false;
  int iterations = 0;
  double sseBefore = 0.0;
  double sseAfter = 0.0;
};

struct Individual {
  ExpressionTree tree;
  // Training MSE after refinement, +inf for non-finite output.
  double fitness = std::numeric_limits<double>::infinity();
  LmSummary lm;
};

struct GenerationRecord {
  std::size_t generation = 0;
  double bestFitness = 0.0;
  std::size_t bestSize = 0;
  double meanSize = 0.0;
  std::size_t nonFinite = 0;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<GenerationRecord> history;
  Individual best;
  std::size_t generationsRun = 0;
  std::size_t evaluations = 0;
  double wallSeconds = 0.0;
};

// PTC2: grows a random tree towards targetSize by expanding randomly chosen
// open child slots with functions, then closes the remaining slots with
// terminals. The result has at most targetSize + (max arity - 1) nodes.
// Throws InvalidArgument when the terminal set is empty.
ExpressionTree randomTreePtc2(const GpConfig& config, const Schema& schema, std::size_t targetSize,
                              Random& rng);

// Factor terminal on a nominal column with one N(0, 1) value per level.
Node initFactorTerminal(const Schema& schema, std::size_t column, Random& rng);

enum class MutationKind {
  kConstant,      // shift one constant
  kFactorValue,   // shift one level value of one factor
  kFactorVector,  // shift every level value of one factor
  kSubtree,       // replace a subtree with a fresh PTC2 subtree
  kFunction,      // swap a function symbol for another of equal arity
  kNone,
};

const char* toString(MutationKind kind);

std::vector<MutationKind> applicableMutations(const ExpressionTree& tree, const GpConfig& config);

// Applies one mutation drawn uniformly from the applicable kinds.
ExpressionTree mutate(const ExpressionTree& tree, const GpConfig& config, const Schema& schema,
                      Random& rng, MutationKind* applied = nullptr);
// Applies the given kind; returns the tree unchanged when it has no site
// for that kind.
ExpressionTree mutate(const ExpressionTree& tree, MutationKind kind, const GpConfig& config,
                      const Schema& schema, Random& rng);

// Subtree crossover: a random subtree of parentA is replaced by a random
// subtree of parentB. Retries up to 10 cut points to stay within
// maxTreeNodes, then falls back to a copy of parentA.
ExpressionTree crossover(const ExpressionTree& parentA, const ExpressionTree& parentB,
                         const GpConfig& config, Random& rng);

// Refines the parameters with config.lm and scores training MSE.
Individual evaluateIndividual(ExpressionTree tree, const Dataset& train, const GpConfig& config);

// Index of the tournament winner (lowest fitness; ties go to the earlier
// draw).
std::size_t tournamentSelect(const std::vector<Individual>& population, std::size_t size, Random& rng);

using GenerationCallback = std::function<void(const GenerationRecord&)>;

// Generational GP with elitism. Individual i of generation g draws all its
// randomness from Random::derive(seed, {g, i}), so the result does not depend
// on thread scheduling.
RunReport evolve(const GpConfig& config, const Dataset& train, const GenerationCallback& onGeneration = {});

}  // namespace fvsr

#endif  // FVSR_GP_HPP_
