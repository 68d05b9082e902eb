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

#include "gp.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace fvsr {

// ---------------------------------------------------------------- config

void GpConfig::validate() const {
  if (populationSize < 2) throw InvalidArgument("population_size must be >= 2");
  if (maxTreeNodes < 3) throw InvalidArgument("max_tree_nodes must be >= 3");
  if (tournamentSize < 1) throw InvalidArgument("tournament_size must be >= 1");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
  };
  prob(crossoverProbability, "crossover_probability");
  prob(mutationProbability, "mutation_probability");
  if (!(factorMutationSigma >= 0.0)) throw InvalidArgument("factor_mutation_sigma must be >= 0");
  if (!(constantMax >= constantMin)) throw InvalidArgument("constant_max must be >= constant_min");
  if (elitism >= populationSize) throw InvalidArgument("elitism must be smaller than population_size");
  for (NodeType t : functionSet) {
    if (arity(t) == 0) throw InvalidArgument("function_set contains a terminal");
  }
  if (!useConstants && !useNumericVariables && !useFactorVariables) {
    throw InvalidArgument("terminal set is empty");
  }
  lm.validate();
}

namespace {

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::uint64_t parseCount(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || end != value.data() + value.size() || value.empty()) {
    throw InvalidArgument("config key '" + std::string(key) + "' needs a non-negative integer, got '" +
                          std::string(value) + "'");
  }
  return v;
}

double parseReal(std::string_view key, std::string_view value) {
  const auto v = parseDouble(value);
  if (!v) {
    throw InvalidArgument("config key '" + std::string(key) + "' needs a number, got '" + std::string(value) + "'");
  }
  return *v;
}

bool parseBool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw InvalidArgument("config key '" + std::string(key) + "' needs true/false, got '" + std::string(value) + "'");
}

NodeType parseFunction(std::string_view name) {
  if (name == "add" || name == "+") return NodeType::kAdd;
  if (name == "sub" || name == "-") return NodeType::kSub;
  if (name == "mul" || name == "*") return NodeType::kMul;
  if (name == "div" || name == "/") return NodeType::kDiv;
  if (name == "log") return NodeType::kLog;
  if (name == "exp") return NodeType::kExp;
  throw InvalidArgument("unknown function symbol '" + std::string(name) + "'");
}

const char* functionName(NodeType t) {
  switch (t) {
    case NodeType::kAdd: return "add";
    case NodeType::kSub: return "sub";
    case NodeType::kMul: return "mul";
    case NodeType::kDiv: return "div";
    case NodeType::kLog: return "log";
    case NodeType::kExp: return "exp";
    default: return "?";
  }
}

}  // namespace

void setConfigValue(GpConfig& c, std::string_view rawKey, std::string_view rawValue) {
  const std::string key = trimmed(rawKey);
  const std::string value = trimmed(rawValue);
  if (key == "population_size") c.populationSize = parseCount(key, value);
  else if (key == "generations") c.generations = parseCount(key, value);
  else if (key == "max_tree_nodes") c.maxTreeNodes = parseCount(key, value);
  else if (key == "function_set") {
    c.functionSet.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trimmed(item);
      if (!item.empty()) c.functionSet.push_back(parseFunction(item));
    }
  }
  else if (key == "use_constants") c.useConstants = parseBool(key, value);
  else if (key == "use_numeric_variables") c.useNumericVariables = parseBool(key, value);
  else if (key == "use_factor_variables") c.useFactorVariables = parseBool(key, value);
  else if (key == "tournament_size") c.tournamentSize = parseCount(key, value);
  else if (key == "crossover_probability") c.crossoverProbability = parseReal(key, value);
  else if (key == "mutation_probability") c.mutationProbability = parseReal(key, value);
  else if (key == "factor_mutation_sigma") c.factorMutationSigma = parseReal(key, value);
  else if (key == "constant_min") c.constantMin = parseReal(key, value);
  else if (key == "constant_max") c.constantMax = parseReal(key, value);
  else if (key == "elitism") c.elitism = parseCount(key, value);
  else if (key == "seed") c.seed = parseCount(key, value);
  else if (key == "stop_fitness") c.stopFitness = parseReal(key, value);
  else if (key == "threads") c.threads = parseCount(key, value);
  else if (key == "lm_max_iterations") c.lm.maxIterations = static_cast<int>(parseCount(key, value));
  else if (key == "lm_initial_damping") c.lm.initialDamping = parseReal(key, value);
  else if (key == "lm_damping_up") c.lm.dampingUp = parseReal(key, value);
  else if (key == "lm_damping_down") c.lm.dampingDown = parseReal(key, value);
  else if (key == "lm_min_step") c.lm.minStep = parseReal(key, value);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

void applyConfigText(GpConfig& config, std::string_view text) {
  std::size_t pos = 0;
  std::size_t lineNo = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trimmed(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(lineNo) + " is not 'key = value'");
    }
    setConfigValue(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string formatConfig(const GpConfig& c) {
  std::ostringstream out;
  out << "population_size = " << c.populationSize << "\n";
  out << "generations = " << c.generations << "\n";
  out << "max_tree_nodes = " << c.maxTreeNodes << "\n";
  out << "function_set = ";
  for (std::size_t i = 0; i < c.functionSet.size(); ++i) out << (i ? "," : "") << functionName(c.functionSet[i]);
  out << "\n";
  out << "use_constants = " << (c.useConstants ? "true" : "false") << "\n";
  out << "use_numeric_variables = " << (c.useNumericVariables ? "true" : "false") << "\n";
  out << "use_factor_variables = " << (c.useFactorVariables ? "true" : "false") << "\n";
  out << "tournament_size = " << c.tournamentSize << "\n";
  out << "crossover_probability = " << formatDouble(c.crossoverProbability) << "\n";
  out << "mutation_probability = " << formatDouble(c.mutationProbability) << "\n";
  out << "factor_mutation_sigma = " << formatDouble(c.factorMutationSigma) << "\n";
  out << "constant_min = " << formatDouble(c.constantMin) << "\n";
  out << "constant_max = " << formatDouble(c.constantMax) << "\n";
  out << "elitism = " << c.elitism << "\n";
  out << "seed = " << c.seed << "\n";
  out << "stop_fitness = " << formatDouble(c.stopFitness) << "\n";
  out << "threads = " << c.threads << "\n";
  out << "lm_max_iterations = " << c.lm.maxIterations << "\n";
  out << "lm_initial_damping = " << formatDouble(c.lm.initialDamping) << "\n";
  out << "lm_damping_up = " << formatDouble(c.lm.dampingUp) << "\n";
  out << "lm_damping_down = " << formatDouble(c.lm.dampingDown) << "\n";
  out << "lm_min_step = " << formatDouble(c.lm.minStep) << "\n";
  return out.str();
}

// ---------------------------------------------------------------- creation

namespace {

struct TerminalChoice {
  enum Kind { kConstant, kVariable, kFactor } kind;
  std::size_t column = 0;
};

std::vector<TerminalChoice> terminalChoices(const GpConfig& config, const Schema& schema) {
  std::vector<TerminalChoice> out;
  if (config.useConstants) out.push_back({TerminalChoice::kConstant, 0});
  if (config.useNumericVariables) {
    for (std::size_t c : schema.inputs(ColumnKind::kNumeric)) out.push_back({TerminalChoice::kVariable, c});
  }
  if (config.useFactorVariables) {
    for (std::size_t c : schema.inputs(ColumnKind::kNominal)) out.push_back({TerminalChoice::kFactor, c});
  }
  return out;
}

Node randomTerminal(const std::vector<TerminalChoice>& choices, const GpConfig& config, const Schema& schema,
                    Random& rng) {
  const TerminalChoice& t = choices[rng.uniformIndex(choices.size())];
  switch (t.kind) {
    case TerminalChoice::kConstant:
      return Node::constant(rng.uniform(config.constantMin, config.constantMax));
    case TerminalChoice::kVariable:
      return Node::variable(static_cast<std::uint32_t>(t.column));
    case TerminalChoice::kFactor:
      return initFactorTerminal(schema, t.column, rng);
  }
  return Node::constant(0.0);
}

}  // namespace

Node initFactorTerminal(const Schema& schema, std::size_t column, Random& rng) {
  if (column >= schema.size() || !schema[column].isNominal()) {
    throw InvalidArgument("factor terminals need a nominal column");
  }
  std::vector<double> values(schema[column].levels.size());
  for (double& v : values) v = rng.normal(0.0, 1.0);
  return Node::factor(static_cast<std::uint32_t>(column), std::move(values));
}

ExpressionTree randomTreePtc2(const GpConfig& config, const Schema& schema, std::size_t targetSize, Random& rng) {
  const auto terminals = terminalChoices(config, schema);
  if (terminals.empty()) throw InvalidArgument("empty terminal set");
  if (targetSize <= 1 || config.functionSet.empty()) {
    return ExpressionTree({randomTerminal(terminals, config, schema, rng)});
  }

  struct Proto {
    Node node;
    std::vector<std::size_t> children;
  };
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<Proto> protos;
  std::vector<std::pair<std::size_t, std::size_t>> open;  // (parent, child slot)

  auto addFunction = [&]() {
    const NodeType t = config.functionSet[rng.uniformIndex(config.functionSet.size())];
    const std::size_t id = protos.size();
    protos.push_back({Node::function(t), std::vector<std::size_t>(static_cast<std::size_t>(arity(t)), kUnset)});
    for (int k = 0; k < arity(t); ++k) open.emplace_back(id, static_cast<std::size_t>(k));
    return id;
  };

  addFunction();
  std::size_t count = 1;
  while (count + open.size() < targetSize) {
    const std::size_t pick = rng.uniformIndex(open.size());
    const auto slot = open[pick];
    open[pick] = open.back();
    open.pop_back();
    const std::size_t id = addFunction();
    protos[slot.first].children[slot.second] = id;
    ++count;
  }
  for (const auto& slot : open) {
    const std::size_t id = protos.size();
    protos.push_back({randomTerminal(terminals, config, schema, rng), {}});
    protos[slot.first].children[slot.second] = id;
  }

  std::vector<Node> prefix;
  prefix.reserve(protos.size());
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    prefix.push_back(std::move(protos[id].node));
    const auto& ch = protos[id].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return ExpressionTree(std::move(prefix));
}

// ---------------------------------------------------------------- mutation

const char* toString(MutationKind kind) {
  switch (kind) {
    case MutationKind::kConstant: return "constant";
    case MutationKind::kFactorValue: return "factor-value";
    case MutationKind::kFactorVector: return "factor-vector";
    case MutationKind::kSubtree: return "subtree";
    case MutationKind::kFunction: return "function";
    case MutationKind::kNone: return "none";
  }
  return "?";
}

namespace {

std::vector<std::size_t> nodesOfType(const ExpressionTree& tree, NodeType type) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (tree.node(i).type == type) out.push_back(i);
  }
  return out;
}

std::vector<NodeType> alternatives(const GpConfig& config, NodeType current) {
  std::vector<NodeType> out;
  for (NodeType t : config.functionSet) {
    if (t != current && arity(t) == arity(current) && std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<std::size_t> swappableFunctions(const ExpressionTree& tree, const GpConfig& config) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!tree.node(i).isTerminal() && !alternatives(config, tree.node(i).type).empty()) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<MutationKind> applicableMutations(const ExpressionTree& tree, const GpConfig& config) {
  std::vector<MutationKind> out;
  if (!nodesOfType(tree, NodeType::kConstant).empty()) out.push_back(MutationKind::kConstant);
  if (!nodesOfType(tree, NodeType::kFactor).empty()) {
    out.push_back(MutationKind::kFactorValue);
    out.push_back(MutationKind::kFactorVector);
  }
  out.push_back(MutationKind::kSubtree);
  if (!swappableFunctions(tree, config).empty()) out.push_back(MutationKind::kFunction);
  return out;
}

ExpressionTree mutate(const ExpressionTree& tree, MutationKind kind, const GpConfig& config, const Schema& schema,
                      Random& rng) {
  ExpressionTree out = tree;
  const double sigma = config.factorMutationSigma;
  switch (kind) {
    case MutationKind::kConstant: {
      const auto sites = nodesOfType(tree, NodeType::kConstant);
      if (sites.empty()) break;
      out.constantValue(sites[rng.uniformIndex(sites.size())]) += rng.normal(0.0, sigma);
      break;
    }
    case MutationKind::kFactorValue: {
      const auto sites = nodesOfType(tree, NodeType::kFactor);
      if (sites.empty()) break;
      auto values = out.factorValues(sites[rng.uniformIndex(sites.size())]);
      values[rng.uniformIndex(values.size())] += rng.normal(0.0, sigma);
      break;
    }
    case MutationKind::kFactorVector: {
      const auto sites = nodesOfType(tree, NodeType::kFactor);
      if (sites.empty()) break;
      for (double& v : out.factorValues(sites[rng.uniformIndex(sites.size())])) v += rng.normal(0.0, sigma);
      break;
    }
    case MutationKind::kSubtree: {
      const std::size_t pos = rng.uniformIndex(tree.size());
      const std::size_t rest = tree.size() - tree.subtreeSize(pos);
      const std::size_t room = config.maxTreeNodes > rest ? config.maxTreeNodes - rest : 1;
      // PTC2 may overshoot its target by one node (binary functions).
      const std::size_t maxTarget = room > 1 ? room - 1 : 1;
      const auto target = static_cast<std::size_t>(rng.uniformInt(1, static_cast<std::int64_t>(maxTarget)));
      out = replaceSubtree(tree, pos, randomTreePtc2(config, schema, target, rng));
      break;
    }
    case MutationKind::kFunction: {
      const auto sites = swappableFunctions(tree, config);
      if (sites.empty()) break;
      const std::size_t site = sites[rng.uniformIndex(sites.size())];
      const auto alts = alternatives(config, tree.node(site).type);
      out.setFunction(site, alts[rng.uniformIndex(alts.size())]);
      break;
    }
    case MutationKind::kNone:
      break;
  }
  return out;
}

ExpressionTree mutate(const ExpressionTree& tree, const GpConfig& config, const Schema& schema, Random& rng,
                      MutationKind* applied) {
  const auto kinds = applicableMutations(tree, config);
  const MutationKind kind = kinds[rng.uniformIndex(kinds.size())];
  if (applied) *applied = kind;
  return mutate(tree, kind, config, schema, rng);
}

// ---------------------------------------------------------------- crossover

ExpressionTree crossover(const ExpressionTree& parentA, const ExpressionTree& parentB, const GpConfig& config,
                         Random& rng) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    const std::size_t cut = rng.uniformIndex(parentA.size());
    const std::size_t donor = rng.uniformIndex(parentB.size());
    const std::size_t size = parentA.size() - parentA.subtreeSize(cut) + parentB.subtreeSize(donor);
    if (size <= config.maxTreeNodes) return replaceSubtree(parentA, cut, parentB.subtree(donor));
  }
  return parentA;
}

// ---------------------------------------------------------------- evaluation

Individual evaluateIndividual(ExpressionTree tree, const Dataset& train, const GpConfig& config) {
  Individual ind;
  const LmResult lm = tryRefine(tree, train, config.lm);
  ind.lm = {lm.accepted, lm.iterationsUsed, lm.sseBefore, lm.sseAfter};
  const double mse = lm.sseAfter / static_cast<double>(train.rows());
  ind.fitness = std::isfinite(mse) ? mse : std::numeric_limits<double>::infinity();
  ind.tree = std::move(tree);
  return ind;
}

std::size_t tournamentSelect(const std::vector<Individual>& population, std::size_t size, Random& rng) {
  std::size_t best = rng.uniformIndex(population.size());
  for (std::size_t k = 1; k < size; ++k) {
    const std::size_t c = rng.uniformIndex(population.size());
    if (population[c].fitness < population[best].fitness) best = c;
  }
  return best;
}

// ---------------------------------------------------------------- evolution

namespace {

template <typename Fn>
void parallelFor(std::size_t begin, std::size_t end, std::size_t threads, Fn&& fn) {
  if (end <= begin) return;
  if (threads <= 1 || end - begin == 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::exception_ptr error;
  std::mutex errorMutex;
  std::vector<std::jthread> pool;
  const std::size_t workers = std::min(threads, end - begin);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < end; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(errorMutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::size_t bestIndex(const std::vector<Individual>& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (pop[i].fitness < pop[best].fitness) best = i;
  }
  return best;
}

GenerationRecord summarize(std::size_t generation, const std::vector<Individual>& pop) {
  GenerationRecord rec;
  rec.generation = generation;
  const std::size_t b = bestIndex(pop);
  rec.bestFitness = pop[b].fitness;
  rec.bestSize = pop[b].tree.size();
  double sizes = 0.0;
  for (const Individual& ind : pop) {
    sizes += static_cast<double>(ind.tree.size());
    if (!std::isfinite(ind.fitness)) ++rec.nonFinite;
  }
  rec.meanSize = sizes / static_cast<double>(pop.size());
  return rec;
}

}  // namespace

RunReport evolve(const GpConfig& config, const Dataset& train, const GenerationCallback& onGeneration) {
  config.validate();
  if (train.rows() == 0) throw DataError("training data is empty");
  if (!train.hasTarget()) throw DataError("training data has no target column");
  const Schema& schema = train.schema();
  if (terminalChoices(config, schema).empty()) throw InvalidArgument("empty terminal set");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t threads =
      config.threads ? config.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t popSize = config.populationSize;
  const std::size_t maxTarget = config.maxTreeNodes - 1;

  RunReport report;
  report.seed = config.seed;

  std::vector<Individual> population(popSize);
  parallelFor(0, popSize, threads, [&](std::size_t i) {
    Random rng = Random::derive(config.seed, {0, i});
    const auto target = static_cast<std::size_t>(rng.uniformInt(1, static_cast<std::int64_t>(maxTarget)));
    population[i] = evaluateIndividual(randomTreePtc2(config, schema, target, rng), train, config);
  });
  report.evaluations += popSize;
  report.history.push_back(summarize(0, population));
  if (onGeneration) onGeneration(report.history.back());

  auto stop = [&] { return config.stopFitness >= 0.0 && report.history.back().bestFitness <= config.stopFitness; };

  for (std::size_t gen = 1; gen <= config.generations && !stop(); ++gen) {
    std::vector<std::size_t> order(popSize);
    for (std::size_t i = 0; i < popSize; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return population[a].fitness < population[b].fitness; });

    std::vector<Individual> next(popSize);
    for (std::size_t e = 0; e < config.elitism; ++e) next[e] = population[order[e]];

    parallelFor(config.elitism, popSize, threads, [&](std::size_t i) {
      Random rng = Random::derive(config.seed, {gen, i});
      const std::size_t a = tournamentSelect(population, config.tournamentSize, rng);
      ExpressionTree child;
      if (rng.bernoulli(config.crossoverProbability)) {
        const std::size_t b = tournamentSelect(population, config.tournamentSize, rng);
        child = crossover(population[a].tree, population[b].tree, config, rng);
      } else {
        child = population[a].tree;
      }
      if (rng.bernoulli(config.mutationProbability)) child = mutate(child, config, schema, rng);
      next[i] = evaluateIndividual(std::move(child), train, config);
    });
    report.evaluations += popSize - config.elitism;
    population = std::move(next);
    report.history.push_back(summarize(gen, population));
    report.generationsRun = gen;
    if (onGeneration) onGeneration(report.history.back());
  }

  report.best = population[bestIndex(population)];
  report.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace fvsr
