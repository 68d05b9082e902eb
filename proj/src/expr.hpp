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

// Expression trees over {+, -, *, /, log, exp} with constant, numeric
// variable and factor variable terminals.
//
// A factor variable references a nominal column and holds one value per
// level of that column; it evaluates to the value of the row's level.
//
// Trees are stored as a flat vector of nodes in prefix (depth-first,
// left-to-right) order, so every subtree occupies a contiguous range.
// Division, log and exp are unprotected: non-finite values propagate.

#ifndef FVSR_EXPR_HPP_
#define FVSR_EXPR_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"

namespace fvsr {

enum class NodeType : std::uint8_t {
  kAdd,
  kSub,
  kMul,
  kDiv,
  kLog,
  kExp,
  kConstant,
  kVariable,
  kFactor,
};

int arity(NodeType type);
const char* symbol(NodeType type);

struct Node {
  NodeType type = NodeType::kConstant;
  double value = 0.0;             // kConstant
  std::uint32_t column = 0;       // kVariable, kFactor
  std::vector<double> factorValues;  // kFactor, indexed by level

  static Node function(NodeType type);
  static Node constant(double value);
  static Node variable(std::uint32_t column);
  static Node factor(std::uint32_t column, std::vector<double> values);

  int arity() const { return fvsr::arity(type); }
  bool isTerminal() const { return arity() == 0; }
  // Number of entries this node contributes to the parameter vector.
  std::size_t parameterCount() const {
    return type == NodeType::kConstant ? 1 : type == NodeType::kFactor ? factorValues.size() : 0;
  }

  bool operator==(const Node&) const = default;
};

class ExpressionTree {
 public:
  // Single Constant(0) node.
  ExpressionTree();
  // Throws StructuralError unless the nodes form exactly one complete tree
  // in prefix order.
  explicit ExpressionTree(std::vector<Node> prefix);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }

  // One past the last node of the subtree rooted at i.
  std::size_t subtreeEnd(std::size_t i) const;
  std::size_t subtreeSize(std::size_t i) const { return subtreeEnd(i) - i; }
  std::vector<std::size_t> children(std::size_t i) const;
  ExpressionTree subtree(std::size_t i) const;

  // Value edits that keep the structure intact.
  double& constantValue(std::size_t i);
  std::span<double> factorValues(std::size_t i);
  // Swaps the function symbol of node i for another of the same arity.
  void setFunction(std::size_t i, NodeType type);

  // Total number of tunable numbers (constants plus factor levels).
  std::size_t parameterCount() const;

  bool operator==(const ExpressionTree&) const = default;

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------- builders

ExpressionTree makeConstant(double value);
ExpressionTree makeVariable(std::uint32_t column);
ExpressionTree makeFactor(std::uint32_t column, std::vector<double> values);
ExpressionTree makeUnary(NodeType type, const ExpressionTree& child);
ExpressionTree makeBinary(NodeType type, const ExpressionTree& left, const ExpressionTree& right);

// ---------------------------------------------------------------- structure

std::size_t countNodes(const ExpressionTree& tree);

// Returns tree with the subtree at position replaced. Throws InvalidArgument
// when position is out of range, or when maxNodes is given and the result
// would exceed it.
ExpressionTree replaceSubtree(const ExpressionTree& tree, std::size_t position,
                              const ExpressionTree& replacement,
                              std::optional<std::size_t> maxNodes = std::nullopt);

// Throws StructuralError when a variable or factor references a column that
// is missing, of the wrong kind, or the target, or when a factor's value
// count differs from the column's level count.
void validate(const ExpressionTree& tree, const Schema& schema);

// ---------------------------------------------------------------- evaluation

// Evaluates one row. Checks column kinds and level ranges per access and
// throws StructuralError / UnseenLevelError.
double evaluate(const ExpressionTree& tree, const Dataset& data, std::size_t row);

// Evaluates every row after a single validate().
std::vector<double> evaluate(const ExpressionTree& tree, const Dataset& data);

// Unchecked variant used on hot paths; the caller guarantees validate()
// passed for data's schema.
void evaluateUnchecked(const ExpressionTree& tree, const Dataset& data, std::span<double> out);

// ---------------------------------------------------------------- one-hot

// Rewrites every factor variable on column c as the sum over levels of
// value_l * [c=l], reading the indicator columns "<c>=<l>" from
// oneHotSchema. Numeric variables are re-indexed by name.
ExpressionTree expandToOneHot(const ExpressionTree& tree, const Schema& factorSchema,
                              const Schema& oneHotSchema);

// ---------------------------------------------------------------- text

struct ParameterEntry {
  std::string name;                 // c0, c1, ...
  std::string column;               // empty for scalar constants
  std::vector<std::string> levels;  // factor parameters only
  std::vector<double> values;       // one per level, or a single value
};

struct RenderedModel {
  std::string expression;
  std::vector<ParameterEntry> parameters;

  // The expression line followed by one "param" line per parameter.
  std::string toString() const;
};

// Parameters are numbered c0, c1, ... in prefix order.
RenderedModel render(const ExpressionTree& tree, const Schema& schema);

// Parses the text produced by RenderedModel::toString(). Grammar:
//
//   model    = expr { "\n" paramdef } ;
//   expr     = term { ( "+" | "-" ) term } ;
//   term     = unary { ( "*" | "/" ) unary } ;
//   unary    = number | pname | column | ( "log" | "exp" ) "(" expr ")"
//            | "(" expr ")" ;
//   pname    = "c" digit { digit } ;
//   column   = ident | '"' { char } '"' ;
//   paramdef = "param" pname ( "=" number
//                            | "on" column ":" level "=" number
//                              { "," level "=" number } ) ;
//
// Throws ParseError (with byte offset) on syntax errors and on unknown
// column, level or parameter names.
ExpressionTree parseModel(std::string_view text, const Schema& schema);

// Infix text with parameter values inlined; for logs and reports.
std::string toInfix(const ExpressionTree& tree, const Schema& schema);

}  // namespace fvsr

#endif  // FVSR_EXPR_HPP_
