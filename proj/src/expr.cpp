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

#include "expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "error.hpp"

namespace fvsr {

int arity(NodeType type) {
  switch (type) {
    case NodeType::kAdd:
    case NodeType::kSub:
    case NodeType::kMul:
    case NodeType::kDiv:
      return 2;
    case NodeType::kLog:
    case NodeType::kExp:
      return 1;
    default:
      return 0;
  }
}

const char* symbol(NodeType type) {
  switch (type) {
    case NodeType::kAdd: return "+";
    case NodeType::kSub: return "-";
    case NodeType::kMul: return "*";
    case NodeType::kDiv: return "/";
    case NodeType::kLog: return "log";
    case NodeType::kExp: return "exp";
    case NodeType::kConstant: return "const";
    case NodeType::kVariable: return "var";
    case NodeType::kFactor: return "factor";
  }
  return "?";
}

Node Node::function(NodeType type) {
  if (fvsr::arity(type) == 0) throw InvalidArgument("not a function symbol");
  Node n;
  n.type = type;
  return n;
}

Node Node::constant(double value) {
  Node n;
  n.type = NodeType::kConstant;
  n.value = value;
  return n;
}

Node Node::variable(std::uint32_t column) {
  Node n;
  n.type = NodeType::kVariable;
  n.column = column;
  return n;
}

Node Node::factor(std::uint32_t column, std::vector<double> values) {
  Node n;
  n.type = NodeType::kFactor;
  n.column = column;
  n.factorValues = std::move(values);
  return n;
}

// ---------------------------------------------------------------- tree

ExpressionTree::ExpressionTree() : nodes_{Node::constant(0.0)} {}

ExpressionTree::ExpressionTree(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
  if (nodes_.empty()) throw StructuralError("empty expression tree");
  // Prefix order is complete iff the count of open child slots reaches zero
  // exactly at the last node.
  std::size_t open = 1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (open == 0) throw StructuralError("trailing nodes after a complete tree");
    open = open - 1 + static_cast<std::size_t>(nodes_[i].arity());
  }
  if (open != 0) throw StructuralError("incomplete expression tree");
}

std::size_t ExpressionTree::subtreeEnd(std::size_t i) const {
  if (i >= nodes_.size()) throw InvalidArgument("node position out of range");
  std::size_t open = 1;
  while (open > 0) {
    open = open - 1 + static_cast<std::size_t>(nodes_[i].arity());
    ++i;
  }
  return i;
}

std::vector<std::size_t> ExpressionTree::children(std::size_t i) const {
  std::vector<std::size_t> out;
  std::size_t child = i + 1;
  for (int k = 0; k < nodes_.at(i).arity(); ++k) {
    out.push_back(child);
    child = subtreeEnd(child);
  }
  return out;
}

ExpressionTree ExpressionTree::subtree(std::size_t i) const {
  const std::size_t end = subtreeEnd(i);
  return ExpressionTree(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                          nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

double& ExpressionTree::constantValue(std::size_t i) {
  Node& n = nodes_.at(i);
  if (n.type != NodeType::kConstant) throw InvalidArgument("node is not a constant");
  return n.value;
}

std::span<double> ExpressionTree::factorValues(std::size_t i) {
  Node& n = nodes_.at(i);
  if (n.type != NodeType::kFactor) throw InvalidArgument("node is not a factor variable");
  return n.factorValues;
}

void ExpressionTree::setFunction(std::size_t i, NodeType type) {
  Node& n = nodes_.at(i);
  if (n.arity() == 0 || fvsr::arity(type) != n.arity()) {
    throw InvalidArgument("function replacement must keep the arity");
  }
  n.type = type;
}

std::size_t ExpressionTree::parameterCount() const {
  std::size_t k = 0;
  for (const Node& n : nodes_) k += n.parameterCount();
  return k;
}

// ---------------------------------------------------------------- builders

ExpressionTree makeConstant(double value) { return ExpressionTree({Node::constant(value)}); }

ExpressionTree makeVariable(std::uint32_t column) { return ExpressionTree({Node::variable(column)}); }

ExpressionTree makeFactor(std::uint32_t column, std::vector<double> values) {
  return ExpressionTree({Node::factor(column, std::move(values))});
}

ExpressionTree makeUnary(NodeType type, const ExpressionTree& child) {
  if (arity(type) != 1) throw InvalidArgument("makeUnary needs a unary symbol");
  std::vector<Node> nodes{Node::function(type)};
  nodes.insert(nodes.end(), child.nodes().begin(), child.nodes().end());
  return ExpressionTree(std::move(nodes));
}

ExpressionTree makeBinary(NodeType type, const ExpressionTree& left, const ExpressionTree& right) {
  if (arity(type) != 2) throw InvalidArgument("makeBinary needs a binary symbol");
  std::vector<Node> nodes{Node::function(type)};
  nodes.insert(nodes.end(), left.nodes().begin(), left.nodes().end());
  nodes.insert(nodes.end(), right.nodes().begin(), right.nodes().end());
  return ExpressionTree(std::move(nodes));
}

// ---------------------------------------------------------------- structure

std::size_t countNodes(const ExpressionTree& tree) { return tree.size(); }

ExpressionTree replaceSubtree(const ExpressionTree& tree, std::size_t position,
                              const ExpressionTree& replacement, std::optional<std::size_t> maxNodes) {
  if (position >= tree.size()) throw InvalidArgument("subtree position out of range");
  const std::size_t end = tree.subtreeEnd(position);
  const std::size_t newSize = tree.size() - (end - position) + replacement.size();
  if (maxNodes && newSize > *maxNodes) {
    throw InvalidArgument("replacement would grow the tree to " + std::to_string(newSize) +
                          " nodes, limit is " + std::to_string(*maxNodes));
  }
  const auto& src = tree.nodes();
  std::vector<Node> nodes;
  nodes.reserve(newSize);
  nodes.insert(nodes.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(position));
  nodes.insert(nodes.end(), replacement.nodes().begin(), replacement.nodes().end());
  nodes.insert(nodes.end(), src.begin() + static_cast<std::ptrdiff_t>(end), src.end());
  return ExpressionTree(std::move(nodes));
}

void validate(const ExpressionTree& tree, const Schema& schema) {
  const auto target = schema.targetIndex();
  for (const Node& n : tree.nodes()) {
    if (n.type != NodeType::kVariable && n.type != NodeType::kFactor) continue;
    if (n.column >= schema.size()) {
      throw StructuralError("node references column #" + std::to_string(n.column) +
                            " but the schema has " + std::to_string(schema.size()) + " columns");
    }
    const Column& col = schema[n.column];
    if (target && *target == n.column) {
      throw StructuralError("node references the target column '" + col.name + "'");
    }
    if (n.type == NodeType::kVariable && col.isNominal()) {
      throw StructuralError("numeric variable references nominal column '" + col.name + "'");
    }
    if (n.type == NodeType::kFactor) {
      if (!col.isNominal()) {
        throw StructuralError("factor variable references numeric column '" + col.name + "'");
      }
      if (n.factorValues.size() != col.levels.size()) {
        throw StructuralError("factor on '" + col.name + "' has " + std::to_string(n.factorValues.size()) +
                              " values but the column has " + std::to_string(col.levels.size()) + " levels");
      }
    }
  }
}

// ---------------------------------------------------------------- evaluation

namespace {

template <bool kChecked>
double evalNode(const Node* nodes, std::size_t& i, const Dataset& data, std::size_t row) {
  const Node& n = nodes[i++];
  switch (n.type) {
    case NodeType::kAdd: {
      const double a = evalNode<kChecked>(nodes, i, data, row);
      return a + evalNode<kChecked>(nodes, i, data, row);
    }
    case NodeType::kSub: {
      const double a = evalNode<kChecked>(nodes, i, data, row);
      return a - evalNode<kChecked>(nodes, i, data, row);
    }
    case NodeType::kMul: {
      const double a = evalNode<kChecked>(nodes, i, data, row);
      return a * evalNode<kChecked>(nodes, i, data, row);
    }
    case NodeType::kDiv: {
      const double a = evalNode<kChecked>(nodes, i, data, row);
      return a / evalNode<kChecked>(nodes, i, data, row);
    }
    case NodeType::kLog:
      return std::log(evalNode<kChecked>(nodes, i, data, row));
    case NodeType::kExp:
      return std::exp(evalNode<kChecked>(nodes, i, data, row));
    case NodeType::kConstant:
      return n.value;
    case NodeType::kVariable:
      if constexpr (kChecked) {
        if (n.column >= data.columns() || data.schema()[n.column].isNominal()) {
          throw StructuralError("numeric variable does not match the data schema");
        }
      }
      return data.numeric(n.column, row);
    case NodeType::kFactor: {
      if constexpr (kChecked) {
        if (n.column >= data.columns() || !data.schema()[n.column].isNominal()) {
          throw StructuralError("factor variable does not match the data schema");
        }
      }
      const std::uint32_t level = data.level(n.column, row);
      if constexpr (kChecked) {
        if (level >= n.factorValues.size()) {
          const Column& col = data.schema()[n.column];
          throw UnseenLevelError(col.name, col.levels[level]);
        }
      }
      return n.factorValues[level];
    }
  }
  return 0.0;
}

}  // namespace

double evaluate(const ExpressionTree& tree, const Dataset& data, std::size_t row) {
  if (row >= data.rows()) throw InvalidArgument("row out of range");
  std::size_t i = 0;
  return evalNode<true>(tree.nodes().data(), i, data, row);
}

std::vector<double> evaluate(const ExpressionTree& tree, const Dataset& data) {
  validate(tree, data.schema());
  std::vector<double> out(data.rows());
  evaluateUnchecked(tree, data, out);
  return out;
}

void evaluateUnchecked(const ExpressionTree& tree, const Dataset& data, std::span<double> out) {
  const Node* nodes = tree.nodes().data();
  for (std::size_t r = 0; r < data.rows(); ++r) {
    std::size_t i = 0;
    out[r] = evalNode<false>(nodes, i, data, r);
  }
}

// ---------------------------------------------------------------- one-hot

ExpressionTree expandToOneHot(const ExpressionTree& tree, const Schema& factorSchema,
                              const Schema& oneHotSchema) {
  std::vector<Node> out;
  for (const Node& n : tree.nodes()) {
    if (n.type == NodeType::kVariable) {
      const std::string& name = factorSchema[n.column].name;
      out.push_back(Node::variable(static_cast<std::uint32_t>(oneHotSchema.require(name))));
      continue;
    }
    if (n.type != NodeType::kFactor) {
      out.push_back(n);
      continue;
    }
    const Column& col = factorSchema[n.column];
    const std::size_t k = n.factorValues.size();
    // Left-nested sum: ((v0*[c=l0] + v1*[c=l1]) + v2*[c=l2]) ...
    for (std::size_t l = 1; l < k; ++l) out.push_back(Node::function(NodeType::kAdd));
    for (std::size_t l = 0; l < k; ++l) {
      const auto ind = oneHotSchema.require(col.name + "=" + col.levels.at(l));
      out.push_back(Node::function(NodeType::kMul));
      out.push_back(Node::constant(n.factorValues[l]));
      out.push_back(Node::variable(static_cast<std::uint32_t>(ind)));
    }
  }
  return ExpressionTree(std::move(out));
}

// ---------------------------------------------------------------- rendering

namespace {

bool isParameterName(std::string_view s) {
  if (s.size() < 2 || s[0] != 'c') return false;
  return std::all_of(s.begin() + 1, s.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
}

bool isReservedWord(std::string_view s) {
  return s == "log" || s == "exp" || s == "param" || s == "on" || s == "inf" || s == "nan" ||
         isParameterName(s);
}

bool isIdentStart(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }
bool isIdentChar(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.'; }

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string columnToken(std::string_view name) {
  const bool simple = !name.empty() && isIdentStart(name[0]) &&
                      std::all_of(name.begin(), name.end(), isIdentChar) && !isReservedWord(name);
  return simple ? std::string(name) : quoted(name);
}

std::string levelToken(std::string_view level) {
  const bool simple = !level.empty() && std::all_of(level.begin(), level.end(), isIdentChar);
  return simple ? std::string(level) : quoted(level);
}

struct Renderer {
  const ExpressionTree& tree;
  const Schema& schema;
  bool inlineValues;
  std::vector<ParameterEntry> params;
  std::size_t pos = 0;

  static int precedence(NodeType t) {
    switch (t) {
      case NodeType::kAdd:
      case NodeType::kSub:
        return 1;
      case NodeType::kMul:
      case NodeType::kDiv:
        return 2;
      default:
        return 3;
    }
  }

  std::pair<std::string, int> run() {
    const Node& n = tree.node(pos++);
    switch (n.type) {
      case NodeType::kLog:
      case NodeType::kExp: {
        auto [s, p] = run();
        return {std::string(symbol(n.type)) + "(" + s + ")", 3};
      }
      case NodeType::kAdd:
      case NodeType::kSub:
      case NodeType::kMul:
      case NodeType::kDiv: {
        const int prec = precedence(n.type);
        auto [ls, lp] = run();
        auto [rs, rp] = run();
        // Right operands of equal precedence keep their parentheses so the
        // parsed tree has the same shape (and rounding) as this one.
        if (lp < prec) ls = "(" + ls + ")";
        if (rp <= prec) rs = "(" + rs + ")";
        return {ls + " " + symbol(n.type) + " " + rs, prec};
      }
      case NodeType::kConstant: {
        if (inlineValues) {
          std::string v = formatDouble(n.value);
          return {n.value < 0 ? "(" + v + ")" : v, 3};
        }
        ParameterEntry e;
        e.name = "c" + std::to_string(params.size());
        e.values = {n.value};
        params.push_back(e);
        return {e.name, 3};
      }
      case NodeType::kVariable:
        return {columnToken(schema[n.column].name), 3};
      case NodeType::kFactor: {
        const Column& col = schema[n.column];
        ParameterEntry e;
        e.name = "c" + std::to_string(params.size());
        e.column = col.name;
        e.levels = col.levels;
        e.values = n.factorValues;
        params.push_back(e);
        if (inlineValues) {
          std::string s = "{" + columnToken(col.name) + ":";
          for (std::size_t l = 0; l < e.levels.size(); ++l) {
            s += (l ? ", " : " ") + levelToken(e.levels[l]) + "=" + formatDouble(e.values[l]);
          }
          return {s + "}", 3};
        }
        return {e.name, 3};
      }
    }
    return {"?", 3};
  }
};

}  // namespace

RenderedModel render(const ExpressionTree& tree, const Schema& schema) {
  validate(tree, schema);
  Renderer r{tree, schema, false, {}};
  RenderedModel out;
  out.expression = r.run().first;
  out.parameters = std::move(r.params);
  return out;
}

std::string toInfix(const ExpressionTree& tree, const Schema& schema) {
  validate(tree, schema);
  Renderer r{tree, schema, true, {}};
  return r.run().first;
}

std::string RenderedModel::toString() const {
  std::string out = expression + "\n";
  for (const ParameterEntry& p : parameters) {
    out += "param " + p.name;
    if (p.column.empty()) {
      out += " = " + formatDouble(p.values.at(0)) + "\n";
      continue;
    }
    out += " on " + columnToken(p.column) + ":";
    for (std::size_t l = 0; l < p.levels.size(); ++l) {
      out += (l ? ", " : " ") + levelToken(p.levels[l]) + "=" + formatDouble(p.values[l]);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- parsing

namespace {

enum class Tok { kEnd, kNumber, kIdent, kQuoted, kLParen, kRParen, kPlus, kMinus, kStar, kSlash, kComma, kColon, kEquals };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  std::size_t offset = 0;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t begin, std::size_t end) : text_(text), pos_(begin), end_(end) {
    advance();
  }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  // Reads a numeric literal, allowing a leading sign and inf/nan words.
  double number(const char* what) {
    std::size_t at = current_.offset;
    bool negative = false;
    if (current_.kind == Tok::kMinus || current_.kind == Tok::kPlus) {
      negative = current_.kind == Tok::kMinus;
      advance();
    }
    double v;
    if (current_.kind == Tok::kNumber) {
      v = current_.number;
    } else if (current_.kind == Tok::kIdent && (current_.text == "inf" || current_.text == "nan")) {
      v = *parseDouble(current_.text);
    } else {
      throw ParseError(std::string("expected ") + what, at);
    }
    advance();
    return negative ? -v : v;
  }

  Token expect(Tok kind, const char* what) {
    if (current_.kind != kind) throw ParseError(std::string("expected ") + what, current_.offset);
    return take();
  }

 private:
  void advance() {
    while (pos_ < end_ && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    current_ = Token{};
    current_.offset = pos_;
    if (pos_ >= end_) return;
    const char ch = text_[pos_];
    auto single = [&](Tok k) {
      current_.kind = k;
      current_.text = std::string(1, ch);
      ++pos_;
    };
    switch (ch) {
      case '(': return single(Tok::kLParen);
      case ')': return single(Tok::kRParen);
      case '+': return single(Tok::kPlus);
      case '-': return single(Tok::kMinus);
      case '*': return single(Tok::kStar);
      case '/': return single(Tok::kSlash);
      case ',': return single(Tok::kComma);
      case ':': return single(Tok::kColon);
      case '=': return single(Tok::kEquals);
      default: break;
    }
    if (ch == '"') {
      std::string s;
      std::size_t p = pos_ + 1;
      while (true) {
        if (p >= end_) throw ParseError("unterminated quoted name", pos_);
        char c = text_[p++];
        if (c == '"') break;
        if (c == '\\') {
          if (p >= end_) throw ParseError("unterminated quoted name", pos_);
          c = text_[p++];
        }
        s += c;
      }
      current_.kind = Tok::kQuoted;
      current_.text = std::move(s);
      pos_ = p;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      std::size_t p = pos_;
      while (p < end_ && (std::isdigit(static_cast<unsigned char>(text_[p])) || text_[p] == '.')) ++p;
      if (p < end_ && (text_[p] == 'e' || text_[p] == 'E')) {
        std::size_t q = p + 1;
        if (q < end_ && (text_[q] == '+' || text_[q] == '-')) ++q;
        if (q < end_ && std::isdigit(static_cast<unsigned char>(text_[q]))) {
          p = q;
          while (p < end_ && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
        }
      }
      // Level names such as "1a" lex as identifiers.
      if (p < end_ && isIdentChar(text_[p])) {
        while (p < end_ && isIdentChar(text_[p])) ++p;
        current_.kind = Tok::kIdent;
        current_.text = std::string(text_.substr(pos_, p - pos_));
        pos_ = p;
        return;
      }
      const auto v = parseDouble(text_.substr(pos_, p - pos_));
      if (!v) throw ParseError("malformed number", pos_);
      current_.kind = Tok::kNumber;
      current_.text = std::string(text_.substr(pos_, p - pos_));
      current_.number = *v;
      pos_ = p;
      return;
    }
    if (isIdentChar(ch)) {
      std::size_t p = pos_;
      while (p < end_ && isIdentChar(text_[p])) ++p;
      current_.kind = Tok::kIdent;
      current_.text = std::string(text_.substr(pos_, p - pos_));
      pos_ = p;
      return;
    }
    throw ParseError(std::string("unexpected character '") + ch + "'", pos_);
  }

  std::string_view text_;
  std::size_t pos_;
  std::size_t end_;
  Token current_;
};

struct ParamRef {
  std::size_t node;
  std::string name;
  std::size_t offset;
};

class ExpressionParser {
 public:
  ExpressionParser(Lexer& lex, const Schema& schema) : lex_(lex), schema_(schema) {}

  void parse() {
    additive();
    if (lex_.peek().kind != Tok::kEnd) throw ParseError("unexpected '" + lex_.peek().text + "'", lex_.peek().offset);
  }

  std::vector<Node> nodes;
  std::vector<ParamRef> refs;

 private:
  // Binary operators are emitted in prefix order by inserting the operator
  // node in front of the already parsed left operand.
  void additive() {
    const std::size_t start = nodes.size();
    multiplicative();
    while (lex_.peek().kind == Tok::kPlus || lex_.peek().kind == Tok::kMinus) {
      const NodeType op = lex_.take().kind == Tok::kPlus ? NodeType::kAdd : NodeType::kSub;
      insertOperator(start, op);
      multiplicative();
    }
  }

  void multiplicative() {
    const std::size_t start = nodes.size();
    unary();
    while (lex_.peek().kind == Tok::kStar || lex_.peek().kind == Tok::kSlash) {
      const NodeType op = lex_.take().kind == Tok::kStar ? NodeType::kMul : NodeType::kDiv;
      insertOperator(start, op);
      unary();
    }
  }

  void insertOperator(std::size_t start, NodeType op) {
    nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(start), Node::function(op));
    for (ParamRef& r : refs) {
      if (r.node >= start) ++r.node;
    }
  }

  void unary() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::kNumber:
      case Tok::kMinus:
        nodes.push_back(Node::constant(lex_.number("number")));
        return;
      case Tok::kLParen:
        lex_.take();
        additive();
        lex_.expect(Tok::kRParen, "')'");
        return;
      case Tok::kQuoted:
        column(lex_.take());
        return;
      case Tok::kIdent: {
        Token id = lex_.take();
        if (id.text == "log" || id.text == "exp") {
          nodes.push_back(Node::function(id.text == "log" ? NodeType::kLog : NodeType::kExp));
          lex_.expect(Tok::kLParen, "'('");
          additive();
          lex_.expect(Tok::kRParen, "')'");
          return;
        }
        if (id.text == "inf" || id.text == "nan") {
          nodes.push_back(Node::constant(*parseDouble(id.text)));
          return;
        }
        if (isParameterName(id.text)) {
          refs.push_back({nodes.size(), id.text, id.offset});
          nodes.push_back(Node::constant(0.0));
          return;
        }
        column(id);
        return;
      }
      default:
        throw ParseError("expected operand", t.offset);
    }
  }

  void column(const Token& t) {
    const auto c = schema_.find(t.text);
    if (!c) throw ParseError("unknown column '" + t.text + "'", t.offset);
    if (schema_[*c].isNominal()) {
      throw ParseError("nominal column '" + t.text + "' can only appear through a factor parameter", t.offset);
    }
    if (schema_.targetIndex() == c) throw ParseError("model references the target column '" + t.text + "'", t.offset);
    nodes.push_back(Node::variable(static_cast<std::uint32_t>(*c)));
  }

  Lexer& lex_;
  const Schema& schema_;
};

struct ParamDef {
  bool isFactor = false;
  std::uint32_t column = 0;
  std::vector<double> values;
};

std::string nameToken(Lexer& lex, const char* what) {
  const Token& t = lex.peek();
  if (t.kind != Tok::kIdent && t.kind != Tok::kQuoted && t.kind != Tok::kNumber) {
    throw ParseError(std::string("expected ") + what, t.offset);
  }
  return lex.take().text;
}

}  // namespace

ExpressionTree parseModel(std::string_view text, const Schema& schema) {
  // Split into the expression block and the "param" lines.
  std::size_t exprEnd = text.size();
  std::vector<std::pair<std::size_t, std::size_t>> paramLines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::size_t first = pos;
    while (first < eol && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
    const bool isParam = text.substr(first, 5) == "param" &&
                         (first + 5 == eol || std::isspace(static_cast<unsigned char>(text[first + 5])));
    if (isParam) {
      if (paramLines.empty()) exprEnd = pos;
      paramLines.emplace_back(first, eol);
    } else if (!paramLines.empty() && first < eol) {
      throw ParseError("expression text after parameter definitions", first);
    }
    pos = eol + 1;
  }

  Lexer exprLex(text, 0, exprEnd);
  ExpressionParser parser(exprLex, schema);
  parser.parse();

  std::map<std::string, ParamDef, std::less<>> defs;
  for (auto [begin, end] : paramLines) {
    Lexer lex(text, begin, end);
    lex.take();  // "param"
    const Token name = lex.expect(Tok::kIdent, "parameter name");
    if (!isParameterName(name.text)) throw ParseError("parameter names have the form c<N>", name.offset);
    if (defs.count(name.text)) throw ParseError("duplicate parameter '" + name.text + "'", name.offset);
    ParamDef def;
    if (lex.peek().kind == Tok::kEquals) {
      lex.take();
      def.values = {lex.number("parameter value")};
    } else {
      const Token on = lex.expect(Tok::kIdent, "'=' or 'on'");
      if (on.text != "on") throw ParseError("expected '=' or 'on'", on.offset);
      const std::size_t colOffset = lex.peek().offset;
      const std::string colName = nameToken(lex, "column name");
      const auto c = schema.find(colName);
      if (!c) throw ParseError("unknown column '" + colName + "'", colOffset);
      const Column& col = schema[*c];
      if (!col.isNominal()) throw ParseError("column '" + colName + "' is not nominal", colOffset);
      lex.expect(Tok::kColon, "':'");
      def.isFactor = true;
      def.column = static_cast<std::uint32_t>(*c);
      def.values.assign(col.levels.size(), 0.0);
      std::vector<bool> seen(col.levels.size(), false);
      while (true) {
        const std::size_t levelOffset = lex.peek().offset;
        const std::string level = nameToken(lex, "level name");
        const auto idx = col.levelIndex(level);
        if (!idx) throw ParseError("unknown level '" + level + "' of column '" + colName + "'", levelOffset);
        if (seen[*idx]) throw ParseError("duplicate level '" + level + "'", levelOffset);
        lex.expect(Tok::kEquals, "'='");
        def.values[*idx] = lex.number("level value");
        seen[*idx] = true;
        if (lex.peek().kind != Tok::kComma) break;
        lex.take();
      }
      for (std::size_t l = 0; l < seen.size(); ++l) {
        if (!seen[l]) throw ParseError("parameter " + name.text + " lacks level '" + col.levels[l] + "'", end);
      }
    }
    if (lex.peek().kind != Tok::kEnd) throw ParseError("unexpected '" + lex.peek().text + "'", lex.peek().offset);
    defs.emplace(name.text, std::move(def));
  }

  std::vector<Node> nodes = std::move(parser.nodes);
  for (const ParamRef& ref : parser.refs) {
    auto it = defs.find(ref.name);
    if (it == defs.end()) throw ParseError("undefined parameter '" + ref.name + "'", ref.offset);
    const ParamDef& def = it->second;
    nodes[ref.node] = def.isFactor ? Node::factor(def.column, def.values) : Node::constant(def.values[0]);
  }
  ExpressionTree tree(std::move(nodes));
  validate(tree, schema);
  return tree;
}

}  // namespace fvsr
