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

#include "data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "error.hpp"
#include "random.hpp"

namespace fvsr {

const char* toString(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "nominal";
}

std::optional<std::uint32_t> Column::levelIndex(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- Schema

Schema::Schema(std::vector<Column> columns, std::string target)
    : columns_(std::move(columns)), target_(std::move(target)) {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (columns_[i].name == columns_[j].name) {
        throw DataError("duplicate column name '" + columns_[i].name + "'");
      }
    }
  }
  if (!target_.empty()) {
    const auto t = find(target_);
    if (!t) throw DataError("target column '" + target_ + "' not found");
    if (columns_[*t].kind != ColumnKind::kNumeric) {
      throw DataError("target column '" + target_ + "' is not numeric");
    }
  }
}

std::optional<std::size_t> Schema::targetIndex() const {
  if (target_.empty()) return std::nullopt;
  return find(target_);
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::require(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("unknown column '" + std::string(name) + "'");
}

std::vector<std::size_t> Schema::inputs() const {
  std::vector<std::size_t> out;
  const auto t = targetIndex();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!t || *t != i) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Schema::inputs(ColumnKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t i : inputs()) {
    if (columns_[i].kind == kind) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(Schema schema, std::vector<std::vector<double>> numeric,
                 std::vector<std::vector<std::uint32_t>> nominal)
    : schema_(std::move(schema)),
      numeric_(std::move(numeric)),
      nominal_(std::move(nominal)) {
  const std::size_t n = schema_.size();
  numeric_.resize(n);
  nominal_.resize(n);
  bool first = true;
  for (std::size_t c = 0; c < n; ++c) {
    const Column& col = schema_[c];
    const std::size_t len = col.isNominal() ? nominal_[c].size() : numeric_[c].size();
    if (first) {
      rows_ = len;
      first = false;
    } else if (len != rows_) {
      throw DataError("column '" + col.name + "' has " + std::to_string(len) +
                      " rows, expected " + std::to_string(rows_));
    }
    if (col.isNominal()) {
      for (std::uint32_t v : nominal_[c]) {
        if (v >= col.levels.size()) {
          throw DataError("level index out of range in column '" + col.name + "'");
        }
      }
    }
  }
}

std::span<const double> Dataset::numericColumn(std::size_t column) const {
  if (schema_[column].isNominal()) {
    throw DataError("column '" + schema_[column].name + "' is not numeric");
  }
  return numeric_[column];
}

std::span<const std::uint32_t> Dataset::nominalColumn(std::size_t column) const {
  if (!schema_[column].isNominal()) {
    throw DataError("column '" + schema_[column].name + "' is not nominal");
  }
  return nominal_[column];
}

std::span<const double> Dataset::target() const {
  const auto t = schema_.targetIndex();
  if (!t) throw DataError("dataset has no target column");
  return numeric_[*t];
}

std::string Dataset::cellText(std::size_t column, std::size_t row) const {
  const Column& col = schema_[column];
  if (col.isNominal()) return col.levels[nominal_[column][row]];
  return formatDouble(numeric_[column][row]);
}

Dataset Dataset::selectRows(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> num(columns());
  std::vector<std::vector<std::uint32_t>> nom(columns());
  for (std::size_t c = 0; c < columns(); ++c) {
    if (schema_[c].isNominal()) {
      nom[c].reserve(rows.size());
      for (std::size_t r : rows) nom[c].push_back(nominal_[c].at(r));
    } else {
      num[c].reserve(rows.size());
      for (std::size_t r : rows) num[c].push_back(numeric_[c].at(r));
    }
  }
  return Dataset(schema_, std::move(num), std::move(nom));
}

// ---------------------------------------------------------------- numbers

std::string formatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::optional<double> parseDouble(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::string_view body = token;
  bool negative = false;
  if (body.front() == '+' || body.front() == '-') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  if (body == "inf" || body == "Inf" || body == "infinity") {
    return negative ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::infinity();
  }
  if (body == "nan" || body == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> splitLine(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

CsvTable parseCsvTable(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t lineNo = 0;
  bool haveHeader = false;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++lineNo;
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    auto cells = splitLine(line);
    if (!haveHeader) {
      table.header = std::move(cells);
      haveHeader = true;
    } else {
      if (cells.size() != table.header.size()) {
        throw DataError("ragged row at line " + std::to_string(lineNo) + ": " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(cells));
    }
    if (eol == text.size()) break;
  }
  if (!haveHeader) throw DataError("empty CSV: no header row");
  if (table.rows.empty()) throw DataError("empty CSV: no data rows");
  return table;
}

CsvTable readCsvTable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseCsvTable(ss.str());
}

Dataset datasetFromTable(const CsvTable& table, const CsvOptions& options) {
  const std::size_t ncol = table.header.size();
  const std::size_t nrow = table.rows.size();
  std::string target = options.target;
  if (target.empty()) target = table.header.back();
  const bool hasTarget =
      std::find(table.header.begin(), table.header.end(), target) != table.header.end();
  if (!hasTarget && options.requireTarget) {
    throw DataError("target column '" + target + "' missing from CSV header");
  }

  std::vector<Column> columns(ncol);
  std::vector<std::vector<double>> num(ncol);
  std::vector<std::vector<std::uint32_t>> nom(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    Column& col = columns[c];
    col.name = table.header[c];
    if (col.name.empty()) throw DataError("empty column name at position " + std::to_string(c));

    std::optional<ColumnKind> forced;
    if (auto it = options.kinds.find(col.name); it != options.kinds.end()) forced = it->second;

    std::vector<double> parsed;
    parsed.reserve(nrow);
    std::optional<std::size_t> badRow;
    for (std::size_t r = 0; r < nrow; ++r) {
      auto v = parseDouble(table.rows[r][c]);
      if (!v) {
        badRow = r;
        break;
      }
      parsed.push_back(*v);
    }
    const ColumnKind kind =
        forced ? *forced : (badRow ? ColumnKind::kNominal : ColumnKind::kNumeric);
    col.kind = kind;
    if (kind == ColumnKind::kNumeric) {
      if (badRow) {
        throw DataError("column '" + col.name + "' is numeric but cell at data row " +
                        std::to_string(*badRow + 1) + " is '" + table.rows[*badRow][c] + "'");
      }
      num[c] = std::move(parsed);
    } else {
      if (auto it = options.levels.find(col.name); it != options.levels.end()) {
        col.levels = it->second;
      }
      nom[c].reserve(nrow);
      for (std::size_t r = 0; r < nrow; ++r) {
        const std::string& cell = table.rows[r][c];
        auto idx = col.levelIndex(cell);
        if (!idx) {
          idx = static_cast<std::uint32_t>(col.levels.size());
          col.levels.push_back(cell);
        }
        nom[c].push_back(*idx);
      }
    }
  }
  return Dataset(Schema(std::move(columns), hasTarget ? target : std::string{}),
                 std::move(num), std::move(nom));
}

Dataset loadCsv(const std::filesystem::path& path, const CsvOptions& options) {
  return datasetFromTable(readCsvTable(path), options);
}

void writeCsv(const Dataset& data, std::ostream& out) {
  const Schema& s = data.schema();
  for (std::size_t c = 0; c < s.size(); ++c) out << (c ? "," : "") << s[c].name;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < s.size(); ++c) out << (c ? "," : "") << data.cellText(c, r);
    out << '\n';
  }
}

void saveCsv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  writeCsv(data, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------- transforms

namespace {

struct ColumnStore {
  std::vector<Column> columns;
  std::vector<std::vector<double>> num;
  std::vector<std::vector<std::uint32_t>> nom;

  explicit ColumnStore(const Dataset& d) {
    columns = d.schema().columns();
    num.resize(d.columns());
    nom.resize(d.columns());
    for (std::size_t c = 0; c < d.columns(); ++c) {
      if (columns[c].isNominal()) {
        auto s = d.nominalColumn(c);
        nom[c].assign(s.begin(), s.end());
      } else {
        auto s = d.numericColumn(c);
        num[c].assign(s.begin(), s.end());
      }
    }
  }
};

}  // namespace

Dataset scaleUnit(const Dataset& data, std::span<const std::string> columns) {
  ColumnStore store(data);
  const auto target = data.schema().targetIndex();
  for (const std::string& name : columns) {
    const std::size_t c = data.schema().require(name);
    if (target && *target == c) throw DataError("refusing to scale target column '" + name + "'");
    Column& col = store.columns[c];
    if (col.isNominal()) throw DataError("cannot scale nominal column '" + name + "'");
    auto& v = store.num[c];
    if (v.empty()) continue;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const Scaling scale{*lo, *hi};
    if (!(scale.max > scale.min)) throw DataError("cannot scale constant column '" + name + "'");
    for (double& x : v) x = scale.apply(x);
    // Compose with an earlier scaling so the record still maps raw values.
    if (col.scaling) {
      col.scaling = Scaling{col.scaling->invert(scale.min), col.scaling->invert(scale.max)};
    } else {
      col.scaling = scale;
    }
  }
  return Dataset(Schema(std::move(store.columns), data.schema().target()),
                 std::move(store.num), std::move(store.nom));
}

Dataset scaleUnit(const Dataset& data) {
  std::vector<std::string> names;
  for (std::size_t c : data.schema().inputs(ColumnKind::kNumeric)) {
    names.push_back(data.schema()[c].name);
  }
  return scaleUnit(data, names);
}

Dataset unscale(const Dataset& data, std::span<const std::string> columns) {
  ColumnStore store(data);
  for (const std::string& name : columns) {
    const std::size_t c = data.schema().require(name);
    Column& col = store.columns[c];
    if (!col.scaling) continue;
    for (double& x : store.num[c]) x = col.scaling->invert(x);
    col.scaling.reset();
  }
  return Dataset(Schema(std::move(store.columns), data.schema().target()),
                 std::move(store.num), std::move(store.nom));
}

Condition parseCondition(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw InvalidArgument("filter condition must be column=value, got '" + std::string(text) + "'");
  }
  return Condition{std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

FilterResult filterRows(const Dataset& data, std::span<const Condition> conditions,
                        bool dropUnusedLevels) {
  const Schema& s = data.schema();
  struct Resolved {
    std::size_t column;
    bool nominal;
    std::uint32_t level;
    double value;
  };
  std::vector<Resolved> resolved;
  for (const Condition& cond : conditions) {
    const std::size_t c = s.require(cond.column);
    if (s[c].isNominal()) {
      auto idx = s[c].levelIndex(cond.value);
      if (!idx) throw DataError("unknown level '" + cond.value + "' for column '" + cond.column + "'");
      resolved.push_back({c, true, *idx, 0.0});
    } else {
      auto v = parseDouble(cond.value);
      if (!v) throw DataError("non-numeric filter value '" + cond.value + "' for column '" + cond.column + "'");
      resolved.push_back({c, false, 0, *v});
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    bool ok = true;
    for (const Resolved& q : resolved) {
      ok = q.nominal ? data.level(q.column, r) == q.level : data.numeric(q.column, r) == q.value;
      if (!ok) break;
    }
    if (ok) keep.push_back(r);
  }

  FilterResult result{data.selectRows(keep), {}};
  if (keep.empty()) result.warnings.push_back("filter removed every row");
  if (!dropUnusedLevels) return result;

  ColumnStore store(result.data);
  for (std::size_t c = 0; c < store.columns.size(); ++c) {
    Column& col = store.columns[c];
    if (!col.isNominal()) continue;
    std::vector<std::uint32_t> remap(col.levels.size(), std::numeric_limits<std::uint32_t>::max());
    std::vector<std::string> levels;
    for (std::uint32_t& v : store.nom[c]) {
      if (remap[v] == std::numeric_limits<std::uint32_t>::max()) {
        remap[v] = static_cast<std::uint32_t>(levels.size());
        levels.push_back(col.levels[v]);
      }
      v = remap[v];
    }
    col.levels = std::move(levels);
  }
  result.data = Dataset(Schema(std::move(store.columns), s.target()), std::move(store.num),
                        std::move(store.nom));
  return result;
}

Dataset oneHot(const Dataset& data, std::span<const std::string> columns) {
  const Schema& s = data.schema();
  std::vector<bool> expand(s.size(), false);
  for (const std::string& name : columns) {
    const std::size_t c = s.require(name);
    if (!s[c].isNominal()) throw DataError("cannot one-hot encode numeric column '" + name + "'");
    expand[c] = true;
  }
  std::vector<Column> cols;
  std::vector<std::vector<double>> num;
  std::vector<std::vector<std::uint32_t>> nom;
  for (std::size_t c = 0; c < s.size(); ++c) {
    if (!expand[c]) {
      cols.push_back(s[c]);
      if (s[c].isNominal()) {
        auto v = data.nominalColumn(c);
        nom.emplace_back(v.begin(), v.end());
        num.emplace_back();
      } else {
        auto v = data.numericColumn(c);
        num.emplace_back(v.begin(), v.end());
        nom.emplace_back();
      }
      continue;
    }
    auto levels = data.nominalColumn(c);
    for (std::size_t l = 0; l < s[c].levels.size(); ++l) {
      Column ind;
      ind.name = s[c].name + "=" + s[c].levels[l];
      ind.kind = ColumnKind::kNumeric;
      ind.indicatorOf = s[c].name;
      ind.indicatorLevel = s[c].levels[l];
      std::vector<double> v(data.rows());
      for (std::size_t r = 0; r < data.rows(); ++r) v[r] = levels[r] == l ? 1.0 : 0.0;
      cols.push_back(std::move(ind));
      num.push_back(std::move(v));
      nom.emplace_back();
    }
  }
  return Dataset(Schema(std::move(cols), s.target()), std::move(num), std::move(nom));
}

Dataset oneHot(const Dataset& data) {
  std::vector<std::string> names;
  for (std::size_t c : data.schema().inputs(ColumnKind::kNominal)) {
    names.push_back(data.schema()[c].name);
  }
  return oneHot(data, names);
}

SplitResult split(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.trainFraction > 0.0 && spec.trainFraction < 1.0)) {
    throw InvalidArgument("train fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = data.rows();
  SplitResult out;
  std::vector<bool> isTrain(n, false);

  switch (spec.strategy) {
    case SplitStrategy::kLeading: {
      const auto k = static_cast<std::size_t>(std::llround(spec.trainFraction * static_cast<double>(n)));
      for (std::size_t r = 0; r < std::min(k, n); ++r) isTrain[r] = true;
      break;
    }
    case SplitStrategy::kInterleaved: {
      const double holdout = 1.0 - spec.trainFraction;
      for (std::size_t r = 0; r < n; ++r) {
        const double a = std::floor(static_cast<double>(r) * holdout + 1e-9);
        const double b = std::floor(static_cast<double>(r + 1) * holdout + 1e-9);
        isTrain[r] = !(b > a);
      }
      break;
    }
    case SplitStrategy::kStratified: {
      std::optional<std::size_t> strat;
      if (!spec.stratifyBy.empty()) {
        strat = data.schema().require(spec.stratifyBy);
        if (!data.schema()[*strat].isNominal()) {
          throw DataError("stratification column '" + spec.stratifyBy + "' is not nominal");
        }
      } else if (auto nominal = data.schema().inputs(ColumnKind::kNominal); !nominal.empty()) {
        strat = nominal.front();
      }
      std::vector<std::vector<std::size_t>> groups;
      if (strat) {
        groups.resize(data.schema()[*strat].levels.size());
        for (std::size_t r = 0; r < n; ++r) groups[data.level(*strat, r)].push_back(r);
      } else {
        groups.emplace_back(n);
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
      }
      // Largest-remainder allocation keeps the total at round(fraction * n)
      // and every group within one row of its exact share.
      const auto total = static_cast<std::size_t>(std::llround(spec.trainFraction * static_cast<double>(n)));
      std::vector<std::size_t> quota(groups.size());
      std::vector<std::pair<double, std::size_t>> remainders;
      std::size_t assigned = 0;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const double exact = spec.trainFraction * static_cast<double>(groups[g].size());
        quota[g] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[g];
        remainders.emplace_back(exact - std::floor(exact), g);
      }
      std::stable_sort(remainders.begin(), remainders.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
        const std::size_t g = remainders[i].second;
        if (quota[g] < groups[g].size()) {
          ++quota[g];
          ++assigned;
        }
      }
      Random rng(spec.seed);
      for (std::size_t g = 0; g < groups.size(); ++g) {
        rng.shuffle(groups[g].begin(), groups[g].end());
        for (std::size_t i = 0; i < quota[g]; ++i) isTrain[groups[g][i]] = true;
      }
      break;
    }
  }

  for (std::size_t r = 0; r < n; ++r) (isTrain[r] ? out.trainRows : out.testRows).push_back(r);
  if (out.trainRows.empty()) throw DataError("split produced an empty training set");
  if (out.testRows.empty()) throw DataError("split produced an empty test set");
  out.train = data.selectRows(out.trainRows);
  out.test = data.selectRows(out.testRows);
  return out;
}

// ---------------------------------------------------------------- conform

namespace {

// Resolves the level index of a raw nominal cell against a model column, or
// nullopt when unseen.
std::optional<std::uint32_t> mapLevel(const Column& model, const std::string& name) {
  return model.levelIndex(name);
}

std::vector<std::string> indicatorGroupLevels(const Schema& schema, const std::string& source) {
  std::vector<std::string> levels;
  for (const Column& c : schema.columns()) {
    if (c.indicatorOf == source) levels.push_back(c.indicatorLevel);
  }
  return levels;
}

}  // namespace

std::vector<UnseenCell> findUnseenLevels(const Dataset& data, const Schema& schema) {
  std::vector<UnseenCell> out;
  const Schema& raw = data.schema();
  std::vector<std::string> checkedGroups;
  for (const Column& mc : schema.columns()) {
    const auto rc = raw.find(mc.name);
    if (mc.isNominal() && rc) {
      for (std::size_t r = 0; r < data.rows(); ++r) {
        std::string cell = data.cellText(*rc, r);
        if (!mapLevel(mc, cell)) out.push_back({r, mc.name, cell});
      }
    } else if (mc.isIndicator() && !rc) {
      if (std::find(checkedGroups.begin(), checkedGroups.end(), mc.indicatorOf) != checkedGroups.end()) continue;
      checkedGroups.push_back(mc.indicatorOf);
      const auto src = raw.find(mc.indicatorOf);
      if (!src) continue;
      const auto levels = indicatorGroupLevels(schema, mc.indicatorOf);
      for (std::size_t r = 0; r < data.rows(); ++r) {
        std::string cell = data.cellText(*src, r);
        if (std::find(levels.begin(), levels.end(), cell) == levels.end()) {
          out.push_back({r, mc.indicatorOf, cell});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const UnseenCell& a, const UnseenCell& b) { return a.row < b.row; });
  return out;
}

Dataset conform(const Dataset& data, const Schema& schema) {
  if (auto unseen = findUnseenLevels(data, schema); !unseen.empty()) {
    throw UnseenLevelError(unseen.front().column, unseen.front().level);
  }
  const Schema& raw = data.schema();
  const std::size_t n = data.rows();
  std::vector<std::vector<double>> num(schema.size());
  std::vector<std::vector<std::uint32_t>> nom(schema.size());
  const auto target = schema.targetIndex();

  for (std::size_t c = 0; c < schema.size(); ++c) {
    const Column& mc = schema[c];
    const auto rc = raw.find(mc.name);
    if (!rc) {
      if (target && *target == c) {
        num[c].assign(n, std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      if (mc.isIndicator()) {
        const auto src = raw.find(mc.indicatorOf);
        if (!src) throw DataError("missing column '" + mc.name + "' (or its source '" + mc.indicatorOf + "')");
        num[c].resize(n);
        for (std::size_t r = 0; r < n; ++r) {
          num[c][r] = data.cellText(*src, r) == mc.indicatorLevel ? 1.0 : 0.0;
        }
        continue;
      }
      throw DataError("missing column '" + mc.name + "'");
    }
    const Column& col = raw[*rc];
    if (mc.isNominal()) {
      nom[c].resize(n);
      for (std::size_t r = 0; r < n; ++r) nom[c][r] = *mapLevel(mc, data.cellText(*rc, r));
      continue;
    }
    if (col.isNominal()) {
      throw DataError("column '" + mc.name + "' is nominal but the model expects numeric values");
    }
    auto v = data.numericColumn(*rc);
    num[c].assign(v.begin(), v.end());
    if (col.scaling == mc.scaling) continue;
    for (double& x : num[c]) {
      if (col.scaling) x = col.scaling->invert(x);
      if (mc.scaling) x = mc.scaling->apply(x);
    }
  }
  return Dataset(schema, std::move(num), std::move(nom));
}

// ---------------------------------------------------------------- synthetic

const std::vector<SyntheticLevel>& syntheticLevelTable() {
  static const std::vector<SyntheticLevel> table{
      {"A", 1.0, -0.16},
      {"B", 1.0, -0.32},
      {"C", 1.5, -0.80},
      {"D", 2.0, -1.60},
  };
  return table;
}

double syntheticFunction(const SyntheticLevel& level, double x) {
  return level.theta1 * std::exp(-0.08 * x) - std::exp(level.theta2 * x) - 0.1;
}

Dataset generateSynthetic(const SyntheticSpec& spec) {
  if (!(spec.step > 0.0)) throw InvalidArgument("synthetic grid step must be positive");
  if (!(spec.xMax >= spec.xMin)) throw InvalidArgument("synthetic grid requires xMax >= xMin");
  if (spec.levels.empty()) throw InvalidArgument("synthetic grid needs at least one level");
  if (spec.noise < 0.0) throw InvalidArgument("noise level must be non-negative");

  std::vector<const SyntheticLevel*> levels;
  for (const std::string& name : spec.levels) {
    const auto& table = syntheticLevelTable();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& l) { return l.name == name; });
    if (it == table.end()) throw InvalidArgument("unknown synthetic level '" + name + "' (known: A, B, C, D)");
    levels.push_back(&*it);
  }

  const auto points = static_cast<std::size_t>(std::floor((spec.xMax - spec.xMin) / spec.step + 1e-9)) + 1;
  std::vector<double> xs, ys;
  std::vector<std::uint32_t> cs;
  Random rng(spec.noiseSeed);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (std::size_t i = 0; i < points; ++i) {
      const double x = spec.xMin + static_cast<double>(i) * spec.step;
      double y = syntheticFunction(*levels[l], x);
      if (spec.noise > 0.0) y *= 1.0 + spec.noise * rng.normal();
      xs.push_back(x);
      cs.push_back(static_cast<std::uint32_t>(l));
      ys.push_back(y);
    }
  }
  std::vector<Column> cols(3);
  cols[0].name = "x";
  cols[1].name = "c";
  cols[1].kind = ColumnKind::kNominal;
  cols[1].levels = spec.levels;
  cols[2].name = "y";
  std::vector<std::vector<double>> num{std::move(xs), {}, std::move(ys)};
  std::vector<std::vector<std::uint32_t>> nom{{}, std::move(cs), {}};
  return Dataset(Schema(std::move(cols), "y"), std::move(num), std::move(nom));
}

// ---------------------------------------------------------------- statistics

double median(std::span<const double> values) {
  if (values.empty()) throw DataError("median of an empty column");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::uint32_t modeLevel(std::span<const std::uint32_t> levels, std::size_t levelCount) {
  std::vector<std::size_t> counts(levelCount, 0);
  for (std::uint32_t l : levels) ++counts[l];
  return static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace fvsr
