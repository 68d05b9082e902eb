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

// Tabular data model: numeric and nominal columns, CSV ingestion, unit
// scaling, row filtering, one-hot expansion, train/test splitting and the
// synthetic benchmark generator.

#ifndef FVSR_DATA_HPP_
#define FVSR_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fvsr {

enum class ColumnKind { kNumeric, kNominal };

const char* toString(ColumnKind kind);

// Affine map of a numeric column onto [0, 1].
struct Scaling {
  double min = 0.0;
  double max = 1.0;

  double apply(double x) const { return (x - min) / (max - min); }
  double invert(double u) const { return min + u * (max - min); }
  bool operator==(const Scaling&) const = default;
};

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Nominal only. Level index is the position in this table, which follows
  // first-appearance order in the data the table was built from.
  std::vector<std::string> levels;
  // Numeric only, set once the column has been scaled.
  std::optional<Scaling> scaling;
  // Set on one-hot indicator columns: the nominal column and level the
  // indicator was derived from.
  std::string indicatorOf;
  std::string indicatorLevel;

  bool isNominal() const { return kind == ColumnKind::kNominal; }
  bool isIndicator() const { return !indicatorOf.empty(); }
  std::optional<std::uint32_t> levelIndex(std::string_view level) const;

  bool operator==(const Column&) const = default;
};

class Schema {
 public:
  Schema() = default;
  Schema(std::vector<Column> columns, std::string target);

  std::size_t size() const { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_.at(i); }
  const std::vector<Column>& columns() const { return columns_; }

  // Target column name; empty when the schema has no target.
  const std::string& target() const { return target_; }
  std::optional<std::size_t> targetIndex() const;

  std::optional<std::size_t> find(std::string_view name) const;
  // Like find() but throws DataError naming the missing column.
  std::size_t require(std::string_view name) const;

  // Column indices usable as model inputs (every column except the target),
  // optionally restricted to one kind.
  std::vector<std::size_t> inputs() const;
  std::vector<std::size_t> inputs(ColumnKind kind) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Column> columns_;
  std::string target_;
};

// Immutable column-major table. Numeric cells are doubles; nominal cells are
// level indices into the column's level table.
class Dataset {
 public:
  Dataset() = default;
  // numeric[c] must be filled for numeric columns and nominal[c] for nominal
  // columns; the other vector of each pair stays empty. Throws DataError on
  // ragged columns or out-of-range level indices.
  Dataset(Schema schema, std::vector<std::vector<double>> numeric,
          std::vector<std::vector<std::uint32_t>> nominal);

  const Schema& schema() const { return schema_; }
  std::size_t rows() const { return rows_; }
  std::size_t columns() const { return schema_.size(); }

  double numeric(std::size_t column, std::size_t row) const {
    return numeric_[column][row];
  }
  std::uint32_t level(std::size_t column, std::size_t row) const {
    return nominal_[column][row];
  }
  std::span<const double> numericColumn(std::size_t column) const;
  std::span<const std::uint32_t> nominalColumn(std::size_t column) const;

  bool hasTarget() const { return schema_.targetIndex().has_value(); }
  std::span<const double> target() const;

  // Cell rendered as text: the level name for nominal cells, the shortest
  // round-trip representation for numeric cells.
  std::string cellText(std::size_t column, std::size_t row) const;

  Dataset selectRows(std::span<const std::size_t> rows) const;

 private:
  Schema schema_;
  std::vector<std::vector<double>> numeric_;
  std::vector<std::vector<std::uint32_t>> nominal_;
  std::size_t rows_ = 0;
};

// Shortest decimal text that parses back to exactly the same double.
std::string formatDouble(double value);
// Parses the whole token as a double. Accepts "inf", "-inf" and "nan".
std::optional<double> parseDouble(std::string_view token);

// ---------------------------------------------------------------- CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Comma separated, header row required, cells trimmed of surrounding
// whitespace. Throws DataError on ragged rows or an empty file.
CsvTable parseCsvTable(std::string_view text);
CsvTable readCsvTable(const std::filesystem::path& path);

struct CsvOptions {
  // Target column name. Empty selects the last column.
  std::string target;
  // When false a missing target column is accepted (prediction input).
  bool requireTarget = true;
  // Forces the kind of the named columns instead of auto-detection.
  std::map<std::string, ColumnKind, std::less<>> kinds;
  // Seeds the level tables of the named nominal columns; levels not listed
  // are appended in first-appearance order.
  std::map<std::string, std::vector<std::string>, std::less<>> levels;
};

// Columns whose cells all parse as numbers become numeric, others nominal.
Dataset datasetFromTable(const CsvTable& table, const CsvOptions& options);
Dataset loadCsv(const std::filesystem::path& path, const CsvOptions& options);

void writeCsv(const Dataset& data, std::ostream& out);
void saveCsv(const Dataset& data, const std::filesystem::path& path);

// ---------------------------------------------------------------- transforms

// x' = (x - min) / (max - min) on each named numeric column; the scaling
// record is kept in the schema. The target column is rejected. Throws
// DataError on a constant column.
Dataset scaleUnit(const Dataset& data, std::span<const std::string> columns);
// Every numeric input column.
Dataset scaleUnit(const Dataset& data);
// Reverts the scaling of the named columns.
Dataset unscale(const Dataset& data, std::span<const std::string> columns);

struct Condition {
  std::string column;
  std::string value;
};

// Parses "col=value" (one condition).
Condition parseCondition(std::string_view text);

struct FilterResult {
  Dataset data;
  std::vector<std::string> warnings;
};

// Keeps the rows satisfying every condition. Nominal conditions compare level
// names, numeric conditions compare parsed values exactly. Level tables are
// kept unless dropUnusedLevels is set.
FilterResult filterRows(const Dataset& data,
                        std::span<const Condition> conditions,
                        bool dropUnusedLevels = false);

// Replaces every named nominal column with one 0/1 indicator column per level
// named "<column>=<level>", in level order, at the position of the original.
Dataset oneHot(const Dataset& data, std::span<const std::string> columns);
// Every nominal input column.
Dataset oneHot(const Dataset& data);

enum class SplitStrategy {
  // Random within each level of the stratification column.
  kStratified,
  // The first rows form the training set.
  kLeading,
  // Evenly spaced rows are held out, e.g. every fourth row for 0.75.
  kInterleaved,
};

struct SplitSpec {
  double trainFraction = 0.75;
  SplitStrategy strategy = SplitStrategy::kStratified;
  std::uint64_t seed = 0;
  // Nominal column to stratify on; empty selects the first nominal input.
  // Without nominal inputs the stratified split is a plain random split.
  std::string stratifyBy;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> trainRows;
  std::vector<std::size_t> testRows;
};

SplitResult split(const Dataset& data, const SplitSpec& spec);

// Maps a dataset onto a model's schema by column name: nominal levels are
// matched by name, scaling records are applied, indicator columns are
// derived from their nominal source column. A missing target is filled with
// NaN. Throws UnseenLevelError for levels the schema does not know.
Dataset conform(const Dataset& data, const Schema& schema);

struct UnseenCell {
  std::size_t row;
  std::string column;
  std::string level;
};

// All cells conform() would reject as unseen levels.
std::vector<UnseenCell> findUnseenLevels(const Dataset& data,
                                         const Schema& schema);

// ---------------------------------------------------------------- synthetic

// theta_{c,1} * exp(-0.08 x) - exp(theta_{c,2} x) - 0.1 with the per-level
// parameters of the benchmark table.
struct SyntheticLevel {
  std::string name;
  double theta1;
  double theta2;
};

const std::vector<SyntheticLevel>& syntheticLevelTable();
double syntheticFunction(const SyntheticLevel& level, double x);

struct SyntheticSpec {
  double xMin = 0.0;
  double xMax = 30.0;
  double step = 0.5;
  std::vector<std::string> levels{"A", "B", "C", "D"};
  // Multiplicative Gaussian noise: y * (1 + noise * N(0, 1)).
  double noise = 0.0;
  std::uint64_t noiseSeed = 0;
};

// Rows ordered level-major, then by x. Columns: x (numeric), c (nominal),
// y (numeric target).
Dataset generateSynthetic(const SyntheticSpec& spec);

// ---------------------------------------------------------------- statistics

double median(std::span<const double> values);
// Level index occurring most often; ties go to the lower index.
std::uint32_t modeLevel(std::span<const std::uint32_t> levels,
                        std::size_t levelCount);

}  // namespace fvsr

#endif  // FVSR_DATA_HPP_
