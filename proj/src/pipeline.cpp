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

#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "error.hpp"

namespace fvsr {

GpConfig gpConfigForMode(ModelKind mode) {
  GpConfig c;
  if (mode == ModelKind::kOneHot) {
    c.useFactorVariables = false;
    c.maxTreeNodes = 50;
  }
  return c;
}

FitResult fitModel(const Dataset& raw, const FitOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  FitResult result;
  if (!raw.hasTarget()) throw DataError("fitting needs a target column");
  if (options.runs < 1) throw InvalidArgument("runs must be >= 1");

  Dataset data = raw;
  if (!options.filters.empty()) {
    auto filtered = filterRows(data, options.filters, options.dropUnusedLevels);
    result.warnings = filtered.warnings;
    data = std::move(filtered.data);
    if (data.rows() == 0) throw DataError("no rows left after filtering");
  }
  if (options.scale) data = scaleUnit(data);
  if (options.mode != ModelKind::kFactor) data = oneHot(data);

  const SplitResult parts = split(data, options.split);
  ExpressionTree tree;

  if (options.mode == ModelKind::kLinear) {
    const LinearModel lm = fitOls(parts.train);
    for (const auto& w : lm.warnings) result.warnings.push_back(w);
    tree = lm.toTree();
  } else {
    GpConfig cfg = options.gp;
    if (options.mode == ModelKind::kOneHot) cfg.useFactorVariables = false;
    for (std::size_t run = 0; run < options.runs; ++run) {
      GpConfig runCfg = cfg;
      runCfg.seed = cfg.seed + run;
      result.runs.push_back(evolve(runCfg, parts.train, options.onGeneration));
      if (result.runs.back().best.fitness < result.runs[result.bestRun].best.fitness) result.bestRun = run;
    }
    tree = result.runs[result.bestRun].best.tree;
  }

  result.model = Model{options.mode, data.schema(), tree};
  result.train = computeErrors(evaluate(tree, parts.train), parts.train.target());
  result.test = computeErrors(evaluate(tree, parts.test), parts.test.target());
  result.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string formatFitReport(const FitResult& r, const std::string& name) {
  std::string out;
  out += "name=" + name + "\n";
  out += std::string("mode=") + toString(r.model.kind) + "\n";
  const std::string text = r.model.text();
  out += "expression=" + text.substr(0, text.find('\n')) + "\n";
  out += "nodes=" + std::to_string(r.model.tree.size()) + "\n";
  if (!r.runs.empty()) {
    const RunReport& best = r.runs[r.bestRun];
    out += "runs=" + std::to_string(r.runs.size()) + "\n";
    out += "best_run=" + std::to_string(r.bestRun) + "\n";
    out += "seed=" + std::to_string(best.seed) + "\n";
    out += "generations_run=" + std::to_string(best.generationsRun) + "\n";
    out += "evaluations=" + std::to_string(best.evaluations) + "\n";
    out += "history=";
    for (std::size_t g = 0; g < best.history.size(); ++g) out += (g ? "," : "") + formatDouble(best.history[g].bestFitness);
    out += "\n";
  }
  out += formatErrorReport(r.train, "train.");
  out += formatErrorReport(r.test, "test.");
  out += "wall_seconds=" + formatDouble(std::round(r.wallSeconds * 1000.0) / 1000.0) + "\n";
  return out;
}

// ---------------------------------------------------------------- PDP

std::vector<PdpRow> partialDependence(const Model& model, const Dataset& reference, const PdpSpec& spec) {
  const Schema& s = reference.schema();
  if (spec.gridPoints < 2) throw InvalidArgument("a partial dependence grid needs at least 2 points");
  const std::size_t sweep = s.require(spec.sweep);
  if (s[sweep].isNominal()) throw DataError("sweep column '" + spec.sweep + "' is not numeric");
  for (const auto& [name, value] : spec.fixed) s.require(name);

  std::optional<std::size_t> by;
  if (!spec.by.empty()) {
    by = s.require(spec.by);
    if (!s[*by].isNominal()) throw DataError("column '" + spec.by + "' is not nominal");
  } else if (auto nominal = s.inputs(ColumnKind::kNominal); !nominal.empty()) {
    by = nominal.front();
  }
  std::vector<std::string> levels = spec.levels;
  if (levels.empty()) {
    if (by) levels = s[*by].levels;
    else levels = {""};
  } else if (by) {
    for (const auto& l : levels) {
      if (!s[*by].levelIndex(l)) throw DataError("unknown level '" + l + "' of column '" + s[*by].name + "'");
    }
  }

  const auto sweepValues = reference.numericColumn(sweep);
  const double lo = spec.sweepMin ? *spec.sweepMin : *std::min_element(sweepValues.begin(), sweepValues.end());
  const double hi = spec.sweepMax ? *spec.sweepMax : *std::max_element(sweepValues.begin(), sweepValues.end());
  const std::size_t g = spec.gridPoints;

  // Build one raw table with every (level, grid point) row and predict it in
  // a single pass through the model.
  CsvTable table;
  std::vector<std::string> fixedCells(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    table.header.push_back(s[c].name);
    if (auto it = spec.fixed.find(s[c].name); it != spec.fixed.end()) {
      fixedCells[c] = it->second;
    } else if (s[c].isNominal()) {
      fixedCells[c] = s[c].levels[modeLevel(reference.nominalColumn(c), s[c].levels.size())];
    } else {
      fixedCells[c] = formatDouble(median(reference.numericColumn(c)));
    }
  }
  std::vector<PdpRow> rows;
  for (const std::string& level : levels) {
    for (std::size_t k = 0; k < g; ++k) {
      const double x = k + 1 == g ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1);
      std::vector<std::string> cells = fixedCells;
      cells[sweep] = formatDouble(x);
      if (by) cells[*by] = level;
      table.rows.push_back(std::move(cells));
      rows.push_back({level, x, 0.0});
    }
  }
  CsvOptions opts = model.csvOptions();
  for (std::size_t c = 0; c < s.size(); ++c) opts.kinds[s[c].name] = s[c].kind;
  const auto predictions = model.predict(datasetFromTable(table, opts));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].prediction = predictions[i];
  return rows;
}

std::string formatPdpCsv(const std::vector<PdpRow>& rows, const std::string& levelColumn, const std::string& sweep) {
  std::string out = (levelColumn.empty() ? std::string("level") : levelColumn) + "," + sweep + ",prediction\n";
  for (const PdpRow& r : rows) out += r.level + "," + formatDouble(r.sweepValue) + "," + formatDouble(r.prediction) + "\n";
  return out;
}

// ---------------------------------------------------------------- report

std::map<std::string, std::string> parseKeyValues(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

ReportTable buildReportTable(const std::vector<std::string>& reportTexts, const std::vector<std::string>& externalRows) {
  ReportTable table;
  std::vector<std::vector<std::string>> rows;
  const std::vector<std::string> header{"model", "split", "rows", "mse", "rmse", "avg_rel_error_%", "r2"};

  auto fixed = [](const std::string& v, int digits) {
    const auto d = parseDouble(v);
    if (!d) return v;
    std::ostringstream ss;
    ss << std::setprecision(digits) << *d;
    return ss.str();
  };

  for (std::size_t i = 0; i < reportTexts.size(); ++i) {
    const auto kv = parseKeyValues(reportTexts[i]);
    const std::string name = kv.count("name") ? kv.at("name") : "report-" + std::to_string(i + 1);
    bool any = false;
    for (const std::string split : {"train", "test"}) {
      auto get = [&](const std::string& key) {
        auto it = kv.find(split + "." + key);
        return it == kv.end() ? std::string("-") : it->second;
      };
      if (get("rows") == "-") continue;
      any = true;
      rows.push_back({name, split, get("rows"), fixed(get("mse"), 6), fixed(get("rmse"), 6),
                      fixed(get("average_relative_error_percent"), 4), fixed(get("r2"), 6)});
    }
    if (!any) table.warnings.push_back("report '" + name + "' has no train/test error entries");
  }
  for (const std::string& ext : externalRows) {
    const auto eq = ext.rfind('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("external row must be name=error_percent, got '" + ext + "'");
    const std::string value = ext.substr(eq + 1);
    if (!parseDouble(value)) throw InvalidArgument("external row error '" + value + "' is not a number");
    rows.push_back({ext.substr(0, eq), "external", "-", "-", "-", value, "-"});
  }
  if (rows.empty()) table.warnings.push_back("no reports given; table is empty");

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string cell = cells[c];
      if (c + 1 < cells.size()) cell.resize(width[c], ' ');
      out += cell + (c + 1 < cells.size() ? "  " : "");
    }
    return out + "\n";
  };
  table.text = line(header);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.emplace_back(w, '-');
  table.text += line(rule);
  for (const auto& r : rows) table.text += line(r);
  return table;
}

}  // namespace fvsr
