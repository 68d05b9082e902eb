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

// End-to-end modeling workflows behind the command line: fitting in factor,
// one-hot or linear mode, partial dependence grids and result tables.

#ifndef FVSR_PIPELINE_HPP_
#define FVSR_PIPELINE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "data.hpp"
#include "gp.hpp"
#include "model.hpp"

namespace fvsr {

// GP defaults for a mode: factor runs use factor terminals and 25 nodes,
// one-hot runs use indicator columns and 50 nodes.
GpConfig gpConfigForMode(ModelKind mode);

struct FitOptions {
  ModelKind mode = ModelKind::kFactor;
  GpConfig gp = gpConfigForMode(ModelKind::kFactor);
  // Independent GP runs with seeds gp.seed, gp.seed + 1, ...; the best on
  // the training set is kept.
  std::size_t runs = 1;
  SplitSpec split;
  bool scale = false;
  std::vector<Condition> filters;
  bool dropUnusedLevels = true;
  GenerationCallback onGeneration;
};

struct FitResult {
  Model model;
  ErrorReport train;
  ErrorReport test;
  std::vector<RunReport> runs;  // empty in linear mode
  std::size_t bestRun = 0;
  std::vector<std::string> warnings;
  double wallSeconds = 0.0;
};

FitResult fitModel(const Dataset& raw, const FitOptions& options);

// Flat key=value report consumed by buildReportTable().
std::string formatFitReport(const FitResult& result, const std::string& name);

struct PdpSpec {
  std::string sweep;
  std::size_t gridPoints = 50;
  // Nominal column whose levels get one curve each; empty picks the first
  // nominal input of the reference data.
  std::string by;
  // Levels to enumerate; empty means all.
  std::vector<std::string> levels;
  // Values for the non-swept columns. Numeric columns default to the
  // reference median, other nominal columns to their most frequent level.
  std::map<std::string, std::string> fixed;
  std::optional<double> sweepMin;
  std::optional<double> sweepMax;
};

struct PdpRow {
  std::string level;
  double sweepValue = 0.0;
  double prediction = 0.0;
};

// Sweeps spec.sweep over an even grid (reference min..max by default) for
// every enumerated level. reference is raw data, e.g. the training file.
std::vector<PdpRow> partialDependence(const Model& model, const Dataset& reference, const PdpSpec& spec);

std::string formatPdpCsv(const std::vector<PdpRow>& rows, const std::string& levelColumn, const std::string& sweep);

struct ReportTable {
  std::string text;
  std::vector<std::string> warnings;
};

// One row per (report, split) plus one per external "name=error%" entry.
ReportTable buildReportTable(const std::vector<std::string>& reportTexts,
                             const std::vector<std::string>& externalRows);

// Parses "key=value" lines.
std::map<std::string, std::string> parseKeyValues(const std::string& text);

}  // namespace fvsr

#endif  // FVSR_PIPELINE_HPP_
