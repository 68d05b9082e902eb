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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"

namespace fvsr {
namespace {

using testing::twoFactorData;
using testing::twoFactorTree;

std::filesystem::path tempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fvsr_test_model_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FitOptions quickOptions(ModelKind mode) {
  FitOptions o;
  o.mode = mode;
  o.gp = gpConfigForMode(mode);
  o.gp.populationSize = 40;
  o.gp.generations = 3;
  o.gp.threads = 1;
  return o;
}

TEST(Model, TwoFactorPredictions) {
  const Model m{ModelKind::kFactor, twoFactorData().schema(), twoFactorTree()};
  CsvOptions opts = m.csvOptions();
  const Dataset raw = datasetFromTable(parseCsvTable("x,c\n3,A\n2,B\n1,C\n"), opts);
  EXPECT_EQ(m.predict(raw), (std::vector<double>{4.0, 6.0, 2.5}));
  const Dataset unseen = datasetFromTable(parseCsvTable("x,c\n3,E\n"), opts);
  EXPECT_THROW(m.predict(unseen), UnseenLevelError);
}

TEST(Model, SaveLoadRoundTrip) {
  const Model m{ModelKind::kFactor, twoFactorData().schema(), twoFactorTree()};
  const auto path = tempPath("two_factor.txt");
  saveModel(m, path);
  EXPECT_TRUE(std::filesystem::exists(schemaSidecarPath(path)));
  const Model back = loadModel(path);
  EXPECT_EQ(back.kind, ModelKind::kFactor);
  EXPECT_EQ(back.schema, m.schema);
  EXPECT_EQ(back.tree, m.tree);
  EXPECT_EQ(slurp(path), m.text());
  std::filesystem::remove(path);
  std::filesystem::remove(schemaSidecarPath(path));
}

TEST(Model, SchemaJsonRoundTripKeepsScalingAndIndicators) {
  const Dataset d = oneHot(scaleUnit(generateSynthetic({})));
  for (ModelKind k : {ModelKind::kFactor, ModelKind::kOneHot, ModelKind::kLinear}) {
    ModelKind back = ModelKind::kFactor;
    EXPECT_EQ(schemaFromJson(schemaToJson(d.schema(), k), &back), d.schema());
    EXPECT_EQ(back, k);
  }
  EXPECT_THROW(schemaFromJson("{", nullptr), DataError);
  EXPECT_THROW(schemaFromJson(R"({"format":"other/9","kind":"factor","target":"","columns":[]})", nullptr),
               DataError);
  EXPECT_THROW(parseModelKind("tree"), InvalidArgument);
}

TEST(Model, LoadMissingFiles) {
  EXPECT_THROW(loadModel(tempPath("absent.txt")), IoError);
}

TEST(Pipeline, FactorFitRoundTripIsBitExact) {
  const Dataset d = generateSynthetic({});
  const FitResult r = fitModel(d, quickOptions(ModelKind::kFactor));
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.train.rowCount + r.test.rowCount, d.rows());
  const auto path = tempPath("factor.txt");
  saveModel(r.model, path);
  const Model back = loadModel(path);
  const auto a = r.model.predict(d);
  const auto b = back.predict(d);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i])) EXPECT_TRUE(std::isnan(b[i]));
    else EXPECT_EQ(a[i], b[i]);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(schemaSidecarPath(path));
}

TEST(Pipeline, OneHotModelUsesIndicators) {
  const Dataset d = generateSynthetic({});
  const FitResult r = fitModel(d, quickOptions(ModelKind::kOneHot));
  EXPECT_EQ(r.model.kind, ModelKind::kOneHot);
  EXPECT_EQ(r.model.text().find(" on c:"), std::string::npos);
  for (const auto& node : r.model.tree.nodes()) EXPECT_NE(node.type, NodeType::kFactor);
  EXPECT_TRUE(r.model.schema.find("c=A").has_value());
  // Prediction input still carries the raw nominal column.
  EXPECT_EQ(r.model.predict(d).size(), d.rows());
}

TEST(Pipeline, LinearReport) {
  const Dataset d = generateSynthetic({});
  const FitResult r = fitModel(d, quickOptions(ModelKind::kLinear));
  EXPECT_TRUE(r.runs.empty());
  const std::string report = formatFitReport(r, "ols");
  const auto kv = parseKeyValues(report);
  EXPECT_EQ(kv.at("name"), "ols");
  EXPECT_EQ(kv.at("mode"), "linear");
  EXPECT_TRUE(kv.count("test.average_relative_error_percent"));
  EXPECT_EQ(kv.at("test.rows"), std::to_string(r.test.rowCount));
  EXPECT_FALSE(kv.count("history"));
}

TEST(Pipeline, RunsKeepBestOnTraining) {
  const Dataset d = generateSynthetic({});
  FitOptions o = quickOptions(ModelKind::kFactor);
  o.runs = 3;
  o.gp.seed = 10;
  const FitResult r = fitModel(d, o);
  ASSERT_EQ(r.runs.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(r.runs[k].seed, 10 + k);
    EXPECT_GE(r.runs[k].best.fitness, r.runs[r.bestRun].best.fitness);
  }
  const auto kv = parseKeyValues(formatFitReport(r, "gp"));
  EXPECT_EQ(kv.at("runs"), "3");
  EXPECT_EQ(kv.at("seed"), std::to_string(10 + r.bestRun));
}

TEST(Pipeline, FilterAndErrors) {
  const Dataset d = generateSynthetic({});
  FitOptions o = quickOptions(ModelKind::kLinear);
  o.filters = {{"c", "A"}};
  const FitResult r = fitModel(d, o);
  EXPECT_EQ(r.train.rowCount + r.test.rowCount, 61u);
  o.runs = 0;
  o.mode = ModelKind::kFactor;
  EXPECT_THROW(fitModel(d, o), InvalidArgument);
}

TEST(Pdp, GridPerLevel) {
  const Dataset d = twoFactorData();
  const Model m{ModelKind::kFactor, d.schema(), twoFactorTree()};
  PdpSpec spec;
  spec.sweep = "x";
  spec.gridPoints = 2;
  const auto rows = partialDependence(m, d, spec);
  ASSERT_EQ(rows.size(), 6u);
  // Independent evaluation of the tree at x in {1, 3}.
  const double p0[] = {1, 2, 1.5};
  const double p1[] = {1, 2, 1};
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(rows[2 * l].level, d.schema()[1].levels[l]);
    EXPECT_EQ(rows[2 * l].sweepValue, 1.0);
    EXPECT_EQ(rows[2 * l + 1].sweepValue, 3.0);
    EXPECT_DOUBLE_EQ(rows[2 * l].prediction, p0[l] + 1.0 * p1[l]);
    EXPECT_DOUBLE_EQ(rows[2 * l + 1].prediction, p0[l] + 3.0 * p1[l]);
  }
  const std::string csv = formatPdpCsv(rows, "c", "x");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "c,x,prediction");
  EXPECT_NE(csv.find("\nB,3,8\n"), std::string::npos);
}

TEST(Pdp, RangeLevelsAndFixed) {
  const Dataset d = generateSynthetic({});
  // y = x * c{...}: the fixed column z does not enter, so use a model over
  // two numerics to exercise the override.
  Schema s({Column{"x", ColumnKind::kNumeric, {}, {}, {}, {}}, Column{"z", ColumnKind::kNumeric, {}, {}, {}, {}},
            Column{"y", ColumnKind::kNumeric, {}, {}, {}, {}}},
           "y");
  const Dataset ref(s, {{0, 1, 2, 3}, {10, 20, 30, 40}, {0, 0, 0, 0}}, {{}, {}, {}});
  const Model m{ModelKind::kFactor, s, makeBinary(NodeType::kAdd, makeVariable(0), makeVariable(1))};
  PdpSpec spec;
  spec.sweep = "x";
  spec.gridPoints = 3;
  const auto median = partialDependence(m, ref, spec);
  ASSERT_EQ(median.size(), 3u);
  EXPECT_EQ(median[0].level, "");
  EXPECT_DOUBLE_EQ(median[1].prediction, 1.5 + 25.0);
  spec.fixed["z"] = "100";
  spec.sweepMin = -1.0;
  spec.sweepMax = 1.0;
  const auto fixed = partialDependence(m, ref, spec);
  EXPECT_DOUBLE_EQ(fixed[0].prediction, 99.0);
  EXPECT_DOUBLE_EQ(fixed[2].prediction, 101.0);

  const Model fm{ModelKind::kFactor, d.schema(), makeFactor(1, {1, 2, 3, 4})};
  PdpSpec lv;
  lv.sweep = "x";
  lv.gridPoints = 2;
  lv.levels = {"D", "B"};
  const auto sel = partialDependence(fm, d, lv);
  ASSERT_EQ(sel.size(), 4u);
  EXPECT_EQ(sel[0].prediction, 4.0);
  EXPECT_EQ(sel[2].prediction, 2.0);
  EXPECT_EQ(sel[1].sweepValue, 30.0);

  lv.levels = {"E"};
  EXPECT_THROW(partialDependence(fm, d, lv), DataError);
  lv.levels.clear();
  lv.gridPoints = 1;
  EXPECT_THROW(partialDependence(fm, d, lv), InvalidArgument);
  lv.gridPoints = 2;
  lv.sweep = "c";
  EXPECT_THROW(partialDependence(fm, d, lv), DataError);
  lv.sweep = "x";
  lv.by = "y";
  EXPECT_THROW(partialDependence(fm, d, lv), DataError);
}

TEST(Report, Table) {
  const std::string a =
      "name=sr\ntrain.rows=3\ntrain.mse=0.5\ntrain.rmse=0.7071\ntrain.average_relative_error_percent=1.23456789\n"
      "train.r2=0.9\ntest.rows=1\ntest.mse=1\ntest.rmse=1\ntest.average_relative_error_percent=2\ntest.r2=0.5\n";
  const std::string b = "name=ols\ntest.rows=4\ntest.mse=2\ntest.rmse=1.4\ntest.average_relative_error_percent=9\n";
  const std::vector<std::string> reports{a, b};
  const std::vector<std::string> ext{"published=4.15"};
  const ReportTable t = buildReportTable(reports, ext);
  EXPECT_TRUE(t.warnings.empty());
  std::istringstream in(t.text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0].rfind("model", 0), 0u);
  EXPECT_NE(lines[2].find("1.235"), std::string::npos);
  EXPECT_EQ(lines[4].rfind("ols", 0), 0u);
  EXPECT_NE(lines[5].find("external"), std::string::npos);
  EXPECT_NE(lines[5].find("4.15"), std::string::npos);

  const std::vector<std::string> none;
  const ReportTable empty = buildReportTable(none, none);
  EXPECT_EQ(empty.warnings.size(), 1u);
  const std::vector<std::string> junk{"hello\n"};
  EXPECT_EQ(buildReportTable(junk, none).warnings.size(), 2u);
  const std::vector<std::string> bad{"published"};
  EXPECT_THROW(buildReportTable(none, bad), InvalidArgument);
  const std::vector<std::string> nan{"published=abc"};
  EXPECT_THROW(buildReportTable(none, nan), InvalidArgument);
}

}  // namespace
}  // namespace fvsr
