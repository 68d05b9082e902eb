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


// Drives the fvsr executable as a user would.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

// One directory per test so that ctest can run them in parallel.
fs::path workDir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::string name = std::string(info->test_suite_name()) + "_" + info->name();
  for (char& ch : name) {
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  }
  fs::path d = fs::temp_directory_path() / "fvsr_test_cli" / name;
  fs::create_directories(d);
  return d;
}

fs::path tmp(const std::string& name) { return workDir() / name; }

std::string readText(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeText(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

Result run(const std::string& args) {
  const fs::path out = tmp("stdout.txt");
  const fs::path err = tmp("stderr.txt");
  const std::string cmd =
      std::string("\"") + FVSR_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = readText(out);
  r.err = readText(err);
  return r;
}

std::vector<std::vector<std::string>> parseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const char* kQuick = "--population-size 30 --generations 2 --threads 1";

TEST(Cli, SynthDefaults) {
  const Result r = run("synth");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parseCsv(r.out);
  ASSERT_EQ(rows.size(), 245u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "c", "y"}));
  // x = 0 rows of each level: theta1 - 1 - 0.1.
  const double expected[] = {-0.1, -0.1, 0.4, 0.9};
  for (int l = 0; l < 4; ++l) {
    const auto& row = rows[1 + 61 * l];
    EXPECT_EQ(row[0], "0");
    EXPECT_EQ(row[1], std::string(1, static_cast<char>('A' + l)));
    EXPECT_NEAR(std::stod(row[2]), expected[l], 1e-15);
  }
}

TEST(Cli, SynthOptions) {
  const fs::path p = tmp("synth_ab.csv");
  const Result r = run("synth --levels A,B --step 1 --noise 0.01 --noise-seed 2 -o " + p.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parseCsv(readText(p)).size(), 1u + 2 * 31);
  EXPECT_EQ(run("synth --levels A,Q").code, 1);  // bad level is a usage error
  EXPECT_EQ(run("synth --step abc").code, 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("fit -d x.csv").code, 1);  // missing --out
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, MissingDataFile) {
  const Result r = run("fit -d /nonexistent/data.csv -o " + tmp("m.txt").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/nonexistent/data.csv"), std::string::npos);
}

class CliFit : public ::testing::TestWithParam<std::string> {};

TEST_P(CliFit, FitPredictReport) {
  const std::string mode = GetParam();
  const fs::path data = tmp("train_" + mode + ".csv");
  ASSERT_EQ(run("synth -o " + data.string()).code, 0);
  const fs::path model = tmp("model_" + mode + ".txt");
  const fs::path report = tmp("report_" + mode + ".txt");
  const Result fit = run("fit -d " + data.string() + " -o " + model.string() + " -m " + mode + " --report " +
                         report.string() + " " + kQuick);
  ASSERT_EQ(fit.code, 0) << fit.err;
  EXPECT_TRUE(fs::exists(model));
  EXPECT_TRUE(fs::exists(model.string() + ".schema.json"));
  const std::string rep = readText(report);
  EXPECT_NE(rep.find("mode=" + mode + "\n"), std::string::npos);
  EXPECT_NE(rep.find("test.average_relative_error_percent="), std::string::npos);

  const fs::path pred = tmp("pred_" + mode + ".csv");
  const Result p = run("predict -M " + model.string() + " -d " + data.string() + " -o " + pred.string());
  ASSERT_EQ(p.code, 0) << p.err;
  const auto rows = parseCsv(readText(pred));
  ASSERT_EQ(rows.size(), 245u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "c", "y", "prediction"}));
  // The prediction file replays the report's error metric on the full data
  // within the range spanned by the train and test rows.
  double sse = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double e = std::stod(rows[i][3]) - std::stod(rows[i][2]);
    sse += e * e;
  }
  const auto value = [&](const std::string& key) {
    const auto at = rep.find("\n" + key + "=");
    return std::stod(rep.substr(at + key.size() + 2));
  };
  const double trainSse = value("train.mse") * value("train.rows");
  const double testSse = value("test.mse") * value("test.rows");
  EXPECT_NEAR(sse, trainSse + testSse, 1e-9 * (1.0 + sse));

  // Deterministic: fitting again gives the same model text.
  const fs::path again = tmp("model_again_" + mode + ".txt");
  ASSERT_EQ(run("fit -d " + data.string() + " -o " + again.string() + " -m " + mode + " " + kQuick).code, 0);
  EXPECT_EQ(readText(again), readText(model));
}

INSTANTIATE_TEST_SUITE_P(Modes, CliFit, ::testing::Values("factor", "onehot", "linear"));

TEST(Cli, ConfigFileAndPrintConfig) {
  const fs::path data = tmp("train_cfg.csv");
  ASSERT_EQ(run("synth -o " + data.string()).code, 0);
  const fs::path cfg = tmp("cfg.txt");
  writeText(cfg, "population_size = 20\ngenerations = 1\nthreads = 1\nseed = 5\n");
  const Result r = run("fit -d " + data.string() + " -o " + tmp("cfg_model.txt").string() + " -c " + cfg.string() +
                       " --seed 9 --print-config --report -");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("population_size = 20"), std::string::npos);
  EXPECT_NE(r.err.find("seed = 9"), std::string::npos);  // flags override the file
  EXPECT_NE(r.out.find("seed=9\n"), std::string::npos);
  writeText(cfg, "populaton_size = 20\n");
  EXPECT_EQ(run("fit -d " + data.string() + " -o " + tmp("cfg_model.txt").string() + " -c " + cfg.string()).code, 1);
  EXPECT_EQ(run("fit -d " + data.string() + " -o " + tmp("cfg_model.txt").string() + " --set nope=1").code, 1);
}

TEST(Cli, HandWrittenModel) {
  const fs::path model = tmp("two_factor.txt");
  writeText(model, "c0 + x * c1\nparam c0 on c: A=1, B=2, C=1.5\nparam c1 on c: A=1, B=2, C=1\n");
  writeText(model.string() + ".schema.json",
            R"({"format": "fvsr-schema/1", "kind": "factor", "target": "f", "columns": [)"
            R"({"name": "x", "kind": "numeric"}, {"name": "c", "kind": "nominal", "levels": ["A", "B", "C"]},)"
            R"({"name": "f", "kind": "numeric"}]})");
  const fs::path in = tmp("two_factor_in.csv");
  const fs::path out = tmp("two_factor_out.csv");
  writeText(in, "x,c\n3,A\n2,B\n1,C\n");
  const Result r = run("predict -M " + model.string() + " -d " + in.string() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(readText(out), "x,c,prediction\n3,A,4\n2,B,6\n1,C,2.5\n");

  writeText(in, "x,c\n3,A\n2,E\n");
  const Result bad = run("predict -M " + model.string() + " -d " + in.string() + " -o " + out.string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("level 'E'"), std::string::npos);
  EXPECT_NE(bad.err.find("row 2"), std::string::npos);

  const fs::path ref = tmp("two_factor_ref.csv");
  writeText(ref, "x,c,f\n3,A,4\n2,B,6\n1,C,2.5\n");
  const Result pdp = run("pdp -M " + model.string() + " -d " + ref.string() + " --sweep x --grid 2 --levels B,C");
  ASSERT_EQ(pdp.code, 0) << pdp.err;
  EXPECT_EQ(pdp.out, "c,x,prediction\nB,1,4\nB,3,8\nC,1,2.5\nC,3,4.5\n");
  const Result range = run("pdp -M " + model.string() + " -d " + ref.string() + " --sweep x --grid 3 --min 0 --max 10 --levels A");
  ASSERT_EQ(range.code, 0) << range.err;
  EXPECT_EQ(range.out, "c,x,prediction\nA,0,1\nA,5,6\nA,10,11\n");
  EXPECT_EQ(run("pdp -M " + model.string() + " -d " + ref.string() + " --sweep c").code, 2);
  EXPECT_EQ(run("pdp -M " + model.string() + " -d " + ref.string() + " --sweep x --grid 1").code, 1);
}

TEST(Cli, Report) {
  const fs::path a = tmp("rep_a.txt");
  const fs::path b = tmp("rep_b.txt");
  writeText(a, "name=sr\ntest.rows=61\ntest.mse=1e-6\ntest.rmse=0.001\ntest.average_relative_error_percent=0.5\ntest.r2=0.999\n");
  writeText(b, "name=ols\ntest.rows=61\ntest.mse=0.01\ntest.rmse=0.1\ntest.average_relative_error_percent=40\ntest.r2=0.6\n");
  const Result r = run("report " + a.string() + " " + b.string() + " --external published=4.15");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = parseCsv(r.out);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(r.out.rfind("model", 0), 0u);
  EXPECT_NE(r.out.find("published"), std::string::npos);
  const Result empty = run("report");
  EXPECT_EQ(empty.code, 0);
  EXPECT_NE(empty.err.find("warning"), std::string::npos);
  EXPECT_EQ(run("report --external nonsense").code, 1);
  EXPECT_EQ(run("report /nonexistent/report.txt").code, 2);
}

}  // namespace
