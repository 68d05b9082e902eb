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

// fvsr command line front end. Exit codes: 0 success, 1 usage, 2 data
// error, 3 numeric failure, 4 internal error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fvsr/fvsr.h"

namespace {

// Owning wrappers over the C handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Dataset = Handle<fvsr_dataset, fvsr_dataset_free>;
using Config = Handle<fvsr_config, fvsr_config_free>;
using Model = Handle<fvsr_model, fvsr_model_free>;

struct CString {
  char* p = nullptr;
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { fvsr_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

// Thrown to unwind with an exit status after the message is printed.
struct Exit {
  int code;
};

void check(fvsr_status s) {
  if (s == FVSR_OK) return;
  std::cerr << "fvsr: " << fvsr_status_name(s) << ": " << fvsr_last_error() << "\n";
  throw Exit{static_cast<int>(s)};
}

void printWarnings(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) std::cerr << "fvsr: warning: " << line << "\n";
  }
}

void writeOut(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "fvsr: data error: cannot write '" << path << "'\n";
    throw Exit{FVSR_ERR_DATA};
  }
}

std::string readIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "fvsr: data error: cannot open '" << path << "'\n";
    throw Exit{FVSR_ERR_DATA};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out = "-";
  double xMin = 0.0;
  double xMax = 30.0;
  double step = 0.5;
  std::string levels = "A,B,C,D";
  double noise = 0.0;
  std::uint64_t noiseSeed = 0;
};

int runSynth(const SynthArgs& a) {
  fvsr_synth_options opts;
  fvsr_synth_options_init(&opts);
  opts.x_min = a.xMin;
  opts.x_max = a.xMax;
  opts.step = a.step;
  opts.levels = a.levels.c_str();
  opts.noise = a.noise;
  opts.noise_seed = a.noiseSeed;
  Dataset data;
  check(fvsr_dataset_synthetic(&opts, &data.p));
  if (a.out == "-") {
    CString csv;
    check(fvsr_dataset_csv(data.p, &csv.p));
    std::cout << csv.str();
  } else {
    check(fvsr_dataset_save_csv(data.p, a.out.c_str()));
  }
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string target;
  std::string mode = "factor";
  std::string config;
  std::string out;
  std::string report;
  std::string name;
  std::vector<std::string> set;
  std::vector<std::string> filters;
  // Flags left unset keep the configuration file or mode defaults.
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> population;
  std::optional<std::size_t> generations;
  std::optional<std::size_t> maxNodes;
  std::optional<std::size_t> lmIterations;
  std::optional<std::size_t> threads;
  std::optional<double> stopFitness;
  std::optional<std::string> split;
  std::optional<double> trainFraction;
  std::optional<std::uint64_t> splitSeed;
  bool scale = false;
  bool printConfig = false;
  bool verbose = false;
};

void progress(size_t generation, double best, size_t size, void*) {
  std::cerr << "generation " << generation << ": best mse " << best << ", size " << size << "\n";
}

int runFit(const FitArgs& a) {
  Config cfg;
  check(fvsr_config_create(a.mode.c_str(), &cfg.p));
  if (!a.config.empty()) check(fvsr_config_load_file(cfg.p, a.config.c_str()));
  auto set = [&](const std::string& key, const std::string& value) {
    check(fvsr_config_set(cfg.p, key.c_str(), value.c_str()));
  };
  if (a.seed) set("seed", std::to_string(*a.seed));
  if (a.runs) set("runs", std::to_string(*a.runs));
  if (a.population) set("population_size", std::to_string(*a.population));
  if (a.generations) set("generations", std::to_string(*a.generations));
  if (a.maxNodes) set("max_tree_nodes", std::to_string(*a.maxNodes));
  if (a.lmIterations) set("lm_max_iterations", std::to_string(*a.lmIterations));
  if (a.threads) set("threads", std::to_string(*a.threads));
  if (a.stopFitness) {
    std::ostringstream ss;
    ss.precision(17);
    ss << *a.stopFitness;
    set("stop_fitness", ss.str());
  }
  if (a.split) set("split", *a.split);
  if (a.trainFraction) {
    std::ostringstream ss;
    ss.precision(17);
    ss << *a.trainFraction;
    set("train_fraction", ss.str());
  }
  if (a.splitSeed) set("split_seed", std::to_string(*a.splitSeed));
  if (a.scale) set("scale", "true");
  for (const auto& f : a.filters) set("filter", f);
  for (const auto& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "fvsr: usage error: --set expects key=value, got '" << kv << "'\n";
      return FVSR_ERR_USAGE;
    }
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.printConfig) {
    CString text;
    check(fvsr_config_text(cfg.p, &text.p));
    std::cerr << text.str();
  }
  if (a.verbose) fvsr_config_set_progress(cfg.p, progress, nullptr);

  Dataset data;
  check(fvsr_dataset_load_csv(a.data.c_str(), a.target.empty() ? nullptr : a.target.c_str(), &data.p));
  Model model;
  CString report;
  CString warnings;
  const std::string name = a.name.empty() ? a.mode : a.name;
  check(fvsr_fit(data.p, cfg.p, name.c_str(), &model.p, &report.p, &warnings.p));
  printWarnings(warnings.str());
  check(fvsr_model_save(model.p, a.out.c_str()));
  writeOut(a.report, report.str());
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

int runPredict(const PredictArgs& a) {
  Model model;
  check(fvsr_model_load(a.model.c_str(), &model.p));
  check(fvsr_model_predict_csv(model.p, a.data.c_str(), a.out.c_str()));
  return 0;
}

// ---------------------------------------------------------------- pdp

struct PdpArgs {
  std::string model;
  std::string data;
  std::string sweep;
  std::size_t grid = 50;
  std::string by;
  std::vector<std::string> levels;
  std::vector<std::string> fixed;
  std::optional<double> min;
  std::optional<double> max;
  std::string out = "-";
};

int runPdp(const PdpArgs& a) {
  Model model;
  check(fvsr_model_load(a.model.c_str(), &model.p));
  Dataset reference;
  check(fvsr_model_load_csv(model.p, a.data.c_str(), &reference.p));
  fvsr_pdp_spec spec;
  fvsr_pdp_spec_init(&spec);
  const std::string levels = join(a.levels);
  const std::string fixed = join(a.fixed);
  spec.sweep = a.sweep.c_str();
  spec.grid_points = a.grid;
  spec.by = a.by.empty() ? nullptr : a.by.c_str();
  spec.levels = levels.empty() ? nullptr : levels.c_str();
  spec.fixed = fixed.empty() ? nullptr : fixed.c_str();
  spec.has_min = a.min.has_value();
  spec.min = a.min.value_or(0.0);
  spec.has_max = a.max.has_value();
  spec.max = a.max.value_or(0.0);
  CString csv;
  check(fvsr_pdp(model.p, reference.p, &spec, &csv.p));
  writeOut(a.out, csv.str());
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> reports;
  std::vector<std::string> external;
  std::string out = "-";
};

int runReport(const ReportArgs& a) {
  std::vector<std::string> texts;
  for (const auto& path : a.reports) texts.push_back(readIn(path));
  std::vector<const char*> reportPtrs;
  for (const auto& t : texts) reportPtrs.push_back(t.c_str());
  std::vector<const char*> externalPtrs;
  for (const auto& e : a.external) externalPtrs.push_back(e.c_str());
  CString table;
  CString warnings;
  check(fvsr_report_table(reportPtrs.data(), reportPtrs.size(), externalPtrs.data(), externalPtrs.size(), &table.p,
                          &warnings.p));
  printWarnings(warnings.str());
  writeOut(a.out, table.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fvsr: symbolic regression with factor variables for nominal inputs"};
  app.set_version_flag("--version", fvsr_version());
  app.require_subcommand(1);

  SynthArgs synth;
  auto* cSynth = app.add_subcommand("synth", "Write the four-level synthetic benchmark as CSV");
  cSynth->add_option("-o,--out", synth.out, "Output CSV, '-' for stdout")->capture_default_str();
  cSynth->add_option("--x-min", synth.xMin, "First grid point")->capture_default_str();
  cSynth->add_option("--x-max", synth.xMax, "Last grid point")->capture_default_str();
  cSynth->add_option("--step", synth.step, "Grid spacing")->capture_default_str();
  cSynth->add_option("--levels", synth.levels, "Comma separated levels out of A,B,C,D")->capture_default_str();
  cSynth->add_option("--noise", synth.noise, "Multiplicative Gaussian noise level")->capture_default_str();
  cSynth->add_option("--noise-seed", synth.noiseSeed, "Noise seed")->capture_default_str();

  FitArgs fit;
  auto* cFit = app.add_subcommand("fit", "Fit a model and write it with its schema sidecar");
  cFit->add_option("-d,--data", fit.data, "Training CSV")->required();
  cFit->add_option("-o,--out", fit.out, "Model file; the schema goes to <out>.schema.json")->required();
  cFit->add_option("--target", fit.target, "Target column (default: last column)");
  cFit->add_option("-m,--mode", fit.mode, "factor, onehot or linear")
      ->capture_default_str()
      ->check(CLI::IsMember({"factor", "onehot", "linear"}));
  cFit->add_option("-c,--config", fit.config, "Configuration file of 'key = value' lines");
  cFit->add_option("--report", fit.report, "Run report file, '-' or empty for stdout");
  cFit->add_option("--name", fit.name, "Model name in the report (default: the mode)");
  cFit->add_option("--seed", fit.seed, "GP seed [0]");
  cFit->add_option("--runs", fit.runs, "Independent runs with seeds seed, seed+1, ...; best training fit wins [1]");
  cFit->add_option("--population-size", fit.population, "Population size [200]");
  cFit->add_option("--generations", fit.generations, "Generations [100]");
  cFit->add_option("--max-tree-nodes", fit.maxNodes, "Tree size limit [25 factor, 50 onehot]");
  cFit->add_option("--lm-iterations", fit.lmIterations, "Levenberg-Marquardt budget per evaluation [10]");
  cFit->add_option("--threads", fit.threads, "Evaluation threads, 0 for all cores [0]");
  cFit->add_option("--stop-fitness", fit.stopFitness, "Stop once the best training MSE is <= this [-1, off]");
  cFit->add_option("--split", fit.split, "stratified, leading or interleaved [stratified]");
  cFit->add_option("--train-fraction", fit.trainFraction, "Training share of the rows [0.75]");
  cFit->add_option("--split-seed", fit.splitSeed, "Seed of the stratified split [0]");
  cFit->add_flag("--scale", fit.scale, "Scale numeric inputs to [0, 1]");
  cFit->add_option("--filter", fit.filters, "Keep rows with col=value (repeatable)");
  cFit->add_option("--set", fit.set, "Any configuration key=value (repeatable)");
  cFit->add_flag("--print-config", fit.printConfig, "Print the effective configuration to stderr");
  cFit->add_flag("-v,--verbose", fit.verbose, "Print per-generation progress to stderr");

  PredictArgs predict;
  auto* cPredict = app.add_subcommand("predict", "Append a prediction column to a CSV");
  cPredict->add_option("-M,--model", predict.model, "Model file")->required();
  cPredict->add_option("-d,--data", predict.data, "Input CSV")->required();
  cPredict->add_option("-o,--out", predict.out, "Output CSV")->required();

  PdpArgs pdp;
  auto* cPdp = app.add_subcommand("pdp", "Emit partial dependence curves per nominal level");
  cPdp->add_option("-M,--model", pdp.model, "Model file")->required();
  cPdp->add_option("-d,--data", pdp.data, "Reference CSV, normally the training data")->required();
  cPdp->add_option("--sweep", pdp.sweep, "Numeric column to sweep")->required();
  cPdp->add_option("--grid", pdp.grid, "Grid points")->capture_default_str();
  cPdp->add_option("--by", pdp.by, "Nominal column with one curve per level (default: first nominal)");
  cPdp->add_option("--levels", pdp.levels, "Levels to emit (default: all)")->delimiter(',');
  cPdp->add_option("--fixed", pdp.fixed, "col=value for a non-swept column (repeatable)");
  cPdp->add_option("--min", pdp.min, "Sweep start (default: reference minimum)");
  cPdp->add_option("--max", pdp.max, "Sweep end (default: reference maximum)");
  cPdp->add_option("-o,--out", pdp.out, "Output CSV, '-' for stdout")->capture_default_str();

  ReportArgs report;
  auto* cReport = app.add_subcommand("report", "Tabulate run reports");
  cReport->add_option("reports", report.reports, "Run report files written by fit");
  cReport->add_option("--external", report.external, "Externally computed row name=error_percent (repeatable)");
  cReport->add_option("-o,--out", report.out, "Output file, '-' for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : FVSR_ERR_USAGE;
  }

  try {
    if (*cSynth) return runSynth(synth);
    if (*cFit) return runFit(fit);
    if (*cPredict) return runPredict(predict);
    if (*cPdp) return runPdp(pdp);
    if (*cReport) return runReport(report);
  } catch (const Exit& e) {
    return e.code;
  }
  return FVSR_ERR_USAGE;
}
