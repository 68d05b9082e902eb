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

#include "fvsr/fvsr.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "pipeline.hpp"

struct fvsr_dataset {
  fvsr::Dataset data;
};

struct fvsr_model {
  fvsr::Model model;
};

struct fvsr_config {
  fvsr::FitOptions options;
  fvsr_progress_fn progress = nullptr;
  void* progressUser = nullptr;
};

namespace {

thread_local std::string lastError;

fvsr_status fail(fvsr_status status, const std::string& message) {
  lastError = message;
  return status;
}

// Runs body and maps the exception hierarchy onto status codes.
template <typename F>
fvsr_status guarded(F&& body) {
  try {
    lastError.clear();
    body();
    return FVSR_OK;
  } catch (const fvsr::InvalidArgument& e) {
    return fail(FVSR_ERR_USAGE, e.what());
  } catch (const fvsr::NumericError& e) {
    return fail(FVSR_ERR_NUMERIC, e.what());
  } catch (const fvsr::Error& e) {
    return fail(FVSR_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(FVSR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FVSR_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw fvsr::InvalidArgument(std::string(what) + " is NULL");
}

char* dupString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> splitList(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string item(text.substr(pos, comma - pos));
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(std::move(item));
    pos = comma + 1;
  }
  return out;
}

bool parseFlag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw fvsr::InvalidArgument("config key '" + key + "' needs true or false, got '" + value + "'");
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

void setOption(fvsr_config& cfg, const std::string& key, const std::string& value) {
  auto& o = cfg.options;
  if (key == "runs") {
    fvsr::GpConfig probe;
    fvsr::setConfigValue(probe, "seed", value);
    if (probe.seed == 0) throw fvsr::InvalidArgument("runs must be >= 1");
    o.runs = static_cast<std::size_t>(probe.seed);
  } else if (key == "train_fraction") {
    const auto v = fvsr::parseDouble(value);
    if (!v || !(*v > 0.0 && *v < 1.0)) throw fvsr::InvalidArgument("train_fraction must be in (0, 1), got '" + value + "'");
    o.split.trainFraction = *v;
  } else if (key == "split") {
    if (value == "stratified") o.split.strategy = fvsr::SplitStrategy::kStratified;
    else if (value == "leading") o.split.strategy = fvsr::SplitStrategy::kLeading;
    else if (value == "interleaved") o.split.strategy = fvsr::SplitStrategy::kInterleaved;
    else throw fvsr::InvalidArgument("split must be stratified, leading or interleaved, got '" + value + "'");
  } else if (key == "split_seed") {
    fvsr::GpConfig probe;
    fvsr::setConfigValue(probe, "seed", value);
    o.split.seed = probe.seed;
  } else if (key == "stratify_by") {
    o.split.stratifyBy = value;
  } else if (key == "scale") {
    o.scale = parseFlag(key, value);
  } else if (key == "drop_unused_levels") {
    o.dropUnusedLevels = parseFlag(key, value);
  } else if (key == "filter") {
    o.filters.push_back(fvsr::parseCondition(value));
  } else {
    fvsr::setConfigValue(o.gp, key, value);
  }
}

std::string readText(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fvsr::IoError(std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

extern "C" {

const char* fvsr_version(void) { return "1.0.0"; }

const char* fvsr_last_error(void) { return lastError.c_str(); }

const char* fvsr_status_name(fvsr_status status) {
  switch (status) {
    case FVSR_OK: return "ok";
    case FVSR_ERR_USAGE: return "usage error";
    case FVSR_ERR_DATA: return "data error";
    case FVSR_ERR_NUMERIC: return "numeric failure";
    case FVSR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void fvsr_string_free(char* s) { std::free(s); }

// ---------------------------------------------------------------- datasets

fvsr_status fvsr_dataset_load_csv(const char* path, const char* target, fvsr_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    fvsr::CsvOptions opts;
    if (target) opts.target = target;
    *out = new fvsr_dataset{fvsr::loadCsv(path, opts)};
  });
}

fvsr_status fvsr_dataset_save_csv(const fvsr_dataset* data, const char* path) {
  return guarded([&] {
    require(data, "data");
    require(path, "path");
    fvsr::saveCsv(data->data, path);
  });
}

fvsr_status fvsr_dataset_csv(const fvsr_dataset* data, char** out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    std::ostringstream ss;
    fvsr::writeCsv(data->data, ss);
    *out = dupString(ss.str());
  });
}

size_t fvsr_dataset_rows(const fvsr_dataset* data) { return data ? data->data.rows() : 0; }

size_t fvsr_dataset_columns(const fvsr_dataset* data) { return data ? data->data.columns() : 0; }

void fvsr_dataset_free(fvsr_dataset* data) { delete data; }

void fvsr_synth_options_init(fvsr_synth_options* opts) {
  if (!opts) return;
  const fvsr::SyntheticSpec d;
  opts->x_min = d.xMin;
  opts->x_max = d.xMax;
  opts->step = d.step;
  opts->levels = "A,B,C,D";
  opts->noise = d.noise;
  opts->noise_seed = d.noiseSeed;
}

fvsr_status fvsr_dataset_synthetic(const fvsr_synth_options* opts, fvsr_dataset** out) {
  return guarded([&] {
    require(opts, "opts");
    require(out, "out");
    fvsr::SyntheticSpec spec;
    spec.xMin = opts->x_min;
    spec.xMax = opts->x_max;
    spec.step = opts->step;
    if (opts->levels) spec.levels = splitList(opts->levels);
    spec.noise = opts->noise;
    spec.noiseSeed = opts->noise_seed;
    *out = new fvsr_dataset{fvsr::generateSynthetic(spec)};
  });
}

// ---------------------------------------------------------------- fitting

fvsr_status fvsr_config_create(const char* mode, fvsr_config** out) {
  return guarded([&] {
    require(out, "out");
    auto cfg = std::make_unique<fvsr_config>();
    cfg->options.mode = fvsr::parseModelKind(mode ? mode : "factor");
    cfg->options.gp = fvsr::gpConfigForMode(cfg->options.mode);
    *out = cfg.release();
  });
}

fvsr_status fvsr_config_set(fvsr_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    setOption(*config, trim(key), trim(value));
  });
}

fvsr_status fvsr_config_load_file(fvsr_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    std::istringstream in(readText(path));
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
      ++lineNo;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw fvsr::InvalidArgument(std::string(path) + ":" + std::to_string(lineNo) + ": expected 'key = value'");
      }
      try {
        setOption(*config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      } catch (const fvsr::Error& e) {
        throw fvsr::InvalidArgument(std::string(path) + ":" + std::to_string(lineNo) + ": " + e.what());
      }
    }
  });
}

fvsr_status fvsr_config_text(const fvsr_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const auto& o = config->options;
    std::string text = "# mode: " + std::string(fvsr::toString(o.mode)) + "\n";
    text += fvsr::formatConfig(o.gp);
    text += "runs = " + std::to_string(o.runs) + "\n";
    text += "train_fraction = " + fvsr::formatDouble(o.split.trainFraction) + "\n";
    const char* strategy = o.split.strategy == fvsr::SplitStrategy::kStratified ? "stratified"
                           : o.split.strategy == fvsr::SplitStrategy::kLeading  ? "leading"
                                                                                : "interleaved";
    text += std::string("split = ") + strategy + "\n";
    text += "split_seed = " + std::to_string(o.split.seed) + "\n";
    if (!o.split.stratifyBy.empty()) text += "stratify_by = " + o.split.stratifyBy + "\n";
    text += std::string("scale = ") + (o.scale ? "true" : "false") + "\n";
    text += std::string("drop_unused_levels = ") + (o.dropUnusedLevels ? "true" : "false") + "\n";
    for (const auto& f : o.filters) text += "filter = " + f.column + "=" + f.value + "\n";
    *out = dupString(text);
  });
}

void fvsr_config_set_progress(fvsr_config* config, fvsr_progress_fn fn, void* user) {
  if (!config) return;
  config->progress = fn;
  config->progressUser = user;
}

void fvsr_config_free(fvsr_config* config) { delete config; }

fvsr_status fvsr_fit(const fvsr_dataset* data, const fvsr_config* config, const char* name, fvsr_model** model,
                     char** report, char** warnings) {
  return guarded([&] {
    require(data, "data");
    require(config, "config");
    fvsr::FitOptions options = config->options;
    if (config->progress) {
      options.onGeneration = [fn = config->progress, user = config->progressUser](const fvsr::GenerationRecord& r) {
        fn(r.generation, r.bestFitness, r.bestSize, user);
      };
    }
    fvsr::FitResult result = fvsr::fitModel(data->data, options);
    std::string warningText;
    for (const auto& w : result.warnings) warningText += w + "\n";
    // Allocate everything before handing out ownership.
    std::unique_ptr<fvsr_model> m(new fvsr_model{result.model});
    char* r = report ? dupString(fvsr::formatFitReport(result, name ? name : "model")) : nullptr;
    char* w = nullptr;
    try {
      if (warnings) w = dupString(warningText);
    } catch (...) {
      std::free(r);
      throw;
    }
    if (report) *report = r;
    if (warnings) *warnings = w;
    if (model) *model = m.release();
  });
}

// ---------------------------------------------------------------- models

fvsr_status fvsr_model_load(const char* path, fvsr_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fvsr_model{fvsr::loadModel(path)};
  });
}

fvsr_status fvsr_model_save(const fvsr_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    fvsr::saveModel(model->model, path);
  });
}

fvsr_status fvsr_model_text(const fvsr_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dupString(model->model.text());
  });
}

const char* fvsr_model_kind(const fvsr_model* model) { return model ? fvsr::toString(model->model.kind) : ""; }

void fvsr_model_free(fvsr_model* model) { delete model; }

fvsr_status fvsr_model_load_csv(const fvsr_model* model, const char* path, fvsr_dataset** out) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    require(out, "out");
    *out = new fvsr_dataset{fvsr::loadCsv(path, model->model.csvOptions())};
  });
}

fvsr_status fvsr_model_predict(const fvsr_model* model, const fvsr_dataset* data, double* out, size_t n) {
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    if (n != data->data.rows()) {
      throw fvsr::InvalidArgument("output holds " + std::to_string(n) + " values but the data has " +
                                  std::to_string(data->data.rows()) + " rows");
    }
    if (n) require(out, "out");
    const auto pred = model->model.predict(data->data);
    std::copy(pred.begin(), pred.end(), out);
  });
}

fvsr_status fvsr_model_predict_csv(const fvsr_model* model, const char* input_path, const char* output_path) {
  return guarded([&] {
    require(model, "model");
    require(input_path, "input_path");
    require(output_path, "output_path");
    const fvsr::Model& m = model->model;
    const fvsr::CsvTable table = fvsr::readCsvTable(input_path);
    const fvsr::Dataset data = fvsr::datasetFromTable(table, m.csvOptions());
    const auto unseen = fvsr::findUnseenLevels(data, m.schema);
    if (!unseen.empty()) {
      std::string msg = std::to_string(unseen.size()) + " cell(s) hold nominal levels the model does not know:";
      for (const auto& u : unseen) {
        msg += "\n  row " + std::to_string(u.row + 1) + ": column '" + u.column + "' level '" + u.level + "'";
      }
      throw fvsr::DataError(msg);
    }
    const auto pred = m.predict(data);
    std::ofstream out(output_path, std::ios::binary);
    if (!out) throw fvsr::IoError(std::string("cannot write '") + output_path + "'");
    auto cell = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    };
    for (const auto& h : table.header) out << cell(h) << ',';
    out << "prediction\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      for (const auto& c : table.rows[r]) out << cell(c) << ',';
      out << fvsr::formatDouble(pred[r]) << '\n';
    }
    if (!out) throw fvsr::IoError(std::string("write failed for '") + output_path + "'");
  });
}

void fvsr_pdp_spec_init(fvsr_pdp_spec* spec) {
  if (!spec) return;
  *spec = fvsr_pdp_spec{};
  spec->grid_points = fvsr::PdpSpec{}.gridPoints;
}

fvsr_status fvsr_pdp(const fvsr_model* model, const fvsr_dataset* reference, const fvsr_pdp_spec* spec, char** out) {
  return guarded([&] {
    require(model, "model");
    require(reference, "reference");
    require(spec, "spec");
    require(spec->sweep, "spec->sweep");
    require(out, "out");
    fvsr::PdpSpec s;
    s.sweep = spec->sweep;
    s.gridPoints = spec->grid_points;
    if (spec->by) s.by = spec->by;
    if (spec->levels) s.levels = splitList(spec->levels);
    if (spec->fixed) {
      for (const auto& item : splitList(spec->fixed)) {
        const auto c = fvsr::parseCondition(item);
        s.fixed[c.column] = c.value;
      }
    }
    if (spec->has_min) s.sweepMin = spec->min;
    if (spec->has_max) s.sweepMax = spec->max;
    const auto rows = fvsr::partialDependence(model->model, reference->data, s);

    std::string levelColumn = s.by;
    if (levelColumn.empty()) {
      const auto nominal = reference->data.schema().inputs(fvsr::ColumnKind::kNominal);
      if (!nominal.empty()) levelColumn = reference->data.schema()[nominal.front()].name;
    }
    *out = dupString(fvsr::formatPdpCsv(rows, levelColumn, s.sweep));
  });
}

// ---------------------------------------------------------------- reports

fvsr_status fvsr_report_table(const char* const* reports, size_t report_count, const char* const* external,
                              size_t external_count, char** table, char** warnings) {
  return guarded([&] {
    require(table, "table");
    if (report_count) require(reports, "reports");
    if (external_count) require(external, "external");
    std::vector<std::string> texts;
    for (size_t i = 0; i < report_count; ++i) {
      require(reports[i], "report");
      texts.emplace_back(reports[i]);
    }
    std::vector<std::string> ext;
    for (size_t i = 0; i < external_count; ++i) {
      require(external[i], "external entry");
      ext.emplace_back(external[i]);
    }
    const auto result = fvsr::buildReportTable(texts, ext);
    std::string warningText;
    for (const auto& w : result.warnings) warningText += w + "\n";
    char* t = dupString(result.text);
    if (warnings) {
      try {
        *warnings = dupString(warningText);
      } catch (...) {
        std::free(t);
        throw;
      }
    }
    *table = t;
  });
}

}  // extern "C"
