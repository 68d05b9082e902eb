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

#include "model.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "error.hpp"

namespace fvsr {

namespace {

constexpr const char* kSchemaFormat = "fvsr-schema/1";

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

const char* toString(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFactor: return "factor";
    case ModelKind::kOneHot: return "onehot";
    case ModelKind::kLinear: return "linear";
  }
  return "?";
}

ModelKind parseModelKind(std::string_view text) {
  if (text == "factor") return ModelKind::kFactor;
  if (text == "onehot") return ModelKind::kOneHot;
  if (text == "linear") return ModelKind::kLinear;
  throw InvalidArgument("unknown model kind '" + std::string(text) + "' (factor, onehot, linear)");
}

std::vector<double> Model::predict(const Dataset& raw) const {
  const Dataset data = conform(raw, schema);
  return evaluate(tree, data);
}

CsvOptions Model::csvOptions() const {
  CsvOptions opts;
  opts.target = schema.target();
  opts.requireTarget = false;
  for (const Column& c : schema.columns()) {
    if (c.isNominal()) opts.kinds[c.name] = ColumnKind::kNominal;
    if (c.isIndicator()) opts.kinds[c.indicatorOf] = ColumnKind::kNominal;
  }
  return opts;
}

std::filesystem::path schemaSidecarPath(const std::filesystem::path& modelPath) {
  return std::filesystem::path(modelPath.string() + ".schema.json");
}

std::string schemaToJson(const Schema& schema, ModelKind kind) {
  nlohmann::ordered_json j;
  j["format"] = kSchemaFormat;
  j["kind"] = toString(kind);
  j["target"] = schema.target();
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const Column& c : schema.columns()) {
    nlohmann::ordered_json col;
    col["name"] = c.name;
    col["kind"] = toString(c.kind);
    if (c.isNominal()) col["levels"] = c.levels;
    if (c.scaling) col["scaling"] = {{"min", c.scaling->min}, {"max", c.scaling->max}};
    if (c.isIndicator()) {
      col["indicator_of"] = c.indicatorOf;
      col["indicator_level"] = c.indicatorLevel;
    }
    cols.push_back(std::move(col));
  }
  return j.dump(2) + "\n";
}

Schema schemaFromJson(std::string_view text, ModelKind* kind) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kSchemaFormat) {
      throw DataError("unsupported schema format '" + j.at("format").get<std::string>() + "'");
    }
    if (kind) *kind = parseModelKind(j.at("kind").get<std::string>());
    std::vector<Column> columns;
    for (const auto& jc : j.at("columns")) {
      Column c;
      c.name = jc.at("name").get<std::string>();
      const auto k = jc.at("kind").get<std::string>();
      if (k == "numeric") {
        c.kind = ColumnKind::kNumeric;
      } else if (k == "nominal") {
        c.kind = ColumnKind::kNominal;
        c.levels = jc.at("levels").get<std::vector<std::string>>();
      } else {
        throw DataError("unknown column kind '" + k + "'");
      }
      if (jc.contains("scaling")) {
        c.scaling = Scaling{jc["scaling"].at("min").get<double>(), jc["scaling"].at("max").get<double>()};
      }
      if (jc.contains("indicator_of")) {
        c.indicatorOf = jc["indicator_of"].get<std::string>();
        c.indicatorLevel = jc.at("indicator_level").get<std::string>();
      }
      columns.push_back(std::move(c));
    }
    return Schema(std::move(columns), j.at("target").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema sidecar: ") + e.what());
  }
}

void saveModel(const Model& model, const std::filesystem::path& path) {
  writeFile(path, model.text());
  writeFile(schemaSidecarPath(path), schemaToJson(model.schema, model.kind));
}

Model loadModel(const std::filesystem::path& path) {
  Model m;
  m.schema = schemaFromJson(readFile(schemaSidecarPath(path)), &m.kind);
  m.tree = parseModel(readFile(path), m.schema);
  return m;
}

}  // namespace fvsr
