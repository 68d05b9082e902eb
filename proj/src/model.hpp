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

// A fitted model bound to the schema it was trained on. On disk a model is
// two files: the rendered expression with its parameter tables, and a
// "<model>.schema.json" sidecar holding column kinds, level tables, scaling
// records and the model kind.

#ifndef FVSR_MODEL_HPP_
#define FVSR_MODEL_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "expr.hpp"

namespace fvsr {

enum class ModelKind { kFactor, kOneHot, kLinear };

const char* toString(ModelKind kind);
ModelKind parseModelKind(std::string_view text);

struct Model {
  ModelKind kind = ModelKind::kFactor;
  Schema schema;
  ExpressionTree tree;

  std::string text() const { return render(tree, schema).toString(); }

  // Predictions for a dataset in raw (unscaled, un-encoded) form. Throws
  // UnseenLevelError for nominal levels the model does not know.
  std::vector<double> predict(const Dataset& raw) const;

  // CSV options that read prediction input with the model's column kinds.
  CsvOptions csvOptions() const;
};

std::filesystem::path schemaSidecarPath(const std::filesystem::path& modelPath);

std::string schemaToJson(const Schema& schema, ModelKind kind);
Schema schemaFromJson(std::string_view json, ModelKind* kind);

void saveModel(const Model& model, const std::filesystem::path& path);
Model loadModel(const std::filesystem::path& path);

}  // namespace fvsr

#endif  // FVSR_MODEL_HPP_
