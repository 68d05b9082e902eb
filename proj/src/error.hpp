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

#ifndef FVSR_ERROR_HPP_
#define FVSR_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fvsr {

// Base of every error thrown by the core library. The C API maps each
// subclass onto one fvsr_status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (CSV, schema, filters, splits).
class DataError : public Error {
 public:
  using Error::Error;
};

// A tree references columns that do not exist in, or do not match, a schema.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A nominal value that the model never saw during training.
class UnseenLevelError : public DataError {
 public:
  UnseenLevelError(std::string column, std::string level)
      : DataError("unseen level '" + level + "' in nominal column '" + column +
                  "'"),
        column_(std::move(column)),
        level_(std::move(level)) {}

  const std::string& column() const { return column_; }
  const std::string& level() const { return level_; }

 private:
  std::string column_;
  std::string level_;
};

// Model text that does not follow the grammar. offset is a byte offset into
// the parsed text.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error("parse error at offset " + std::to_string(offset) + ": " +
              message),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Numerical failure, e.g. a least-squares fit where every row is non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fvsr

#endif  // FVSR_ERROR_HPP_
