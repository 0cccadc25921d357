/*
 * Copyright 2026 The bvgsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace bvg {

// Root of every error thrown by the library. Subclasses only exist so that
// callers (tests, the CLI) can tell failure classes apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable file.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; the message carries the file and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally inconsistent data, e.g. an edge pointing at an unknown node.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Shape or state mismatch between cooperating objects.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A party attempted something the split-learning protocol forbids.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Loss or gradient became NaN/Inf.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Configuration problem; `field()` names the offending dotted key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace bvg
