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

// Self-describing binary container used for dataset caches, model
// checkpoints and trigger artifacts.
//
// Layout: 8-byte magic "BVGCONT1", then a CBOR document. The document is a map
// with at least {"kind": <string>, "version": <int>}. Numeric arrays are
// stored as CBOR byte strings of little-endian IEEE-754 doubles (or int64),
// so values round-trip bit-exactly.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bvg/types.hpp"

namespace bvg::io {

using json = nlohmann::json;

void write_container(const std::filesystem::path& path, const json& document);

/// Reads a container and checks that its "kind" equals `expected_kind`.
json read_container(const std::filesystem::path& path, std::string_view expected_kind);

json pack_doubles(std::span<const double> values);
std::vector<double> unpack_doubles(const json& blob);

json pack_ints(std::span<const std::int64_t> values);
std::vector<std::int64_t> unpack_ints(const json& blob);

/// {"rows", "cols", "data"} with row-major data.
json pack_matrix(const Matrix& m);
Matrix unpack_matrix(const json& j);

/// CSR triple {"rows", "cols", "indptr", "indices", "values"}.
json pack_sparse(const SparseMatrix& m);
SparseMatrix unpack_sparse(const json& j);

/// FNV-1a 64-bit, incrementally updatable.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  template <typename T>
  void update_values(std::span<const T> values) {
    update(std::as_bytes(values));
  }
  void update(std::string_view text);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);

}  // namespace bvg::io
