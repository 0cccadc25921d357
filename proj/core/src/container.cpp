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
#include "bvg/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "bvg/error.hpp"

namespace bvg::io {
namespace {

constexpr char kMagic[8] = {'B', 'V', 'G', 'C', 'O', 'N', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "container blobs are written in native order; big-endian hosts unsupported");

template <typename T>
json pack_pod(std::span<const T> values) {
  std::vector<std::uint8_t> bytes(values.size_bytes());
  if (!bytes.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
  return json::binary(std::move(bytes));
}

template <typename T>
std::vector<T> unpack_pod(const json& blob) {
  if (!blob.is_binary()) throw ContractError("container field is not a binary blob");
  const auto& bytes = blob.get_binary();
  if (bytes.size() % sizeof(T) != 0) throw ContractError("binary blob has a ragged size");
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

}  // namespace

void write_container(const std::filesystem::path& path, const json& document) {
  if (!document.contains("kind")) throw ContractError("container document lacks a kind");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::vector<std::uint8_t> payload = json::to_cbor(document);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(fmt::format("cannot open {} for writing", path.string()));
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw LoadError(fmt::format("short write to {}", path.string()));
}

json read_container(const std::filesystem::path& path, std::string_view expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(fmt::format("cannot open {}", path.string()));
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(fmt::format("{}: not a bvgsim container", path.string()));
  }
  std::vector<std::uint8_t> payload{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
  json doc;
  try {
    doc = json::from_cbor(payload);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: corrupt container ({})", path.string(), e.what()));
  }
  const std::string kind = doc.value("kind", "");
  if (kind != expected_kind) {
    throw ContractError(fmt::format("{}: expected a '{}' container, found '{}'", path.string(),
                                    expected_kind, kind));
  }
  return doc;
}

json pack_doubles(std::span<const double> values) { return pack_pod(values); }
std::vector<double> unpack_doubles(const json& blob) { return unpack_pod<double>(blob); }
json pack_ints(std::span<const std::int64_t> values) { return pack_pod(values); }
std::vector<std::int64_t> unpack_ints(const json& blob) { return unpack_pod<std::int64_t>(blob); }

json pack_matrix(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", pack_doubles(std::span<const double>(m.data(), m.size()))}};
}

Matrix unpack_matrix(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const std::vector<double> data = unpack_doubles(j.at("data"));
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw ContractError("matrix blob size does not match its shape");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json pack_sparse(const SparseMatrix& input) {
  SparseMatrix m = input;
  m.makeCompressed();
  std::vector<std::int64_t> indptr(m.outerIndexPtr(), m.outerIndexPtr() + m.rows() + 1);
  std::vector<std::int64_t> indices(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"indptr", pack_ints(indptr)},
              {"indices", pack_ints(indices)},
              {"values", pack_doubles(std::span<const double>(m.valuePtr(), m.nonZeros()))}};
}

SparseMatrix unpack_sparse(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto indptr = unpack_ints(j.at("indptr"));
  const auto indices = unpack_ints(j.at("indices"));
  const auto values = unpack_doubles(j.at("values"));
  if (static_cast<Index>(indptr.size()) != rows + 1 || indices.size() != values.size() ||
      (!indptr.empty() && static_cast<std::size_t>(indptr.back()) != values.size())) {
    throw ContractError("sparse blob is inconsistent");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(values.size());
  for (Index r = 0; r < rows; ++r) {
    for (auto k = indptr[r]; k < indptr[r + 1]; ++k) {
      if (indices[k] < 0 || indices[k] >= cols) throw ContractError("sparse column out of range");
      triplets.emplace_back(r, indices[k], values[k]);
    }
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

void Fnv1a::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::string_view text) { update(std::as_bytes(std::span(text))); }

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace bvg::io
