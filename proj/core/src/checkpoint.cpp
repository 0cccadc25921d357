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
#include <fmt/format.h>

#include "bvg/container.hpp"
#include "bvg/error.hpp"
#include "bvg/gnn.hpp"

namespace bvg {

void save_checkpoint(const std::filesystem::path& path, const std::vector<GnnParams>& bottoms,
                     const TopParams& top) {
  io::json parties = io::json::array();
  for (const GnnParams& p : bottoms) {
    io::json tensors = io::json::array();
    for (const Matrix& t : p.tensors) tensors.push_back(io::pack_matrix(t));
    parties.push_back({{"model_kind", to_string(p.kind)},
                       {"input", p.dims.input},
                       {"hidden", p.dims.hidden},
                       {"embedding", p.dims.embedding},
                       {"gat_heads", p.gat.heads},
                       {"gat_leaky_slope", p.gat.leaky_slope},
                       {"tensors", std::move(tensors)}});
  }
  io::json top_tensors = io::json::array();
  for (const Matrix& t : top.tensors) top_tensors.push_back(io::pack_matrix(t));
  io::write_container(path, {{"kind", "checkpoint"},
                             {"version", 1},
                             {"bottoms", std::move(parties)},
                             {"top",
                              {{"input", top.input},
                               {"hidden", top.hidden},
                               {"classes", top.classes},
                               {"tensors", std::move(top_tensors)}}}});
}

void load_checkpoint(const std::filesystem::path& path, std::vector<GnnParams>& bottoms,
                     TopParams& top) {
  const io::json doc = io::read_container(path, "checkpoint");
  std::vector<GnnParams> loaded;
  for (const auto& party : doc.at("bottoms")) {
    GnnParams p;
    p.kind = parse_model_kind(party.at("model_kind").get<std::string>());
    p.dims.input = party.at("input").get<Index>();
    p.dims.hidden = party.at("hidden").get<Index>();
    p.dims.embedding = party.at("embedding").get<Index>();
    p.gat.heads = party.at("gat_heads").get<int>();
    p.gat.leaky_slope = party.at("gat_leaky_slope").get<double>();
    for (const auto& t : party.at("tensors")) p.tensors.push_back(io::unpack_matrix(t));
    const std::size_t expected = p.kind == ModelKind::gcn ? 2 : p.kind == ModelKind::sgc ? 1 : 6;
    if (p.tensors.size() != expected || p.tensors.front().rows() != p.dims.input) {
      throw ContractError(fmt::format("{}: tensor manifest does not match model kind", path.string()));
    }
    loaded.push_back(std::move(p));
  }
  TopParams t;
  const auto& jt = doc.at("top");
  t.input = jt.at("input").get<Index>();
  t.hidden = jt.at("hidden").get<Index>();
  t.classes = jt.at("classes").get<Index>();
  for (const auto& m : jt.at("tensors")) t.tensors.push_back(io::unpack_matrix(m));
  if (t.tensors.size() != (t.hidden > 0 ? 4u : 2u)) {
    throw ContractError(fmt::format("{}: top-model manifest mismatch", path.string()));
  }
  bottoms = std::move(loaded);
  top = std::move(t);
}

}  // namespace bvg
