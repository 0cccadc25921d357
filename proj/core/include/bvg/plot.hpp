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

// Minimal raster plotting to PNG: line/scatter figures with optional +-1 std
// bands, a legend and a built-in 5x7 bitmap font.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bvg/experiment.hpp"

namespace bvg {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // empty, or one std per point (drawn as a band)
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<std::string> x_ticks;  // categorical axis when nonempty; x are tick indices
  std::pair<double, double> x_range{0.0, 100.0};
  std::pair<double, double> y_range{0.0, 100.0};
  bool connect = true;
};

void render_png(const Figure& figure, const std::filesystem::path& path);

/// kind: "frontier" (MTA vs ASR, one series per defense, per dataset/model),
/// "sweep" (ASR and MTA vs the swept axis) or "all". Returns written files;
/// groups without data are skipped through `warn`.
std::vector<std::filesystem::path> emit_plots(std::span<const RunResult> results,
                                              std::string_view kind,
                                              const std::filesystem::path& directory,
                                              const std::function<void(const std::string&)>& warn = {});

}  // namespace bvg
