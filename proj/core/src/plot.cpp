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
#include "bvg/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>

#include <fmt/format.h>
#include <png.h>

#include "bvg/container.hpp"
#include "bvg/error.hpp"

namespace bvg {
namespace fs = std::filesystem;

namespace {

// Rows top to bottom, 5 bits each, MSB = leftmost pixel.
const std::map<char, std::array<unsigned char, 7>>& font() {
  static const std::map<char, std::array<unsigned char, 7>> glyphs = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
    {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
    {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
    {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
    {'D', {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c}},
    {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
    {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
    {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
    {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
    {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
    {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
    {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
    {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
    {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}},
    {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
    {'|', {0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
  };
  return glyphs;
}

struct Rgb {
  unsigned char r, g, b;
};

constexpr std::array<Rgb, 6> kPalette = {{{31, 119, 180}, {214, 39, 40}, {44, 160, 44},
                                          {255, 127, 14}, {148, 103, 189}, {140, 86, 75}}};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{225, 225, 225};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h * 3), 255) {}

  int width() const { return w_; }
  int height() const { return h_; }

  void blend(int x, int y, Rgb c, double alpha = 1.0) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    unsigned char* p = &px_[static_cast<std::size_t>((y * w_ + x) * 3)];
    p[0] = static_cast<unsigned char>(std::lround(p[0] * (1 - alpha) + c.r * alpha));
    p[1] = static_cast<unsigned char>(std::lround(p[1] * (1 - alpha) + c.g * alpha));
    p[2] = static_cast<unsigned char>(std::lround(p[2] * (1 - alpha) + c.b * alpha));
  }

  void fill_rect(int x0, int y0, int x1, int y1, Rgb c, double alpha = 1.0) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) {
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) blend(x, y, c, alpha);
    }
  }

  void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    const int r = thickness / 2;
    while (true) {
      fill_rect(x0 - r, y0 - r, x0 + r, y0 + r, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  void text(int x, int y, std::string_view s, Rgb c, int scale = 2) {
    for (char ch : s) {
      const auto it = font().find(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
      if (it != font().end()) {
        for (int row = 0; row < 7; ++row) {
          for (int col = 0; col < 5; ++col) {
            if (it->second[static_cast<std::size_t>(row)] & (0x10 >> col)) {
              fill_rect(x + col * scale, y + row * scale, x + col * scale + scale - 1,
                        y + row * scale + scale - 1, c);
            }
          }
        }
      }
      x += 6 * scale;
    }
  }

  static int text_width(std::string_view s, int scale = 2) {
    return static_cast<int>(s.size()) * 6 * scale;
  }

  void write(const fs::path& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw LoadError(fmt::format("cannot write {}", path.string()));
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
      png_destroy_write_struct(&png, &info);
      throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw Error(fmt::format("libpng failed writing {}", path.string()));
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h_; ++y) {
      png_write_row(png, const_cast<png_bytep>(&px_[static_cast<std::size_t>(y * w_ * 3)]));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }

 private:
  int w_, h_;
  std::vector<unsigned char> px_;
};

std::string tick_text(double v) {
  std::string s = fmt::format("{:.4g}", v);
  return s;
}

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

std::string group_hash(const std::vector<const RunResult*>& runs) {
  std::vector<std::string> hashes;
  for (const RunResult* r : runs) hashes.push_back(r->config_hash + r->sweep_value.dump());
  std::sort(hashes.begin(), hashes.end());
  io::Fnv1a h;
  for (const auto& s : hashes) h.update(s);
  return io::hex64(h.digest()).substr(0, 8);
}

double axis_numeric(const nlohmann::json& v) { return v.is_number() ? v.get<double>() : 0.0; }

}  // namespace

void render_png(const Figure& fig, const fs::path& path) {
  constexpr int kW = 760, kH = 500, kLeft = 80, kRight = 190, kTop = 50, kBottom = 70;
  Canvas c(kW, kH);
  const int x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;

  const bool categorical = !fig.x_ticks.empty();
  const double xlo = categorical ? -0.5 : fig.x_range.first;
  const double xhi = categorical ? static_cast<double>(fig.x_ticks.size()) - 0.5 : fig.x_range.second;
  const auto [ylo, yhi] = fig.y_range;
  auto px = [&](double x) {
    return x0 + static_cast<int>(std::lround((x - xlo) / (xhi - xlo) * (x1 - x0)));
  };
  auto py = [&](double y) {
    const double t = std::clamp((y - ylo) / (yhi - ylo), -0.05, 1.05);
    return y0 - static_cast<int>(std::lround(t * (y0 - y1)));
  };

  for (int i = 0; i <= 5; ++i) {
    const double v = ylo + (yhi - ylo) * i / 5.0;
    c.line(x0, py(v), x1, py(v), kGrid);
    const std::string t = tick_text(v);
    c.text(x0 - 8 - Canvas::text_width(t), py(v) - 7, t, kBlack);
  }
  if (categorical) {
    for (std::size_t i = 0; i < fig.x_ticks.size(); ++i) {
      const int x = px(static_cast<double>(i));
      c.line(x, y0, x, y0 + 5, kBlack);
      c.text(x - Canvas::text_width(fig.x_ticks[i]) / 2, y0 + 10, fig.x_ticks[i], kBlack);
    }
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double v = xlo + (xhi - xlo) * i / 5.0;
      c.line(px(v), y0, px(v), y1, kGrid);
      const std::string t = tick_text(v);
      c.text(px(v) - Canvas::text_width(t) / 2, y0 + 10, t, kBlack);
    }
  }
  c.line(x0, y0, x1, y0, kBlack, 2);
  c.line(x0, y0, x0, y1, kBlack, 2);
  c.text(x0, 14, fig.title, kBlack);
  c.text((x0 + x1 - Canvas::text_width(fig.x_label)) / 2, kH - 28, fig.x_label, kBlack);
  c.text(8, kTop - 22, fig.y_label, kBlack, 1);

  for (std::size_t s = 0; s < fig.series.size(); ++s) {
    const PlotSeries& ser = fig.series[s];
    const Rgb col = kPalette[s % kPalette.size()];
    const std::size_t n = std::min(ser.x.size(), ser.y.size());
    if (ser.err.size() >= n && n > 1) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const int xa = px(ser.x[i]), xb = px(ser.x[i + 1]);
        for (int x = std::min(xa, xb); x <= std::max(xa, xb); ++x) {
          const double t = xb == xa ? 0.0 : static_cast<double>(x - xa) / (xb - xa);
          const double mid = ser.y[i] + t * (ser.y[i + 1] - ser.y[i]);
          const double e = ser.err[i] + t * (ser.err[i + 1] - ser.err[i]);
          for (int y = py(mid + e); y <= py(mid - e); ++y) c.blend(x, y, col, 0.2);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (fig.connect && i + 1 < n) {
        c.line(px(ser.x[i]), py(ser.y[i]), px(ser.x[i + 1]), py(ser.y[i + 1]), col, 2);
      }
      c.fill_rect(px(ser.x[i]) - 4, py(ser.y[i]) - 4, px(ser.x[i]) + 4, py(ser.y[i]) + 4, col);
    }
    const int ly = kTop + 10 + static_cast<int>(s) * 22;
    c.fill_rect(x1 + 14, ly, x1 + 26, ly + 12, col);
    c.text(x1 + 32, ly, ser.label, kBlack);
  }
  c.write(path);
}

std::vector<fs::path> emit_plots(std::span<const RunResult> results, std::string_view kind,
                                 const fs::path& directory,
                                 const std::function<void(const std::string&)>& warn) {
  if (kind != "frontier" && kind != "sweep" && kind != "all") {
    throw ValidationError(fmt::format("unknown plot kind '{}'", kind));
  }
  auto say = [&](const std::string& m) {
    if (warn) warn(m);
  };
  fs::create_directories(directory);
  std::vector<fs::path> written;

  if (kind == "frontier" || kind == "all") {
    std::map<std::string, std::vector<const RunResult*>> groups;
    for (const RunResult& r : results) {
      if (!r.config.attack.enabled) continue;
      groups[fmt::format("{}_{}", r.config.dataset, to_string(r.config.model.kind))].push_back(&r);
    }
    if (groups.empty()) say("no attacked runs; frontier plot skipped");
    for (const auto& [key, runs] : groups) {
      std::map<std::string, std::vector<std::pair<double, const RunResult*>>> by_defense;
      for (const RunResult* r : runs) {
        const DefenseKind k = r->config.defense_kind;
        const double knob = k == DefenseKind::gc ? -r->config.defense_rate : r->config.defense_scale;
        by_defense[std::string(to_string(k))].emplace_back(knob, r);
      }
      Figure fig;
      fig.title = fmt::format("DEFENSE FRONTIER {}", key);
      fig.x_label = "ASR (%)";
      fig.y_label = "MTA (%)";
      for (auto& [name, pts] : by_defense) {
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        PlotSeries s;
        s.label = name;
        for (const auto& [knob, r] : pts) {
          s.x.push_back(r->asr.mean);
          s.y.push_back(r->mta.mean);
        }
        fig.series.push_back(std::move(s));
      }
      const fs::path out = directory / fmt::format("frontier_{}_{}.png", slug(key), group_hash(runs));
      render_png(fig, out);
      written.push_back(out);
    }
  }

  if (kind == "sweep" || kind == "all") {
    std::map<std::string, std::vector<const RunResult*>> groups;
    for (const RunResult& r : results) {
      if (r.sweep_axis.empty() || r.sweep_value.is_null()) continue;
      const ExperimentConfig& c = r.config;
      groups[fmt::format("{}_{}_{}_{}_{}", r.sweep_axis, c.dataset, to_string(c.model.kind),
                         c.attack.enabled ? "bvg" : "clean", to_string(c.defense_kind))]
          .push_back(&r);
    }
    if (groups.empty()) say("no sweep runs; sweep plots skipped");
    for (auto& [key, runs] : groups) {
      std::sort(runs.begin(), runs.end(), [](const RunResult* a, const RunResult* b) {
        return axis_numeric(a->sweep_value) < axis_numeric(b->sweep_value);
      });
      Figure fig;
      fig.title = fmt::format("SWEEP {}", key);
      fig.x_label = runs.front()->sweep_axis;
      fig.y_label = "PERCENT";
      PlotSeries asr{"ASR", {}, {}, {}};
      PlotSeries mta{"MTA", {}, {}, {}};
      for (std::size_t i = 0; i < runs.size(); ++i) {
        fig.x_ticks.push_back(tick_text(axis_numeric(runs[i]->sweep_value)));
        asr.x.push_back(static_cast<double>(i));
        asr.y.push_back(runs[i]->asr.mean);
        asr.err.push_back(runs[i]->asr.std);
        mta.x.push_back(static_cast<double>(i));
        mta.y.push_back(runs[i]->mta.mean);
        mta.err.push_back(runs[i]->mta.std);
      }
      fig.series = {asr, mta};
      const fs::path out = directory / fmt::format("sweep_{}_{}.png", slug(key), group_hash(runs));
      render_png(fig, out);
      written.push_back(out);
    }
  }
  return written;
}

}  // namespace bvg
