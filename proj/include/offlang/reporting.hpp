// Copyright 2026 The offlang Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Result emission: report JSON, confusion-matrix CSV, heat-map raster,
// and per-language comparison tables interleaving computed runs with the
// shared-task reference systems. The CSV twin always lands before any
// image rendering so results stay diffable even if rendering fails.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "offlang/errors.hpp"
#include "offlang/metrics.hpp"

namespace offlang {

inline nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["model"] = r.model_label;
  j["language"] = r.language;
  j["scheme"]["name"] = r.matrix.scheme.name;
  j["scheme"]["classes"] = r.matrix.scheme.classes;
  j["instance_count"] = r.instance_count;
  std::vector<std::vector<std::int64_t>> rows(r.matrix.k());
  for (std::size_t g = 0; g < r.matrix.k(); ++g) {
    rows[g].resize(r.matrix.k());
    for (std::size_t p = 0; p < r.matrix.k(); ++p) rows[g][p] = r.matrix.at(g, p);
  }
  j["confusion"] = rows;
  j["per_class"] = nlohmann::json::array();
  for (const ClassScores& s : r.per_class) {
    j["per_class"].push_back({{"class", s.class_name},
                              {"precision", s.precision},
                              {"recall", s.recall},
                              {"f1", s.f1},
                              {"support", s.support}});
  }
  j["macro_f1"] = r.macro_f1;
  j["weighted_f1"] = r.weighted_f1;
  j["warnings"] = r.warnings;
  return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  try {
    r.model_label = j.at("model").get<std::string>();
    r.language = j.at("language").get<std::string>();
    LabelScheme scheme;
    scheme.name = j.at("scheme").at("name").get<std::string>();
    scheme.classes =
        j.at("scheme").at("classes").get<std::vector<std::string>>();
    r.matrix = ConfusionMatrix(scheme);
    const auto rows = j.at("confusion");
    for (std::size_t g = 0; g < r.matrix.k(); ++g) {
      for (std::size_t p = 0; p < r.matrix.k(); ++p) {
        r.matrix.at(g, p) = rows.at(g).at(p).get<std::int64_t>();
      }
    }
    for (const auto& pc : j.at("per_class")) {
      ClassScores s;
      s.class_name = pc.at("class").get<std::string>();
      s.precision = pc.at("precision").get<double>();
      s.recall = pc.at("recall").get<double>();
      s.f1 = pc.at("f1").get<double>();
      s.support = pc.at("support").get<std::int64_t>();
      r.per_class.push_back(s);
    }
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    r.instance_count = j.at("instance_count").get<std::size_t>();
    if (j.contains("warnings")) {
      r.warnings = j.at("warnings").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("report JSON: ") + e.what());
  }
  return r;
}

inline void write_report_json(const EvaluationReport& r,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write report '" + path.string() + "'");
  out << report_to_json(r).dump(2) << "\n";
}

inline EvaluationReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open report '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("report '" + path.string() + "': " + e.what());
  }
  return report_from_json(j);
}

// CSV with class-name headers; rows are gold classes, columns predicted.
// With normalize set, each row with a positive total sums to 1.
inline void write_confusion_csv(const ConfusionMatrix& m,
                                const std::filesystem::path& path,
                                bool normalize = false) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write CSV '" + path.string() + "'");
  out << "gold\\pred";
  for (const std::string& c : m.scheme.classes) out << "," << c;
  out << "\n";
  for (std::size_t g = 0; g < m.k(); ++g) {
    out << m.scheme.classes[g];
    const std::int64_t row_total = m.gold_support(g);
    for (std::size_t p = 0; p < m.k(); ++p) {
      if (normalize) {
        const double v = row_total > 0 ? static_cast<double>(m.at(g, p)) /
                                             static_cast<double>(row_total)
                                       : 0.0;
        out << "," << std::setprecision(6) << std::fixed << v;
        out.unsetf(std::ios_base::floatfield);
      } else {
        out << "," << m.at(g, p);
      }
    }
    out << "\n";
  }
}

namespace detail {

struct Rgb {
  std::uint8_t r, g, b;
};

// Compact viridis-like ramp over five anchor colours.
inline Rgb heat_color(double v) {
  static const Rgb stops[5] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98},
      {253, 231, 37}};
  v = std::clamp(v, 0.0, 1.0);
  const double pos = v * 4.0;
  const std::size_t lo = static_cast<std::size_t>(std::min(3.0, pos));
  const double t = pos - static_cast<double>(lo);
  const auto lerp = [&](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(a + t * (static_cast<double>(b) - a));
  };
  return {lerp(stops[lo].r, stops[lo + 1].r), lerp(stops[lo].g, stops[lo + 1].g),
          lerp(stops[lo].b, stops[lo + 1].b)};
}

// Minimal 24-bit BMP writer (BI_RGB, bottom-up, rows padded to 4 bytes).
template <class PixelFn>
void write_bmp(const std::filesystem::path& path, std::size_t width,
               std::size_t height, PixelFn&& pixel) {
  const std::size_t row_bytes = (width * 3 + 3) & ~std::size_t{3};
  const std::size_t data_size = row_bytes * height;
  const std::size_t file_size = 54 + data_size;

  std::string bytes;
  bytes.reserve(file_size);
  auto put16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xFF));
    bytes.push_back(static_cast<char>((v >> 8) & 0xFF));
  };
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  bytes.push_back('B');
  bytes.push_back('M');
  put32(static_cast<std::uint32_t>(file_size));
  put32(0);
  put32(54);  // pixel data offset
  put32(40);  // BITMAPINFOHEADER
  put32(static_cast<std::uint32_t>(width));
  put32(static_cast<std::uint32_t>(height));
  put16(1);
  put16(24);
  put32(0);  // BI_RGB
  put32(static_cast<std::uint32_t>(data_size));
  put32(2835);
  put32(2835);
  put32(0);
  put32(0);

  for (std::size_t y = height; y-- > 0;) {  // bottom-up scanlines
    const std::size_t before = bytes.size();
    for (std::size_t x = 0; x < width; ++x) {
      const Rgb c = pixel(x, y);
      bytes.push_back(static_cast<char>(c.b));
      bytes.push_back(static_cast<char>(c.g));
      bytes.push_back(static_cast<char>(c.r));
    }
    while (bytes.size() - before < row_bytes) bytes.push_back('\0');
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write image '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("image write failed '" + path.string() + "'");
}

}  // namespace detail

// Row-normalized confusion heat map as a BMP raster; class names live in
// the CSV twin. Degenerate (all-zero) matrices render as the ramp floor.
inline void write_heatmap_bmp(const ConfusionMatrix& m,
                              const std::filesystem::path& path,
                              std::size_t cell_px = 48) {
  const std::size_t k = m.k();
  std::vector<double> norm(k * k, 0.0);
  for (std::size_t g = 0; g < k; ++g) {
    const std::int64_t total = m.gold_support(g);
    for (std::size_t p = 0; p < k; ++p) {
      norm[g * k + p] =
          total > 0 ? static_cast<double>(m.at(g, p)) / static_cast<double>(total)
                    : 0.0;
    }
  }
  const std::size_t side = k * cell_px;
  detail::write_bmp(path, side, side, [&](std::size_t x, std::size_t y) {
    const std::size_t col = std::min(k - 1, x / cell_px);
    const std::size_t row = std::min(k - 1, y / cell_px);
    if (x % cell_px == 0 || y % cell_px == 0) return detail::Rgb{255, 255, 255};
    return detail::heat_color(norm[row * k + col]);
  });
}

// Writes the CSV first, then attempts the raster; a rendering failure
// reports the error without losing the CSV.
inline void emit_heatmap(const ConfusionMatrix& m,
                         const std::filesystem::path& csv_path,
                         const std::filesystem::path& bmp_path,
                         bool normalize_csv = false) {
  write_confusion_csv(m, csv_path, normalize_csv);
  write_heatmap_bmp(m, bmp_path);
}

// ---------------------------------------------------------------------
// Comparison tables

struct ReferenceRow {
  std::string system;
  std::string language;
  std::optional<double> macro_f1;
  std::optional<double> weighted_f1;
};

// Published scores of the best shared-task systems, kept as static
// reference rows (these systems are not reimplemented here).
inline std::vector<ReferenceRow> builtin_references() {
  return {
      {"risch-krestel-2020 (bagging BERT, TRAC-2 best)", "bn", 0.8219,
       std::nullopt},
      {"qutnocturnal-2019 (CNN, HASOC best)", "hi", 0.8149, 0.8202},
      {"mineriaunam-2019 (SVM, HatEval best)", "es", std::nullopt, 0.7300},
      {"atalaya-2019 (SVM, HatEval best)", "es", std::nullopt, 0.7300},
  };
}

inline std::vector<ReferenceRow> references_from_json(const nlohmann::json& j) {
  std::vector<ReferenceRow> rows;
  try {
    for (const auto& rj : j.at("references")) {
      ReferenceRow r;
      r.system = rj.at("system").get<std::string>();
      r.language = rj.at("language").get<std::string>();
      if (rj.contains("macro_f1") && !rj.at("macro_f1").is_null()) {
        r.macro_f1 = rj.at("macro_f1").get<double>();
      }
      if (rj.contains("weighted_f1") && !rj.at("weighted_f1").is_null()) {
        r.weighted_f1 = rj.at("weighted_f1").get<double>();
      }
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("references file: ") + e.what());
  }
  return rows;
}

inline std::vector<ReferenceRow> load_references(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open references '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("references '" + path.string() + "': " + e.what());
  }
  return references_from_json(j);
}

enum class SortKey { macro, weighted };

// TRAC-2 reported macro F1 only; HASOC and HatEval ranked by weighted F1.
inline SortKey comparison_sort_key(const std::string& language) {
  if (language == "bn") return SortKey::macro;
  if (language == "hi" || language == "es") return SortKey::weighted;
  return SortKey::macro;
}

struct ComparisonRow {
  std::string label;
  std::optional<double> macro_f1;
  std::optional<double> weighted_f1;
  bool is_reference = false;
};

// One language section: computed reports plus that language's reference
// rows, sorted descending by the language's sort key. Rows missing the
// key sort last; ties keep insertion order.
inline std::vector<ComparisonRow> build_comparison(
    const std::string& language, const std::vector<EvaluationReport>& reports,
    const std::vector<ReferenceRow>& references) {
  std::vector<ComparisonRow> rows;
  for (const EvaluationReport& r : reports) {
    if (r.language != language) {
      throw data_error("comparison: report '" + r.model_label +
                       "' is for language '" + r.language +
                       "', expected '" + language + "'");
    }
    rows.push_back({r.model_label, r.macro_f1, r.weighted_f1, false});
  }
  for (const ReferenceRow& r : references) {
    if (r.language == language) {
      rows.push_back({r.system, r.macro_f1, r.weighted_f1, true});
    }
  }
  const SortKey key = comparison_sort_key(language);
  const auto key_of = [key](const ComparisonRow& r) {
    const std::optional<double>& v =
        key == SortKey::macro ? r.macro_f1 : r.weighted_f1;
    return v.value_or(-1.0);
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const ComparisonRow& a, const ComparisonRow& b) {
                     return key_of(a) > key_of(b);
                   });
  return rows;
}

inline std::string format_score(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

inline std::string format_comparison_text(
    const std::string& language, const std::vector<ComparisonRow>& rows) {
  std::size_t label_w = 5;
  for (const ComparisonRow& r : rows) label_w = std::max(label_w, r.label.size());
  std::ostringstream out;
  out << "language: " << language << " (sorted by "
      << (comparison_sort_key(language) == SortKey::macro ? "macro" : "weighted")
      << " F1)\n";
  out << std::left << std::setw(static_cast<int>(label_w) + 2) << "model"
      << std::setw(10) << "macro F1" << std::setw(12) << "weighted F1"
      << "\n";
  for (const ComparisonRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_w) + 2) << r.label
        << std::setw(10) << format_score(r.macro_f1) << std::setw(12)
        << format_score(r.weighted_f1) << (r.is_reference ? "  [reference]" : "")
        << "\n";
  }
  return out.str();
}

inline void write_comparison_csv(const std::string& language,
                                 const std::vector<ComparisonRow>& rows,
                                 std::ostream& out) {
  out << "language,model,macro_f1,weighted_f1,reference\n";
  for (const ComparisonRow& r : rows) {
    out << language << ",\"" << r.label << "\","
        << format_score(r.macro_f1) << "," << format_score(r.weighted_f1)
        << "," << (r.is_reference ? "yes" : "no") << "\n";
  }
}

}  // namespace offlang
