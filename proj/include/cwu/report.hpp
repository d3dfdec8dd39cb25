#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwu/evaluator.hpp"
#include "cwu/sweep.hpp"
#include "cwu/sweep_io.hpp"

namespace cwu {

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// Table precision for similarity values.
inline std::string fmt4(double v) { return fmt("%.4f", v); }
inline std::string fmt6(double v) { return fmt("%.6f", v); }
inline std::string fmt_pct1(double fraction) { return fmt("%.1f", 100.0 * fraction); }

struct Grid {
  std::vector<std::size_t> chunk_sizes;  // ascending
  std::vector<std::size_t> top_ks;       // ascending
  std::map<std::pair<std::size_t, std::size_t>, const SweepCell*> at;
};

inline Grid layout_grid(const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("report: empty grid");
  Grid grid;
  std::set<std::size_t> cs, ks;
  for (const auto& c : cells) {
    cs.insert(c.chunk_size);
    ks.insert(c.top_k);
    grid.at[{c.chunk_size, c.top_k}] = &c;
  }
  grid.chunk_sizes.assign(cs.begin(), cs.end());
  grid.top_ks.assign(ks.begin(), ks.end());
  if (grid.at.size() != grid.chunk_sizes.size() * grid.top_ks.size()) {
    throw std::invalid_argument("report: grid is not a full chunk_size x k matrix");
  }
  return grid;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Linear color scale from 0.5 (pale) to 1.0 (warm red); values below 0.5
// clamp to the cool end.
inline std::string heat_color(double v) {
  double t = (v - 0.5) / 0.5;
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(255.0 + t * (215.0 - 255.0) + 0.5);
  const int g = static_cast<int>(255.0 + t * (25.0 - 255.0) + 0.5);
  const int b = static_cast<int>(204.0 + t * (28.0 - 204.0) + 0.5);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

/// CSV heatmap of mean similarity: one row per chunk size, one column per k,
/// 4 decimal places. Cells whose trials all failed render as "0.5000".
inline void emit_heatmap_csv(const SweepResult& result,
                             const std::filesystem::path& path) {
  const auto grid = detail::layout_grid(result.cells);
  std::string body = "chunk_size";
  for (const auto k : grid.top_ks) body += ",k=" + std::to_string(k);
  body += "\n";
  for (const auto c : grid.chunk_sizes) {
    body += std::to_string(c);
    for (const auto k : grid.top_ks) {
      body += "," + detail::fmt4(grid.at.at({c, k})->mean_similarity);
    }
    body += "\n";
  }
  detail::write_text_file(path, body);
}

/// Standalone SVG heatmap: exactly one rect per grid cell with the value
/// overprinted, row/column labels, deterministic bytes.
inline void emit_heatmap_svg(const SweepResult& result,
                             const std::filesystem::path& path) {
  const auto grid = detail::layout_grid(result.cells);
  const int cell_w = 72, cell_h = 34, left = 72, top = 36, pad = 8;
  const int width = left + cell_w * static_cast<int>(grid.top_ks.size()) + pad;
  const int height = top + cell_h * static_cast<int>(grid.chunk_sizes.size()) + pad;

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"monospace\" font-size=\"12\">\n";
  svg += "<title>mean semantic similarity by chunk size and top-k</title>\n";
  for (std::size_t col = 0; col < grid.top_ks.size(); ++col) {
    const int x = left + static_cast<int>(col) * cell_w + cell_w / 2;
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top - 10) +
           "\" text-anchor=\"middle\">k=" + std::to_string(grid.top_ks[col]) + "</text>\n";
  }
  for (std::size_t row = 0; row < grid.chunk_sizes.size(); ++row) {
    const int y = top + static_cast<int>(row) * cell_h + cell_h / 2 + 4;
    svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + std::to_string(y) +
           "\" text-anchor=\"end\">" + std::to_string(grid.chunk_sizes[row]) + "</text>\n";
    for (std::size_t col = 0; col < grid.top_ks.size(); ++col) {
      const SweepCell& cell = *grid.at.at({grid.chunk_sizes[row], grid.top_ks[col]});
      const int x = left + static_cast<int>(col) * cell_w;
      const int ry = top + static_cast<int>(row) * cell_h;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(ry) +
             "\" width=\"" + std::to_string(cell_w) + "\" height=\"" +
             std::to_string(cell_h) + "\" fill=\"" +
             detail::heat_color(cell.mean_similarity) +
             "\" stroke=\"#ffffff\"/>\n";
      svg += "<text x=\"" + std::to_string(x + cell_w / 2) + "\" y=\"" +
             std::to_string(ry + cell_h / 2 + 4) + "\" text-anchor=\"middle\">" +
             detail::fmt4(cell.mean_similarity) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  detail::write_text_file(path, svg);
}

/// Per-k column maxima with the achieving chunk size and CWU percentage.
inline void emit_topk_summary(const SweepResult& result,
                              const std::filesystem::path& path) {
  const auto summary = aggregate_by_topk(result.cells);
  std::string body = "k,best_mean_S,best_C,mean_cwu_actual_pct\n";
  for (const auto& row : summary) {
    body += std::to_string(row.top_k) + "," + detail::fmt4(row.best_mean_similarity) +
            "," + std::to_string(row.best_chunk_size) + "," +
            detail::fmt_pct1(row.mean_cwu_actual) + "\n";
  }
  detail::write_text_file(path, body);
}

/// The data behind a chunk-size vs CWU scatter annotated with similarity:
/// one row per grid cell.
inline void emit_cwu_scatter(const SweepResult& result,
                             const std::filesystem::path& path) {
  detail::layout_grid(result.cells);  // validates non-empty, full grid
  std::string body = "chunk_size,k,mean_cwu_actual,mean_S\n";
  for (const auto& c : result.cells) {
    body += std::to_string(c.chunk_size) + "," + std::to_string(c.top_k) + "," +
            detail::fmt6(c.mean_cwu_actual) + "," + detail::fmt4(c.mean_similarity) +
            "\n";
  }
  detail::write_text_file(path, body);
}

inline void emit_optimum_json(const SweepResult& result,
                              const std::filesystem::path& path) {
  if (result.cells.empty()) throw std::invalid_argument("report: empty grid");
  detail::write_text_file(path, optimum_to_json(result.optimum).dump(2) + "\n");
}

/// Re-aggregated heatmap over ok records only; cells with no ok record
/// render as "nan". The sentinel-inclusive heatmap stays authoritative.
inline void emit_heatmap_nosentinels_csv(const SweepResult& result,
                                         const std::vector<EvalRecord>& records,
                                         const std::filesystem::path& path) {
  const auto grid = detail::layout_grid(result.cells);
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.status != EvalStatus::ok) continue;
    auto& slot = acc[{r.chunk_size, r.top_k}];
    slot.first += r.similarity;
    slot.second += 1;
  }
  std::string body = "chunk_size";
  for (const auto k : grid.top_ks) body += ",k=" + std::to_string(k);
  body += "\n";
  for (const auto c : grid.chunk_sizes) {
    body += std::to_string(c);
    for (const auto k : grid.top_ks) {
      const auto it = acc.find({c, k});
      if (it == acc.end() || it->second.second == 0) {
        body += ",nan";
      } else {
        body += "," + detail::fmt4(it->second.first /
                                   static_cast<double>(it->second.second));
      }
    }
    body += "\n";
  }
  detail::write_text_file(path, body);
}

/// Emits every report artifact under {workdir}/report/.
inline void write_report_files(const SweepResult& result,
                               const std::filesystem::path& workdir,
                               const std::vector<EvalRecord>* records_for_views = nullptr) {
  const auto dir = workdir / "report";
  std::filesystem::create_directories(dir);
  emit_heatmap_csv(result, dir / "heatmap.csv");
  emit_heatmap_svg(result, dir / "heatmap.svg");
  emit_topk_summary(result, dir / "topk.csv");
  emit_cwu_scatter(result, dir / "cwu_scatter.csv");
  emit_optimum_json(result, dir / "optimum.json");
  if (records_for_views) {
    emit_heatmap_nosentinels_csv(result, *records_for_views,
                                 dir / "heatmap_nosentinels.csv");
  }
}

}  // namespace cwu
