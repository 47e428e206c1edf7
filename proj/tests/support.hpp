#pragma once

// Helpers shared by the unit and acceptance suites: timing columns and keys
// vary run to run, so determinism comparisons strip them first.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include <ipkit/util.hpp>

namespace testsupport {

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

// Quote-aware CSV cell split (cells may hold quoted vectors with commas).
inline std::vector<std::string> split_csv_row(const std::string& row) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : row) {
    if (ch == '"') {
      quoted = !quoted;
      cur += ch;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline bool is_time_column(const std::string& name) {
  return name.find("time") != std::string::npos ||
         (name.size() >= 3 && name.compare(name.size() - 3, 3, "_ms") == 0) ||
         name == "wall_ms";
}

// Drops wall-clock columns, keyed off the header row.
inline std::string normalize_csv(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) return text;
  const std::vector<std::string> header = split_csv_row(lines[0]);
  std::vector<bool> keep(header.size(), true);
  for (size_t i = 0; i < header.size(); ++i) keep[i] = !is_time_column(header[i]);

  std::string out;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_row(line);
    // Metric-per-row tables name the measurement in the first cell.
    if (!cells.empty() && is_time_column(cells[0])) continue;
    std::string row;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i < keep.size() && !keep[i]) continue;
      if (!row.empty()) row += ',';
      row += cells[i];
    }
    out += row + "\n";
  }
  return out;
}

inline void strip_time_keys(nlohmann::json& j) {
  if (j.is_object()) {
    std::vector<std::string> doomed;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key().find("time") != std::string::npos || it.key() == "wall_ms")
        doomed.push_back(it.key());
    }
    for (const auto& k : doomed) j.erase(k);
    for (auto& [_, v] : j.items()) strip_time_keys(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_time_keys(v);
  }
}

inline std::string normalize_jsonl(const std::string& text) {
  std::string out;
  for (const auto& line : split_lines(text)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    strip_time_keys(j);
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string normalize_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  strip_time_keys(j);
  return j.dump(2) + "\n";
}

// Normalizes any artifact in a run directory by extension/name.
inline std::string normalized_file(const std::filesystem::path& p) {
  const std::string text = ipkit::read_text_file(p);
  if (p.extension() == ".csv") return normalize_csv(text);
  if (p.extension() == ".jsonl") return normalize_jsonl(text);
  if (p.extension() == ".json") return normalize_json(text);
  return text;
}

}  // namespace testsupport
