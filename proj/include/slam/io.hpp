#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slam/patterns.hpp"

namespace slam {

// CSV of 0/1 integers, no header; line-numbered errors.
inline std::vector<std::vector<std::uint8_t>> load_binary_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::uint8_t> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      // trim spaces
      std::size_t b = cell.find_first_not_of(" \t");
      std::size_t e = cell.find_last_not_of(" \t");
      if (b == std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": empty cell");
      cell = cell.substr(b, e - b + 1);
      if (cell != "0" && cell != "1")
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": non-binary entry '" + cell + "'");
      row.push_back(cell == "1" ? 1 : 0);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": row length mismatch (" +
                               std::to_string(row.size()) + " vs " +
                               std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": file has no data rows");
  return rows;
}

inline QMatrix load_q_matrix(const std::string& path) {
  auto rows = load_binary_csv(path);
  std::vector<std::uint8_t> e;
  for (const auto& r : rows) e.insert(e.end(), r.begin(), r.end());
  return QMatrix(static_cast<int>(rows.size()),
                 static_cast<int>(rows.front().size()), std::move(e));
}

inline void save_binary_csv(const std::string& path,
                            const std::vector<std::vector<std::uint8_t>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << int(r[i]);
    }
    out << '\n';
  }
}

// Pattern set file: one binary string of length K per line.
inline PatternSet load_pattern_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<AttributePattern> ps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      ps.push_back(AttributePattern::from_string(line));
    } catch (const std::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               ex.what());
    }
  }
  if (ps.empty()) throw std::runtime_error(path + ": no patterns");
  int k = ps.front().K();
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i].K() != k)
      throw std::runtime_error(path + ": inconsistent pattern length at line " +
                               std::to_string(i + 1));
  return PatternSet(k, std::move(ps));
}

inline void save_pattern_set(const std::string& path, const PatternSet& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& p : a) out << p.to_string() << '\n';
}

// FNV-1a digest of a file's bytes, for run manifests.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

}  // namespace slam
