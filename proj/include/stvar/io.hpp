#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stvar/types.hpp"

namespace stvar::io {

using nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest exact decimal form of a double; %.17g round-trips bit-exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError("cannot parse number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header "t,v1_s1,...,v1_sP,v2_s1,..." in variable-major
// column order, one row per time point.
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const std::vector<VectorXd>& series, int m, int p) {
  auto out = open_out(path);
  out << "t";
  for (int j = 1; j <= m; ++j)
    for (int s = 1; s <= p; ++s) out << ",v" << j << "_s" << s;
  out << "\n";
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << t;
    for (Eigen::Index k = 0; k < series[t].size(); ++k)
      out << "," << format_double(series[t][k]);
    out << "\n";
  }
}

// Returns the series; m and p are recovered from the header.
inline std::vector<VectorXd> read_trajectory_csv(const std::filesystem::path& path,
                                                 int* m_out, int* p_out) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trajectory file: " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw IoError("bad trajectory header in " + path.string());
  int m = 0, p = 0;
  {
    int last_v = 0, last_s = 0;
    for (std::size_t k = 1; k < header.size(); ++k) {
      int vj = 0, ss = 0;
      if (std::sscanf(header[k].c_str(), "v%d_s%d", &vj, &ss) != 2)
        throw IoError("bad trajectory column name '" + header[k] + "'");
      last_v = vj;
      last_s = std::max(last_s, ss);
    }
    m = last_v;
    p = last_s;
  }
  if (static_cast<std::size_t>(m) * p + 1 != header.size())
    throw IoError("trajectory header is not variable-major in " + path.string());
  std::vector<VectorXd> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError("trajectory row width mismatch in " + path.string());
    VectorXd x(static_cast<Eigen::Index>(m) * p);
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = parse_double(fields[k + 1]);
    series.push_back(std::move(x));
  }
  if (m_out) *m_out = m;
  if (p_out) *p_out = p;
  return series;
}

// ---------------------------------------------------------------------------
// Graph file: "p=<P>", an "edges" section of 1-based "s,s'" lines, and an
// optional "coords" section of "x,y" lines.
// ---------------------------------------------------------------------------

inline void write_graph_file(const std::filesystem::path& path, const SpatialGraph& graph) {
  auto out = open_out(path);
  out << "p=" << graph.p << "\n";
  out << "edges\n";
  for (auto [s, t] : graph.pairs) out << s + 1 << "," << t + 1 << "\n";
  if (graph.coords) {
    out << "coords\n";
    for (const auto& c : *graph.coords)
      out << format_double(c.x()) << "," << format_double(c.y()) << "\n";
  }
}

inline SpatialGraph read_graph_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  int p = -1;
  std::vector<std::pair<int, int>> edges;
  std::vector<Eigen::Vector2d> coords;
  enum { none, in_edges, in_coords } section = none;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("p=", 0) == 0) {
      p = std::stoi(line.substr(2));
      continue;
    }
    if (line == "edges") {
      section = in_edges;
      continue;
    }
    if (line == "coords") {
      section = in_coords;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw IoError("bad graph line '" + line + "' in " + path.string());
    if (section == in_edges)
      edges.emplace_back(std::stoi(fields[0]) - 1, std::stoi(fields[1]) - 1);
    else if (section == in_coords)
      coords.emplace_back(parse_double(fields[0]), parse_double(fields[1]));
    else
      throw IoError("graph line outside any section in " + path.string());
  }
  if (p <= 0) throw IoError("graph file missing p= line: " + path.string());
  if (coords.empty()) return SpatialGraph(p, std::move(edges));
  return SpatialGraph(p, std::move(edges), std::move(coords));
}

// ---------------------------------------------------------------------------
// Dense matrix CSV (no header).
// ---------------------------------------------------------------------------

inline void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
}

inline MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged matrix CSV: " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix CSV: " + path.string());
  MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

inline json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw IoError("expected a non-empty JSON array of rows");
  MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols()))
      throw IoError("ragged JSON matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

// FNV-1a over the canonical dump, used to tie outputs to their exact config.
inline std::string config_hash(const json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stvar::io
