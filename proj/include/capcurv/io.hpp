#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capcurv/capdomain.hpp"
#include "capcurv/errors.hpp"
#include "capcurv/reconstruct.hpp"

// File formats: nodal fields travel as CSV with header `i,j,theta1,theta2,value`
// in latitude-major order and 17-significant-digit floats (lossless for
// doubles); surfaces as a plain vertex/quad text mesh; reports as key-sorted
// JSON. All writes go through a temp-file-plus-rename so readers never see a
// half-written file.

namespace capcurv {

inline std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + target.parent_path().string());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place");
}

inline std::string field_to_csv(const ScalarField& F) {
  const CapGrid& g = *F.grid;
  std::string out = "i,j,theta1,theta2,value\n";
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += format_g17(g.th1[i]);
      out += ',';
      out += format_g17(g.th2[j]);
      out += ',';
      out += format_g17(F.v[g.index(i, j)]);
      out += '\n';
    }
  return out;
}

inline void write_field_csv(const std::string& path, const ScalarField& F) {
  write_text_atomic(path, field_to_csv(F));
}

/// Parse a nodal CSV against a concrete grid. Every node must appear exactly
/// once and the stored latitudes/longitudes must match the grid's, so a file
/// written for one discretization cannot be smuggled onto another.
inline ScalarField read_field_csv(const std::string& path, GridPtr grid) {
  const CapGrid& g = *grid;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "i,j,theta1,theta2,value")
    throw IoError(path + ": expected header i,j,theta1,theta2,value");

  ScalarField F = make_field(grid, BoundaryPolicy::none, 0.0,
                             [](double, double) { return 0.0; });
  std::vector<char> seen(static_cast<std::size_t>(g.N1) * g.N2, 0);
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok[5];
    for (int c = 0; c < 5; ++c)
      if (!std::getline(ss, tok[c], c < 4 ? ',' : '\n'))
        throw IoError(path + ": malformed row '" + line + "'");
    char* end = nullptr;
    const long i = std::strtol(tok[0].c_str(), &end, 10);
    if (*end != '\0') throw IoError(path + ": bad row index '" + tok[0] + "'");
    const long j = std::strtol(tok[1].c_str(), &end, 10);
    if (*end != '\0') throw IoError(path + ": bad column index '" + tok[1] + "'");
    if (i < 0 || i >= g.N1 || j < 0 || j >= g.N2)
      throw GridMismatchError(path + ": node (" + tok[0] + "," + tok[1] +
                              ") outside the configured grid");
    const double t1 = std::strtod(tok[2].c_str(), &end);
    if (*end != '\0') throw IoError(path + ": bad latitude '" + tok[2] + "'");
    const double t2 = std::strtod(tok[3].c_str(), &end);
    if (*end != '\0') throw IoError(path + ": bad longitude '" + tok[3] + "'");
    const double val = std::strtod(tok[4].c_str(), &end);
    if (*end != '\0') throw IoError(path + ": bad value '" + tok[4] + "'");
    if (std::abs(t1 - g.th1[i]) > 1e-12 || std::abs(t2 - g.th2[j]) > 1e-12)
      throw GridMismatchError(path + ": node angles do not match the configured grid");
    const int p = g.index(static_cast<int>(i), static_cast<int>(j));
    if (seen[p]) throw IoError(path + ": duplicate node (" + tok[0] + "," + tok[1] + ")");
    seen[p] = 1;
    F.v[p] = val;
    ++rows;
  }
  if (rows != g.N1 * g.N2)
    throw GridMismatchError(path + ": expected " + std::to_string(g.N1 * g.N2) +
                            " nodes, found " + std::to_string(rows));
  if (!F.v.allFinite()) throw IoError(path + ": non-finite field values");
  return F;
}

/// Vertex/quad text mesh of an embedded surface: all vertex rows in grid
/// order (the contact ring is the last row), quads with outward orientation,
/// and the boundary loop spelled out in a trailing comment for plotting tools.
inline std::string mesh_to_text(const Embedding& E) {
  const CapGrid& g = *E.grid;
  std::string out;
  out.reserve(static_cast<std::size_t>(E.vertex_rows()) * 64);
  for (int i = 0; i <= g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const Eigen::Vector3d x = E.vertex(i, j);
      out += "v ";
      out += format_g17(x[0]);
      out += ' ';
      out += format_g17(x[1]);
      out += ' ';
      out += format_g17(x[2]);
      out += '\n';
    }
  auto vid = [&](int i, int j) { return i * g.N2 + g.wrap(j) + 1; };  // 1-based
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      out += "f ";
      out += std::to_string(vid(i, j));
      out += ' ';
      out += std::to_string(vid(i + 1, j));
      out += ' ';
      out += std::to_string(vid(i + 1, j + 1));
      out += ' ';
      out += std::to_string(vid(i, j + 1));
      out += '\n';
    }
  out += "# boundary";
  for (int j = 0; j < g.N2; ++j) {
    out += ' ';
    out += std::to_string(vid(g.N1, j));
  }
  out += '\n';
  return out;
}

inline void write_mesh(const std::string& path, const Embedding& E) {
  write_text_atomic(path, mesh_to_text(E));
}

inline void write_json_atomic(const std::string& path, const nlohmann::json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

}  // namespace capcurv
