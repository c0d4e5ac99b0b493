#ifndef FDW_IO_HPP
#define FDW_IO_HPP

/// \file io.hpp
/// \brief CSV formats, atomic output files and the run manifest.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdw/forward.hpp"

namespace fdw {

class IoError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// `t,x,value` rows, boundary nodes included, time-major.
inline std::string field_csv(const SpaceTimeField& u) {
  std::string out = "t,x,value\n";
  const int n = u.mesh.n();
  const double h = u.mesh.h();
  for (int m = 0; m < u.grid.size(); ++m)
    for (int i = 0; i < n + 2; ++i)
      out += fmt(u.grid.t(m)) + "," + fmt(i == n + 1 ? u.mesh.x_right() : u.mesh.x_left() + i * h) + "," +
             fmt(u.values(i, m)) + "\n";
  return out;
}

/// `t,side,flux` rows, side-major.
inline std::string flux_csv(const FluxTrace& d) {
  std::string out = "t,side,flux\n";
  for (std::size_t k = 0; k < d.sides.size(); ++k)
    for (int m = 0; m < d.grid.size(); ++m)
      out += fmt(d.grid.t(m)) + "," + to_string(d.sides[k]) + "," + fmt(d.series[k][m]) + "\n";
  return out;
}

/// `x,value` rows over interior nodes.
inline std::string mesh_field_csv(const MeshField& f) {
  std::string out = "x,value\n";
  for (int i = 0; i < f.mesh.n(); ++i) out += fmt(f.mesh.x(i)) + "," + fmt(f.values[i]) + "\n";
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

inline double parse_cell(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw IoError(where + ": not a number: '" + s + "'");
  }
}

}  // namespace detail

/// Reads `t,side,flux` and checks the samples against the expected grid.
inline FluxTrace read_flux_csv(std::istream& in, const TimeGrid& grid, const std::vector<Side>& sides,
                               const std::string& name = "<flux>") {
  std::string line;
  if (!std::getline(in, line)) throw IoError(name + ": empty file");
  if (detail::split_csv_line(line) != std::vector<std::string>{"t", "side", "flux"})
    throw IoError(name + ": expected header t,side,flux");
  std::map<Side, std::vector<std::pair<double, double>>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = name + ":" + std::to_string(lineno);
    if (cells.size() != 3) throw IoError(where + ": expected 3 columns");
    Side s;
    if (cells[1] == "left") s = Side::left;
    else if (cells[1] == "right") s = Side::right;
    else throw IoError(where + ": unknown side '" + cells[1] + "'");
    rows[s].emplace_back(detail::parse_cell(cells[0], where), detail::parse_cell(cells[2], where));
  }
  for (const auto& [s, r] : rows)
    if (std::find(sides.begin(), sides.end(), s) == sides.end())
      throw GridMismatch(name + ": data for side '" + to_string(s) + "' which is not observed");
  FluxTrace out(grid, sides);
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const auto it = rows.find(sides[k]);
    if (it == rows.end()) throw GridMismatch(name + ": no data for side '" + std::string(to_string(sides[k])) + "'");
    if (static_cast<int>(it->second.size()) != grid.size())
      throw GridMismatch(name + ": side '" + std::string(to_string(sides[k])) + "' has " +
                         std::to_string(it->second.size()) + " samples, grid has " + std::to_string(grid.size()));
    for (int m = 0; m < grid.size(); ++m) {
      const auto [t, v] = it->second[m];
      if (std::abs(t - grid.t(m)) > 1e-9 * std::max(1.0, grid.T()))
        throw GridMismatch(name + ": sample time " + fmt(t) + " does not match grid time " + fmt(grid.t(m)));
      out.series[k][m] = v;
    }
  }
  return out;
}

inline FluxTrace load_flux_csv(const std::string& path, const TimeGrid& grid, const std::vector<Side>& sides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  return read_flux_csv(in, grid, sides, path);
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Collects outputs in memory and commits them to disk with temp-file
/// renames; the manifest goes last.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
  void phase(const std::string& name, double seconds) { timings_[name] += seconds; }
  const std::filesystem::path& dir() const { return dir_; }

  /// Writes every file, then manifest.json with checksums.
  void commit(const std::map<std::string, std::map<std::string, std::string>>& config, const std::string& command,
              const std::string& version) {
    std::filesystem::create_directories(dir_);
    nlohmann::ordered_json inv = nlohmann::ordered_json::array();
    for (const auto& [name, content] : files_) {
      write_atomic(dir_ / name, content);
      inv.push_back({{"file", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
    }
    nlohmann::ordered_json m;
    m["command"] = command;
    m["version"] = version;
    m["config"] = config;
    m["timings_seconds"] = timings_;
    m["files"] = inv;
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  static void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write '" + tmp.string() + "'");
      out << content;
      out.flush();
      if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
  std::map<std::string, double> timings_;
};

/// Scope timer feeding OutputSet::phase.
class PhaseTimer {
 public:
  PhaseTimer(OutputSet& out, std::string name)
      : out_(out), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() { out_.phase(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count()); }

 private:
  OutputSet& out_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace fdw

#endif  // FDW_IO_HPP
