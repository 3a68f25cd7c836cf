#pragma once

// File helpers shared by the pipeline stages: whole-file reads, all-or-nothing
// multi-file writes, CSV text, a stable digest and the SVG scatter.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cnl/error.hpp"
#include "cnl/graph.hpp"
#include "cnl/spectral.hpp"

namespace cnl::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return buf.str();
}

inline nlohmann::json read_json(const fs::path& path, ErrorCode on_parse_error = ErrorCode::SchemaMismatch) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(on_parse_error, path.string() + ": " + e.what());
  }
}

/// Writes every file to a temporary sibling first and renames only once all
/// writes succeeded, so a failing command leaves no partial outputs.
inline void write_files(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      fs::path tmp = path;
      tmp += ".tmp";
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], files[i].first);
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw Error(ErrorCode::Io, e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << (v == 0.0 ? 0.0 : v);
  return out.str();
}

class CsvWriter {
 public:
  CsvWriter& row(std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) text_ += ',';
      text_ += csv_field(f);
      first = false;
    }
    text_ += '\n';
    return *this;
  }

  CsvWriter& row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_field(fields[i]);
    }
    text_ += '\n';
    return *this;
  }

  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string_view class_color(AggressionClass c) {
  switch (c) {
    case AggressionClass::Red: return "#d62728";
    case AggressionClass::Orange: return "#ff7f0e";
    case AggressionClass::Green: return "#2ca02c";
  }
  return "#2ca02c";
}

struct SvgNode {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  AggressionClass cls = AggressionClass::Green;
};

struct SvgEdge {
  std::size_t from;
  std::size_t to;
  Sign sign;
};

/// Scatter of embedded nodes: negative ties red, positive ties green, nodes
/// filled by aggression class.
inline std::string render_svg(const std::vector<SvgNode>& nodes, const std::vector<SvgEdge>& edges,
                              double size = 800.0, double margin = 60.0) {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  if (!nodes.empty()) {
    auto [xl, xh] = std::minmax_element(nodes.begin(), nodes.end(),
                                        [](const auto& a, const auto& b) { return a.x < b.x; });
    auto [yl, yh] = std::minmax_element(nodes.begin(), nodes.end(),
                                        [](const auto& a, const auto& b) { return a.y < b.y; });
    xmin = xl->x, xmax = xh->x, ymin = yl->y, ymax = yh->y;
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  auto px = [&](double x) { return fixed(margin + (x - xmin) / span * (size - 2 * margin), 2); };
  auto py = [&](double y) { return fixed(size - margin - (y - ymin) / span * (size - 2 * margin), 2); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& e : edges) {
    const auto& a = nodes[e.from];
    const auto& b = nodes[e.to];
    out << "<line x1=\"" << px(a.x) << "\" y1=\"" << py(a.y) << "\" x2=\"" << px(b.x) << "\" y2=\""
        << py(b.y) << "\" stroke=\"" << (e.sign == Sign::Negative ? "#d62728" : "#2ca02c")
        << "\" stroke-opacity=\"0.5\" stroke-width=\"1\"/>\n";
  }
  for (const auto& n : nodes) {
    out << "<circle cx=\"" << px(n.x) << "\" cy=\"" << py(n.y) << "\" r=\"5\" fill=\""
        << class_color(n.cls) << "\" stroke=\"black\" stroke-width=\"0.5\"><title>"
        << xml_escape(n.label) << "</title></circle>\n";
    out << "<text x=\"" << px(n.x) << "\" y=\"" << py(n.y)
        << "\" dx=\"7\" dy=\"3\" font-size=\"9\" font-family=\"sans-serif\">" << xml_escape(n.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace cnl::io
