#include "anisomesh/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anisomesh {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::string mesh_to_json(const Mesh& mesh) {
  std::ostringstream os;
  os << "{\"vertices\":[";
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (i) os << ",";
    os << "[" << format_double(mesh.vertices[i].x) << "," << format_double(mesh.vertices[i].y) << "]";
  }
  os << "],\"triangles\":[";
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    if (i) os << ",";
    os << "[" << mesh.triangles[i][0] << "," << mesh.triangles[i][1] << "," << mesh.triangles[i][2] << "]";
  }
  os << "],\"group\":[";
  for (size_t i = 0; i < mesh.group.size(); ++i) {
    if (i) os << ",";
    os << mesh.group[i];
  }
  os << "],\"cell\":[";
  for (size_t i = 0; i < mesh.cell.size(); ++i) {
    if (i) os << ",";
    os << mesh.cell[i];
  }
  os << "],\"interior\":[";
  for (size_t i = 0; i < mesh.interior.size(); ++i) {
    if (i) os << ",";
    os << (mesh.interior[i] ? "true" : "false");
  }
  os << "]}";
  return os.str();
}

std::string mesh_to_svg(const Mesh& mesh) {
  // Group fill colours: elliptic blue, small-positive green, cylinder-like
  // orange, near-flat gray; non-interior triangles get the darker outline.
  static const char* kFill[5] = {"#cccccc", "#4878cf", "#6acc65", "#ff8c00", "#9e9e9e"};
  const double s = 1000.0;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\">\n";
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    Triangle t = mesh.triangle(i);
    int g = mesh.group[i];
    if (g < 1 || g > 4) g = 0;
    bool inner = mesh.interior[i] != 0;
    os << "<polygon points=\"";
    for (int k = 0; k < 3; ++k) {
      Point2 v = t.vertex(k);
      if (k) os << " ";
      os << format_double(s * v.x) << "," << format_double(s * (1.0 - v.y));
    }
    os << "\" fill=\"" << kFill[g] << "\" fill-opacity=\"0.7\" stroke=\""
       << (inner ? "#555555" : "#000000") << "\" stroke-width=\"" << (inner ? "0.4" : "1.0")
       << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string convergence_to_json(const std::vector<ConvergenceRow>& rows,
                                const ConvergenceSummary& summary) {
  std::ostringstream os;
  os << "{\"rows\":[";
  for (size_t i = 0; i < rows.size(); ++i) {
    const ConvergenceRow& r = rows[i];
    if (i) os << ",";
    os << "{\"N\":" << r.n_requested << ",\"N_actual\":" << r.n_actual
       << ",\"error\":" << format_double(r.error)
       << ",\"N_times_error\":" << format_double(r.n_times_error)
       << ",\"predicted\":" << format_double(r.predicted)
       << ",\"ratio\":" << format_double(r.ratio) << "}";
  }
  os << "],\"summary\":{\"last_ratio\":" << format_double(summary.last_ratio)
     << ",\"trend\":\"" << json_escape(summary.trend) << "\"}}";
  return os.str();
}

std::string convergence_to_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream os;
  os << "N,N_actual,error,N_times_error,predicted,ratio\n";
  for (const ConvergenceRow& r : rows) {
    os << r.n_requested << "," << r.n_actual << "," << format_double(r.error) << ","
       << format_double(r.n_times_error) << "," << format_double(r.predicted) << ","
       << format_double(r.ratio) << "\n";
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

}  // namespace anisomesh
