#pragma once

#include <string>

#include "anisomesh/mesher.hpp"
#include "anisomesh/spline.hpp"

namespace anisomesh {

// All emitters print floating point with a fixed 17-significant-digit format
// so identical configurations produce byte-identical files.
std::string format_double(double v);
std::string json_escape(const std::string& s);

std::string mesh_to_json(const Mesh& mesh);
std::string mesh_to_svg(const Mesh& mesh);

std::string convergence_to_json(const std::vector<ConvergenceRow>& rows,
                                const ConvergenceSummary& summary);
std::string convergence_to_csv(const std::vector<ConvergenceRow>& rows);

void write_file(const std::string& path, const std::string& content);

}  // namespace anisomesh
