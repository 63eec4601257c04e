#include <doctest.h>

#include <random>

#include <json.hpp>

#include "anisomesh/io.hpp"

using namespace anisomesh;

TEST_CASE("format_double round-trips and is fixed-width deterministic") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 17) - 8);
    std::string s = format_double(v);
    CHECK(std::stod(s) == v);
    CHECK(format_double(v) == s);
  }
}

TEST_CASE("mesh JSON matches the documented schema") {
  Field q = field_by_spec("sum-squares");
  Triangulation tri = build(q, BuildParams{128, 0.05, Weights(2.0, 1.0, 1.0), {}, false, 64});
  std::string text = mesh_to_json(tri.mesh);
  nlohmann::json j = nlohmann::json::parse(text);
  REQUIRE(j.contains("vertices"));
  REQUIRE(j.contains("triangles"));
  REQUIRE(j.contains("group"));
  REQUIRE(j.contains("cell"));
  REQUIRE(j.contains("interior"));
  CHECK(j["vertices"].size() == tri.mesh.vertices.size());
  CHECK(j["triangles"].size() == tri.mesh.triangle_count());
  CHECK(j["group"].size() == tri.mesh.triangle_count());
  CHECK(j["interior"].size() == tri.mesh.triangle_count());
  // 0-based indices within range, coordinates round-trip.
  for (const auto& t : j["triangles"]) {
    for (int k = 0; k < 3; ++k) {
      int idx = t[k].get<int>();
      CHECK(idx >= 0);
      CHECK(idx < static_cast<int>(tri.mesh.vertices.size()));
    }
  }
  CHECK(j["vertices"][0][0].get<double>() == tri.mesh.vertices[0].x);
  CHECK(mesh_to_json(tri.mesh) == text);  // byte-identical re-emission
}

TEST_CASE("SVG export carries one polygon per triangle") {
  Field f = field_by_spec("quartic");
  BuildParams bp{512, 0.05, Weights(2.0, 1.0, 1.0), {}, false, 64};
  bp.m_override = 8;
  Triangulation tri = build(f, bp);
  std::string svg = mesh_to_svg(tri.mesh);
  size_t count = 0;
  for (size_t pos = svg.find("<polygon"); pos != std::string::npos; pos = svg.find("<polygon", pos + 1)) {
    ++count;
  }
  CHECK(count == tri.mesh.triangle_count());
  CHECK(svg.find("<?xml") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  // Every polygon element is self-closed.
  size_t closed = 0;
  for (size_t pos = svg.find("/>"); pos != std::string::npos; pos = svg.find("/>", pos + 1)) ++closed;
  CHECK(closed >= count);
}

TEST_CASE("convergence emitters") {
  std::vector<ConvergenceRow> rows(2);
  rows[0] = {64, 70, 1e-3, 0.07, 0.1, 0.7, 0.0, 0.0, false};
  rows[1] = {128, 130, 5e-4, 0.065, 0.1, 0.65, 0.0, 0.0, false};
  ConvergenceSummary sum = summarize_convergence(rows);
  CHECK(sum.last_ratio == doctest::Approx(0.65));
  CHECK(sum.trend == "decreasing");

  std::string json_text = convergence_to_json(rows, sum);
  nlohmann::json j = nlohmann::json::parse(json_text);
  REQUIRE(j["rows"].size() == 2);
  for (const char* key : {"N", "N_actual", "error", "N_times_error", "predicted", "ratio"}) {
    CHECK(j["rows"][0].contains(key));
  }
  CHECK(j["summary"]["trend"] == "decreasing");

  std::string csv = convergence_to_csv(rows);
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == rows.size() + 1);  // header + rows
  CHECK(csv.rfind("N,N_actual,error,N_times_error,predicted,ratio\n", 0) == 0);
}
