#pragma once

#include <optional>

#include "anisomesh/field.hpp"
#include "anisomesh/geometry.hpp"
#include "anisomesh/weights.hpp"

namespace anisomesh {

// Cell classification by eigenvalue magnitude.
enum CellGroup : int {
  kElliptic = 1,       // lambda_min >= eps: anisotropic tiling by optimal triangles
  kSmallPositive = 2,  // uniform right-isosceles grid
  kCylinderLike = 3,   // thin rectangles along the flat eigendirection
  kNearFlat = 4,       // coarse uniform right-isosceles grid
};

struct BuildParams {
  long budget = 1024;  // requested triangle count N
  double eps = 0.05;
  Weights weights{2.0, 1.0, 1.0};
  std::optional<int> m_override;
  bool full_budget = false;
  int cap = 64;  // hard cap for the cell-grid scan
};

struct ComputeMResult {
  int m = 1;
  bool mn_satisfied = false;     // the Taylor-scale inequality held for some m <= cap
  bool omega_satisfied = false;  // lambda_min modulus at 1/m is below eps
};

// Smallest m <= cap with 2 m^-2 max(alpha, beta) omega2(f, 1/m) <= eps / N;
// returns cap with mn_satisfied = false when none qualifies.  Whether
// lambda_min's modulus at scale 1/m stays below eps is reported alongside.
ComputeMResult compute_m(const Field& f, double eps, long N, const Weights& w, int cap = 64);

struct SquareCell {
  int index = 0;
  Square square;
  Point2 center{};
  SpectralData spec;
  TaylorQuadratic taylor;
  double hessian = 0.0;
  int group = kNearFlat;
  long budget = 1;          // group-1 triangle budget
  Triangle base;            // group-1 base tile (or group-3 rectangle half)
  bool fallback = false;    // base tile did not fit; used 2 right isosceles
};

int classify_cell(const SpectralData& spec, double eps, double lambda_mod);

// Fills group-1 budgets: floor(N * factor * H_i^t / sum H_j^t) + 1 with
// t = p / (2(p+1)) (1/2 at p = inf); factor is 1 - 23 eps - 2 mu, or 1 when
// full_budget is set.
void allocate_budgets(std::vector<SquareCell>& cells, long N, double eps, double mu, double p,
                      bool full_budget);

// Per-triangle tiling provenance, kept so the spline can evaluate the
// per-tile approximation at clipped-piece vertices.
struct TileRef {
  Point2 shift{};
  bool reflected = false;
  bool tiled = false;  // belongs to a group-1 tiling
};

struct CellMeshEntry {
  Triangle tri;
  bool interior = false;
  TileRef tile;
};

// Triangulates one classified, budgeted cell.
std::vector<CellMeshEntry> build_cell_mesh(SquareCell& cell, int m, int r1, int r2);

struct MesherDiagnostics {
  int m = 1;
  bool mn_satisfied = false;
  bool omega_satisfied = false;
  double eps_effective = 0.0;
  double mu = 0.0;
  int r1 = 1;
  int r2 = 1;
  std::array<long, 5> group_histogram{};  // index by group id, [0] unused
  long triangle_count = 0;
  long fallback_cells = 0;
  bool count_within_budget = false;
  bool conforming = false;
};

struct Triangulation {
  Mesh mesh;
  BuildParams params;
  int m = 1;
  double eps_effective = 0.0;
  double mu = 0.0;
  std::vector<SquareCell> cells;
  std::vector<TileRef> tiles;                          // parallel to mesh.triangles
  std::vector<std::pair<size_t, size_t>> cell_ranges;  // triangle span per cell
  MesherDiagnostics diag;

  long count() const { return static_cast<long>(mesh.triangle_count()); }
};

// Conforming union of the per-cell meshes: triangles with an edge on a shared
// cell border are subdivided through the neighbour's border vertices.
Triangulation glue(std::vector<std::vector<CellMeshEntry>> cell_meshes,
                   std::vector<SquareCell> cells, int m, const BuildParams& params);

// Full pipeline: scale selection, cell grid, classification, budgets,
// per-cell meshes, gluing.  Deterministic; diagnostics record every knob.
Triangulation build(const Field& f, const BuildParams& params);

}  // namespace anisomesh
