// anisomesh: anisotropic triangulations, asymmetric-norm linear splines and
// sharp-constant convergence studies on the unit square.
#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "anisomesh/field.hpp"
#include "anisomesh/io.hpp"
#include "anisomesh/mesher.hpp"
#include "anisomesh/spline.hpp"

namespace {

using namespace anisomesh;

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNoConvergence = 4;

double parse_extended(const std::string& tok, const char* what) {
  if (tok == "inf" || tok == "Inf" || tok == "INF") return kInf;
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(std::string(what) + ": expected a number or \"inf\", got '" + tok + "'");
  }
}

std::string num_or_inf(double v) {
  if (std::isinf(v)) return "\"inf\"";
  return format_double(v);
}

// Closed forms from the flat-constant catalogue, when applicable.
std::optional<double> closed_form_constant(double p, double alpha, double beta) {
  double c0 = std::pow(3.0, -1.5);
  if (std::isinf(p)) {
    if (std::isinf(alpha)) return 4.0 * c0 * beta;
    if (std::isinf(beta)) return 4.0 * c0 * alpha;
    return 4.0 * c0 * alpha * beta / (alpha + beta);
  }
  if (p == 1.0) {
    if (std::isinf(beta)) return c0 * alpha;
    if (std::isinf(alpha)) return std::nullopt;
    if (std::pow(3.0, 1.5) / M_PI * alpha <= alpha + beta) {
      return c0 * alpha - 0.5 / M_PI * alpha * alpha / (alpha + beta);
    }
  }
  return std::nullopt;
}

struct CommonArgs {
  std::string function = "sum-squares";
  std::string p_tok = "2";
  std::string alpha_tok = "1";
  std::string beta_tok = "1";
  long n = 1024;
  std::string n_list;
  double eps = 0.05;
  int m_override = 0;
  bool full_budget = false;
  double tol = 1e-5;
  std::string out;
  std::string svg;
  std::string csv;
};

Weights make_weights(const CommonArgs& a) {
  return Weights(parse_extended(a.p_tok, "--p"), parse_extended(a.alpha_tok, "--alpha"),
                 parse_extended(a.beta_tok, "--beta"));
}

int cmd_constant(const CommonArgs& a) {
  Weights w = make_weights(a);
  double tol = a.tol > 0.0 ? std::min(a.tol, 1e-6) : 1e-7;
  double c = constant_C(w.p, w.alpha, w.beta, tol);
  bool one_sided = std::isinf(w.alpha) || std::isinf(w.beta);
  auto cf = closed_form_constant(w.p, w.alpha, w.beta);

  std::ostringstream os;
  os << "{\"p\":" << num_or_inf(w.p) << ",\"alpha\":" << num_or_inf(w.alpha)
     << ",\"beta\":" << num_or_inf(w.beta) << ",\"C\":" << format_double(c) << ",\"method\":\""
     << (one_sided ? "penalty-limit" : "simplex-descent") << "\",\"tol\":" << format_double(tol);
  if (cf) {
    os << ",\"closed_form\":" << format_double(*cf)
       << ",\"closed_form_rel_diff\":" << format_double(std::abs(c - *cf) / std::max(*cf, 1e-300));
  } else {
    os << ",\"closed_form\":null";
  }
  os << "}";
  std::cout << os.str() << "\n";
  if (cf && std::abs(c - *cf) / std::max(*cf, 1e-300) > 1e-3) return kExitNoConvergence;
  return kExitOk;
}

int cmd_mesh(const CommonArgs& a) {
  Field f = field_by_spec(a.function);
  if (!f.hessian_nonnegative()) {
    std::cerr << "error: " << a.function << " fails the nonnegative-Hessian validation\n";
    return kExitValidation;
  }
  BuildParams bp;
  bp.budget = a.n;
  bp.eps = a.eps;
  bp.weights = make_weights(a);
  bp.full_budget = a.full_budget;
  if (a.m_override > 0) bp.m_override = a.m_override;
  Triangulation tri = build(f, bp);

  if (!a.out.empty()) write_file(a.out, mesh_to_json(tri.mesh));
  if (!a.svg.empty()) write_file(a.svg, mesh_to_svg(tri.mesh));

  const MesherDiagnostics& d = tri.diag;
  std::ostringstream os;
  os << "{\"function\":\"" << json_escape(a.function) << "\",\"N\":" << a.n << ",\"m\":" << d.m
     << ",\"eps_effective\":" << format_double(d.eps_effective)
     << ",\"mu\":" << format_double(d.mu) << ",\"groups\":{";
  bool first = true;
  for (int g = 1; g <= 4; ++g) {
    if (d.group_histogram[g] == 0) continue;
    if (!first) os << ",";
    os << "\"" << g << "\":" << d.group_histogram[g];
    first = false;
  }
  os << "},\"triangles\":" << d.triangle_count
     << ",\"count_within_budget\":" << (d.count_within_budget ? "true" : "false")
     << ",\"scale_rule_satisfied\":" << (d.mn_satisfied && d.omega_satisfied ? "true" : "false")
     << ",\"fallback_cells\":" << d.fallback_cells << ",\"conformity\":\""
     << (d.conforming ? "pass" : "fail") << "\"}";
  std::cout << os.str() << "\n";
  return d.conforming ? kExitOk : kExitNoConvergence;
}

int cmd_error(const CommonArgs& a) {
  Field f = field_by_spec(a.function);
  if (!f.hessian_nonnegative()) {
    std::cerr << "error: " << a.function << " fails the nonnegative-Hessian validation\n";
    return kExitValidation;
  }
  Weights w = make_weights(a);
  if (!w.finite()) {
    std::cerr << "error: the error command needs finite alpha and beta\n";
    return kExitBadArgs;
  }
  BuildParams bp;
  bp.budget = a.n;
  bp.eps = a.eps;
  bp.weights = w;
  bp.full_budget = a.full_budget;
  if (a.m_override > 0) bp.m_override = a.m_override;
  auto tri = std::make_shared<Triangulation>(build(f, bp));
  Spline s = assemble(f, tri, w);
  ErrorReport rep = global_error(f, s, w, a.tol);
  double free_err = free_spline_error(f, *tri, w, a.tol);
  double predicted = predicted_limit(f, w);
  double n_err = static_cast<double>(tri->count()) * rep.total;

  std::ostringstream os;
  os << "{\"function\":\"" << json_escape(a.function) << "\",\"p\":" << num_or_inf(w.p)
     << ",\"alpha\":" << num_or_inf(w.alpha) << ",\"beta\":" << num_or_inf(w.beta)
     << ",\"N\":" << a.n << ",\"N_actual\":" << tri->count()
     << ",\"error\":" << format_double(rep.total)
     << ",\"free_error\":" << format_double(free_err)
     << ",\"N_times_error\":" << format_double(n_err)
     << ",\"predicted\":" << format_double(predicted)
     << ",\"ratio\":" << format_double(predicted > 0 ? n_err / predicted : 0.0) << "}";
  std::cout << os.str() << "\n";
  if (!a.out.empty()) write_file(a.out, os.str());
  return rep.converged ? kExitOk : kExitNoConvergence;
}

int cmd_convergence(const CommonArgs& a) {
  Field f = field_by_spec(a.function);
  if (!f.hessian_nonnegative()) {
    std::cerr << "error: " << a.function << " fails the nonnegative-Hessian validation\n";
    return kExitValidation;
  }
  Weights w = make_weights(a);
  if (!w.finite()) {
    std::cerr << "error: the convergence command needs finite alpha and beta\n";
    return kExitBadArgs;
  }
  std::vector<long> ns;
  std::stringstream ss(a.n_list.empty() ? std::to_string(a.n) : a.n_list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    ns.push_back(std::stol(tok));
  }
  if (ns.empty()) throw CLI::ValidationError("--n-list: no budgets given");
  for (size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw CLI::ValidationError("--n-list must be strictly increasing");
  }

  ConvergenceOptions opts;
  opts.eps = a.eps;
  opts.full_budget = a.full_budget;
  opts.tol = a.tol;
  if (a.m_override > 0) opts.m_override = a.m_override;
  std::vector<ConvergenceRow> rows = convergence_run(f, w, ns, opts);
  ConvergenceSummary sum = summarize_convergence(rows);

  std::string json = convergence_to_json(rows, sum);
  std::cout << json << "\n";
  if (!a.out.empty()) write_file(a.out, json);
  if (!a.csv.empty()) write_file(a.csv, convergence_to_csv(rows));
  return kExitOk;
}

int cmd_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  Triangle ref({0, 0}, {1, 0}, {0, 1});
  check(std::abs(apply_rule(rule_d5(), [](double x, double y) { return x * x * y; }, ref) - 1.0 / 60.0) < 1e-14,
        "degree-5 rule integrates x^2 y");
  check(std::abs(apply_rule(rule_d8(), [](double x, double y) { return std::pow(x, 5) * std::pow(y, 3); }, ref) - 1.0 / 5040.0) < 1e-12,
        "degree-8 rule integrates x^5 y^3");
  check(std::abs(area(unit_equilateral()) - 1.0) < 1e-12, "unit equilateral has area 1");
  check(tile_cover(Triangle({0, 0}, {1, 0}, {0, 1}), Square{0, 0, 1}).size() == 2,
        "right-triangle tiling covers the unit square with 2 tiles");
  double c_inf = constant_C(kInf, 1.0, 1.0, 1e-9);
  check(std::abs(c_inf - 2.0 * std::pow(3.0, -1.5)) < 1e-6, "sup-norm constant matches closed form");
  Field q = field_by_spec("sum-squares");
  check(std::abs(sqrtH_seminorm(q, 2.0) - 2.0) < 1e-6, "sqrt-Hessian seminorm of the paraboloid");
  return failures == 0 ? kExitOk : kExitNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisomesh: asymmetric-norm linear spline approximation on adaptive triangulations"};
  app.require_subcommand(1);

  CommonArgs a;
  auto add_common = [&](CLI::App* cmd, bool needs_fn) {
    if (needs_fn) {
      cmd->add_option("--function", a.function,
                      "registry name or poly:[[i,j,coef],...] (see README)");
    }
    cmd->add_option("--p", a.p_tok, "exponent p in [1, inf], token \"inf\" allowed");
    cmd->add_option("--alpha", a.alpha_tok, "positive weight on (f-s)_+, \"inf\" allowed");
    cmd->add_option("--beta", a.beta_tok, "positive weight on (f-s)_-, \"inf\" allowed");
    cmd->add_option("--tol", a.tol, "numerical tolerance");
  };

  CLI::App* c_const = app.add_subcommand("constant", "best-approximation constant on the unit-area equilateral");
  add_common(c_const, false);

  CLI::App* c_mesh = app.add_subcommand("mesh", "build a triangulation and export it");
  add_common(c_mesh, true);
  c_mesh->add_option("--n", a.n, "triangle budget N");
  c_mesh->add_option("--eps", a.eps, "group-splitting threshold");
  c_mesh->add_option("--m", a.m_override, "override the cell-grid resolution");
  c_mesh->add_flag("--full-budget", a.full_budget, "allocate the whole budget to elliptic cells");
  c_mesh->add_option("--out", a.out, "mesh JSON output path");
  c_mesh->add_option("--svg", a.svg, "SVG output path");

  CLI::App* c_err = app.add_subcommand("error", "assemble the spline and measure the weighted error");
  add_common(c_err, true);
  c_err->add_option("--n", a.n, "triangle budget N");
  c_err->add_option("--eps", a.eps, "group-splitting threshold");
  c_err->add_option("--m", a.m_override, "override the cell-grid resolution");
  c_err->add_flag("--full-budget", a.full_budget, "allocate the whole budget to elliptic cells");
  c_err->add_option("--out", a.out, "JSON output path");

  CLI::App* c_conv = app.add_subcommand("convergence", "scaled-error table over a budget sweep");
  add_common(c_conv, true);
  c_conv->add_option("--n-list", a.n_list, "comma-separated increasing budgets");
  c_conv->add_option("--n", a.n, "single budget when --n-list is absent");
  c_conv->add_option("--eps", a.eps, "group-splitting threshold");
  c_conv->add_option("--m", a.m_override, "override the cell-grid resolution");
  c_conv->add_flag("--full-budget", a.full_budget, "allocate the whole budget to elliptic cells");
  c_conv->add_option("--out", a.out, "JSON output path");
  c_conv->add_option("--csv", a.csv, "CSV output path");

  app.add_subcommand("selftest", "quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (app.got_subcommand("constant")) return cmd_constant(a);
    if (app.got_subcommand("mesh")) return cmd_mesh(a);
    if (app.got_subcommand("error")) return cmd_error(a);
    if (app.got_subcommand("convergence")) return cmd_convergence(a);
    if (app.got_subcommand("selftest")) return cmd_selftest();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  }
  return kExitBadArgs;
}
