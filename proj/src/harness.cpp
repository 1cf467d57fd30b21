#include "curlod/harness.hpp"

#include "curlod/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

namespace curlod {

namespace {

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off" || v.empty()) return false;
  throw Error("not a boolean: '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& s) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw Error("not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw Error("not an integer: '" + s + "'");
  return v;
}

}  // namespace

void ExperimentConfig::check() const {
  CURLOD_REQUIRE(example >= 1 && example <= 4, "example must be 1..4");
  CURLOD_REQUIRE(dim == 2 || dim == 3, "dim must be 2 or 3");
  CURLOD_REQUIRE(!levels.empty(), "no coarse levels given");
  for (int j : levels) {
    CURLOD_REQUIRE(j >= 0, "coarse levels must be non-negative");
    CURLOD_REQUIRE(j < ref_level, "reference level " + std::to_string(ref_level) +
                                      " must exceed every coarse level (got " +
                                      std::to_string(j) + ")");
  }
  CURLOD_REQUIRE(ref_level >= 1, "reference level must be at least 1");
  if (!ideal) {
    CURLOD_REQUIRE(m.size() == levels.size(),
                   "m-list has " + std::to_string(m.size()) + " entries for " +
                       std::to_string(levels.size()) + " levels");
    for (int v : m) CURLOD_REQUIRE(v >= 1, "layer counts must be at least 1");
  }
  CURLOD_REQUIRE(boundary_layers >= 0, "boundary layer count must be non-negative");
}

BoundaryCondition example_bc(int example) {
  return example <= 2 ? BoundaryCondition::natural : BoundaryCondition::essential;
}

LoadSpec example_load(int example, int dim) {
  CURLOD_REQUIRE(example >= 1 && example <= 4, "example must be 1..4");
  LoadSpec f;
  f.dim = dim;
  const bool smooth = example == 1 || example == 3;
  if (smooth && dim == 2) {
    f.f = [](const Point& x) {
      const double tp = 2 * std::numbers::pi;
      return Point(std::sin(tp * x[0]), std::sin(tp * x[1]), 0);
    };
  } else if (smooth) {
    f.f = [](const Point& p) {
      const double x = p[0], z = p[2];
      return Point(-x * (x - 1) * (2 * z - 1), 0, z * (z - 1) * (2 * x - 1));
    };
  } else if (dim == 2) {
    f.f = [](const Point&) { return Point(1, 1, 0); };
  } else {
    f.f = [](const Point&) { return Point(1, 1, 1); };
  }
  return f;
}

Checkerboard example_checkerboard(int ref_level) {
  CURLOD_REQUIRE(ref_level >= 1, "reference level must be at least 1");
  return {1 << (ref_level - 1), 1.0, 0.001};
}

std::vector<int> default_m_schedule(const std::vector<int>& levels) {
  static const int table[] = {1, 1, 2, 2, 3, 4};
  std::vector<int> m;
  for (int j : levels) m.push_back(j < 6 ? table[std::max(j, 0)] : j - 1);
  return m;
}

double mesh_size(int dim, int level) { return std::sqrt(double(dim)) * std::ldexp(1.0, -level); }

double energy_error(const Eigen::VectorXd& u, const Eigen::VectorXd& u_ref, const SpMat& B) {
  CURLOD_REQUIRE(u.size() == u_ref.size() && u.size() == B.rows(), "size mismatch");
  const double ref = u_ref.dot(B * u_ref);
  if (!(ref > 0)) throw Error("energy_error: reference has zero energy");
  const Eigen::VectorXd e = u - u_ref;
  return std::sqrt(std::max(e.dot(B * e), 0.0) / ref);
}

double fit_rate(const std::vector<double>& H, const std::vector<double>& err) {
  CURLOD_REQUIRE(H.size() == err.size(), "fit_rate: size mismatch");
  CURLOD_REQUIRE(H.size() >= 2, "fit_rate: need at least two points");
  const std::size_t n = H.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CURLOD_REQUIRE(H[i] > 0 && err[i] > 0, "fit_rate: values must be positive");
    sx += std::log(H[i]);
    sy += std::log(err[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(H[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err[i]) - my);
  }
  CURLOD_REQUIRE(sxx > 0, "fit_rate: all mesh sizes coincide");
  return sxy / sxx;
}

Reference reference_solve(int example, int dim, int ref_level) {
  Reference r;
  r.mesh = std::make_shared<const Mesh>(build_structured_mesh(dim, 1 << ref_level));
  r.mu = r.kappa = example_checkerboard(ref_level);
  r.load = example_load(example, dim);
  r.bc = example_bc(example);
  const CellCoefficients coef = sample_coefficients(*r.mesh, r.mu, r.kappa);
  r.B = assemble_B(*r.mesh, coef);
  r.F = assemble_load(*r.mesh, r.load);
  if (r.bc == BoundaryCondition::natural) {
    r.u = SpdSolver(r.B.matrix()).solve(r.F);
  } else {
    const Mesh& m = *r.mesh;
    std::vector<int> dofs;
    for (int e = 0; e < m.num_edges(); ++e)
      if (!m.edge_on_boundary(e)) dofs.push_back(e);
    std::vector<int> g2l(m.num_edges(), -1);
    for (std::size_t i = 0; i < dofs.size(); ++i) g2l[dofs[i]] = static_cast<int>(i);
    std::vector<Eigen::Triplet<double>> trip;
    const SpMat& B = r.B.matrix();
    for (std::size_t j = 0; j < dofs.size(); ++j)
      for (SpMat::InnerIterator it(B, dofs[j]); it; ++it)
        if (g2l[it.row()] >= 0) trip.emplace_back(g2l[it.row()], static_cast<int>(j), it.value());
    SpMat A(static_cast<Eigen::Index>(dofs.size()), static_cast<Eigen::Index>(dofs.size()));
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd f(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i) f[i] = r.F[dofs[i]];
    const Eigen::VectorXd x = SpdSolver(A).solve(f);
    r.u = Eigen::VectorXd::Zero(m.num_edges());
    for (std::size_t i = 0; i < dofs.size(); ++i) r.u[dofs[i]] = x[i];
  }
  return r;
}

ExperimentRow run_level(const ExperimentConfig& cfg, const Reference& ref, int j, int m,
                        std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  const int dim = cfg.dim;
  auto coarse = std::make_shared<const Mesh>(build_structured_mesh(dim, 1 << j));
  auto pair = std::make_shared<const MeshPair>(coarse, ref.mesh);

  ProjectionSet ps = assemble_PiE(*pair, {.with_nodal = false, .keep_blocks = false});
  if (cfg.pi_variant == ProjectionVariant::boundary_zeroed) ps = zero_boundary_rows(ps, *coarse);
  const LodForms forms = make_forms(pair, ref.mu, ref.kappa, ps.P);

  CorrectorRequest req;
  req.m = m;
  req.bc = ref.bc;
  req.source = cfg.source;
  req.boundary_layers = cfg.boundary_layers;
  req.load = &ref.load;

  CorrectorResult cr;
  bool cached = false;
  std::string cache_path;
  if (!cfg.cache_dir.empty() && cfg.source == SourceCorrection::none) {
    std::filesystem::create_directories(cfg.cache_dir);
    cache_path = (std::filesystem::path(cfg.cache_dir) /
                  corrector_cache_key(forms, m, ref.bc, cfg.pi_variant))
                     .string();
    cached = load_corrector_basis(cache_path, cr.basis) &&
             static_cast<int>(cr.basis.cells.size()) == coarse->num_cells();
    cr.sources.m = m;
  }
  if (!cached) {
    cr = compute_correctors(forms, req);
    if (!cache_path.empty()) save_corrector_basis(cache_path, cr.basis);
  }
  const MultiscaleSolution sol = solve_lod(forms, cr, ref.F);
  const Eigen::VectorXd u_fem = coarse_fem(forms, ref.F, ref.bc);

  ExperimentRow row;
  row.example = cfg.example;
  row.dim = dim;
  row.j = j;
  row.H = mesh_size(dim, j);
  row.m = m == kWholeDomain ? -1 : m;
  row.dof_coarse = static_cast<int>(sol.coarse_dofs.size());
  row.dof_fine = ref.mesh->num_edges();
  row.err_lod = energy_error(sol.fine, ref.u, ref.B.matrix());
  row.err_fem = energy_error(u_fem, ref.u, ref.B.matrix());
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (log)
    *log << "  j=" << j << " m=" << (row.m < 0 ? std::string("inf") : std::to_string(row.m))
         << " err_lod=" << row.err_lod << " err_fem=" << row.err_fem
         << (cached ? " (cached correctors)" : "") << " " << std::fixed << std::setprecision(1)
         << row.seconds << "s" << std::defaultfloat << std::setprecision(6) << "\n";
  return row;
}

ExperimentReport run_example(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.check();
  ExperimentReport rep;
  rep.config = cfg;
  std::vector<int> levels = cfg.levels;
  std::vector<int> ms = cfg.ideal ? std::vector<int>(levels.size(), kWholeDomain) : cfg.m;
  std::vector<std::size_t> order(levels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  if (log)
    *log << "example " << cfg.example << ", " << cfg.dim << "D, reference level "
         << cfg.ref_level << "\n";
  const Reference ref = reference_solve(cfg.example, cfg.dim, cfg.ref_level);
  for (std::size_t i : order) {
    try {
      rep.rows.push_back(run_level(cfg, ref, levels[i], ms[i], log));
    } catch (const std::exception& e) {
      throw Error("run failed at j=" + std::to_string(levels[i]) + ", m=" +
                  (ms[i] == kWholeDomain ? std::string("inf") : std::to_string(ms[i])) + ": " +
                  e.what());
    }
  }
  const bool distinct = std::any_of(rep.rows.begin(), rep.rows.end(), [&](const ExperimentRow& r) {
    return r.H != rep.rows.front().H;
  });
  if (distinct) {
    std::vector<double> H, el, ef;
    for (const auto& r : rep.rows) {
      H.push_back(r.H);
      el.push_back(r.err_lod);
      ef.push_back(r.err_fem);
    }
    rep.slope_lod = fit_rate(H, el);
    rep.slope_fem = fit_rate(H, ef);
  }
  return rep;
}

void write_csv(const ExperimentReport& report, std::ostream& os) {
  os << "example,dim,j,H,m,dof_coarse,dof_fine,err_lod,err_fem,seconds\n";
  os << std::setprecision(17);
  for (const auto& r : report.rows)
    os << r.example << ',' << r.dim << ',' << r.j << ',' << r.H << ','
       << (r.m < 0 ? std::string("inf") : std::to_string(r.m)) << ',' << r.dof_coarse << ','
       << r.dof_fine << ',' << r.err_lod << ',' << r.err_fem << ',' << std::setprecision(6)
       << r.seconds << std::setprecision(17) << '\n';
}

std::string plot_script(const std::string& csv_path) {
  std::ostringstream s;
  s << "#!/usr/bin/env python3\n"
       "# Relative energy errors of the LOD and the coarse FEM against H.\n"
       "import csv\n"
       "import os\n"
       "import sys\n"
       "import matplotlib\n"
       "matplotlib.use('Agg')\n"
       "import matplotlib.pyplot as plt\n\n"
       "path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(\n"
       "    os.path.dirname(os.path.abspath(__file__)), "
    << '"' << csv_path << '"'
    << ")\n"
       "with open(path) as fh:\n"
       "    rows = list(csv.DictReader(fh))\n"
       "H = [float(r['H']) for r in rows]\n"
       "lod = [float(r['err_lod']) for r in rows]\n"
       "fem = [float(r['err_fem']) for r in rows]\n"
       "fig, ax = plt.subplots()\n"
       "ax.loglog(H, lod, 'b*-', label='LOD')\n"
       "ax.loglog(H, fem, 'ro-', label='FEM')\n"
       "if len(H) > 1:\n"
       "    ax.loglog(H, [lod[-1] * h / H[-1] for h in H], 'k--', label='cH')\n"
       "    ax.loglog(H, [lod[-1] * (h / H[-1]) ** 0.5 for h in H], 'k:', label='cH^1/2')\n"
       "ax.set_xlabel('H')\n"
       "ax.set_ylabel('relative energy error')\n"
       "ax.legend()\n"
       "out = path.rsplit('.', 1)[0] + '.png'\n"
       "fig.savefig(out, dpi=150)\n"
       "print(out)\n";
  return s.str();
}

std::map<std::string, std::string> parse_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(item));
  }
  return out;
}

std::vector<int> parse_levels(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return parse_int_list(s);
  const int a = to_int(trim(s.substr(0, colon)));
  const int b = to_int(trim(s.substr(colon + 1)));
  CURLOD_REQUIRE(a <= b, "level range " + s + " is empty");
  std::vector<int> out;
  for (int j = a; j <= b; ++j) out.push_back(j);
  return out;
}

void apply_config(const std::map<std::string, std::string>& kv, ExperimentConfig& cfg) {
  for (const auto& [k, v] : kv) {
    if (k == "example") cfg.example = to_int(v);
    else if (k == "dim") cfg.dim = to_int(v);
    else if (k == "levels") cfg.levels = parse_levels(v);
    else if (k == "m") cfg.m = parse_int_list(v);
    else if (k == "ref-level") cfg.ref_level = to_int(v);
    else if (k == "source-correction") {
      if (v == "none") cfg.source = SourceCorrection::none;
      else if (v == "boundary") cfg.source = SourceCorrection::boundary;
      else if (v == "all") cfg.source = SourceCorrection::all;
      else throw Error("source-correction must be none|boundary|all");
    } else if (k == "pi-variant") {
      if (v == "standard") cfg.pi_variant = ProjectionVariant::standard;
      else if (v == "zeroed") cfg.pi_variant = ProjectionVariant::boundary_zeroed;
      else throw Error("pi-variant must be standard|zeroed");
    } else if (k == "ideal") cfg.ideal = parse_bool(v);
    else if (k == "boundary-layers") cfg.boundary_layers = to_int(v);
    else if (k == "out") cfg.out = v;
    else if (k == "cache-dir") cfg.cache_dir = v;
    else throw Error("unknown config key '" + k + "'");
  }
}

// ---------------------------------------------------------------------------
// Validation suite

namespace {

double max_abs(const SpMat& a) {
  double v = 0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

void record(std::vector<ValidationCheck>& out, std::ostream* os, std::string name, double value,
            double tol) {
  ValidationCheck c{std::move(name), value, tol, value <= tol};
  if (os)
    *os << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << std::right
        << " value=" << std::setprecision(3) << std::scientific << c.value << " tol=" << c.tolerance
        << std::defaultfloat << std::setprecision(6) << "\n";
  out.push_back(std::move(c));
}

}  // namespace

std::vector<ValidationCheck> validate(std::ostream* os) {
  std::vector<ValidationCheck> out;
  for (int dim : {2, 3}) {
    const std::string tag = std::to_string(dim) + "D ";
    // complex property and Euler characteristic
    for (int n : dim == 2 ? std::vector<int>{1, 4, 8} : std::vector<int>{1, 2}) {
      const Mesh m = build_structured_mesh(dim, n);
      const Eigen::SparseMatrix<int> CG = curl_signs(m) * gradient_signs(m);
      double cg = 0;
      for (int k = 0; k < CG.outerSize(); ++k)
        for (Eigen::SparseMatrix<int>::InnerIterator it(CG, k); it; ++it)
          cg = std::max(cg, double(std::abs(it.value())));
      record(out, os, tag + "n=" + std::to_string(n) + " C*G = 0", cg, 0.0);
      if (dim == 3) {
        const Eigen::SparseMatrix<int> DC = divergence_signs(m) * curl_signs(m);
        double dc = 0;
        for (int k = 0; k < DC.outerSize(); ++k)
          for (Eigen::SparseMatrix<int>::InnerIterator it(DC, k); it; ++it)
            dc = std::max(dc, double(std::abs(it.value())));
        record(out, os, tag + "n=" + std::to_string(n) + " D*C = 0", dc, 0.0);
      }
      const int chi = dim == 2 ? m.num_vertices() - m.num_edges() + m.num_cells()
                               : m.num_vertices() - m.num_edges() + m.num_faces() - m.num_cells();
      record(out, os, tag + "n=" + std::to_string(n) + " Euler characteristic - 1",
             std::abs(chi - 1), 0.0);
    }

    // Falk-Winther projection
    const int nc = dim == 2 ? 4 : 2, nf = dim == 2 ? 16 : 4;
    auto coarse = std::make_shared<const Mesh>(build_structured_mesh(dim, nc));
    auto fine = std::make_shared<const Mesh>(build_structured_mesh(dim, nf));
    auto pair = std::make_shared<const MeshPair>(coarse, fine);
    const ProjectionSet ps = assemble_PiE(*pair);
    const SparseOperator En = coarse_to_fine_embedding(*pair, Family::nedelec);
    SpMat PE = (ps.P * En).matrix();
    SpMat I(PE.rows(), PE.cols());
    I.setIdentity();
    record(out, os, tag + "|P Embed - I|_max", max_abs(SpMat(PE - I)), 1e-9);
    const SpMat lhs = (ps.P * gradient_incidence(*fine)).matrix();
    const SpMat rhs = (gradient_incidence(*coarse) * ps.PV).matrix();
    record(out, os, tag + "|P G_h - G_H PV|_max", max_abs(SpMat(lhs - rhs)), 1e-9);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> Pr = ps.P.matrix();
    double outside = 0;
    for (int e = 0; e < coarse->num_edges(); ++e) {
      const auto ids = refine_patch(*pair, extended_edge_patch(*coarse, e)).edges.ids;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Pr, e); it; ++it)
        if (std::abs(it.value()) > 1e-12 &&
            !std::binary_search(ids.begin(), ids.end(), static_cast<int>(it.col())))
          outside = std::max(outside, std::abs(it.value()));
    }
    record(out, os, tag + "P entries outside edge patches", outside, 0.0);
    record(out, os, tag + "z1 divergence identity", ps.max_z1_divergence_residual, 1e-10);

    // corrector constraints on one layer
    if (dim == 2) {
      const Checkerboard cb{nf / 2, 1.0, 0.001};
      const LodForms forms = make_forms(pair, cb, cb, ps.P);
      for (auto bc : {BoundaryCondition::natural, BoundaryCondition::essential}) {
        CorrectorRequest req;
        req.m = 1;
        req.bc = bc;
        const CorrectorResult cr = compute_correctors(forms, req);
        double res = 0;
        for (const auto& c : cr.basis.cells) res = std::max(res, c.constraint_residual);
        record(out, os, tag + "corrector |P w|_max (" + to_string(bc) + ")", res, 1e-8);
      }
    }
  }
  return out;
}

}  // namespace curlod
