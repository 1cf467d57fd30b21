// Python bindings: meshes, incidence matrices, the Falk-Winther projection,
// LOD experiment rows and the validation suite.

#include "curlod/error.hpp"
#include "curlod/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace curlod;

namespace {

SourceCorrection parse_source(const std::string& s) {
  if (s == "none") return SourceCorrection::none;
  if (s == "boundary") return SourceCorrection::boundary;
  if (s == "all") return SourceCorrection::all;
  throw Error("source_correction must be none|boundary|all");
}

ProjectionVariant parse_variant(const std::string& s) {
  if (s == "standard") return ProjectionVariant::standard;
  if (s == "zeroed") return ProjectionVariant::boundary_zeroed;
  throw Error("pi_variant must be standard|zeroed");
}

py::dict row_dict(const ExperimentRow& r) {
  py::dict d;
  d["example"] = r.example;
  d["dim"] = r.dim;
  d["j"] = r.j;
  d["H"] = r.H;
  d["m"] = r.m < 0 ? py::object(py::float_(INFINITY)) : py::object(py::int_(r.m));
  d["dof_coarse"] = r.dof_coarse;
  d["dof_fine"] = r.dof_fine;
  d["err_lod"] = r.err_lod;
  d["err_fem"] = r.err_fem;
  d["seconds"] = r.seconds;
  return d;
}

Eigen::MatrixXd vertex_array(const Mesh& m) {
  Eigen::MatrixXd X(m.num_vertices(), m.dim());
  for (int v = 0; v < m.num_vertices(); ++v) X.row(v) = m.vertex(v).head(m.dim()).transpose();
  return X;
}

Eigen::MatrixXi edge_array(const Mesh& m) {
  Eigen::MatrixXi E(m.num_edges(), 2);
  for (int e = 0; e < m.num_edges(); ++e) E.row(e) << m.edge(e)[0], m.edge(e)[1];
  return E;
}

Eigen::MatrixXi cell_array(const Mesh& m) {
  Eigen::MatrixXi C(m.num_cells(), m.dim() + 1);
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto vs = m.cell(c);
    for (int k = 0; k <= m.dim(); ++k) C(c, k) = vs[k];
  }
  return C;
}

}  // namespace

PYBIND11_MODULE(_curlod, mod) {
  mod.doc() = "LOD for curl-curl problems with checkerboard coefficients";

  py::register_exception<Error>(mod, "CurlodError", PyExc_RuntimeError);

  py::class_<Mesh, std::shared_ptr<Mesh>>(mod, "Mesh")
      .def_property_readonly("dim", &Mesh::dim)
      .def_property_readonly("subdivisions", &Mesh::subdivisions)
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_edges", &Mesh::num_edges)
      .def_property_readonly("num_faces", &Mesh::num_faces)
      .def_property_readonly("num_cells", &Mesh::num_cells)
      .def_property_readonly("vertices", &vertex_array)
      .def_property_readonly("edges", &edge_array, "edge vertex pairs (y2, y1)")
      .def_property_readonly("cells", &cell_array)
      .def("edge_on_boundary", &Mesh::edge_on_boundary)
      .def("dump", [](const Mesh& m) {
        std::ostringstream os;
        m.dump(os);
        return os.str();
      })
      .def("__repr__", [](const Mesh& m) {
        return "<Mesh dim=" + std::to_string(m.dim()) + " n=" + std::to_string(m.subdivisions()) +
               " edges=" + std::to_string(m.num_edges()) + ">";
      });

  mod.def(
      "structured_mesh",
      [](int dim, int n) { return std::make_shared<Mesh>(build_structured_mesh(dim, n)); },
      py::arg("dim"), py::arg("n"), "Uniform simplicial mesh of the unit square/cube, n cells per side");

  mod.def(
      "gradient_incidence", [](const Mesh& m) { return gradient_incidence(m).matrix(); },
      "vertices -> edges");
  mod.def(
      "curl_incidence", [](const Mesh& m) { return curl_incidence(m).matrix(); },
      "edges -> cells (2D) or faces (3D)");

  mod.def(
      "projection",
      [](int dim, int coarse_level, int fine_level, const std::string& variant) {
        auto coarse = std::make_shared<const Mesh>(build_structured_mesh(dim, 1 << coarse_level));
        auto fine = std::make_shared<const Mesh>(build_structured_mesh(dim, 1 << fine_level));
        const MeshPair pair(coarse, fine);
        ProjectionSet ps = assemble_PiE(pair);
        if (parse_variant(variant) == ProjectionVariant::boundary_zeroed)
          ps = zero_boundary_rows(ps, *coarse);
        return py::make_tuple(ps.P.matrix(), ps.PV.matrix());
      },
      py::arg("dim"), py::arg("coarse_level"), py::arg("fine_level"),
      py::arg("pi_variant") = "standard",
      "Falk-Winther edge projection P (fine -> coarse edges) and the nodal PV, as scipy.sparse");

  mod.def(
      "run",
      [](int example, int dim, std::vector<int> levels, std::vector<int> m, int ref_level,
         const std::string& source, const std::string& pi_variant, bool ideal, int boundary_layers,
         const std::string& cache_dir) {
        ExperimentConfig cfg;
        cfg.example = example;
        cfg.dim = dim;
        cfg.levels = std::move(levels);
        cfg.m = m.empty() && !ideal ? default_m_schedule(cfg.levels) : std::move(m);
        cfg.ref_level = ref_level;
        cfg.source = parse_source(source);
        cfg.pi_variant = parse_variant(pi_variant);
        cfg.ideal = ideal;
        cfg.boundary_layers = boundary_layers;
        cfg.cache_dir = cache_dir;
        ExperimentReport rep;
        {
          py::gil_scoped_release nogil;
          rep = run_example(cfg);
        }
        py::list rows;
        for (const auto& r : rep.rows) rows.append(row_dict(r));
        py::dict out;
        out["rows"] = rows;
        out["slope_lod"] = rep.slope_lod;
        out["slope_fem"] = rep.slope_fem;
        std::ostringstream csv;
        write_csv(rep, csv);
        out["csv"] = csv.str();
        return out;
      },
      py::arg("example"), py::arg("dim") = 2, py::arg("levels"), py::arg("m") = std::vector<int>{},
      py::arg("ref_level") = 6, py::arg("source_correction") = "none",
      py::arg("pi_variant") = "standard", py::arg("ideal") = false,
      py::arg("boundary_layers") = 0, py::arg("cache_dir") = "",
      "Convergence study: LOD and coarse FEM errors against a fine reference");

  mod.def("fit_rate", &fit_rate, py::arg("H"), py::arg("err"),
          "Least-squares slope of log(err) against log(H)");

  mod.def("validate", [] {
    py::list out;
    for (const auto& c : validate()) {
      py::dict d;
      d["name"] = c.name;
      d["value"] = c.value;
      d["tolerance"] = c.tolerance;
      d["pass"] = c.pass;
      out.append(d);
    }
    return out;
  });

  mod.def("plot_script", &plot_script, py::arg("csv_path"));
}
