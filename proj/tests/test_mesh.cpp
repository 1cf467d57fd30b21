#include <doctest.h>

#include "curlod/error.hpp"
#include "curlod/mesh.hpp"

#include <algorithm>
#include <set>
#include <sstream>

using namespace curlod;

namespace {

// Naive scan: cells containing vertex y.
std::vector<int> scan_vertex(const Mesh& m, int y) {
  std::vector<int> out;
  for (int c = 0; c < m.num_cells(); ++c)
    for (int v : m.cell(c))
      if (v == y) out.push_back(c);
  return out;
}

// Naive O(cells^2) vertex-adjacency closure.
std::vector<int> scan_closure(const Mesh& m, const std::vector<int>& cells) {
  std::vector<int> out;
  for (int c = 0; c < m.num_cells(); ++c) {
    bool touch = false;
    for (int d : cells)
      for (int a : m.cell(c))
        for (int b : m.cell(d)) touch |= a == b;
    if (touch) out.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("structured mesh entity counts") {
  auto m = build_structured_mesh(2, 1);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_cells() == 2);
  CHECK(m.num_edges() == 5);

  m = build_structured_mesh(2, 4);
  CHECK(m.num_vertices() == 25);
  CHECK(m.num_cells() == 32);
  CHECK(m.num_edges() == 56);

  m = build_structured_mesh(3, 1);
  CHECK(m.num_vertices() == 8);
  CHECK(m.num_cells() == 6);
  CHECK(m.num_edges() == 19);

  for (int n : {1, 2, 4, 8}) {
    const auto a = build_structured_mesh(2, n);
    CHECK(a.num_vertices() - a.num_edges() + a.num_cells() == 1);
  }
  for (int n : {1, 2, 3}) {
    const auto a = build_structured_mesh(3, n);
    CHECK(a.num_vertices() - a.num_edges() + a.num_faces() - a.num_cells() == 1);
  }
}

TEST_CASE("invalid mesh arguments throw") {
  CHECK_THROWS_AS(build_structured_mesh(4, 2), Error);
  CHECK_THROWS_AS(build_structured_mesh(2, 0), Error);
}

TEST_CASE("volumes, orientation and refinement") {
  for (int dim : {2, 3}) {
    const auto m = build_structured_mesh(dim, dim == 2 ? 4 : 2);
    double vol = 0;
    for (int c = 0; c < m.num_cells(); ++c) vol += m.cell_volume(c);
    CHECK(vol == doctest::Approx(1.0).epsilon(1e-12));
    for (int e = 0; e < m.num_edges(); ++e) {
      CHECK(m.edge_y2(e) < m.edge_y1(e));
      const double d = m.edge_tangent(e).dot(m.vertex(m.edge_y1(e)) - m.vertex(m.edge_y2(e)));
      CHECK(std::abs(d - m.edge_length(e)) < 1e-14);
    }
    const auto f = uniform_refine(m);
    CHECK(f.subdivisions() == 2 * m.subdivisions());
    REQUIRE(f.parent() != nullptr);
    double fv = 0;
    for (int c = 0; c < f.num_cells(); ++c) {
      fv += f.cell_volume(c);
      const int p = f.cell_parent()[c];
      for (int v : f.cell(c)) {
        const auto l = m.barycentric(p, f.vertex(v));
        for (int k = 0; k <= dim; ++k) CHECK(l[k] > -1e-12);
      }
    }
    CHECK(fv == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto r = uniform_refine(build_structured_mesh(2, 1));
  CHECK(r.num_cells() == 8);
  CHECK(uniform_refine(build_structured_mesh(2, 4)).num_edges() == 208);
}

TEST_CASE("nodal and extended edge patches match brute force") {
  const auto m = build_structured_mesh(2, 4);
  std::set<int> covered;
  for (int y = 0; y < m.num_vertices(); ++y) {
    const auto p = nodal_patch(m, y);
    CHECK(p.cells == scan_vertex(m, y));
    covered.insert(p.cells.begin(), p.cells.end());
  }
  CHECK(static_cast<int>(covered.size()) == m.num_cells());
  const int center = m.find_vertex({2, 2, 0});
  CHECK(nodal_patch(m, center).cells.size() == 6);

  const int diag = m.find_edge(m.find_vertex({1, 1, 0}), m.find_vertex({2, 2, 0}));
  REQUIRE(diag >= 0);
  CHECK(extended_edge_patch(m, diag).cells.size() == 10);
  for (int e = 0; e < m.num_edges(); ++e) {
    auto a = scan_vertex(m, m.edge_y1(e));
    auto b = scan_vertex(m, m.edge_y2(e));
    std::vector<int> u;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
    CHECK(extended_edge_patch(m, e).cells == u);
  }
}

TEST_CASE("layer patches") {
  const auto m = build_structured_mesh(2, 8);
  const int t = m.locate(Point(0.45, 0.52, 0));
  CHECK(layer_patch(m, t, 0).cells == std::vector<int>{t});
  CHECK(layer_patch(m, t, 1).cells == scan_closure(m, {t}));
  std::vector<int> prev;
  for (int k = 0; k < 6; ++k) {
    const auto p = layer_patch(m, t, k);
    CHECK(std::includes(p.cells.begin(), p.cells.end(), prev.begin(), prev.end()));
    prev = p.cells;
  }
  CHECK(static_cast<int>(layer_patch(m, t, 16).cells.size()) == m.num_cells());
  CHECK(static_cast<int>(layer_patch(m, 0, kWholeDomain).cells.size()) == m.num_cells());
  const auto m3 = build_structured_mesh(3, 2);
  CHECK(static_cast<int>(layer_patch(m3, 0, 6).cells.size()) == m3.num_cells());
  CHECK(layer_patch(m3, 5, 1).cells == scan_closure(m3, {5}));
}

TEST_CASE("patch boundary classification") {
  const auto m = build_structured_mesh(2, 4);
  // corner patch touches Gamma and the interior
  const auto p = nodal_patch(m, 0);
  for (int i = 0; i < p.edges.size(); ++i) {
    const int e = p.edges.ids[i];
    const bool on_gamma = m.edge_on_boundary(e);
    if (p.edges.where[i] == EntityLocation::boundary_gamma) CHECK(on_gamma);
    if (on_gamma) CHECK(p.edges.where[i] != EntityLocation::interior);
  }
  // whole-domain patch: no inner boundary
  const auto w = layer_patch(m, 0, kWholeDomain);
  for (auto loc : w.edges.where) CHECK(loc != EntityLocation::boundary_inner);
  // interior patch: no Gamma contact
  const auto q = nodal_patch(m, m.find_vertex({2, 2, 0}));
  for (auto loc : q.edges.where) CHECK(loc != EntityLocation::boundary_gamma);
}

TEST_CASE("mesh dump lists every family") {
  const auto m = build_structured_mesh(2, 1);
  std::ostringstream os;
  m.dump(os);
  const std::string s = os.str();
  CHECK(s.find("vertices") != std::string::npos);
  CHECK(s.find("cells") != std::string::npos);
  CHECK(s.find("edges") != std::string::npos);
}
