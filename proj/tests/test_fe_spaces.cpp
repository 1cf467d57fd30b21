#include <doctest.h>

#include "curlod/error.hpp"
#include "curlod/fe_spaces.hpp"
#include "curlod/quadrature.hpp"

#include <random>

using namespace curlod;

namespace {

std::shared_ptr<const Mesh> mesh_ptr(int dim, int n) {
  return std::make_shared<const Mesh>(build_structured_mesh(dim, n));
}

Point face_area_normal(const Mesh& m, int f) {
  const auto v = m.facet_vertices(f);
  if (m.dim() == 2) {
    const Point d = m.vertex(v[1]) - m.vertex(v[0]);
    return {d.y(), -d.x(), 0};
  }
  return 0.5 * (m.vertex(v[1]) - m.vertex(v[0])).cross(m.vertex(v[2]) - m.vertex(v[0]));
}

Point facet_centroid(const Mesh& m, int f) {
  Point c = Point::Zero();
  const auto v = m.facet_vertices(f);
  for (int i : v) c += m.vertex(i);
  return c / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("dof maps") {
  const auto m = mesh_ptr(2, 4);
  const auto s = dof_map(m, Family::lagrange);
  CHECK(s.count == 25);
  CHECK(s.boundary.size() == 16);
  const auto n = dof_map(m, Family::nedelec);
  CHECK(n.count == 56);
  for (int e = 0; e < n.count; ++e) CHECK(static_cast<bool>(n.is_boundary[e]) == m->edge_on_boundary(e));
  CHECK(dof_map(m, Family::piecewise_constant).count == 32);
  CHECK(dof_map(m, Family::raviart_thomas).count == 56);
  const auto m3 = mesh_ptr(3, 2);
  CHECK(dof_map(m3, Family::raviart_thomas).count == m3->num_faces());
}

TEST_CASE("incidence matrices form a complex in integer arithmetic") {
  for (int dim : {2, 3}) {
    for (int n : {1, 2, 4}) {
      const auto m = build_structured_mesh(dim, n);
      const Eigen::SparseMatrix<int> G = gradient_signs(m);
      const Eigen::SparseMatrix<int> C = curl_signs(m);
      const Eigen::SparseMatrix<int> CG = C * G;
      int worst = 0;
      for (int k = 0; k < CG.outerSize(); ++k)
        for (Eigen::SparseMatrix<int>::InnerIterator it(CG, k); it; ++it)
          worst = std::max(worst, std::abs(it.value()));
      CHECK(worst == 0);
      if (dim == 3) {
        const Eigen::SparseMatrix<int> DC = divergence_signs(m) * C;
        worst = 0;
        for (int k = 0; k < DC.outerSize(); ++k)
          for (Eigen::SparseMatrix<int>::InnerIterator it(DC, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
        CHECK(worst == 0);
      }
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_vertices());
      CHECK(gradient_incidence(m).apply(ones).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK_THROWS_AS(divergence_signs(build_structured_mesh(2, 2)), Error);
}

TEST_CASE("gradient column support") {
  const auto m = build_structured_mesh(2, 4);
  const auto G = gradient_incidence(m).matrix();
  const int z = m.find_vertex({2, 1, 0});
  CHECK(G.col(z).nonZeros() == static_cast<int>(m.vertex_edges(z).size()));
  CHECK(m.vertex_edges(z).size() == 6);
  for (Eigen::SparseMatrix<double>::InnerIterator it(G, z); it; ++it)
    CHECK(it.value() == (m.edge_y1(static_cast<int>(it.row())) == z ? 1.0 : -1.0));
}

TEST_CASE("incidence agrees with basis derivatives") {
  for (int dim : {2, 3}) {
    const auto m = build_structured_mesh(dim, 2);
    const auto C = curl_incidence(m).matrix();
    LocalBasis b;
    for (int c = 0; c < m.num_cells(); ++c) {
      const auto g = cell_geometry(m, c);
      evaluate_basis(m, c, g, Family::nedelec, {0.25, 0.25, 0.25, 0.25}, b);
      for (int i = 0; i < b.count; ++i) {
        if (dim == 2) {
          CHECK(std::abs(b.deriv[i].z() - C.coeff(c, b.dof[i])) < 1e-12);
        } else {
          for (int f : m.cell_faces(c))
            CHECK(std::abs(b.deriv[i].dot(face_area_normal(m, f)) - C.coeff(f, b.dof[i])) < 1e-12);
        }
      }
      LocalBasis r;
      evaluate_basis(m, c, g, Family::raviart_thomas, {0.25, 0.25, 0.25, 0.25}, r);
      if (dim == 3) {
        const auto D = divergence_incidence(m).matrix();
        for (int i = 0; i < r.count; ++i)
          CHECK(std::abs(r.deriv[i].x() - D.coeff(c, r.dof[i])) < 1e-12);
      }
      // unit flux of every RT basis function through its own facet
      for (int i = 0; i < r.count; ++i) {
        const int f = r.dof[i];
        const auto lam = g.lambda(facet_centroid(m, f));
        LocalBasis q;
        evaluate_basis(m, c, g, Family::raviart_thomas, lam, q);
        CHECK(std::abs(q.value[i].dot(face_area_normal(m, f)) - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("2D curl of a rotation interpolant") {
  const auto m = build_structured_mesh(2, 4);
  const auto u = interpolate_nedelec(m, [](const Point& x) { return Point(-x.y(), x.x(), 0); });
  const Eigen::VectorXd c = curl_incidence(m).apply(u);
  CHECK((c.array() - 2.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("3D divergence of flux interpolants") {
  const auto m = build_structured_mesh(3, 2);
  auto flux = [&](auto field) {
    Eigen::VectorXd u(m.num_faces());
    for (int f = 0; f < m.num_faces(); ++f) u[f] = field(facet_centroid(m, f)).dot(face_area_normal(m, f));
    return u;
  };
  const auto D = divergence_incidence(m);
  const Eigen::VectorXd d0 = D.apply(flux([](const Point&) { return Point(0.3, -1.0, 2.0); }));
  CHECK(d0.cwiseAbs().maxCoeff() < 1e-12);
  // div (x, 2y, 3z) = 6; volume-weighted sum equals the boundary flux 6
  const Eigen::VectorXd d1 =
      D.apply(flux([](const Point& x) { return Point(x.x(), 2 * x.y(), 3 * x.z()); }));
  CHECK((d1.array() - 6.0).abs().maxCoeff() < 1e-12);
  double total = 0;
  for (int c = 0; c < m.num_cells(); ++c) total += m.cell_volume(c) * d1[c];
  CHECK(total == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("Nedelec basis duality on random edges") {
  std::mt19937 rng(7);
  for (int dim : {2, 3}) {
    const auto m = build_structured_mesh(dim, 3);
    std::vector<double> gx, gw;
    gauss_legendre(3, gx, gw);
    for (int s = 0; s < 20; ++s) {
      const int c = std::uniform_int_distribution<int>(0, m.num_cells() - 1)(rng);
      const auto g = cell_geometry(m, c);
      auto edges = m.cell_edges(c);
      for (int k = 0; k < m.edges_per_cell(); ++k) {
        const int e2 = edges[k];
        const Point a = m.vertex(m.edge_y2(e2)), b = m.vertex(m.edge_y1(e2));
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.edges_per_cell());
        for (int q = 0; q < 3; ++q) {
          LocalBasis bs;
          evaluate_basis(m, c, g, Family::nedelec, g.lambda(a + gx[q] * (b - a)), bs);
          for (int i = 0; i < bs.count; ++i) acc[i] += gw[q] * bs.value[i].dot(b - a);
        }
        for (int i = 0; i < m.edges_per_cell(); ++i)
          CHECK(std::abs(acc[i] - (i == k ? 1.0 : 0.0)) < 1e-12);
      }
    }
  }
}

TEST_CASE("coarse-to-fine embeddings") {
  const auto c = mesh_ptr(2, 2);
  const auto f = std::make_shared<const Mesh>(uniform_refine(*c));
  const MeshPair pair(c, f);
  const auto S = coarse_to_fine_embedding(pair, Family::lagrange).matrix();
  for (int k = 0; k < S.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(S, k); it; ++it)
      CHECK((it.value() == 1.0 || it.value() == 0.5));
  const Eigen::VectorXd ones = S * Eigen::VectorXd::Ones(c->num_vertices());
  CHECK((ones.array() - 1.0).abs().maxCoeff() < 1e-14);

  // grad commutes with embedding: G_h E_S = E_N G_H
  for (int dim : {2, 3}) {
    const auto cm = mesh_ptr(dim, 2);
    const auto fm = std::make_shared<const Mesh>(uniform_refine(*cm));
    const MeshPair p(cm, fm);
    const auto lhs = gradient_incidence(*fm) * coarse_to_fine_embedding(p, Family::lagrange);
    const auto rhs = coarse_to_fine_embedding(p, Family::nedelec) * gradient_incidence(*cm);
    CHECK(Eigen::MatrixXd(lhs.matrix() - rhs.matrix()).cwiseAbs().maxCoeff() < 1e-13);
    const auto lc = curl_incidence(*fm) * coarse_to_fine_embedding(p, Family::nedelec);
    const Family cf = dim == 2 ? Family::piecewise_constant : Family::raviart_thomas;
    const auto rc = coarse_to_fine_embedding(p, cf) * curl_incidence(*cm);
    CHECK(Eigen::MatrixXd(lc.matrix() - rc.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    if (dim == 3) {
      const auto ld = divergence_incidence(*fm) * coarse_to_fine_embedding(p, Family::raviart_thomas);
      const auto rd = coarse_to_fine_embedding(p, Family::piecewise_constant) * divergence_incidence(*cm);
      CHECK(Eigen::MatrixXd(ld.matrix() - rd.matrix()).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("operator tags are checked") {
  const auto m = build_structured_mesh(2, 2);
  const auto G = gradient_incidence(m);
  CHECK_THROWS_AS(G * G, Error);
  CHECK_THROWS_AS(G.apply(Eigen::VectorXd::Zero(3)), Error);
  CHECK_NOTHROW(curl_incidence(m) * G);
}
