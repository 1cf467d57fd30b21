#include <doctest.h>

#include "curlod/assembly.hpp"
#include "curlod/error.hpp"
#include "curlod/falk_winther.hpp"

#include <random>
#include <sstream>

using namespace curlod;

namespace {

struct Pair {
  std::shared_ptr<const Mesh> coarse, fine;
  MeshPair pair;
};

Pair make_pair(int dim, int nc, int nf) {
  auto c = std::make_shared<const Mesh>(build_structured_mesh(dim, nc));
  auto f = std::make_shared<const Mesh>(build_structured_mesh(dim, nf));
  return {c, f, MeshPair(c, f)};
}

double max_abs(const Eigen::MatrixXd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

Eigen::MatrixXd dense(const SparseOperator& a) { return Eigen::MatrixXd(a.matrix()); }

}  // namespace

TEST_CASE("z0 and its edge differences") {
  const auto m = build_structured_mesh(2, 4);
  const int y = m.find_vertex({2, 2, 0});
  const Eigen::VectorXd z = compute_z0(m, y);
  double integral = 0;
  for (int c = 0; c < m.num_cells(); ++c) integral += z[c] * m.cell_volume(c);
  CHECK(std::abs(integral - 1.0) < 1e-14);
  CHECK(std::abs(z[nodal_patch(m, y).cells[0]] - 1.0 / (6 * m.cell_volume(0))) < 1e-12);
  for (int e = 0; e < m.num_edges(); ++e) {
    const Eigen::VectorXd d = delta_z0(m, e);
    double s = 0;
    for (int c : extended_edge_patch(m, e).cells) s += d[c] * m.cell_volume(c);
    CHECK(std::abs(s) < 1e-14);
  }
}

TEST_CASE("z1 solves the divergence problem") {
  for (int dim : {2, 3}) {
    const auto m = build_structured_mesh(dim, dim == 2 ? 4 : 2);
    for (int e = 0; e < m.num_edges(); ++e) {
      const auto z = compute_z1_E(m, e);
      CHECK(z.divergence_residual <= 1e-10);
      CHECK(z.orthogonality_residual <= 1e-10);
    }
  }
}

TEST_CASE("z1 integration by parts against patch hats") {
  // (z1, grad v) = ((delta z0)_E, v) for v with zero trace on the patch
  const auto m = build_structured_mesh(2, 4);
  const int e = m.find_edge(m.find_vertex({1, 1, 0}), m.find_vertex({2, 2, 0}));
  const auto z = compute_z1_E(m, e);
  const auto patch = extended_edge_patch(m, e);
  const Eigen::VectorXd dz = delta_z0(m, e);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m.num_vertices());
    for (int i = 0; i < patch.vertices.size(); ++i)
      if (!patch.vertices.on_patch_boundary(i)) v[patch.vertices.ids[i]] = u(rng);
    double lhs = 0, rhs = 0;
    for (int c : patch.cells) {
      const auto g = cell_geometry(m, c);
      Point grad = Point::Zero();
      double mean = 0;
      auto vv = m.cell(c);
      for (int k = 0; k < 3; ++k) {
        grad += v[vv[k]] * g.grad[k];
        mean += v[vv[k]] / 3;
      }
      LocalBasis b;
      evaluate_basis(m, c, g, Family::raviart_thomas, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0}, b);
      Point zc = Point::Zero();
      for (int i = 0; i < b.count; ++i) {
        auto it = std::lower_bound(z.facets.begin(), z.facets.end(), b.dof[i]);
        if (it != z.facets.end() && *it == b.dof[i]) zc += z.flux[it - z.facets.begin()] * b.value[i];
      }
      lhs += g.volume * zc.dot(grad);  // z1 affine, grad constant: centroid rule exact
      rhs += g.volume * dz[c] * mean;
    }
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("Q1y reproduces coarse gradients") {
  auto p = make_pair(2, 4, 8);
  const int y = p.coarse->find_vertex({1, 2, 0});
  const auto blk = assemble_Q1y(p.pair, y);
  const auto EG = coarse_to_fine_embedding(p.pair, Family::nedelec) * gradient_incidence(*p.coarse);
  const Eigen::MatrixXd egd = dense(EG);
  for (int w : blk.coarse_vertices) {
    Eigen::VectorXd u(blk.fine_dofs.size());
    for (std::size_t i = 0; i < blk.fine_dofs.size(); ++i) u[i] = egd(blk.fine_dofs[i], w);
    const Eigen::VectorXd q = blk.Q * u;
    // lambda_w restricted to the patch minus its patch mean
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(blk.coarse_vertices.size());
    double mean = 0, area = 0;
    for (int c : nodal_patch(*p.coarse, y).cells) {
      area += p.coarse->cell_volume(c);
      for (int v : p.coarse->cell(c))
        if (v == w) mean += p.coarse->cell_volume(c) / 3;
    }
    for (std::size_t i = 0; i < lam.size(); ++i)
      lam[i] = (blk.coarse_vertices[i] == w ? 1.0 : 0.0) - mean / area;
    CHECK(max_abs(q - lam) < 1e-11);
  }
  // mean constraint holds row-wise
  Eigen::RowVectorXd C = Eigen::RowVectorXd::Zero(blk.coarse_vertices.size());
  for (int c : nodal_patch(*p.coarse, y).cells)
    for (int v : p.coarse->cell(c)) {
      const auto it = std::lower_bound(blk.coarse_vertices.begin(), blk.coarse_vertices.end(), v);
      C[it - blk.coarse_vertices.begin()] += p.coarse->cell_volume(c) / 3;
    }
  CHECK(max_abs(C * blk.Q) < 1e-11);
}

TEST_CASE("Q1E reproduces coarse functions") {
  for (int dim : {2, 3}) {
    auto p = make_pair(dim, 2, 4);
    const Eigen::MatrixXd E = dense(coarse_to_fine_embedding(p.pair, Family::nedelec));
    for (int e : {0, p.coarse->num_edges() / 2}) {
      const auto blk = assemble_Q1E(p.pair, e);
      for (std::size_t k = 0; k < blk.coarse_edges.size(); ++k) {
        Eigen::VectorXd u(blk.fine_edges.size());
        for (std::size_t i = 0; i < blk.fine_edges.size(); ++i)
          u[i] = E(blk.fine_edges[i], blk.coarse_edges[k]);
        Eigen::VectorXd expect = Eigen::VectorXd::Zero(blk.coarse_edges.size());
        expect[k] = 1.0;
        CHECK(max_abs(blk.Q * u - expect) < 1e-9);
      }
      CHECK(max_abs(blk.Q * Eigen::VectorXd::Zero(blk.fine_edges.size())) == 0.0);
    }
  }
}

TEST_CASE("projection, commuting diagram and locality") {
  for (int dim : {2, 3}) {
    auto p = dim == 2 ? make_pair(2, 4, 16) : make_pair(3, 2, 4);
    const auto ps = assemble_PiE(p.pair);
    const Eigen::MatrixXd En = dense(coarse_to_fine_embedding(p.pair, Family::nedelec));
    const Eigen::MatrixXd P = dense(ps.P);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P.rows(), P.rows());
    CHECK(max_abs(P * En - I) <= 1e-9);
    const Eigen::MatrixXd lhs = P * dense(gradient_incidence(*p.fine));
    const Eigen::MatrixXd rhs = dense(gradient_incidence(*p.coarse)) * dense(ps.PV);
    CHECK(max_abs(lhs - rhs) <= 1e-9);
    const Eigen::MatrixXd s1 = dense(ps.S1) * dense(gradient_incidence(*p.fine));
    CHECK(max_abs(s1 - rhs) <= 1e-9);
    const Eigen::MatrixXd Es = dense(coarse_to_fine_embedding(p.pair, Family::lagrange));
    CHECK(max_abs(dense(ps.PV) * Es - Eigen::MatrixXd::Identity(Es.cols(), Es.cols())) <= 1e-9);
    CHECK(max_abs(dense(ps.PV) * Eigen::VectorXd::Ones(Es.rows()) -
                  Eigen::VectorXd::Ones(Es.cols())) <= 1e-11);
    CHECK(ps.max_z1_divergence_residual <= 1e-10);
    for (int e = 0; e < p.coarse->num_edges(); ++e) {
      const auto fine = refine_patch(p.pair, extended_edge_patch(*p.coarse, e)).edges.ids;
      for (int j = 0; j < P.cols(); ++j)
        if (std::abs(P(e, j)) > 1e-12) CHECK(std::binary_search(fine.begin(), fine.end(), j));
    }
  }
}

TEST_CASE("perturbing P breaks the commuting diagram") {
  auto p = make_pair(2, 2, 4);
  const auto ps = assemble_PiE(p.pair);
  Eigen::MatrixXd P = dense(ps.P);
  P(1, 3) += 1e-3;
  const Eigen::MatrixXd lhs = P * dense(gradient_incidence(*p.fine));
  const Eigen::MatrixXd rhs = dense(gradient_incidence(*p.coarse)) * dense(ps.PV);
  CHECK(max_abs(lhs - rhs) > 1e-9);
}

TEST_CASE("boundary-zeroed variant") {
  auto p = make_pair(2, 2, 4);
  const auto ps = assemble_PiE(p.pair);
  const auto z = zero_boundary_rows(ps, *p.coarse);
  CHECK(z.variant == ProjectionVariant::boundary_zeroed);
  const Eigen::MatrixXd a = dense(ps.P), b = dense(z.P);
  for (int e = 0; e < p.coarse->num_edges(); ++e) {
    if (p.coarse->edge_on_boundary(e))
      CHECK(max_abs(b.row(e)) == 0.0);
    else
      CHECK((a.row(e).array() == b.row(e).array()).all());
  }
}

TEST_CASE("M1 rows against a direct quadrature path") {
  auto p = make_pair(2, 1, 2);
  const auto M1 = dense(assemble_M1(p.pair));
  // direct: evaluate z1 and fine psi at fine-cell quadrature points
  const auto& cm = *p.coarse;
  const auto& fm = *p.fine;
  for (int e = 0; e < cm.num_edges(); ++e) {
    const auto z = compute_z1_E(cm, e);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(fm.num_edges());
    for (int fc = 0; fc < fm.num_cells(); ++fc) {
      const auto gf = cell_geometry(fm, fc);
      for (int q = 0; q < 3; ++q) {
        std::array<double, 4> l{1.0 / 6, 1.0 / 6, 1.0 / 6, 0};
        l[q] = 2.0 / 3;
        const Point x = gf.point(l);
        const int cc = cm.locate(gf.point({1.0 / 3, 1.0 / 3, 1.0 / 3, 0}));
        const auto gc = cell_geometry(cm, cc);
        LocalBasis bc, bf;
        evaluate_basis(cm, cc, gc, Family::raviart_thomas, gc.lambda(x), bc);
        evaluate_basis(fm, fc, gf, Family::nedelec, l, bf);
        Point zx = Point::Zero();
        for (int i = 0; i < bc.count; ++i) {
          auto it = std::lower_bound(z.facets.begin(), z.facets.end(), bc.dof[i]);
          if (it != z.facets.end() && *it == bc.dof[i]) zx += z.flux[it - z.facets.begin()] * bc.value[i];
        }
        for (int j = 0; j < bf.count; ++j) row[bf.dof[j]] += gf.volume / 3 * zx.dot(bf.value[j]);
      }
    }
    CHECK(max_abs(M1.row(e).transpose() - row) < 1e-12);
  }
}

TEST_CASE("M1 of fine gradients") {
  // (z1_E, grad v) = ((delta z0)_E, v) for fine Lagrange v
  auto p = make_pair(2, 2, 4);
  const Eigen::MatrixXd lhs = dense(assemble_M1(p.pair)) * dense(gradient_incidence(*p.fine));
  const auto& cm = *p.coarse;
  const auto& fm = *p.fine;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(cm.num_edges(), fm.num_vertices());
  for (int e = 0; e < cm.num_edges(); ++e) {
    const Eigen::VectorXd dz = delta_z0(cm, e);
    for (int fc = 0; fc < fm.num_cells(); ++fc)
      for (int v : fm.cell(fc)) rhs(e, v) += dz[p.pair.coarse_cell(fc)] * fm.cell_volume(fc) / 3;
  }
  CHECK(max_abs(lhs - rhs) < 1e-12);
}

TEST_CASE("triplet dump") {
  auto p = make_pair(2, 1, 2);
  const auto ps = assemble_PiE(p.pair, {false, false});
  std::ostringstream os;
  write_triplets(ps.P, os);
  std::istringstream is(os.str());
  int r, c;
  double v;
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(ps.P.rows(), ps.P.cols());
  while (is >> r >> c >> v) back(r, c) = v;
  CHECK((back.array() == dense(ps.P).array()).all());
}

TEST_CASE("stability proxy") {
  auto p = make_pair(2, 2, 8);
  const auto ps = assemble_PiE(p.pair, {false, false});
  const auto one = Checkerboard::constant(1.0);
  const Eigen::MatrixXd Bh = dense(assemble_B(*p.fine, one, one));
  const Eigen::MatrixXd BH = dense(assemble_B(*p.coarse, one, one));
  const Eigen::MatrixXd P = dense(ps.P);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int s = 0; s < 200; ++s) {
    Eigen::VectorXd v(Bh.rows());
    for (auto& x : v) x = nd(rng);
    const Eigen::VectorXd pv = P * v;
    worst = std::max(worst, std::sqrt(pv.dot(BH * pv) / v.dot(Bh * v)));
  }
  MESSAGE("stability ratio " << worst);
  CHECK(worst < 100);
}
