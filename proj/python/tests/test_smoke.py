import math

import numpy as np
import pytest

import curlod


def test_mesh_counts_and_exact_sequence():
    m = curlod.structured_mesh(2, 4)
    assert (m.num_vertices, m.num_edges, m.num_cells) == (25, 56, 32)
    assert m.num_vertices - m.num_edges + m.num_cells == 1
    assert m.vertices.shape == (25, 2)
    assert m.cells.shape == (32, 3)
    G = curlod.gradient_incidence(m)
    C = curlod.curl_incidence(m)
    assert G.shape == (56, 25)
    assert abs(C @ G).max() == 0.0

    m3 = curlod.structured_mesh(3, 2)
    assert m3.num_cells == 6 * 8
    assert m3.num_vertices - m3.num_edges + m3.num_faces - m3.num_cells == 1
    assert m.dump().startswith("mesh dim 2 n 4")


def test_projection_is_a_commuting_left_inverse():
    P, PV = curlod.projection(2, 1, 3)
    coarse, fine = curlod.structured_mesh(2, 2), curlod.structured_mesh(2, 8)
    assert P.shape == (coarse.num_edges, fine.num_edges)
    # coarse gradients are reproduced: P G_h = G_H PV
    lhs = P @ curlod.gradient_incidence(fine)
    rhs = curlod.gradient_incidence(coarse) @ PV
    assert abs((lhs - rhs).toarray()).max() <= 1e-9
    Pz, _ = curlod.projection(2, 1, 3, pi_variant="zeroed")
    for e in range(coarse.num_edges):
        if coarse.edge_on_boundary(e):
            assert Pz.getrow(e).nnz == 0 or abs(Pz.getrow(e)).max() == 0.0


def test_run_exact_limit_and_csv():
    out = curlod.run(2, levels=[2], ref_level=4, ideal=True, source_correction="all")
    row = out["rows"][0]
    assert row["m"] == math.inf
    assert row["err_lod"] <= 1e-8
    assert out["csv"].startswith("example,dim,j,H,m,dof_coarse,dof_fine,err_lod,err_fem,seconds")


def test_run_levels_and_rates():
    out = curlod.run(1, levels=[1, 2], m=[1, 1], ref_level=4)
    H = [r["H"] for r in out["rows"]]
    assert H[0] > H[1]
    errs = [r["err_lod"] for r in out["rows"]]
    assert out["slope_lod"] == pytest.approx(curlod.fit_rate(H, errs))
    assert all(0 < e < 1.5 for e in errs)


def test_errors_are_python_exceptions():
    with pytest.raises(curlod.CurlodError):
        curlod.run(1, levels=[3], m=[1], ref_level=3)
    with pytest.raises(curlod.CurlodError):
        curlod.run(1, levels=[1], source_correction="some")


def test_validate_and_fit_rate():
    assert all(c["pass"] for c in curlod.validate())
    H = np.array([0.5, 0.25, 0.125])
    assert curlod.fit_rate(list(H), list(2 * H)) == pytest.approx(1.0)
    assert "matplotlib" in curlod.plot_script("x.csv")
