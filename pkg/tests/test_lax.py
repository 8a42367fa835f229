import numpy as np
import pytest

from pencil_lab.diagonal import BoundaryData, DiagonalModel, solve_S, solve_lame
from pencil_lab.grids import Chart
from pencil_lab.lax import (
    build_lax, build_lax_L1, gauge_L1_to_L2, gauge_residual,
    hypersurface_curvatures, induced_metric_residual, integrate_frame,
    weingarten_scaling_report, zero_curvature_residual,
)
from pencil_lab.march import MarchError

BD3 = {(0, 1): "0.2", (1, 0): "0.1*R1", (2, 0): "0.15",
       (0, 2): "0.1+0.05*R3", (1, 2): "0.2", (2, 1): "0.25"}
ETAS = [1.0, 2.0, 4.0]


@pytest.fixture(scope="module")
def chart():
    return Chart(3, ((0.0, 1.0),) * 3, (17,) * 3)


@pytest.fixture(scope="module")
def model():
    return DiagonalModel.constant(ETAS)


@pytest.fixture(scope="module")
def solved(model, chart):
    beta, _ = solve_S(model, BoundaryData.from_text(BD3, 3), chart)
    H = solve_lame(beta, chart, {0: "1", 1: "1", 2: "1"})
    return beta, H


def _zero_beta(chart):
    return {(i, j): np.zeros(chart.shape)
            for i in range(3) for j in range(3) if i != j}


def test_connection_entry_value():
    ch = Chart(2, ((0.0, 1.0), (0.0, 1.0)), (5, 5))
    model = DiagonalModel.constant([1.0, 3.0])
    beta = {(0, 1): np.ones(ch.shape), (1, 0): np.zeros(ch.shape)}
    conn = build_lax(model, beta, ch, 1.0)
    # weight sqrt((lam+eta_1)/(lam+eta_2)) = sqrt(2/4)
    assert conn.mats[1][2, 2, 0, 1] == pytest.approx(1 / np.sqrt(2))
    assert conn.mats[1][2, 2, 1, 0] == pytest.approx(-1 / np.sqrt(2))


def test_connection_is_skew(model, chart, solved):
    beta, _ = solved
    conn = build_lax(model, beta, chart, 0.5)
    for A in conn.mats:
        assert np.max(np.abs(A + np.swapaxes(A, -1, -2))) < 1e-12


def test_zero_beta_gives_zero_connection(model, chart):
    conn = build_lax(model, _zero_beta(chart), chart, 1.0)
    assert all(np.max(np.abs(A)) == 0.0 for A in conn.mats)


def test_pole_rejected(model, chart, solved):
    beta, _ = solved
    with pytest.raises(MarchError):
        build_lax(model, beta, chart, -1.0)
    with pytest.raises(MarchError):
        build_lax_L1(model, beta, chart, -2.5)


def test_gauges_coincide_for_unit_shifts(chart, solved):
    # when lam + eta_i = 1 for every i the two gauges are the same matrices
    beta, _ = solved
    model0 = DiagonalModel.constant([1.0, 1.0, 1.0])
    A = build_lax(model0, beta, chart, 0.0)
    B = build_lax_L1(model0, beta, chart, 0.0)
    worst = max(np.max(np.abs(a - b)) for a, b in zip(A.mats, B.mats))
    assert worst < 1e-14


def test_gauge_map_values():
    ch = Chart(2, ((0.0, 1.0), (0.0, 1.0)), (5, 5))
    model = DiagonalModel.constant([0.0, 3.0])
    psi = [np.ones(ch.shape), np.ones(ch.shape)]
    phi = gauge_L1_to_L2(psi, model, ch, 1.0)
    assert np.max(np.abs(phi[0] - 1.0)) < 1e-15
    assert np.max(np.abs(phi[1] - 2.0)) < 1e-15
    stacked = gauge_L1_to_L2(np.stack(psi, axis=-1), model, ch, 1.0)
    assert np.max(np.abs(stacked[..., 1] - 2.0)) < 1e-15


def test_gauge_transformation_residual(model, chart, solved):
    beta, _ = solved
    L1 = build_lax_L1(model, beta, chart, 1.0)
    L2 = build_lax(model, beta, chart, 1.0)
    assert gauge_residual(L1, L2, model, chart) < 1e-12
    with pytest.raises(ValueError):
        gauge_residual(L1, build_lax(model, beta, chart, 2.0), model, chart)


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 2.0, 5.0])
def test_zero_curvature_sweep(model, chart, solved, lam):
    beta, _ = solved
    conn = build_lax(model, beta, chart, lam)
    assert zero_curvature_residual(conn, chart) < 1e-5


def test_zero_curvature_refines_at_fourth_order(model):
    bd = BoundaryData.from_text(BD3, 3)
    res = []
    for m in (9, 17):
        ch = Chart(3, ((0.0, 1.0),) * 3, (m,) * 3)
        beta, _ = solve_S(model, bd, ch)
        res.append(zero_curvature_residual(build_lax(model, beta, ch, 1.0), ch))
    assert res[0] / res[1] > 12.0


def test_perturbed_coefficients_break_curvature(model, chart, solved):
    beta, _ = solved
    broken = dict(beta)
    broken[(0, 1)] = beta[(0, 1)] + 0.1
    conn = build_lax(model, broken, chart, 1.0)
    assert zero_curvature_residual(conn, chart) > 1e-2


def test_frame_of_zero_connection_is_cartesian(model, chart):
    beta = _zero_beta(chart)
    H = [np.ones(chart.shape)] * 3
    fs = integrate_frame(build_lax(model, beta, chart, 1.0), model, H, chart)
    assert np.max(np.abs(fs.phi - np.eye(3))) < 1e-12
    mesh = chart.mesh()
    for c in range(3):
        want = mesh[c] / np.sqrt(1.0 + ETAS[c])
        assert np.max(np.abs(fs.rvec[..., c] - want)) < 1e-12


def test_frame_orthogonality_and_metric(model, chart, solved):
    beta, H = solved
    fs = integrate_frame(build_lax(model, beta, chart, 1.0), model, H, chart)
    assert fs.ortho_drift < 1e-6
    assert induced_metric_residual(fs, model, H, chart) < 1e-5


def test_frame_rejects_wrong_gauge(model, chart, solved):
    beta, H = solved
    L1 = build_lax_L1(model, beta, chart, 1.0)
    with pytest.raises(ValueError):
        integrate_frame(L1, model, H, chart)


def test_non_orthogonal_frame_aborts(model, chart):
    # a connection with a symmetric part stretches the frame, so the
    # orthogonality guard fires
    from pencil_lab.lax import LaxConnection
    mats = [np.zeros(chart.shape + (3, 3)) for _ in range(3)]
    mats[0][..., 0, 0] = 0.5
    conn = LaxConnection(1.0, tuple(mats), "skew")
    H = [np.ones(chart.shape)] * 3
    with pytest.raises(MarchError):
        integrate_frame(conn, model, H, chart)


def test_flat_slice_has_zero_curvatures(model, chart):
    beta = _zero_beta(chart)
    H = [np.ones(chart.shape)] * 3
    ks = hypersurface_curvatures(model, beta, H, chart, 1.0)
    assert all(np.max(np.abs(k)) == 0.0 for k in ks)


def test_curvature_scaling_factor():
    ch = Chart(3, ((0.0, 1.0),) * 3, (9,) * 3)
    model = DiagonalModel.constant([0.25, 0.5, 1.0])
    bd = BoundaryData.from_text(BD3, 3)
    beta, _ = solve_S(model, bd, ch)
    H = solve_lame(beta, ch, {0: "1", 1: "1", 2: "1"})
    rep = weingarten_scaling_report(model, beta, H, ch, 3.0, 0.0)
    # sqrt((3 + 1)/(0 + 1)) = 2
    assert rep["scaling_factor_range"] == pytest.approx([2.0, 2.0])
    assert rep["closed_form_residual"] < 1e-6
    assert not rep["umbilic_flat_slice"]


def test_scaling_report_with_mesh_oracle(model, chart, solved):
    beta, H = solved
    fa = integrate_frame(build_lax(model, beta, chart, 1.0), model, H, chart)
    fb = integrate_frame(build_lax(model, beta, chart, 0.0), model, H, chart)
    rep = weingarten_scaling_report(model, beta, H, chart, 1.0, 0.0,
                                    frames=(fa, fb))
    assert rep["closed_form_residual"] < 1e-6
    assert rep["mesh_eigen_residual_a"] < 1e-3
    assert rep["mesh_eigen_residual_b"] < 1e-3


def test_umbilic_slice_is_flagged(model, chart):
    beta = _zero_beta(chart)
    H = [np.ones(chart.shape)] * 3
    rep = weingarten_scaling_report(model, beta, H, chart, 1.0, 0.0)
    assert rep["umbilic_flat_slice"]
    assert "vacuous" in rep["note"]
