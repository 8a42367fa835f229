import numpy as np
import pytest

from pencil_lab.grids import Chart
from pencil_lab.march import MarchError
from pencil_lab.surface import (
    CurvatureData, SurfaceModel, constant_curvature_check,
    lax_residuals_3x3_2x2, mesh_nontriviality, pc_residual,
    reconstruct_family, seed_surface_model, solve_codazzi,
    solve_surface_system, surface_system_residual, weingarten_family_compare,
)


@pytest.fixture(scope="module")
def seed():
    return seed_surface_model()


@pytest.fixture(scope="module")
def radii(seed):
    G11, G22 = seed.shifted_form(0.0)
    return solve_codazzi(G11, G22, "2+2*R1", "2.5", seed.chart)


@pytest.fixture(scope="module")
def family(seed, radii):
    return reconstruct_family(seed, radii)


def test_seed_validates_cleanly(seed):
    assert seed.validate() == []


def test_validate_flags_broken_inputs():
    ch = Chart(2, ((0.5, 1.5), (0.0, 1.0)), (17, 17))
    bad = SurfaceModel.from_text("1", "R1^2", "5-R1^2+3*R2^2", "1+R2^2",
                                 ch, (0.0,))
    assert any("eta1" in p for p in bad.validate())
    pole = SurfaceModel.from_text("1", "R1^2", "5-R1^2", "1+R2^2", ch, (-6.0,))
    assert any("pole" in p for p in pole.validate())
    curved = SurfaceModel.from_text("1", "sin(R1)^2", "1", "1", ch, (0.0,))
    assert any("not flat" in p for p in curved.validate())


def test_shifted_forms_have_unit_curvature(seed):
    rep = constant_curvature_check(seed)
    assert set(rep) == {0.0, 0.5, 1.0}
    assert all(v < 1e-12 for v in rep.values())


def test_sphere_metric_reports_shift_as_deviation():
    # with eta = 1 the shifted form scales the round metric by 1/(1+lam),
    # so its curvature is 1 + lam and the deviation equals lam exactly
    ch = Chart(2, ((0.5, 1.5), (0.0, 1.0)), (17, 17))
    model = SurfaceModel.from_text("1", "sin(R1)^2", "1", "1", ch,
                                   (0.0, 0.25, 0.5))
    rep = constant_curvature_check(model)
    for lam, dev in rep.items():
        assert dev == pytest.approx(lam, abs=1e-10)


def test_curvature_check_rejects_pole(seed):
    bad = SurfaceModel(seed.g11, seed.g22, seed.eta1, seed.eta2,
                       seed.chart, (-6.0,))
    with pytest.raises(MarchError):
        constant_curvature_check(bad)


def test_transport_residual_trivial_case():
    ch = Chart(2, ((0.0, 1.0), (0.0, 1.0)), (9, 9))
    assert pc_residual("1", "1", 2.0, 3.0, ch) < 1e-12


def test_transport_residual_umbilic_guard():
    ch = Chart(2, ((0.0, 1.0), (0.0, 1.0)), (9, 9))
    with pytest.raises(MarchError):
        pc_residual("1", "1", 2.0, 2.0, ch)


def test_codazzi_solution_matches_closed_form(seed, radii):
    # with the seed forms the transport equations are solved exactly by the
    # polynomial radii k1 = 2 + 2 R1, k2 = 2 + R1
    R1 = seed.chart.mesh()[0]
    assert np.max(np.abs(radii.k1 - (2 + 2 * R1))) < 1e-10
    assert np.max(np.abs(radii.k2 - (2 + R1))) < 1e-10
    assert radii.pc < 1e-10


def test_codazzi_rejects_inconsistent_boundary(seed):
    G11, G22 = seed.shifted_form(0.0)
    with pytest.raises(MarchError):
        solve_codazzi(G11, G22, "2+2*R1+R2", "2.5", seed.chart)


def test_structure_residual_examples():
    ch = Chart(2, ((0.5, 1.5), (0.0, 1.0)), (17, 17))
    zeros = np.zeros(ch.shape)
    assert surface_system_residual(zeros, zeros, zeros, zeros,
                                   "1", "2", ch) == (0.0, 0.0, 0.0, 0.0)
    r = surface_system_residual("1", "1", 0.0, 0.0, "1", "2", ch)
    assert max(r[:3]) < 1e-12
    assert r[3] == pytest.approx(1.0)
    r = surface_system_residual("1", "R1", "1", "0",
                                "5-R1^2", "1+R2^2", ch)
    assert max(r) < 1e-12


def test_solve_surface_system_recovers_seed():
    ch = Chart(2, ((0.5, 1.5), (0.0, 1.0)), (17, 17))
    sol = solve_surface_system("5-R1^2", "1+R2^2", ch,
                               b12_line="1", b21_line="0",
                               h1_line="1", h2_line="0.5")
    R1 = ch.mesh()[0]
    assert np.max(np.abs(sol["H2"] - R1)) < 1e-10
    assert np.max(np.abs(sol["b12"] - 1.0)) < 1e-10
    assert np.max(np.abs(sol["b21"])) < 1e-10
    assert max(sol["residuals"]) < 1e-8


def test_solve_surface_system_generic_data():
    res = []
    for m in (17, 33):
        ch = Chart(2, ((0.5, 1.2), (0.0, 1.0)), (m, m))
        sol = solve_surface_system("3-R1^2", "0.2+0.5*R2^2", ch,
                                   b12_line="0.4", b21_line="0.1*R1",
                                   h1_line="1", h2_line="1")
        res.append(max(sol["residuals"]))
    assert res[1] < 1e-3
    assert res[0] / res[1] > 6.0


def test_solve_surface_system_eta_collision():
    ch = Chart(2, ((0.0, 1.0), (0.0, 1.0)), (9, 9))
    with pytest.raises(MarchError):
        solve_surface_system("R1", "R2", ch, "0", "0", "1", "1")


def test_lax_residuals_small_and_consistent(seed):
    R1 = seed.chart.mesh()[0]
    ones = np.ones(seed.chart.shape)
    rep = lax_residuals_3x3_2x2(ones, R1, ones, 0.0, seed.eta1, seed.eta2,
                                seed.chart, (0.0, 0.5, 1.0))
    for lam, (r3, r2) in rep.items():
        assert r3 < 1e-5
        assert r2 < 1e-5
        # the two formulations agree on the verdict within a small factor
        assert 0.1 < (r3 + 1e-14) / (r2 + 1e-14) < 10.0


def test_lax_residuals_zero_fields(seed):
    rep = lax_residuals_3x3_2x2(0.0, 0.0, 0.0, 0.0, "2", "4",
                                seed.chart, (0.0,))
    assert rep[0.0] == (0.0, 0.0)


def test_lax_residuals_pole(seed):
    with pytest.raises(MarchError):
        lax_residuals_3x3_2x2(np.ones(seed.chart.shape),
                              seed.chart.mesh()[0],
                              np.ones(seed.chart.shape), 0.0,
                              seed.eta1, seed.eta2, seed.chart, (-10.0,))


def test_reconstruction_rejects_vanishing_radii(seed):
    ch = seed.chart
    curv = CurvatureData(np.zeros(ch.shape), np.ones(ch.shape))
    with pytest.raises(MarchError):
        reconstruct_family(seed, curv)


def test_family_mesh_invariants(seed, radii, family):
    assert len(family) == 3
    core = (slice(2, -2),) * 2
    inv_sorted = np.sort(np.stack([1.0 / radii.k1, 1.0 / radii.k2],
                                  axis=-1), axis=-1)
    for mesh in family:
        assert mesh.normal_unit_drift() < 1e-5
        assert mesh.excluded == 0
        assert np.max(np.abs(mesh.eigenvalues[core]
                             - inv_sorted[core])) < 1e-4
        drift = float(mesh.notes[0].split("=")[1])
        assert drift < 1e-4


def test_family_preserves_weingarten(seed, family):
    rep = weingarten_family_compare(family, seed.chart)
    assert rep["pairs"] == 3
    assert rep["eigenvalue_deviation"] < 1e-3
    assert rep["misalignment_angle"] < 1e-2
    assert rep["excluded_vertices"] == 0


def test_family_members_are_distinct_shapes(family):
    d = mesh_nontriviality(family[0], family[-1])
    assert d > 1e-3
    assert mesh_nontriviality(family[0], family[0]) < 1e-12


def test_broken_eta_fails_weingarten_control():
    # making eta1 depend on the transverse coordinate destroys the family:
    # the curvature-1 property and the shape-operator match both fail
    ch = Chart(2, ((0.5, 1.5), (0.0, 1.0)), (33, 33))
    bad = SurfaceModel.from_text("1", "R1^2", "5-R1^2+3*R2^2", "1+R2^2",
                                 ch, (0.0, 1.0))
    rep = constant_curvature_check(bad)
    assert max(rep.values()) > 1e-4
    G11, G22 = bad.shifted_form(0.0)
    curv = solve_codazzi(G11, G22, "2+2*R1", "2.5", ch)
    meshes = reconstruct_family(bad, curv)
    comp = weingarten_family_compare(meshes, ch)
    assert comp["misalignment_angle"] > 1e-1


def test_compare_needs_two_meshes(seed, family):
    with pytest.raises(ValueError):
        weingarten_family_compare(family[:1], seed.chart)
