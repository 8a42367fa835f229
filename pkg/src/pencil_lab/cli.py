"""Command-line front end: config ingestion, dispatch, and artifact export.

Commands
  check-hamiltonian   residuals of the two bracket conditions for (g, b)
  check-compat        pencil compatibility: operator criteria plus shift sweep
  solve-diagonal      rotation-coefficient system, conservation, angle system
  frame               spectral-shift frames, curvature checks, slice export
  deform-surface      surface family reconstruction and comparison

Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 configuration error.
Reports are JSON with sorted keys; wall time goes to stderr only so that
identical configurations produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import compat, diagonal, lax, surface
from .expr import ParseError, parse_expr
from .geometry import MetricField, expr_array, GeometryError
from .grids import Chart, GridError
from .io import canonical_digest, write_csv_grid, write_json_report, write_obj
from .march import MarchError

__all__ = ["main"]

# Solver-facing verdict bands: integration residuals are measured by fourth
# order differences, so machine-epsilon bands would mislabel honest runs.
SOLVER_PASS = 1e-5
SOLVER_FAIL = 1e-2

EXIT_BY_VERDICT = {"pass": 0, "fail": 1, "inconclusive": 2}


class ConfigError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("PENCIL_LAB_THREADS", "1")
    try:
        v = int(raw)
    except ValueError:
        v = 1
    return max(1, min(v, 64))


def _chart(cfg: dict, grid_override=None) -> Chart:
    try:
        section = cfg["chart"]
        n = int(section["n"])
        box = tuple((float(a), float(b)) for a, b in section["box"])
        shape = tuple(int(m) for m in section["shape"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad chart section: {e}")
    if grid_override is not None:
        shape = (int(grid_override),) * n
    if any(m < 5 for m in shape):
        raise ConfigError("grids need at least 5 points per axis")
    try:
        return Chart(n, box, shape)
    except GridError as e:
        raise ConfigError(str(e))


def _metric(section: dict, n: int) -> MetricField:
    try:
        if "diag" in section:
            entries = [parse_expr(t, n) for t in section["diag"]]
            if len(entries) != n:
                raise ConfigError("metric diagonal length mismatch")
            return MetricField.diagonal_contravariant(entries)
        rows = section["rows"]
        A = expr_array((n, n))
        for i in range(n):
            for j in range(n):
                A[i, j] = parse_expr(rows[i][j], n)
        return MetricField.from_contravariant(A)
    except ParseError as e:
        raise ConfigError(f"metric entry: {e}")
    except (KeyError, IndexError, TypeError) as e:
        raise ConfigError(f"bad metric section: {e}")
    except GeometryError as e:
        raise ConfigError(str(e))


def _lambdas(cfg: dict, override) -> list:
    if override is not None:
        try:
            return [float(tok) for tok in override.split(",") if tok]
        except ValueError:
            raise ConfigError(f"bad --lambda list: {override!r}")
    return [float(v) for v in cfg.get("lambdas", [0.0])]


def _verdict(value: float, lo: float, hi: float) -> str:
    if value <= lo:
        return "pass"
    if value >= hi:
        return "fail"
    return "inconclusive"


def _table_from_report(rep) -> dict:
    return {k: {"value": rep.residuals[k], "verdict": rep.verdict_for(k)}
            for k in rep.residuals}


def _solver_table(residuals: dict) -> dict:
    return {k: {"value": v, "verdict": _verdict(v, SOLVER_PASS, SOLVER_FAIL)}
            for k, v in residuals.items()}


def _overall(table: dict) -> str:
    vs = {row["verdict"] for row in table.values()}
    if "fail" in vs:
        return "fail"
    if "inconclusive" in vs:
        return "inconclusive"
    return "pass"


def _emit(out_dir: str, name: str, report: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    write_json_report(path, report)
    return path


def cmd_check_hamiltonian(cfg, args):
    chart = _chart(cfg, args.grid)
    g = _metric(cfg["metric"], chart.n)
    if "b" in cfg:
        b = expr_array((chart.n,) * 3)
        for i in range(chart.n):
            for j in range(chart.n):
                for k in range(chart.n):
                    b[i, j, k] = parse_expr(cfg["b"][i][j][k], chart.n)
        A = compat.HamiltonianOperator(g, b)
    else:
        A = compat.levi_civita_operator(g)
    rep = compat.check_hamiltonian(A, chart)
    table = _table_from_report(rep)
    return table, {"scale": rep.scale}, []


def cmd_check_compat(cfg, args):
    chart = _chart(cfg, args.grid)
    g = _metric(cfg["metric"], chart.n)
    gt = _metric(cfg["metric_tilde"], chart.n)
    p = compat.pencil_operator(g, gt)
    t1 = compat.check_theorem1(p, chart)
    bt = compat.btilde_from_r(p)
    app = compat.verify_appendix(p, chart, bt)
    A = compat.levi_civita_operator(g)
    At = compat.HamiltonianOperator(gt, bt)
    pc = compat.check_pencil(A, At, chart, _lambdas(cfg, args.lam))
    table = {}
    for rep in (t1, pc, app):
        table.update(_table_from_report(rep))
    extra = {
        "lambdas_used": pc.lambdas_used,
        "lambdas_skipped": pc.lambdas_skipped,
        "notes": t1.notes + pc.notes,
    }
    return table, extra, []


def _diag_inputs(cfg, chart):
    try:
        model = diagonal.DiagonalModel.from_text(cfg["etas"], chart.n)
        raw = cfg.get("beta_boundary", {})
        lines = {}
        for key, text in raw.items():
            i, j = (int(t) - 1 for t in key.split(","))
            lines[(i, j)] = parse_expr(text, chart.n)
        bd = diagonal.BoundaryData(chart.n, lines)
    except ParseError as e:
        raise ConfigError(str(e))
    except (KeyError, ValueError) as e:
        raise ConfigError(f"bad diagonal section: {e}")
    return model, bd


def cmd_solve_diagonal(cfg, args):
    chart = _chart(cfg, args.grid)
    model, bd = _diag_inputs(cfg, chart)
    beta, egorov = diagonal.solve_S(model, bd, chart)
    f1, f2 = diagonal.flatness_residuals(beta, chart)
    f3 = diagonal.pencil_residual_F3(model, beta, chart)
    residuals = {"F1": f1, "F2": f2, "F3": f3}
    digest = canonical_digest(cfg)
    out = args.out or cfg.get("out", "pencil_lab_out")
    os.makedirs(out, exist_ok=True)
    artifacts = []
    cols = {f"beta_{i + 1}{j + 1}": beta[(i, j)]
            for i in range(chart.n) for j in range(chart.n) if i != j}
    path = os.path.join(out, "beta.csv")
    write_csv_grid(path, chart, cols, digest)
    artifacts.append(path)
    extra = {"egorov": egorov}
    if model.is_constant():
        P, drift = diagonal.conserved_P(model, beta, chart)
        residuals["P_drift"] = drift
        extra["P_corner"] = [float(p[(0,) * chart.n]) for p in P]
    if "s2" in cfg:
        if chart.n != 3 or not model.is_constant():
            raise ConfigError("the angle system needs n=3 and constant etas")
        seed = cfg["s2"].get("seed")
        if seed is None or len(seed) != 3:
            raise ConfigError("s2 section needs a three-component seed")
        sol, cons = diagonal.integrate_S2(chart, *seed)
        residuals["S2_consistency"] = cons
        m12, m13, m23 = diagonal.monge_ampere_residual(sol, chart)
        residuals.update({"MA_12": m12, "MA_13": m13, "MA_23": m23})
        path = os.path.join(out, "angles.csv")
        write_csv_grid(path, chart, {k: sol[k] for k in ("p", "q", "r")},
                       digest)
        artifacts.append(path)
    return _solver_table(residuals), extra, artifacts


def cmd_frame(cfg, args):
    chart = _chart(cfg, args.grid)
    model, bd = _diag_inputs(cfg, chart)
    lambdas = _lambdas(cfg, args.lam)
    beta, _ = diagonal.solve_S(model, bd, chart)
    h_lines = cfg.get("lame_boundary", ["1"] * chart.n)
    H = diagonal.solve_lame(beta, chart, dict(enumerate(h_lines)))
    digest = canonical_digest(cfg)
    out = args.out or cfg.get("out", "pencil_lab_out")
    os.makedirs(out, exist_ok=True)
    residuals = {}
    artifacts = []
    notes = []

    def run_one(lam):
        conn = lax.build_lax(model, beta, chart, lam)
        zc = lax.zero_curvature_residual(conn, chart)
        fs = lax.integrate_frame(conn, model, H, chart)
        im = lax.induced_metric_residual(fs, model, H, chart)
        return lam, zc, fs, im

    frames = {}
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        for lam, zc, fs, im in pool.map(run_one, lambdas):
            residuals[f"zero_curvature_{lam:g}"] = zc
            residuals[f"induced_metric_{lam:g}"] = im
            residuals[f"frame_orthogonality_{lam:g}"] = fs.ortho_drift
            frames[lam] = fs
    for lam in lambdas:
        fs = frames[lam]
        sl = (slice(None),) * (chart.n - 1) + (0,)
        verts = fs.rvec[sl][..., :3]
        if chart.n == 2:
            pad = np.zeros(verts.shape[:-1] + (3 - verts.shape[-1],))
            verts = np.concatenate([verts, pad], axis=-1)
        norms = fs.phi[sl][..., chart.n - 1, :]
        if norms.shape[-1] < 3:
            pad = np.zeros(norms.shape[:-1] + (3 - norms.shape[-1],))
            norms = np.concatenate([norms, pad], axis=-1)
        path = os.path.join(out, f"slice_lambda_{lam:g}.obj")
        write_obj(path, verts, norms, digest)
        artifacts.append(path)
    if len(lambdas) >= 2 and chart.n >= 3:
        rep = lax.weingarten_scaling_report(
            model, beta, H, chart, lambdas[0], lambdas[1],
            frames=(frames[lambdas[0]], frames[lambdas[1]]))
        residuals["scaling_closed_form"] = rep["closed_form_residual"]
        if "mesh_eigen_residual_a" in rep:
            residuals["scaling_mesh_a"] = rep["mesh_eigen_residual_a"]
            residuals["scaling_mesh_b"] = rep["mesh_eigen_residual_b"]
        if rep.get("umbilic_flat_slice"):
            notes.append(rep.get("note", "scaling vacuous"))
    cols = {f"H{j + 1}": H[j] for j in range(chart.n)}
    path = os.path.join(out, "lame.csv")
    write_csv_grid(path, chart, cols, digest)
    artifacts.append(path)
    return _solver_table(residuals), {"notes": notes}, artifacts


def cmd_deform_surface(cfg, args):
    chart = _chart(cfg, args.grid)
    if chart.n != 2:
        raise ConfigError("surface runs use a two-dimensional chart")
    try:
        s = cfg["surface"]
        lambdas = _lambdas(cfg, args.lam)
        model = surface.SurfaceModel.from_text(
            s["g11"], s["g22"], s["eta1"], s["eta2"], chart, lambdas)
        k1_line = s["k1_line"]
        k2_line = s["k2_line"]
    except KeyError as e:
        raise ConfigError(f"missing surface entry: {e}")
    except ParseError as e:
        raise ConfigError(str(e))
    notes = model.validate()
    cc = surface.constant_curvature_check(model)
    table = {}
    for lam, v in cc.items():
        table[f"curvature_one_{lam:g}"] = {
            "value": v, "verdict": _verdict(v, 1e-8, 1e-4)}
    G11, G22 = model.shifted_form(lambdas[0])
    try:
        curv = surface.solve_codazzi(G11, G22, k1_line, k2_line, chart)
    except ParseError as e:
        raise ConfigError(str(e))
    table["pc_residual"] = {"value": curv.pc,
                            "verdict": _verdict(curv.pc, SOLVER_PASS,
                                                SOLVER_FAIL)}
    H1, H2, b12, b21 = model.lame_beta()
    laxres = surface.lax_residuals_3x3_2x2(
        H1, H2, b12, b21, model.eta1, model.eta2, chart, lambdas)
    for lam, (r3, r2) in laxres.items():
        table[f"lax3_{lam:g}"] = {"value": r3,
                                  "verdict": _verdict(r3, SOLVER_PASS,
                                                      SOLVER_FAIL)}
        table[f"lax2_{lam:g}"] = {"value": r2,
                                  "verdict": _verdict(r2, SOLVER_PASS,
                                                      SOLVER_FAIL)}
    digest = canonical_digest(cfg)
    out = args.out or cfg.get("out", "pencil_lab_out")
    os.makedirs(out, exist_ok=True)
    artifacts = []

    def build(lam):
        return surface.reconstruct_family(model, curv, (lam,))[0]

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        meshes = list(pool.map(build, lambdas))
    for mesh in meshes:
        path = os.path.join(out, f"surface_lambda_{mesh.lam:g}.obj")
        write_obj(path, mesh.vertices, mesh.normals, digest)
        artifacts.append(path)
    if len(meshes) >= 2:
        wg = surface.weingarten_family_compare(meshes, chart)
        table["weingarten_eigenvalues"] = {
            "value": wg["eigenvalue_deviation"],
            "verdict": _verdict(wg["eigenvalue_deviation"], 1e-3, 1e-1)}
        table["weingarten_directions"] = {
            "value": wg["misalignment_angle"],
            "verdict": _verdict(wg["misalignment_angle"], 1e-2, 1e-1)}
        hd = surface.mesh_nontriviality(meshes[0], meshes[-1])
        table["deformation_size"] = {
            "value": hd,
            "verdict": "pass" if hd >= 1e-3 else "fail"}
    return table, {"notes": notes, "excluded_vertices":
                   [m.excluded for m in meshes]}, artifacts


COMMANDS = {
    "check-hamiltonian": cmd_check_hamiltonian,
    "check-compat": cmd_check_compat,
    "solve-diagonal": cmd_solve_diagonal,
    "frame": cmd_frame,
    "deform-surface": cmd_deform_surface,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pencil-lab", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--lambda", dest="lam", default=None,
                        help="comma-separated shift values")
    parser.add_argument("--grid", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None)
    args = parser.parse_args(argv)

    t0 = time.monotonic()
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3

    try:
        table, extra, artifacts = COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except ParseError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except MarchError as e:
        if "pole" in str(e):
            print(f"config error: {e}", file=sys.stderr)
            return 3
        print(f"run failed: {e}", file=sys.stderr)
        return 1

    verdict = _overall(table)
    report = {
        "command": args.command,
        "config_digest": canonical_digest(cfg),
        "residuals": table,
        "verdict": verdict,
        "artifacts": [os.path.basename(a) for a in artifacts],
    }
    report.update(extra)
    out = args.out or cfg.get("out", "pencil_lab_out")
    path = _emit(out, "report.json", report)
    elapsed = time.monotonic() - t0
    print(f"wall time {elapsed:.2f}s, report at {path}", file=sys.stderr)
    print(f"{args.command}: {verdict}")
    return EXIT_BY_VERDICT[verdict]


if __name__ == "__main__":
    sys.exit(main())
