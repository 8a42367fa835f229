"""Hamiltonian operators of hydrodynamic type and their compatibility.

An operator is the pair (g^{ij}, b^{ij}_k); it is Hamiltonian iff the two
identities J1/J2 hold (equivalently: g flat and b the Levi-Civita
coefficients).  Two operators are compatible iff every linear combination is
again Hamiltonian, which the pencil operator r^i_j = g̃^{is} g_{sj} reduces to
a vanishing Nijenhuis tensor plus a second-covariant-derivative identity.
Every check returns a ComplianceReport of named max-abs grid residuals with a
three-valued verdict (pass / fail / inconclusive) at scale-aware thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import ZERO, Const, diff
from .geometry import (
    MetricField, ConnectionField, christoffel, covariant_derivative,
    eval_array, expr_array, grid_max, nijenhuis, raise_index, riemann_max,
)
from .grids import Chart, max_abs

__all__ = [
    "HamiltonianOperator", "PencilOperator", "ComplianceReport",
    "levi_civita_operator", "check_hamiltonian", "pencil_operator",
    "btilde_from_r", "check_theorem1", "check_pencil", "verify_appendix",
    "DEFAULT_LAMBDAS",
]

PASS_FACTOR = 1e-8
FAIL_FACTOR = 1e-4
DEFAULT_LAMBDAS = (0.0, 0.75, 1.5, 2.25, 3.0)


@dataclass
class ComplianceReport:
    """Named residuals with three-valued verdicts at scale-aware thresholds."""

    name: str
    residuals: dict = field(default_factory=dict)
    scale: float = 1.0
    lambdas_used: list = field(default_factory=list)
    lambdas_skipped: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def verdict_for(self, key: str) -> str:
        v = self.residuals[key]
        if v <= PASS_FACTOR * self.scale:
            return "pass"
        if v >= FAIL_FACTOR * self.scale:
            return "fail"
        return "inconclusive"

    @property
    def verdicts(self) -> dict:
        return {k: self.verdict_for(k) for k in self.residuals}

    @property
    def verdict(self) -> str:
        vs = set(self.verdicts.values())
        if "fail" in vs:
            return "fail"
        if "inconclusive" in vs:
            return "inconclusive"
        return "pass"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "residuals": dict(sorted(self.residuals.items())),
            "scale": self.scale,
            "verdicts": dict(sorted(self.verdicts.items())),
            "verdict": self.verdict,
            "lambdas_used": list(self.lambdas_used),
            "lambdas_skipped": list(self.lambdas_skipped),
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class HamiltonianOperator:
    """Pair (g^{ij}, b^{ij}_k); b indexed b[i, j, k]."""

    g: MetricField
    b: np.ndarray


@dataclass(frozen=True)
class PencilOperator:
    """r^i_j = g̃^{is} g_{sj}; the first metric raises and lowers indices."""

    g: MetricField
    gt: MetricField
    r: np.ndarray


def levi_civita_operator(g: MetricField,
                         conn: ConnectionField | None = None) -> HamiltonianOperator:
    """b^{ij}_k = −g^{is} Γ^j_{sk} with the Levi-Civita symbols of g."""
    n = g.n
    gamma = (conn or christoffel(g)).gamma
    b = expr_array((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                total = ZERO
                for s in range(n):
                    total = total + g.gU[i, s] * gamma[j, s, k]
                b[i, j, k] = -total
    return HamiltonianOperator(g, b)


def _db_eval(b: np.ndarray, chart: Chart) -> np.ndarray:
    """Exact ∂_s b^{ij}_k evaluated on the grid; axes (s, i, j, k, *grid)."""
    n = b.shape[0]
    out = expr_array((n,) + b.shape)
    for s in range(n):
        for idx in np.ndindex(b.shape):
            out[(s,) + idx] = diff(b[idx], s + 1)
    return eval_array(out, chart)


def _dg_eval(gU: np.ndarray, chart: Chart) -> np.ndarray:
    n = gU.shape[0]
    out = expr_array((n,) + gU.shape)
    for s in range(n):
        for idx in np.ndindex(gU.shape):
            out[(s,) + idx] = diff(gU[idx], s + 1)
    return eval_array(out, chart)


def hamiltonian_residuals(gU: np.ndarray, b: np.ndarray, chart: Chart):
    """Max-abs grid residuals of the two Hamiltonian identities (J1, J2)."""
    gn = eval_array(gU, chart)
    bn = eval_array(b, chart)
    dg = _dg_eval(gU, chart)
    db = _db_eval(b, chart)
    # J1: 2 b^{ki}_s g^{sj} − g^{js}∂_s g^{ik} − g^{ks}∂_s g^{ij} + g^{is}∂_s g^{kj}
    j1 = (2.0 * np.einsum("kis...,sj...->kij...", bn, gn)
          - np.einsum("js...,sik...->kij...", gn, dg)
          - np.einsum("ks...,sij...->kij...", gn, dg)
          + np.einsum("is...,skj...->kij...", gn, dg))
    # J2: g^{js}∂_s b^{ik}_n − g^{is}∂_s b^{jk}_n + (b^{ij}_s − b^{ji}_s) b^{sk}_n
    #     + b^{ik}_s b^{js}_n − b^{jk}_s b^{is}_n
    skew = bn - np.swapaxes(bn, 0, 1)
    j2 = (np.einsum("js...,sikn...->ijkn...", gn, db)
          - np.einsum("is...,sjkn...->ijkn...", gn, db)
          + np.einsum("ijs...,skn...->ijkn...", skew, bn)
          + np.einsum("iks...,jsn...->ijkn...", bn, bn)
          - np.einsum("jks...,isn...->ijkn...", bn, bn))
    scale = 1.0 + max_abs(gn, bn)
    return max_abs(j1), max_abs(j2), scale


def check_hamiltonian(A: HamiltonianOperator, chart: Chart) -> ComplianceReport:
    """Residuals of the two conditions for (g, b) to define a Poisson bracket."""
    r1, r2, scale = hamiltonian_residuals(A.g.gU, A.b, chart)
    return ComplianceReport("hamiltonian", {"J1": r1, "J2": r2}, scale)


def pencil_operator(g: MetricField, gt: MetricField) -> PencilOperator:
    """Assemble r^i_j = g̃^{is} g_{sj}."""
    n = g.n
    r = expr_array((n, n))
    for i in range(n):
        for j in range(n):
            total = ZERO
            for s in range(n):
                total = total + gt.gU[i, s] * g.gL[s, j]
            r[i, j] = total
    return PencilOperator(g, gt, r)


def pencil_symmetry_residual(p: PencilOperator, chart: Chart) -> float:
    """Grid violation of r^i_s g^{sj} = r^j_s g^{si} (automatic symmetry)."""
    rn = eval_array(p.r, chart)
    gn = eval_array(p.g.gU, chart)
    rg = np.einsum("is...,sj...->ij...", rn, gn)
    return max_abs(rg - np.swapaxes(rg, 0, 1))


def btilde_from_r(p: PencilOperator,
                  conn: ConnectionField | None = None) -> np.ndarray:
    """b̃^{ij}_k from r: 2b̃ = ∇^i r^j_k − ∇^j r^i_k + ∇_k r^{ij} + 2 b^{sj}_k r^i_s."""
    g = p.g
    n = g.n
    conn = conn or christoffel(g)
    b = levi_civita_operator(g, conn).b
    D = covariant_derivative(p.r, "ud", g, conn)           # D[k,i,j] = ∇_k r^i_j
    Dup = raise_index(D, 0, g)                             # Dup[i,j,k] = ∇^i r^j_k
    rUU = raise_index(p.r, 1, g)                           # r^{ij}
    DUU = covariant_derivative(rUU, "uu", g, conn)         # DUU[k,i,j] = ∇_k r^{ij}
    half = Const(0.5)
    bt = expr_array((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                total = Dup[i, j, k] - Dup[j, i, k] + DUU[k, i, j]
                for s in range(n):
                    total = total + Const(2.0) * b[s, j, k] * p.r[i, s]
                bt[i, j, k] = half * total
    return bt


def eigenvalue_gap(r: np.ndarray, chart: Chart) -> float:
    """Smallest pairwise eigenvalue gap of r over the grid (simple-spectrum test)."""
    rn = eval_array(r, chart)                              # (n, n, *grid)
    n = rn.shape[0]
    pts = rn.reshape(n, n, -1)
    vals = np.linalg.eigvals(np.moveaxis(pts, 2, 0))       # (npts, n)
    gap = np.inf
    for a in range(n):
        for c in range(a + 1, n):
            gap = min(gap, float(np.min(np.abs(vals[:, a] - vals[:, c]))))
    return gap


def check_theorem1(p: PencilOperator, chart: Chart) -> ComplianceReport:
    """Nijenhuis vanishing plus the symmetric second-covariant condition."""
    g = p.g
    conn = christoffel(g)
    res1 = grid_max(nijenhuis(p.r), chart)
    rUU = raise_index(p.r, 1, g)
    D1 = covariant_derivative(rUU, "uu", g, conn)          # (s, k, l)
    D2 = covariant_derivative(D1, "duu", g, conn)          # (t, s, k, l) = ∇_t∇_s r^{kl}
    D2n = eval_array(D2, chart)
    gn = eval_array(g.gU, chart)
    T = np.einsum("is...,jt...,stkl...->ijkl...", gn, gn, D2n)
    res2_arr = (T + np.einsum("klij...->ijkl...", T)
                - np.einsum("ikjl...->ijkl...", T)
                - np.einsum("jlik...->ijkl...", T))
    res2 = max_abs(res2_arr)
    scale = 1.0 + max_abs(eval_array(p.r, chart), gn, eval_array(p.gt.gU, chart))
    rep = ComplianceReport("theorem1", {"nijenhuis": res1, "second_covariant": res2},
                           scale)
    flat_g = riemann_max(g, chart)
    flat_gt = riemann_max(p.gt, chart)
    rep.residuals["flat_g"] = flat_g
    rep.residuals["flat_g_tilde"] = flat_gt
    gap = eigenvalue_gap(p.r, chart)
    rep.notes.append(f"eigenvalue_gap={gap:.3e}")
    rep.notes.append("simple_spectrum" if gap > 1e-6 else "non_simple_spectrum")
    return rep


def check_pencil(A: HamiltonianOperator, At: HamiltonianOperator, chart: Chart,
                 lambdas=DEFAULT_LAMBDAS) -> ComplianceReport:
    """Bilinear compatibility conditions (C1, C2) plus a direct λ-sweep."""
    g, b = A.g, A.b
    gt, bt = At.g, At.b
    gn = eval_array(g.gU, chart)
    gtn = eval_array(gt.gU, chart)
    bn = eval_array(b, chart)
    btn = eval_array(bt, chart)
    dg = _dg_eval(g.gU, chart)
    dgt = _dg_eval(gt.gU, chart)
    db = _db_eval(b, chart)
    dbt = _db_eval(bt, chart)

    c1 = (2.0 * np.einsum("kis...,sj...->kij...", btn, gn)
          + 2.0 * np.einsum("kis...,sj...->kij...", bn, gtn)
          - np.einsum("js...,sik...->kij...", gtn, dg)
          - np.einsum("js...,sik...->kij...", gn, dgt)
          - np.einsum("ks...,sij...->kij...", gtn, dg)
          - np.einsum("ks...,sij...->kij...", gn, dgt)
          + np.einsum("is...,skj...->kij...", gtn, dg)
          + np.einsum("is...,skj...->kij...", gn, dgt))

    skew_t = btn - np.swapaxes(btn, 0, 1)
    skew = bn - np.swapaxes(bn, 0, 1)
    c2 = (np.einsum("js...,sikn...->ijkn...", gtn, db)
          + np.einsum("js...,sikn...->ijkn...", gn, dbt)
          - np.einsum("is...,sjkn...->ijkn...", gtn, db)
          - np.einsum("is...,sjkn...->ijkn...", gn, dbt)
          + np.einsum("ijs...,skn...->ijkn...", skew_t, bn)
          + np.einsum("ijs...,skn...->ijkn...", skew, btn)
          + np.einsum("iks...,jsn...->ijkn...", btn, bn)
          + np.einsum("iks...,jsn...->ijkn...", bn, btn)
          - np.einsum("jks...,isn...->ijkn...", btn, bn)
          - np.einsum("jks...,isn...->ijkn...", bn, btn))

    scale = 1.0 + max_abs(gn, gtn, bn, btn)
    rep = ComplianceReport("pencil", {"C1": max_abs(c1), "C2": max_abs(c2)}, scale)

    n = g.n
    worst = 0.0
    for lam in lambdas:
        # Exclude λ where the combined metric degenerates somewhere on the box.
        comb = gtn + lam * gn
        det = np.linalg.det(np.moveaxis(comb.reshape(n, n, -1), 2, 0))
        if float(np.min(np.abs(det))) < 1e-8:
            rep.lambdas_skipped.append(lam)
            continue
        gU_lam = expr_array((n, n))
        b_lam = expr_array((n, n, n))
        cl = Const(float(lam))
        for idx in np.ndindex(n, n):
            gU_lam[idx] = gt.gU[idx] + cl * g.gU[idx]
        for idx in np.ndindex(n, n, n):
            b_lam[idx] = bt[idx] + cl * b[idx]
        r1, r2, _ = hamiltonian_residuals(gU_lam, b_lam, chart)
        worst = max(worst, r1, r2)
        rep.lambdas_used.append(lam)
    if rep.lambdas_used:
        rep.residuals["lambda_sweep"] = worst
    else:
        rep.notes.append("lambda sweep empty: every requested value degenerates")
    return rep


def verify_appendix(p: PencilOperator, chart: Chart,
                    bt: np.ndarray | None = None) -> ComplianceReport:
    """Symmetry identities I1, I2 for the coefficients derived from r."""
    g = p.g
    n = g.n
    if bt is None:
        bt = btilde_from_r(p)
    rUU = raise_index(p.r, 1, g)
    btn = eval_array(bt, chart)
    rUUn = eval_array(rUU, chart)
    drUU = _dg_eval(rUU, chart)                             # (k, i, j, *grid)
    i1 = btn + np.swapaxes(btn, 0, 1) - np.einsum("kij...->ijk...", drUU)
    i2 = (np.einsum("iks...,sj...->ijk...", btn, rUUn)
          - np.einsum("jks...,si...->ijk...", btn, rUUn))
    scale = 1.0 + max_abs(rUUn, btn)
    return ComplianceReport("appendix", {"I1": max_abs(i1), "I2": max_abs(i2)}, scale)
