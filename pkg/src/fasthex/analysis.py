"""Actuation analysis: force efficiency, attainable wrench sets, rank sweeps."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull

from .vehicle import (
    N_PROPS,
    RANK_RTOL,
    VehicleParams,
    allocation_F,
    allocation_F1,
    allocation_F2,
    numerical_rank,
)

# Equality constraints are accepted within this band.
EQ_TOL = 1e-9


class EmptyFeasibleSet(ValueError):
    pass


def force_efficiency(alpha: float, u, params: VehicleParams = VehicleParams()) -> float:
    """Norm of the total thrust over the sum of thrust magnitudes."""
    u = np.asarray(u, dtype=float)
    total = float(np.sum(u))
    if total <= 0:
        raise ValueError("force efficiency needs a positive total thrust")
    return float(np.linalg.norm(allocation_F1(alpha, params) @ u) / total)


def box_slice_vertices(A, b, lo: float, hi: float, tol: float = EQ_TOL) -> np.ndarray:
    """Vertices of ``{u : lo <= u_i <= hi, A u = b}``.

    A vertex of an ``n - r`` dimensional slice has ``n - r`` coordinates on a
    bound, so every choice of bound-fixed coordinates is tried and the rest
    solved from the equality constraints.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = A.shape[1]
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > RANK_RTOL * max(s[0], 1.0)))
    # replace A by an orthonormal basis of its row space
    A_r = (s[:r, None] * Vt[:r])
    b_r = U[:, :r].T @ b
    if np.linalg.norm(U[:, :r] @ b_r - b) > tol * max(1.0, np.linalg.norm(b)):
        raise EmptyFeasibleSet("equality constraints are inconsistent")
    verts = []
    for fixed in itertools.combinations(range(n), n - r):
        free = [j for j in range(n) if j not in fixed]
        M = A_r[:, free]
        if r and abs(np.linalg.det(M)) < 1e-12:
            continue
        for bounds in itertools.product((lo, hi), repeat=n - r):
            u = np.empty(n)
            u[list(fixed)] = bounds
            if r:
                u[free] = np.linalg.solve(M, b_r - A_r[:, list(fixed)] @ np.asarray(bounds))
            if np.all(u >= lo - tol) and np.all(u <= hi + tol):
                verts.append(np.clip(u, lo, hi))
    if not verts:
        raise EmptyFeasibleSet("no input in the box meets the constraints")
    V = np.array(verts)
    V = V[np.max(np.abs(A @ V.T - b[:, None]), axis=0) <= tol * max(1.0, np.linalg.norm(b)) * 10]
    return _unique_rows(V)


def _unique_rows(X, decimals: int = 10) -> np.ndarray:
    _, idx = np.unique(np.round(X, decimals), axis=0, return_index=True)
    return X[np.sort(idx)]


@dataclass
class Polytope:
    """Convex hull of a point cloud, possibly lower-dimensional than its ambient space."""

    vertices: np.ndarray
    origin: np.ndarray
    basis: np.ndarray  # columns span the affine hull
    hull: ConvexHull | None = None

    @classmethod
    def from_points(cls, points, tol: float = 1e-9) -> "Polytope":
        P = _unique_rows(np.atleast_2d(np.asarray(points, dtype=float)))
        c = P.mean(axis=0)
        D = P - c
        scale = max(1.0, float(np.max(np.abs(P))))
        _, s, Vt = np.linalg.svd(D, full_matrices=False)
        k = int(np.sum(s > tol * scale * max(1, len(P))))
        basis = Vt[:k].T
        coords = D @ basis
        if k == 0:
            return cls(P[:1], c, basis)
        if k == 1:
            lo, hi = np.argmin(coords[:, 0]), np.argmax(coords[:, 0])
            return cls(P[[lo, hi]], c, basis)
        hull = ConvexHull(coords)
        return cls(P[hull.vertices], c, basis, hull)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def volume(self) -> float:
        """Lebesgue measure in the polytope's own affine hull (length, area or volume)."""
        if self.dim == 0:
            return 0.0
        if self.dim == 1:
            x = (self.vertices - self.origin) @ self.basis
            return float(np.ptp(x))
        return float(self.hull.volume)

    def contains(self, x, tol: float = 1e-6) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        D = X - self.origin
        coords = D @ self.basis
        off = np.linalg.norm(D - coords @ self.basis.T, axis=1)
        inside = off <= tol
        if self.dim == 1:
            y = (self.vertices - self.origin) @ self.basis
            inside &= (coords[:, 0] >= y.min() - tol) & (coords[:, 0] <= y.max() + tol)
        elif self.dim >= 2:
            eq = self.hull.equations
            inside &= np.all(coords @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)
        return inside if np.ndim(x) > 1 else bool(inside[0])

    def support(self, direction) -> float:
        return float(np.max(self.vertices @ np.asarray(direction, dtype=float)))


def attainable_force_set(alpha: float, params: VehicleParams = VehicleParams(), at_torque=(0.0, 0.0, 0.0)) -> Polytope:
    """Body-frame forces reachable with the torque pinned to ``at_torque``."""
    U = box_slice_vertices(allocation_F2(alpha, params), at_torque, params.f_min, params.f_max)
    return Polytope.from_points(U @ allocation_F1(alpha, params).T)


def attainable_torque_set(alpha: float, params: VehicleParams = VehicleParams(), at_force=None) -> Polytope:
    """Body-frame torques reachable with the force pinned (default: level hover)."""
    if at_force is None:
        at_force = (0.0, 0.0, params.weight)
    U = box_slice_vertices(allocation_F1(alpha, params), at_force, params.f_min, params.f_max)
    return Polytope.from_points(U @ allocation_F2(alpha, params).T)


def lateral_force_set(alpha: float, params: VehicleParams = VehicleParams(), vertical_force: float | None = None) -> Polytope:
    """Body x-y forces reachable at hover: zero torque and the given vertical force."""
    fz = params.weight if vertical_force is None else vertical_force
    F1 = allocation_F1(alpha, params)
    A = np.vstack([F1[2:3], allocation_F2(alpha, params)])
    U = box_slice_vertices(A, [fz, 0.0, 0.0, 0.0], params.f_min, params.f_max)
    return Polytope.from_points(U @ F1[:2].T)


def inscribed_radius(poly: Polytope) -> float:
    """Radius of the largest origin-centred disk inside a planar polytope."""
    if poly.dim < 2:
        return 0.0
    if not poly.contains(np.zeros(poly.origin.shape), tol=1e-9):
        return 0.0
    # hull equations live in the chart; shift them back to the origin
    eq = poly.hull.equations
    o = -poly.origin @ poly.basis
    return float(max(0.0, np.min(-(eq[:, :-1] @ o + eq[:, -1]))))


def max_lateral_force(alpha: float, params: VehicleParams = VehicleParams()) -> float:
    return inscribed_radius(lateral_force_set(alpha, params))


def sample_slice(A, b, lo: float, hi: float, n: int, rng=None, vertices=None) -> np.ndarray:
    """Uniform samples from ``{lo <= u <= hi, A u = b}`` by rejection in a null-space chart."""
    rng = np.random.default_rng(rng)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if vertices is None:
        vertices = box_slice_vertices(A, b, lo, hi)
    u0 = vertices.mean(axis=0)
    _, s, Vt = np.linalg.svd(A)
    r = int(np.sum(s > RANK_RTOL * s[0]))
    N = Vt[r:].T
    z = (vertices - u0) @ N
    zlo, zhi = z.min(axis=0), z.max(axis=0)
    out = []
    count = 0
    while count < n:
        Z = rng.uniform(zlo, zhi, size=(max(2 * (n - count), 1000), N.shape[1]))
        Ucand = u0 + Z @ N.T
        ok = np.all((Ucand >= lo) & (Ucand <= hi), axis=1)
        out.append(Ucand[ok])
        count += int(ok.sum())
    return np.vstack(out)[:n]


def rank_sweep(alphas, params: VehicleParams = VehicleParams()):
    """``(alpha, numerical rank, sigma_min / sigma_max)`` of F(alpha) on a grid."""
    rows = []
    for a in np.atleast_1d(np.asarray(alphas, dtype=float)):
        s = np.linalg.svd(allocation_F(a, params), compute_uv=False)
        rows.append((float(a), numerical_rank(allocation_F(a, params)), float(s[-1] / s[0])))
    return rows


def locate_rank_drops(alphas, params: VehicleParams = VehicleParams(), xtol: float = 1e-15):
    """Tilt angles where F(alpha) is singular, bracketed on ``alphas``.

    A grid point rarely lands on an isolated singularity, so sign changes of
    det F between neighbours are refined by root bracketing. Returns
    ``(alpha, rank)`` pairs evaluated at the refined roots.
    """
    grid = np.sort(np.atleast_1d(np.asarray(alphas, dtype=float)))
    det = lambda a: float(np.linalg.det(allocation_F(a, params)))
    d = np.array([det(a) for a in grid])
    found = []
    for a0, a1, d0, d1 in zip(grid[:-1], grid[1:], d[:-1], d[1:]):
        if d0 == 0.0:
            root = a0
        elif d0 * d1 < 0:
            root = brentq(det, a0, a1, xtol=xtol, rtol=4 * np.finfo(float).eps)
        else:
            continue
        found.append((float(root), numerical_rank(allocation_F(root, params))))
    if len(grid) and d[-1] == 0.0:
        found.append((float(grid[-1]), numerical_rank(allocation_F(grid[-1], params))))
    return found


def hover_thrusts(alpha: float, params: VehicleParams = VehicleParams()) -> np.ndarray:
    """Equal thrusts that produce a pure vertical ``m g`` force and no torque."""
    F = allocation_F(alpha, params)
    ones = np.ones(N_PROPS)
    f = params.weight / float(F[2] @ ones)
    u = f * ones
    if np.linalg.norm(F @ u - [0, 0, params.weight, 0, 0, 0]) > 1e-9 * params.weight:
        raise EmptyFeasibleSet(f"equal thrusts do not balance at alpha={alpha}")
    return u


def hover_efficiency_curve(alphas, params: VehicleParams = VehicleParams()):
    return [(float(a), force_efficiency(a, hover_thrusts(a, params), params)) for a in np.atleast_1d(alphas)]


def export_rows(rows, header, path: str | Path, fmt: str = "csv") -> None:
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps([dict(zip(header, r)) for r in rows], indent=2))
        return
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def export_polytope(poly: Polytope, path: str | Path, fmt: str = "csv") -> None:
    cols = ["x", "y", "z"][: poly.vertices.shape[1]]
    if fmt == "json":
        Path(path).write_text(json.dumps({"dim": poly.dim, "volume": poly.volume, "vertices": poly.vertices.tolist()}, indent=2))
    else:
        export_rows(poly.vertices.tolist(), cols, path, "csv")
