"""The double 𝕄: two copies of a holed surface glued along the hole boundaries.

The plus sheet reuses the source vertices and triangles unchanged.  The
minus sheet copies every non-seam vertex and stores each triangle with its
first two vertices swapped, so the glued surface carries one consistent
orientation.  Swapping ``v0`` and ``v1`` replaces the local frame
``(t1, t2)`` by ``(-t1, t2)``; the metric tensor is conjugated by
``diag(-1, 1)`` accordingly, which makes the pushforward metric exactly
invariant under the sheet swap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .mesh import SurfaceMesh

_FLIP = np.diag([-1.0, 1.0])


@dataclass(frozen=True, eq=False)
class DoubledSurface:
    mesh: SurfaceMesh
    projection: np.ndarray
    involution: np.ndarray
    seam: np.ndarray
    sheet_sign: np.ndarray
    source: SurfaceMesh

    @property
    def n_source_triangles(self) -> int:
        return self.source.n_triangles

    @property
    def gamma0_plus(self) -> np.ndarray:
        return self.mesh.boundary_loops[0]

    @property
    def gamma0_minus_matched(self) -> np.ndarray:
        """Minus-sheet copies of the source Γ0 nodes, in source order."""
        return self.involution[self.source.gamma0]

    @property
    def triangle_involution(self) -> np.ndarray:
        nt = self.n_source_triangles
        return np.concatenate([np.arange(nt, 2 * nt), np.arange(nt)])

    def sheet_vertices(self, sign: int) -> np.ndarray:
        """Vertices of one closed sheet (seam included)."""
        tris = self.mesh.triangles[self.sheet_sign == sign]
        return np.unique(tris)

    def check(self) -> list:
        """List every violated structural invariant (empty when all hold)."""
        out = []
        tau, pi = self.involution, self.projection
        n = len(tau)
        if not np.array_equal(tau[tau], np.arange(n)):
            out.append("involution is not an involution")
        fixed = np.flatnonzero(tau == np.arange(n))
        if not np.array_equal(fixed, np.sort(self.seam)):
            out.append("fixed points of the involution differ from the seam")
        if not np.array_equal(pi[tau], pi):
            out.append("projection is not involution invariant")
        if not np.all(np.isin(pi[self.seam], self.source.hole_nodes)):
            out.append("seam does not project onto the holes")
        nt = self.n_source_triangles
        g = self.mesh.metric
        if not np.array_equal(g[nt:], _FLIP @ g[:nt] @ _FLIP):
            out.append("pushforward metric is not involution invariant")
        if not np.array_equal(self.sheet_sign[self.triangle_involution], -self.sheet_sign):
            out.append("sheet sign does not flip under the involution")
        if len(self.mesh.boundary_loops) != 2:
            out.append("doubled surface must have exactly two boundary loops")
        return out


def double_cover(mesh: SurfaceMesh) -> DoubledSurface:
    """Glue two copies of ``mesh`` along every non-accessible boundary loop."""
    if mesh.n_holes < 1:
        raise MeshError("double cover needs at least one hole to glue along")
    n = mesh.n_vertices
    seam = mesh.hole_nodes
    is_seam = np.zeros(n, dtype=bool)
    is_seam[seam] = True

    # an interior edge joining two seam vertices would be shared by four triangles
    loop_edges = set()
    for loop in mesh.hole_loops:
        for a, b in zip(loop, np.roll(loop, -1)):
            loop_edges.add((min(a, b), max(a, b)))
    e = mesh.edges
    chords = [tuple(x) for x in e[is_seam[e[:, 0]] & is_seam[e[:, 1]]] if tuple(x) not in loop_edges]
    if chords:
        raise MeshError(f"{len(chords)} interior edges join hole vertices; refine near the holes")

    copies = np.flatnonzero(~is_seam)
    tau = np.arange(n + len(copies))
    tau[copies] = n + np.arange(len(copies))
    tau[n:] = copies
    pi = np.concatenate([np.arange(n), copies])

    t = mesh.triangles
    minus = tau[t][:, [1, 0, 2]]
    triangles = np.vstack([t, minus])
    metric = np.concatenate([mesh.metric, _FLIP @ mesh.metric @ _FLIP])
    vertices = mesh.vertices[pi]

    g0 = mesh.gamma0
    g0_minus = tau[np.concatenate([g0[:1], g0[:0:-1]])]
    doubled = SurfaceMesh(vertices, triangles, metric, (g0, g0_minus), 0, mesh.rotation_orientation)
    sign = np.concatenate([np.ones(len(t), dtype=np.int64), -np.ones(len(t), dtype=np.int64)])
    for arr in (pi, tau, sign):
        arr.setflags(write=False)
    seam = seam.copy()
    seam.setflags(write=False)
    return DoubledSurface(doubled, pi, tau, seam, sign, mesh)


def extract_sheet(doubled: DoubledSurface, sign: int = 1) -> SurfaceMesh:
    """One sheet with the seam re-attached, expressed on the source vertex numbering."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    nt = doubled.n_source_triangles
    src = doubled.source
    sel = slice(0, nt) if sign > 0 else slice(nt, 2 * nt)
    tris = doubled.projection[doubled.mesh.triangles[sel]]
    metric = doubled.mesh.metric[sel]
    if sign < 0:
        tris = tris[:, [1, 0, 2]]
        metric = _FLIP @ metric @ _FLIP
    return SurfaceMesh(src.vertices, tris, metric, src.boundary_loops, src.gamma0_index,
                       src.rotation_orientation)
