"""Triangulated metric surfaces with a multicomponent boundary.

A :class:`SurfaceMesh` carries a per-triangle constant metric expressed in
the triangle's own orthonormal frame: the first axis runs along the edge
``v0 -> v1``, the second completes a right-handed frame with respect to the
normal induced by the vertex order.  Everything the solvers need is derived
from the intrinsic Gram matrix of the two edges leaving ``v0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import Delaunay

from .errors import FormatError, MeshError

EPS_G = 1e-6


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    metric: np.ndarray = None
    boundary_loops: tuple = ()
    gamma0_index: int = 0
    rotation_orientation: int = 1

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise MeshError("vertices must be an (n, 3) array")
        if v.shape[1] == 2:
            v = np.column_stack([v, np.zeros(len(v))])
        t = np.asarray(self.triangles, dtype=np.int64)
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError("triangles must be an (n, 3) array")
        if self.metric is None:
            g = np.broadcast_to(np.eye(2), (len(t), 2, 2))
        else:
            g = np.asarray(self.metric, dtype=float)
            if g.shape != (len(t), 2, 2):
                raise MeshError("metric must be an (nt, 2, 2) array")
        loops = tuple(_readonly(loop, np.int64) for loop in self.boundary_loops)
        if loops and not 0 <= self.gamma0_index < len(loops):
            raise MeshError("gamma0_index out of range")
        if self.rotation_orientation not in (1, -1):
            raise MeshError("rotation_orientation must be +1 or -1")
        object.__setattr__(self, "vertices", _readonly(v, float))
        object.__setattr__(self, "triangles", _readonly(t, np.int64))
        object.__setattr__(self, "metric", _readonly(g, float))
        object.__setattr__(self, "boundary_loops", loops)

    # -- basic counts -------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def gamma0(self) -> np.ndarray:
        """Vertex cycle of the accessible boundary component."""
        return self.boundary_loops[self.gamma0_index]

    @property
    def hole_loops(self) -> list:
        return [loop for i, loop in enumerate(self.boundary_loops) if i != self.gamma0_index]

    @property
    def n_holes(self) -> int:
        return len(self.boundary_loops) - 1

    @cached_property
    def hole_nodes(self) -> np.ndarray:
        loops = self.hole_loops
        if not loops:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(loops))

    # -- intrinsic geometry -------------------------------------------------

    @cached_property
    def frames(self) -> np.ndarray:
        """Edge coordinates in each triangle's local frame, shape (nt, 2, 2).

        Column 0 holds ``v1 - v0`` and column 1 holds ``v2 - v0``.
        """
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        l1 = np.linalg.norm(e1, axis=1)
        n = np.cross(e1, e2)
        nn = np.linalg.norm(n, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            x2 = np.einsum("ij,ij->i", e2, e1) / l1
            y2 = nn / l1
        E = np.zeros((len(p), 2, 2))
        E[:, 0, 0] = l1
        E[:, 0, 1] = x2
        E[:, 1, 1] = y2
        return E

    @cached_property
    def gram(self) -> np.ndarray:
        """Intrinsic Gram matrix of the edges ``v0->v1`` and ``v0->v2``."""
        E = self.frames
        return np.einsum("tki,tkl,tlj->tij", E, self.metric, E)

    @cached_property
    def areas(self) -> np.ndarray:
        G = self.gram
        det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0]
        return 0.5 * np.sqrt(np.clip(det, 0.0, None))

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @property
    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles)
        return int(len(used) - len(self.edges) + self.n_triangles)

    def edge_length(self, a: int, b: int) -> float:
        """Intrinsic length of the mesh edge ``a-b``."""
        return float(self.edge_lengths_of(np.array([a]), np.array([b]))[0])

    def edge_lengths_of(self, a, b) -> np.ndarray:
        """Intrinsic lengths of the edges ``a[i]-b[i]`` (first triangle wins)."""
        keys, lengths = self._edge_lengths
        n = self.n_vertices
        q = np.minimum(a, b).astype(np.int64) * n + np.maximum(a, b)
        pos = np.searchsorted(keys, q)
        pos = np.minimum(pos, len(keys) - 1)
        if np.any(keys[pos] != q):
            raise MeshError("requested pair is not a mesh edge")
        return lengths[pos]

    @cached_property
    def _edge_lengths(self) -> tuple:
        G = self.gram
        # squared lengths of v0v1, v0v2, v1v2 from the Gram matrix
        sq = np.concatenate([G[:, 0, 0], G[:, 1, 1], G[:, 0, 0] + G[:, 1, 1] - 2 * G[:, 0, 1]])
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [0, 2]], t[:, [1, 2]]])
        keys = e.min(axis=1) * self.n_vertices + e.max(axis=1)
        keys, first = np.unique(keys, return_index=True)
        return keys, np.sqrt(np.clip(sq[first], 0.0, None))

    def loop_arclength(self, loop: np.ndarray) -> tuple:
        """Arc-length coordinates of loop nodes and the total length."""
        seg = self.edge_lengths_of(loop, np.roll(loop, -1))
        s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
        return s, float(seg.sum()), seg

    def loop_length(self, index: int) -> float:
        return self.loop_arclength(self.boundary_loops[index])[1]


# -- boundary extraction ----------------------------------------------------


def directed_boundary_edges(triangles: np.ndarray) -> list:
    """Directed edges used by exactly one triangle, in triangle order."""
    count = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            count.setdefault(key, []).append((int(a), int(b)))
    return [uses[0] for uses in count.values() if len(uses) == 1]


def extract_boundary_loops(triangles: np.ndarray) -> list:
    """Boundary cycles oriented as induced by the triangles.

    Raises :class:`MeshError` if the boundary is not a disjoint union of
    simple cycles.
    """
    nxt = {}
    for a, b in directed_boundary_edges(triangles):
        if a in nxt:
            raise MeshError(f"boundary vertex {a} has two outgoing boundary edges")
        nxt[a] = b
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        v = nxt[start]
        while v != start:
            if v in seen or v not in nxt:
                raise MeshError(f"boundary is not a union of simple cycles near vertex {v}")
            loop.append(v)
            seen.add(v)
            v = nxt[v]
        loops.append(np.array(loop, dtype=np.int64))
    return loops


def rotate_loop(loop: np.ndarray, base: int) -> np.ndarray:
    k = int(np.flatnonzero(loop == base)[0])
    return np.roll(loop, -k)


# -- validation -------------------------------------------------------------


@dataclass
class MeshReport:
    ok: bool
    loops: int
    orientation_consistent: bool
    metric_spd: bool
    metric_eig_range: tuple
    min_quality: float
    euler_characteristic: int
    violations: list = field(default_factory=list)

    def raise_if_failed(self):
        if not self.ok:
            raise MeshError("; ".join(self.violations), self.violations)


def validate_mesh(mesh: SurfaceMesh, eps_g: float = EPS_G) -> MeshReport:
    """Check every structural invariant and report violations without repairing."""
    violations = []
    t = mesh.triangles
    nv = mesh.n_vertices
    if t.size and (t.min() < 0 or t.max() >= nv):
        violations.append("triangle index out of range")
        return MeshReport(False, 0, False, False, (np.nan, np.nan), 0.0, 0, violations)
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
        violations.append("triangle with repeated vertex")

    uses = {}
    for tri in t:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            uses.setdefault((min(a, b), max(a, b)), []).append((a, b))
    oriented = True
    for key, u in uses.items():
        if len(u) > 2:
            violations.append(f"edge {key} shared by {len(u)} triangles")
        elif len(u) == 2 and u[0] == u[1]:
            oriented = False
    if not oriented:
        violations.append("inconsistent triangle orientation")

    loops_found = []
    try:
        loops_found = extract_boundary_loops(t)
    except MeshError as exc:
        violations.append(str(exc))
    if oriented and loops_found:
        stored = {frozenset(map(int, loop)) for loop in mesh.boundary_loops}
        found = {frozenset(map(int, loop)) for loop in loops_found}
        if stored != found:
            violations.append("stored boundary loops differ from the mesh boundary")
        else:
            directed = set(directed_boundary_edges(t))
            sign = mesh.rotation_orientation
            for i, loop in enumerate(mesh.boundary_loops):
                a, b = int(loop[0]), int(loop[1])
                if ((a, b) if sign > 0 else (b, a)) not in directed:
                    violations.append(f"loop {i} not ordered along the boundary tangent")
    if not mesh.boundary_loops:
        violations.append("mesh has no boundary")

    g = mesh.metric
    sym = np.allclose(g, np.transpose(g, (0, 2, 1)), rtol=0, atol=1e-14)
    eig = np.linalg.eigvalsh(0.5 * (g + np.transpose(g, (0, 2, 1))))
    lo, hi = float(eig.min()), float(eig.max())
    spd = bool(sym and lo >= eps_g and hi <= 1.0 / eps_g)
    if not sym:
        violations.append("metric tensor not symmetric")
    if not spd:
        violations.append(f"metric eigenvalues outside [{eps_g:g}, {1/eps_g:g}]: [{lo:.3e}, {hi:.3e}]")

    E = mesh.frames
    if np.any(~np.isfinite(E)) or np.any(E[:, 1, 1] <= 0):
        violations.append("degenerate embedded triangle")
        quality = 0.0
    else:
        G = mesh.gram
        sq = G[:, 0, 0] + G[:, 1, 1] + (G[:, 0, 0] + G[:, 1, 1] - 2 * G[:, 0, 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            q = 4.0 * math.sqrt(3.0) * mesh.areas / sq
        quality = float(np.nanmin(q)) if len(q) else 0.0
        if not quality > 0:
            violations.append("degenerate triangle in the metric")

    return MeshReport(
        ok=not violations,
        loops=len(loops_found),
        orientation_consistent=oriented,
        metric_spd=spd,
        metric_eig_range=(lo, hi),
        min_quality=quality,
        euler_characteristic=mesh.euler_characteristic,
        violations=violations,
    )


# -- synthetic domains ------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Descriptor of a synthetic planar domain.

    ``metric`` is either a constant 2x2 tensor in global xy coordinates or a
    callable ``(x, y) -> (..., 2, 2)``; ``conformal`` is a positive constant
    or callable ``(x, y) -> rho`` multiplying the Euclidean metric.
    """

    kind: str
    h: float
    r: float = 0.5
    centers: tuple = ()
    radii: tuple = ()
    metric: object = None
    conformal: object = None

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        d = dict(d)
        if "centers" in d:
            d["centers"] = tuple(tuple(map(float, c)) for c in d["centers"])
        if "radii" in d:
            d["radii"] = tuple(map(float, d["radii"]))
        if isinstance(d.get("metric"), list):
            d["metric"] = tuple(tuple(map(float, row)) for row in d["metric"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "h": self.h}
        if self.kind == "annulus":
            out["r"] = self.r
        if self.kind == "holes":
            out["centers"] = [list(c) for c in self.centers]
            out["radii"] = list(self.radii)
        for key in ("metric", "conformal"):
            val = getattr(self, key)
            if val is not None:
                if callable(val):
                    out[key] = "<callable>"
                else:
                    out[key] = np.asarray(val, dtype=float).tolist()
        return out


def _ring(n, radius, offset, center=(0.0, 0.0)):
    ang = offset + 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)]), ang


def _zip_rings(outer, ang_o, inner, ang_i):
    """Triangulate the strip between two concentric rings of nodes."""
    no, ni = len(outer), len(inner)
    k0 = int(np.argmin(np.abs(np.angle(np.exp(1j * (ang_i - ang_o[0]))))))
    inner = np.roll(inner, -k0)
    ai = np.roll(ang_i, -k0)
    ai = ang_o[0] + np.angle(np.exp(1j * (ai - ang_o[0])))
    ai = ai[0] + np.unwrap(ai - ai[0])
    ao = np.concatenate([ang_o, [ang_o[0] + 2 * np.pi]])
    ai = np.concatenate([ai, [ai[0] + 2 * np.pi]])
    tris = []
    i = j = 0
    while i < no or j < ni:
        if j == ni or (i < no and ao[i + 1] <= ai[j + 1]):
            tris.append((outer[i % no], outer[(i + 1) % no], inner[j % ni]))
            i += 1
        else:
            tris.append((outer[i % no], inner[(j + 1) % ni], inner[j % ni]))
            j += 1
    return tris


def _orient_ccw(points, tris):
    tris = np.asarray(tris, dtype=np.int64)
    p = points[tris]
    area = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (
        p[:, 1, 1] - p[:, 0, 1]
    )
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _rings_mesh(radii, counts, center_point):
    pts, angs, idx = [], [], []
    start = 0
    for k, (rho, n) in enumerate(zip(radii, counts)):
        offset = (k % 2) * np.pi / n
        p, a = _ring(n, rho, offset)
        pts.append(p)
        angs.append(a)
        idx.append(np.arange(start, start + n))
        start += n
    tris = []
    for k in range(len(radii) - 1):
        tris += _zip_rings(idx[k], angs[k], idx[k + 1], angs[k + 1])
    if center_point:
        c = start
        pts.append(np.zeros((1, 2)))
        last = idx[-1]
        tris += [(last[i], last[(i + 1) % len(last)], c) for i in range(len(last))]
    points = np.vstack(pts)
    return points, _orient_ccw(points, tris), idx


def _disk_points(h):
    n_layers = max(2, int(round(1.0 / (h * math.sqrt(3) / 2))))
    radii = [1.0 - k / n_layers for k in range(n_layers)]
    counts = [max(6, int(round(2 * np.pi * rho / h))) for rho in radii]
    points, tris, idx = _rings_mesh(radii, counts, center_point=True)
    return points, tris, [idx[0]]


def _annulus_points(h, r):
    n = max(16, int(round(2 * np.pi / h)))
    L = math.log(1.0 / r)
    step = (2 * np.pi / n) * math.sqrt(3) / 2
    n_layers = max(2, int(round(L / step)))
    radii = [math.exp(-k * L / n_layers) for k in range(n_layers + 1)]
    radii[-1] = r
    points, tris, idx = _rings_mesh(radii, [n] * len(radii), center_point=False)
    return points, tris, [idx[0], idx[-1]]


def _holes_points(h, centers, radii):
    dr = h * math.sqrt(3) / 2
    gap_out = min(1.0 - math.hypot(*c) - r for c, r in zip(centers, radii))
    layers = max(1, min(3, int(gap_out / (3 * dr))))
    pts, rings = [], []
    start = 0
    n0 = max(16, int(round(2 * np.pi / h)))
    for k in range(layers):
        p, _ = _ring(n0, 1.0 - k * dr, (k % 2) * np.pi / n0)
        pts.append(p)
        rings.append(np.arange(start, start + len(p)))
        start += len(p)
    hole_first = []
    for (cx, cy), rad in zip(centers, radii):
        nj = max(12, int(round(2 * np.pi * rad / h)))
        for k in range(layers):
            p, _ = _ring(nj, rad + k * dr, (k % 2) * np.pi / nj, (cx, cy))
            if k == 0:
                hole_first.append(np.arange(start, start + len(p)))
            pts.append(p)
            start += len(p)
    # hexagonal fill away from the ring layers
    margin = (layers - 1) * dr + 0.8 * h
    ny = int(2.2 / (h * math.sqrt(3) / 2)) + 2
    nx = int(2.2 / h) + 2
    jj, ii = np.meshgrid(np.arange(-ny // 2, ny // 2 + 1), np.arange(-nx // 2, nx // 2 + 1), indexing="ij")
    lx = h * (ii + 0.5 * (jj % 2))
    ly = h * math.sqrt(3) / 2 * jj
    lat = np.column_stack([lx.ravel(), ly.ravel()])
    keep = np.hypot(lat[:, 0], lat[:, 1]) <= 1.0 - margin
    for (cx, cy), rad in zip(centers, radii):
        keep &= np.hypot(lat[:, 0] - cx, lat[:, 1] - cy) >= rad + margin
    pts.append(lat[keep])
    points = np.vstack(pts)
    tri = Delaunay(points).simplices
    cen = points[tri].mean(axis=1)
    inside = np.hypot(cen[:, 0], cen[:, 1]) < 1.0
    for (cx, cy), rad in zip(centers, radii):
        inside &= np.hypot(cen[:, 0] - cx, cen[:, 1] - cy) > rad
    tris = _orient_ccw(points, tri[inside])
    used = np.unique(tris)
    remap = -np.ones(len(points), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return points[used], remap[tris], [remap[rings[0]]] + [remap[f] for f in hole_first]


def _metric_field(spec: DomainSpec, points, tris):
    if spec.metric is None and spec.conformal is None:
        return None
    cen = points[tris].mean(axis=1)
    x, y = cen[:, 0], cen[:, 1]
    if spec.metric is not None:
        if callable(spec.metric):
            gxy = np.asarray(spec.metric(x, y), dtype=float)
        else:
            gxy = np.broadcast_to(np.asarray(spec.metric, dtype=float), (len(tris), 2, 2))
    else:
        gxy = np.broadcast_to(np.eye(2), (len(tris), 2, 2)).copy()
    if spec.conformal is not None:
        rho = spec.conformal(x, y) if callable(spec.conformal) else float(spec.conformal)
        gxy = gxy * np.asarray(rho, dtype=float).reshape(-1, 1, 1)
    p = points[tris]
    e1 = p[:, 1] - p[:, 0]
    t1 = e1 / np.linalg.norm(e1, axis=1)[:, None]
    t2 = np.column_stack([-t1[:, 1], t1[:, 0]])
    R = np.stack([t1, t2], axis=2)  # columns are frame axes in xy
    return np.einsum("tki,tkl,tlj->tij", R, gxy, R)


def build_synthetic(descriptor) -> SurfaceMesh:
    """Generate a planar test domain with the outer unit circle as Γ0.

    ``descriptor`` is a :class:`DomainSpec` or a dict with the same keys.
    The disk and holed domains use edge length ``h`` throughout; the
    annulus uses a log-polar grid whose outer ring has spacing ``h`` and whose
    cells shrink conformally towards the inner circle.
    """
    spec = descriptor if isinstance(descriptor, DomainSpec) else DomainSpec.from_dict(descriptor)
    h = spec.h
    if not (isinstance(h, (int, float)) and 0 < h <= 0.5 and math.isfinite(h)):
        raise MeshError(f"degenerate target edge length h={h}")
    if spec.kind == "disk":
        points, tris, loops = _disk_points(h)
    elif spec.kind == "annulus":
        if not 0 < spec.r < 1:
            raise MeshError(f"annulus radius must lie in (0, 1), got {spec.r}")
        if spec.r < 2 * h / (2 * np.pi) * 4:
            raise MeshError("inner radius too small for the target edge length")
        points, tris, loops = _annulus_points(h, spec.r)
    elif spec.kind == "holes":
        centers = [tuple(map(float, c)) for c in spec.centers]
        radii = [float(r) for r in spec.radii]
        if len(centers) != len(radii) or not centers:
            raise MeshError("holes need matching, nonempty centers and radii")
        for c, rad in zip(centers, radii):
            if rad <= 0:
                raise MeshError(f"non-positive hole radius {rad}")
            if math.hypot(*c) + rad >= 1.0 - 2 * h:
                raise MeshError(f"hole at {c} with radius {rad} is not interior")
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                d = math.dist(centers[i], centers[j])
                if d <= radii[i] + radii[j] + 2 * h:
                    raise MeshError(f"holes {i} and {j} overlap")
        points, tris, loops = _holes_points(h, centers, radii)
    else:
        raise MeshError(f"unknown domain kind {spec.kind!r}")

    found = extract_boundary_loops(tris)
    ordered = []
    for ring in loops:
        ring_set = set(map(int, ring))
        match = [lp for lp in found if set(map(int, lp)) == ring_set]
        if len(match) != 1:
            raise MeshError("triangulation did not recover the prescribed boundary circles")
        ordered.append(rotate_loop(match[0], int(ring[0])))
    if len(ordered) != len(found):
        raise MeshError("triangulation produced spurious boundary components")
    metric = _metric_field(spec, points, tris)
    return SurfaceMesh(points, tris, metric, tuple(ordered), 0, 1)


# -- SURF2 text format ------------------------------------------------------


def write_surf2(mesh: SurfaceMesh, path) -> None:
    lines = [f"SURF2 {mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_loops)}"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    eye = np.eye(2)
    for t, g in enumerate(mesh.metric):
        if not np.array_equal(g, eye):
            lines.append(f"m {t} {float(g[0, 0])!r} {float(g[0, 1])!r} {float(g[1, 1])!r}")
    for i, loop in enumerate(mesh.boundary_loops):
        lines.append(f"loop {i} " + " ".join(map(str, loop.tolist())))
    lines.append(f"gamma0 {mesh.gamma0_index}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_surf2(path) -> SurfaceMesh:
    text = Path(path).read_text().splitlines()
    if not text:
        raise FormatError("empty file", 1)
    head = text[0].split()
    if len(head) != 4 or head[0] != "SURF2":
        raise FormatError("expected header 'SURF2 <nv> <nt> <nloops>'", 1)
    try:
        nv, nt, nl = map(int, head[1:])
    except ValueError:
        raise FormatError("non-integer header counts", 1) from None
    verts, tris, metric, loops = [], [], {}, {}
    gamma0 = None
    for lineno, raw in enumerate(text[1:], start=2):
        tok = raw.split()
        if not tok:
            continue
        kind, args = tok[0], tok[1:]
        try:
            if kind == "v" and len(args) == 3:
                verts.append([float(a) for a in args])
            elif kind == "t" and len(args) == 3:
                tris.append([int(a) for a in args])
            elif kind == "m" and len(args) == 4:
                g11, g12, g22 = (float(a) for a in args[1:])
                metric[int(args[0])] = [[g11, g12], [g12, g22]]
            elif kind == "loop" and len(args) >= 4:
                loops[int(args[0])] = [int(a) for a in args[1:]]
            elif kind == "gamma0" and len(args) == 1:
                gamma0 = int(args[0])
            else:
                raise FormatError(f"unknown or malformed record {kind!r}", lineno)
        except ValueError:
            raise FormatError(f"bad number in {kind!r} record", lineno) from None
    last = len(text)
    if len(verts) != nv or len(tris) != nt or len(loops) != nl:
        raise FormatError(
            f"counts mismatch: header says {nv}/{nt}/{nl}, found {len(verts)}/{len(tris)}/{len(loops)}",
            last,
        )
    if sorted(loops) != list(range(nl)):
        raise FormatError("loop ids must be 0..nloops-1", last)
    if gamma0 is None:
        raise FormatError("missing gamma0 record", last)
    g = np.broadcast_to(np.eye(2), (nt, 2, 2)).copy()
    for t, m in metric.items():
        if not 0 <= t < nt:
            raise FormatError(f"metric record for unknown triangle {t}", last)
        g[t] = m
    tri = np.array(tris, dtype=np.int64).reshape(-1, 3)
    loop_list = tuple(np.array(loops[i], dtype=np.int64) for i in range(nl))
    sign = 1
    if loop_list and len(tri):
        directed = set(directed_boundary_edges(tri))
        a, b = int(loop_list[gamma0][0]), int(loop_list[gamma0][1])
        sign = 1 if (a, b) in directed else -1
    try:
        return SurfaceMesh(np.array(verts), tri, g, loop_list, gamma0, sign)
    except MeshError as exc:
        raise FormatError(str(exc), last) from None


def unit_circle_angle(mesh: SurfaceMesh, nodes: Sequence[int]) -> np.ndarray:
    p = mesh.vertices[np.asarray(nodes)]
    return np.arctan2(p[:, 1], p[:, 0])
