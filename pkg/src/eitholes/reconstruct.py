"""Character cloud on the double, seam and sheet identification, metric and modulus fits.

Characters of the algebra on 𝕄 are realised by point evaluation of the
harmonic extensions of the generators, one point per vertex of the doubled
mesh.  All later steps only look at the generator values of those points
(and at the mesh adjacency in validation mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import least_squares
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .algebra import TraceAlgebraElement
from .boundary import fourier_modes
from .cover import DoubledSurface
from .dn import DNOperator, assemble_dn
from .errors import NeedsMoreGenerators, SeparationFailure, TopologyError
from .fem import cr_residual, energy_norm, solve_dirichlet_doubled
from .mesh import SurfaceMesh, extract_boundary_loops, rotate_loop


@dataclass
class CharacterCloud:
    """Points of the spectrum as vectors of generator values.

    ``values[p, j]`` is the value of generator j at point p and
    ``star_values[p, j]`` that of its involution.  ``vertex`` links points to
    doubled-mesh vertices in validation mode.
    """

    values: np.ndarray
    star_values: np.ndarray
    boundary: np.ndarray
    vertex: np.ndarray = None
    edges: np.ndarray = None
    hermitian: np.ndarray = None
    sheet: np.ndarray = None
    cr_residuals: list = field(default_factory=list)

    @property
    def n_points(self) -> int:
        return len(self.values)

    @property
    def n_generators(self) -> int:
        return self.values.shape[1]

    def scale(self) -> float:
        return float(max(np.abs(self.values).max(), 1e-300))

    def to_csv(self, path) -> None:
        k = self.n_generators
        head = ["point"] + [f"{p}{j}" for j in range(k) for p in ("re", "im")]
        head += ["boundary", "hermitian", "sheet"]
        herm = self.hermitian if self.hermitian is not None else np.zeros(self.n_points, bool)
        sheet = self.sheet if self.sheet is not None else np.zeros(self.n_points, int)
        with open(path, "w") as fh:
            fh.write(",".join(head) + "\n")
            for p in range(self.n_points):
                row = [str(p)]
                for j in range(k):
                    z = self.values[p, j]
                    row += [repr(float(z.real)), repr(float(z.imag))]
                row += [str(int(self.boundary[p])), str(int(herm[p])), str(int(sheet[p]))]
                fh.write(",".join(row) + "\n")


def boundary_data_on_cover(a: TraceAlgebraElement) -> tuple:
    """Dirichlet data on the two copies of Γ0: η on the plus copy, conj(η*) on the minus copy."""
    return a.trace, a.trace.with_values(np.conj(a.star_values))


def _extend(doubled: DoubledSurface, plus, minus) -> tuple:
    re, im = solve_dirichlet_doubled(doubled, plus.astype(complex), minus.astype(complex))
    return re, im


def _check_separation(gens, tol: float):
    pts = np.column_stack([np.column_stack([g.values.real, g.values.imag]) for g in gens])
    scale = max(np.abs(pts).max(), 1e-300)
    dist, idx = cKDTree(pts).query(pts, k=2)
    worst = int(np.argmin(dist[:, 1]))
    if dist[worst, 1] <= tol * scale:
        raise SeparationFailure(
            f"boundary nodes {worst} and {int(idx[worst, 1])} share all generator values",
            pair=(worst, int(idx[worst, 1])),
        )


def gelfand_embed(doubled: DoubledSurface, gens: list, sep_tol: float = 1e-8) -> CharacterCloud:
    """Point-evaluation characters of the doubled mesh for the given generators.

    Each generator and its involution are extended harmonically to 𝕄 from
    their data on both copies of Γ0.  The relative Cauchy–Riemann residual of
    every extension is recorded.
    """
    if len(gens) < 1:
        raise ValueError("need at least one generator")
    _check_separation(gens, sep_tol)
    mesh = doubled.mesh
    vals, stars, crs = [], [], []
    for g in gens:
        plus, minus = boundary_data_on_cover(g)
        re, im = _extend(doubled, plus.values, minus.values)
        vals.append(re.values + 1j * im.values)
        s_re, s_im = _extend(doubled, g.star_values, np.conj(g.values))
        stars.append(s_re.values + 1j * s_im.values)
        size = energy_norm(mesh, re) + energy_norm(mesh, im)
        crs.append(cr_residual(mesh, im, re) / size if size > 0 else 0.0)
    boundary = np.zeros(mesh.n_vertices, dtype=bool)
    for loop in mesh.boundary_loops:
        boundary[loop] = True
    return CharacterCloud(
        values=np.column_stack(vals),
        star_values=np.column_stack(stars),
        boundary=boundary,
        vertex=np.arange(mesh.n_vertices),
        edges=mesh.edges,
        cr_residuals=crs,
    )


@dataclass
class ShilovReport:
    ok: bool
    checked: int
    violations: list

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "violations": self.violations}


def shilov_check(cloud: CharacterCloud, slack: float = 1e-6, max_degree: int = 2) -> ShilovReport:
    """Check that every generator and product of two attains its maximum modulus on the boundary."""
    k = cloud.n_generators
    funcs = [((j,), cloud.values[:, j]) for j in range(k)]
    if max_degree >= 2:
        funcs += [((i, j), cloud.values[:, i] * cloud.values[:, j]) for i in range(k) for j in range(i, k)]
    violations = []
    for label, v in funcs:
        mod = np.abs(v)
        top, edge = mod.max(), mod[cloud.boundary].max()
        if top > edge * (1 + slack):
            violations.append({"generators": list(label), "interior_max": float(top), "boundary_max": float(edge)})
    return ShilovReport(not violations, len(funcs), violations)


def hermitian_defect(cloud: CharacterCloud) -> np.ndarray:
    """max_j |χ(η_j*) − conj χ(η_j)| per point, relative to the cloud scale."""
    return np.abs(cloud.star_values - np.conj(cloud.values)).max(axis=1) / cloud.scale()


def find_seam(cloud: CharacterCloud, tol: float = 1e-8, expect_nonempty: bool = True) -> np.ndarray:
    """Indices of hermitian characters; also stored as ``cloud.hermitian``."""
    herm = hermitian_defect(cloud) <= tol
    cloud.hermitian = herm
    seam = np.flatnonzero(herm)
    if expect_nonempty and len(seam) == 0:
        raise TopologyError("no hermitian characters although holes were detected")
    return seam


def tau_prime(cloud: CharacterCloud) -> np.ndarray:
    """The involution on characters, χ ↦ conj χ(·*), realised as a point map."""
    def stack(z):
        return np.column_stack([z.real, z.imag])

    _, idx = cKDTree(stack(cloud.values)).query(stack(np.conj(cloud.star_values)))
    return idx


def identify_boundary(cloud: CharacterCloud, gens: list) -> tuple:
    """Match each Γ0 sample with its characters on both boundary copies.

    Returns ``(plus, minus, mismatch)``: cloud indices for η(s_i) and
    conj(η*(s_i)) and the largest relative value mismatch.  Only
    boundary-flagged points are candidates; ties go to the earlier point.
    """
    cand = np.flatnonzero(cloud.boundary)

    def stack(z):
        return np.column_stack([z.real, z.imag])

    tree = cKDTree(stack(cloud.values[cand]))
    target_p = np.column_stack([g.values for g in gens])
    target_m = np.column_stack([np.conj(g.star_values) for g in gens])
    dp, ip = tree.query(stack(target_p))
    dm, im = tree.query(stack(target_m))
    mismatch = float(max(dp.max(), dm.max()) / cloud.scale())
    return cand[ip], cand[im], mismatch


def _knn_edges(cloud: CharacterCloud, k: int) -> np.ndarray:
    pts = np.column_stack([cloud.values.real, cloud.values.imag])
    _, idx = cKDTree(pts).query(pts, k=k + 1)
    rows = np.repeat(np.arange(len(pts)), k)
    return np.column_stack([rows, idx[:, 1:].ravel()])


def split_components(cloud: CharacterCloud, seam, graph: str = "mesh", k: int = 6, plus_anchor=None) -> np.ndarray:
    """Label the two sheets left after removing the seam.

    Labels are +1 for the component containing ``plus_anchor`` (default: the
    first boundary point), −1 for the other and 0 on the seam.  Any count
    other than two components raises :class:`TopologyError`.
    """
    n = cloud.n_points
    if graph == "mesh":
        if cloud.edges is None:
            raise ValueError("mesh adjacency not available")
        e = cloud.edges
    elif graph == "knn":
        e = _knn_edges(cloud, k)
    else:
        raise ValueError("graph must be mesh or knn")
    keep = np.ones(n, dtype=bool)
    keep[np.asarray(seam, dtype=np.int64)] = False
    e = e[keep[e[:, 0]] & keep[e[:, 1]]]
    A = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, lab = connected_components(A, directed=False)
    comps = np.unique(lab[keep])
    if len(comps) != 2:
        raise TopologyError(f"seam removal left {len(comps)} components, expected 2")
    anchor = int(np.flatnonzero(cloud.boundary & keep)[0]) if plus_anchor is None else int(plus_anchor)
    sheet = np.where(lab == lab[anchor], 1, -1)
    sheet[~keep] = 0
    cloud.sheet = sheet
    return sheet


# -- metric and modulus ----------------------------------------------------------


@dataclass
class MetricFit:
    metric: np.ndarray
    residual: float
    singular_values: np.ndarray


def _hessians(coords: np.ndarray, fields: np.ndarray, degree: int = 3) -> np.ndarray:
    c = coords - coords.mean(axis=0)
    scale = np.abs(c).max()
    x, y = c[:, 0] / scale, c[:, 1] / scale
    cols = [x ** i * y ** j for d in range(degree + 1) for i in range(d, -1, -1) for j in [d - i]]
    V = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(V, fields, rcond=None)
    # monomials are ordered 1, x, y, x², xy, y², ...
    H = np.stack([2 * coef[3], coef[4], 2 * coef[5]], axis=1) / scale ** 2
    return H


def fit_conformal_metric(coords, fields, rank_tol: float = 1e-6) -> MetricFit:
    """Unit-determinant constant metric making every field harmonic on the patch.

    ``coords`` are local 2-D coordinates of the patch points and ``fields``
    the values of real harmonic functions there (one column each).  Each
    field contributes the equation g^{11}H11 + 2g^{12}H12 + g^{22}H22 = 0
    for its fitted Hessian H; the inverse metric spans the null space.
    """
    coords = np.asarray(coords, dtype=float)
    fields = np.asarray(fields, dtype=float)
    if fields.ndim == 1:
        fields = fields[:, None]
    if len(coords) < 10:
        raise NeedsMoreGenerators("patch has too few points for the Hessian fit")
    # fields are scaled by their spread so weak Hessians (mostly fitting noise) stay weak
    spread = np.ptp(fields, axis=0)
    fields = fields[:, spread > 0] / spread[spread > 0]
    H = _hessians(coords, fields)
    rows = np.column_stack([H[:, 0], 2 * H[:, 1], H[:, 2]])
    rows = rows[np.linalg.norm(rows, axis=1) > 0]
    if len(rows) < 2:
        raise NeedsMoreGenerators("fewer than two fields with nonzero Hessian")
    _, s, Vt = np.linalg.svd(rows)
    if len(s) < 2 or s[1] < rank_tol * s[0]:
        raise NeedsMoreGenerators("Hessian equations have rank below two")
    a, b, c = Vt[-1]
    ginv = np.array([[a, b], [b, c]])
    if np.trace(ginv) < 0:
        ginv = -ginv
    det = np.linalg.det(ginv)
    if det <= 0:
        raise NeedsMoreGenerators("fitted inverse metric is not definite")
    g = np.linalg.inv(ginv / np.sqrt(det))
    resid = float(s[2] / s[0]) if len(s) > 2 else 0.0
    return MetricFit(g, resid, s)


@dataclass
class ModulusFit:
    L: float
    residual: float
    ok: bool

    def to_dict(self) -> dict:
        return {"L": self.L, "residual": self.residual, "ok": self.ok}


def annulus_eigenvalues(L: float, flavor: str, n_pairs: int, length: float = 2 * np.pi) -> np.ndarray:
    n = np.repeat(np.arange(1, n_pairs + 1), 2)
    if flavor == "grounded":
        lam = np.concatenate([[1 / L], n / np.tanh(n * L)])
    elif flavor == "isolated":
        lam = np.concatenate([[0.0], n * np.tanh(n * L)])
    else:
        raise ValueError("flavor must be grounded or isolated")
    return lam * 2 * np.pi / length


def recover_annulus_modulus(eigs, flavor: str, length: float = 2 * np.pi, n_pairs: int = 4,
                            max_residual: float = 5e-2) -> ModulusFit:
    """Least-squares fit of the annulus spectrum n·coth(nL) or n·tanh(nL).

    ``eigs`` are ascending DN eigenvalues, lowest (constant mode) first.
    A relative fit residual above ``max_residual`` gives ``ok=False`` and
    no estimate.
    """
    eigs = np.asarray(eigs, dtype=float)
    if n_pairs < 4:
        raise ValueError("need at least four eigenvalue pairs")
    if len(eigs) < 2 * n_pairs + 1:
        raise ValueError(f"need {2 * n_pairs + 1} eigenvalues")
    y = eigs[: 2 * n_pairs + 1]
    scale = np.maximum(np.abs(y), 1.0)

    def resid(p):
        return (annulus_eigenvalues(p[0], flavor, n_pairs, length) - y) / scale

    # start from the value matching the first pair exactly on a coarse grid
    grid = np.linspace(0.02, 5.0, 250)
    L0 = grid[int(np.argmin([np.sum(resid([g]) ** 2) for g in grid]))]
    sol = least_squares(resid, [L0], bounds=([1e-6], [50.0]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    r = float(np.sqrt(np.mean(sol.fun ** 2)))
    if r > max_residual:
        return ModulusFit(float("nan"), r, False)
    return ModulusFit(float(sol.x[0]), r, True)


# -- sheet reconstruction ----------------------------------------------------------


def _chart_grams(values: np.ndarray, tris: np.ndarray):
    """Gram matrices of every triangle in every generator chart, and their quality."""
    z = values[tris]  # (nt, 3, k)
    e1 = z[:, 1] - z[:, 0]
    e2 = z[:, 2] - z[:, 0]
    g11 = np.abs(e1) ** 2
    g22 = np.abs(e2) ** 2
    g12 = np.real(e1 * np.conj(e2))
    cross = np.imag(np.conj(e1) * e2)  # signed area times two
    l3 = np.abs(e2 - e1) ** 2
    quality = 2 * np.sqrt(3) * cross / (g11 + g22 + l3)
    return g11, g12, g22, quality


@dataclass
class ReconstructedSheet:
    mesh: SurfaceMesh
    vertex_map: np.ndarray
    label: int


def reconstruct_sheet(doubled: DoubledSurface, cloud: CharacterCloud, sheet_label: int = 1) -> ReconstructedSheet:
    """Surface M' from the cloud: sheet triangles with shapes taken from generator charts.

    For each triangle the generator chart with the best positively oriented
    shape is used.  Holomorphic charts are conformal and P1 stiffness depends
    only on angles, so this reproduces the conformal structure; the vertex
    positions of the doubled mesh only carry the triangle frames.
    ``vertex_map`` sends sheet vertices to doubled-mesh vertices.
    """
    if cloud.sheet is None:
        raise ValueError("split the cloud first")
    mesh = doubled.mesh
    in_sheet = (cloud.sheet == sheet_label) | (cloud.sheet == 0)
    tmask = np.all(in_sheet[mesh.triangles], axis=1)
    tris = mesh.triangles[tmask]
    g11, g12, g22, q = _chart_grams(cloud.values, tris)
    best = np.argmax(q, axis=1)
    rows = np.arange(len(tris))
    if np.any(q[rows, best] <= 0):
        raise TopologyError("no generator chart keeps some triangle non-degenerate")
    G = np.empty((len(tris), 2, 2))
    G[:, 0, 0] = g11[rows, best]
    G[:, 0, 1] = G[:, 1, 0] = g12[rows, best]
    G[:, 1, 1] = g22[rows, best]

    used = np.unique(tris)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = mesh.vertices[used]
    local = remap[tris]
    E = SurfaceMesh(verts, local).frames
    Einv = np.linalg.inv(E)
    metric = np.einsum("tki,tkl,tlj->tij", Einv, G, Einv)
    metric = 0.5 * (metric + np.transpose(metric, (0, 2, 1)))

    g0 = doubled.gamma0_plus if sheet_label > 0 else doubled.mesh.boundary_loops[1]
    ordered, g0_index = [], None
    for lp in extract_boundary_loops(local):
        if set(map(int, lp)) == set(map(int, remap[g0])):
            g0_index = len(ordered)
            lp = rotate_loop(lp, int(remap[g0[0]]))
        ordered.append(lp)
    if g0_index is None:
        raise TopologyError("reconstructed sheet lost the accessible boundary")
    sheet = SurfaceMesh(verts, local, metric, tuple(ordered), g0_index, 1)
    return ReconstructedSheet(sheet, used, sheet_label)


def dn_from_sheet(rec: ReconstructedSheet, flavor: str, reference: DNOperator, doubled: DoubledSurface) -> DNOperator:
    """DN operator of a reconstructed sheet on the reference boundary grid.

    The Schur complement is divided by the known boundary weights and its
    nodes are put in the order of the reference Γ0.
    """
    op = assemble_dn(rec.mesh, flavor)
    S = op.matrix * op.weights[:, None]
    nodes = rec.vertex_map[rec.mesh.gamma0]
    target = doubled.gamma0_plus if rec.label > 0 else doubled.gamma0_minus_matched
    pos = {int(v): i for i, v in enumerate(nodes)}
    perm = np.array([pos[int(v)] for v in target])
    S = S[np.ix_(perm, perm)]
    return DNOperator(flavor, S / reference.weights[:, None], reference.s, reference.weights,
                      reference.length, op.fingerprint, reference.nodes)


def compare_on_modes(a: DNOperator, b: DNOperator, n_modes: int = 8) -> float:
    """Relative operator-norm difference of two DN maps on the lowest Fourier modes.

    The subspace is spanned by the constant and cos/sin modes in order,
    truncated to ``n_modes`` functions.
    """
    Q = fourier_modes(a.grid(), (n_modes + 1) // 2, include_constant=True)[:n_modes]
    Ma = Q @ (a.weights[:, None] * a.matrix) @ Q.T
    Mb = Q @ (b.weights[:, None] * b.matrix) @ Q.T
    return float(np.linalg.norm(Ma - Mb, 2) / np.linalg.norm(Ma, 2))


def metric_patch(cloud: CharacterCloud, sheet_label: int = 1, hops: int = None) -> tuple:
    """Coordinates and harmonic fields on a graph ball deep inside one sheet.

    The ball is centred at the sheet point farthest (in graph hops) from the
    boundary and the seam.  The generator with the largest spread on the ball
    supplies the chart; real and imaginary parts of the others are the
    fields.  Returns ``(coords, fields, points)``.
    """
    if cloud.sheet is None or cloud.edges is None:
        raise ValueError("needs a split cloud with adjacency")
    if cloud.n_generators < 2:
        raise NeedsMoreGenerators("a chart and at least one further generator are required")
    n = cloud.n_points
    e = cloud.edges
    A = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    sources = np.flatnonzero(cloud.boundary | (cloud.sheet == 0))
    depth = dijkstra(A, directed=False, indices=sources, unweighted=True, min_only=True)
    depth = np.where(cloud.sheet == sheet_label, depth, -1)
    center = int(np.argmax(depth))
    radius = hops if hops is not None else max(3, int(depth[center]) // 2)
    dist = dijkstra(A, directed=False, indices=center, unweighted=True, limit=radius + 0.5)
    pts = np.flatnonzero(np.isfinite(dist))
    w = cloud.values[pts]
    j = int(np.argmax(np.ptp(np.abs(w), axis=0) + np.ptp(w.real, axis=0) + np.ptp(w.imag, axis=0)))
    coords = np.column_stack([w[:, j].real, w[:, j].imag])
    others = [c for c in range(cloud.n_generators) if c != j]
    fields = np.column_stack([f(w[:, c]) for c in others for f in (np.real, np.imag)])
    return coords, fields, pts
