"""P1 finite elements for the Laplace-Beltrami problems on M and on its double.

The per-triangle stiffness uses the intrinsic Gram matrix only, so the same
code serves embedded surfaces, metric overrides and the glued double cover.
Dirichlet conditions are imposed by eliminating the fixed rows, which keeps
the reduced system symmetric positive definite; one sparse LU per set of
fixed nodes is cached on the mesh and reused for all right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .boundary import BoundaryTrace, tangential_derivative
from .errors import AssemblyError, MeshError
from .mesh import SurfaceMesh

_B = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_R90 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class ScalarField:
    mesh: SurfaceMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.n_vertices,):
            raise ValueError("field needs one value per vertex")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("vertex,value\n")
            for i, x in enumerate(self.values.tolist()):
                fh.write(f"{i},{x!r}\n")


def _cache(mesh) -> dict:
    c = mesh.__dict__.get("_fem_cache")
    if c is None:
        c = {}
        mesh.__dict__["_fem_cache"] = c
    return c


def stiffness(mesh: SurfaceMesh) -> sp.csr_matrix:
    """Global P1 stiffness matrix for the mesh metric."""
    c = _cache(mesh)
    if "K" not in c:
        G = mesh.gram
        det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] ** 2
        if np.any(~(det > 0)):
            raise AssemblyError(f"{int(np.sum(~(det > 0)))} degenerate triangles")
        Ginv = np.linalg.inv(G)
        area = 0.5 * np.sqrt(det)
        Ke = area[:, None, None] * np.einsum("ia,tab,jb->tij", _B, Ginv, _B)
        t = mesh.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        n = mesh.n_vertices
        c["K"] = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))
    return c["K"]


class _Reduced:
    """Factorized interior block for a fixed set of Dirichlet nodes."""

    def __init__(self, K, fixed):
        n = K.shape[0]
        mask = np.ones(n, dtype=bool)
        mask[fixed] = False
        self.free = np.flatnonzero(mask)
        self.fixed = np.asarray(fixed)
        Kc = K.tocsc()
        self.K_ff = Kc[self.free][:, self.free].tocsc()
        self.K_fd = Kc[self.free][:, self.fixed].tocsc()
        self.K_dd = Kc[self.fixed][:, self.fixed]
        self.K_df = Kc[self.fixed][:, self.free]
        try:
            self.lu = splu(self.K_ff) if len(self.free) else None
        except RuntimeError as exc:
            raise AssemblyError(f"singular interior stiffness block: {exc}") from None

    def solve(self, fixed_values):
        """Interior values for given fixed values (vector or matrix of columns)."""
        rhs = -(self.K_fd @ fixed_values)
        if self.lu is None:
            return rhs
        return self.lu.solve(np.asarray(rhs))


def _reduced(mesh, fixed) -> _Reduced:
    fixed = np.unique(np.asarray(fixed, dtype=np.int64))
    key = ("dir", fixed.tobytes())
    c = _cache(mesh)
    if key not in c:
        c[key] = _Reduced(stiffness(mesh), fixed)
    return c[key]


def solve_dirichlet(mesh: SurfaceMesh, fixed_nodes, fixed_values) -> np.ndarray:
    """Discrete harmonic function with the given nodal values; natural BC elsewhere."""
    fixed_nodes = np.asarray(fixed_nodes, dtype=np.int64)
    order = np.argsort(fixed_nodes, kind="stable")
    nodes = fixed_nodes[order]
    vals = np.asarray(fixed_values)[order]
    if np.iscomplexobj(vals):
        return solve_dirichlet(mesh, nodes, vals.real) + 1j * solve_dirichlet(mesh, nodes, vals.imag)
    red = _reduced(mesh, nodes)
    u = np.zeros(mesh.n_vertices)
    u[red.fixed] = vals
    u[red.free] = red.solve(vals)
    return u


def _trace_values(mesh, tr):
    vals = tr.values if isinstance(tr, BoundaryTrace) else np.asarray(tr)
    if len(vals) != len(mesh.gamma0):
        raise MeshError("trace length does not match the Γ0 node count")
    return vals


def solve_grounded(mesh: SurfaceMesh, f) -> ScalarField:
    """u = f on Γ0, u = 0 on the holes."""
    holes = mesh.hole_nodes
    nodes = np.concatenate([mesh.gamma0, holes])
    vals = np.concatenate([_trace_values(mesh, f), np.zeros(len(holes))])
    return ScalarField(mesh, solve_dirichlet(mesh, nodes, vals))


def solve_isolated(mesh: SurfaceMesh, h) -> ScalarField:
    """v = h on Γ0, zero normal derivative on the holes."""
    return ScalarField(mesh, solve_dirichlet(mesh, mesh.gamma0, _trace_values(mesh, h)))


def solve_dirichlet_doubled(doubled, data_plus, data_minus) -> tuple:
    """Harmonic extension to the double cover from data on both copies of Γ0.

    ``data_minus`` is indexed like Γ0 of the source mesh (matched through the
    involution).  Complex data return a pair of real fields (real, imaginary).
    """
    m = doubled.mesh
    plus, minus = doubled.gamma0_plus, doubled.gamma0_minus_matched
    vp = data_plus.values if isinstance(data_plus, BoundaryTrace) else np.asarray(data_plus)
    vm = data_minus.values if isinstance(data_minus, BoundaryTrace) else np.asarray(data_minus)
    nodes = np.concatenate([plus, minus])
    vals = np.concatenate([vp, vm])
    u = solve_dirichlet(m, nodes, vals)
    if np.iscomplexobj(u):
        return ScalarField(m, u.real), ScalarField(m, u.imag)
    return ScalarField(m, u)


def gradients(mesh: SurfaceMesh, u) -> np.ndarray:
    """Per-triangle gradient coefficients in the edge basis (contravariant)."""
    u = np.asarray(u.values if isinstance(u, ScalarField) else u, dtype=float)
    t = mesh.triangles
    d = np.column_stack([u[t[:, 1]] - u[t[:, 0]], u[t[:, 2]] - u[t[:, 0]]])
    return np.linalg.solve(mesh.gram, d[..., None])[..., 0]


def rotation_field(mesh: SurfaceMesh) -> np.ndarray:
    """Matrix of the metric rotation by +90 degrees in each triangle's edge basis."""
    G = mesh.gram
    det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] ** 2
    Ginv = np.linalg.inv(G)
    return mesh.rotation_orientation * np.sqrt(det)[:, None, None] * (Ginv @ _R90)


def cr_residual(mesh, u, v) -> float:
    """Metric L2 norm of ∇u − Φ∇v; zero when u is a conjugate of v."""
    mesh = getattr(mesh, "mesh", mesh)
    for f in (u, v):
        if isinstance(f, ScalarField) and f.mesh is not mesh:
            raise MeshError("fields live on a different mesh")
    a = gradients(mesh, u)
    b = gradients(mesh, v)
    diff = a - np.einsum("tij,tj->ti", rotation_field(mesh), b)
    q = np.einsum("ti,tij,tj->t", diff, mesh.gram, diff)
    return float(np.sqrt(np.sum(mesh.areas * q)))


def energy_norm(mesh, u) -> float:
    a = gradients(mesh, u)
    return float(np.sqrt(np.sum(mesh.areas * np.einsum("ti,tij,tj->t", a, mesh.gram, a))))


def weak_flux(mesh: SurfaceMesh, u, loop_index: int) -> float:
    """∮ ∂_ν u ds over one boundary loop, from the stiffness action."""
    u = np.asarray(u.values if isinstance(u, ScalarField) else u, dtype=float)
    r = stiffness(mesh) @ u
    return float(np.sum(r[mesh.boundary_loops[loop_index]]))


def hole_periods(mesh: SurfaceMesh, u) -> np.ndarray:
    """Fluxes of a harmonic field through each hole Γ1..Γm."""
    if isinstance(u, ScalarField) and u.mesh is not mesh:
        raise MeshError("field lives on a different mesh")
    idx = [i for i in range(len(mesh.boundary_loops)) if i != mesh.gamma0_index]
    return np.array([weak_flux(mesh, u, i) for i in idx])


def conjugate_isolated(mesh: SurfaceMesh, h: BoundaryTrace) -> tuple:
    """Harmonic conjugate of v^h with constant, flux-free values on each hole.

    Returns ``(u, levels)`` where ``u`` is normalised to vanish on the first
    hole and ``levels`` are the hole values before that shift.  The conjugate
    of the isolated solution is constant on every hole; it can be made zero
    on all of them exactly when the levels coincide.
    """
    loops = mesh.hole_loops
    if not loops:
        raise MeshError("mesh has no holes")
    n = mesh.n_vertices
    K = stiffness(mesh)
    group = np.arange(n)
    hole_of = -np.ones(n, dtype=np.int64)
    for j, loop in enumerate(loops):
        hole_of[loop] = j
    free = np.flatnonzero(hole_of < 0)
    col = -np.ones(n, dtype=np.int64)
    col[free] = np.arange(len(free))
    for j, loop in enumerate(loops):
        col[loop] = len(free) + j
    P = sp.csr_matrix((np.ones(n), (group, col)), shape=(n, len(free) + len(loops)))
    g = -tangential_derivative(h)
    b = np.zeros(n)
    b[mesh.gamma0] = h.weights * g.values
    A = (P.T @ K @ P).tocsc()
    rhs = P.T @ b
    # pin the first hole level
    pin = len(free)
    keep = np.setdiff1d(np.arange(A.shape[0]), [pin])
    x = np.zeros(A.shape[0])
    try:
        x[keep] = splu(A[keep][:, keep]).solve(rhs[keep])
    except RuntimeError as exc:
        raise AssemblyError(str(exc)) from None
    u = P @ x
    levels = x[len(free):].copy()
    return ScalarField(mesh, u), levels
