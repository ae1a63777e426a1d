"""Discrete Dirichlet-to-Neumann operators on Γ0."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary import BoundaryTrace
from .errors import FormatError
from .fem import _reduced, stiffness
from .mesh import SurfaceMesh

FLAVORS = ("grounded", "isolated")


def mesh_fingerprint(mesh: SurfaceMesh) -> str:
    h = hashlib.sha1()
    for arr in (mesh.vertices, mesh.triangles, mesh.metric):
        h.update(np.ascontiguousarray(arr).tobytes())
    for loop in mesh.boundary_loops:
        h.update(loop.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class DNOperator:
    """Dense DN matrix acting on nodal values over Γ0.

    ``matrix`` maps Dirichlet data to nodal normal derivatives; it is
    self-adjoint for the quadrature inner product given by ``weights``.
    """

    flavor: str
    matrix: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    length: float
    fingerprint: str = ""
    nodes: np.ndarray = None

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}")
        A = np.asarray(self.matrix, dtype=float)
        n = len(self.weights)
        if A.shape != (n, n):
            raise ValueError("matrix shape does not match the boundary grid")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @property
    def n(self) -> int:
        return len(self.weights)

    def grid(self, values=None) -> BoundaryTrace:
        """A trace on this operator's boundary grid."""
        if values is None:
            values = np.zeros(self.n)
        return BoundaryTrace(np.asarray(values), self.s, self.weights, self.length, self.nodes)

    def __call__(self, tr):
        if isinstance(tr, BoundaryTrace):
            return tr.with_values(self.matrix @ tr.values)
        return self.matrix @ np.asarray(tr)

    def symmetric_form(self) -> np.ndarray:
        """W^{1/2} Λ W^{-1/2}, symmetric and with the same spectrum."""
        r = np.sqrt(self.weights)
        S = r[:, None] * self.matrix / r[None, :]
        return 0.5 * (S + S.T)

    def to_csv(self, path) -> None:
        lines = [f"DN {self.flavor} {self.n} {self.length:.17g}"]
        for i in range(self.n):
            row = [self.s[i], self.weights[i], *self.matrix[i]]
            lines.append(",".join(f"{x:.17g}" for x in row))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "DNOperator":
        text = Path(path).read_text().splitlines()
        if not text:
            raise FormatError("empty DN file", 1)
        head = text[0].split()
        if len(head) != 4 or head[0] != "DN" or head[1] not in FLAVORS:
            raise FormatError("expected header 'DN <flavor> <n> <length>'", 1)
        try:
            n = int(head[2])
            length = float(head[3])
        except ValueError:
            raise FormatError("bad header numbers", 1) from None
        rows = []
        for lineno, line in enumerate(text[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != n + 2:
                raise FormatError(f"expected {n + 2} fields, found {len(parts)}", lineno)
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise FormatError("non-numeric field", lineno) from None
        if len(rows) != n:
            raise FormatError(f"expected {n} rows, found {len(rows)}", len(text) + 1)
        a = np.array(rows)
        return cls(head[1], a[:, 2:], a[:, 0], a[:, 1], length)


def assemble_dn(mesh: SurfaceMesh, flavor: str) -> DNOperator:
    """Schur complement of the stiffness onto Γ0, divided by the lumped boundary mass.

    ``grounded`` fixes the hole nodes to zero, ``isolated`` leaves them free.
    """
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    g0 = mesh.gamma0
    fixed = np.concatenate([g0, mesh.hole_nodes]) if flavor == "grounded" else g0
    red = _reduced(mesh, fixed)
    K = stiffness(mesh).tocsr()
    # positions of Γ0 nodes inside the sorted fixed set
    pos = np.searchsorted(red.fixed, g0)
    X = red.solve(np.eye(len(red.fixed))[:, pos])
    S = K[g0][:, g0].toarray() + (K[g0][:, red.free] @ X)
    S = 0.5 * (S + S.T)
    tr = BoundaryTrace.from_loop(mesh)
    A = S / tr.weights[:, None]
    return DNOperator(flavor, A, tr.s, tr.weights, tr.length, mesh_fingerprint(mesh), g0)


def spectrum(op: DNOperator, k: int = None) -> tuple:
    """Ascending eigenpairs; eigenvectors are orthonormal in the quadrature product."""
    lam, Y = np.linalg.eigh(op.symmetric_form())
    V = Y / np.sqrt(op.weights)[:, None]
    if k is not None:
        if k > op.n:
            raise ValueError("more eigenpairs requested than boundary nodes")
        lam, V = lam[:k], V[:, :k]
    return lam, V
