"""Functions on the accessible boundary component and their Fourier calculus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import MeanViolation

MIN_NODES = 8


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Samples of a (possibly complex) function on Γ0.

    ``s`` holds arc-length coordinates of the nodes, ``weights`` the lumped
    trapezoidal quadrature weights, which sum to ``length``.
    """

    values: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    length: float
    nodes: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.iscomplexobj(v):
            v = v.astype(float)
        s = np.asarray(self.s, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.shape != s.shape or s.shape != w.shape or v.ndim != 1:
            raise ValueError("values, s and weights must be 1-D arrays of equal length")
        if np.any(np.diff(s) <= 0) or s[-1] >= self.length:
            raise ValueError("arc-length coordinates must increase strictly within one period")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        for name, arr in (("values", v), ("s", s), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def from_loop(cls, mesh, loop_index=None, values=None) -> "BoundaryTrace":
        """Trace on a mesh boundary loop; ``values`` may be an array or ``f(x, y)``."""
        loop = mesh.gamma0 if loop_index is None else mesh.boundary_loops[loop_index]
        s, length, seg = mesh.loop_arclength(loop)
        w = 0.5 * (seg + np.roll(seg, 1))
        if values is None:
            values = np.zeros(len(loop))
        elif callable(values):
            p = mesh.vertices[loop]
            values = values(p[:, 0], p[:, 1])
        return cls(np.broadcast_to(values, (len(loop),)).copy(), s, w, length, loop)

    def with_values(self, values) -> "BoundaryTrace":
        return BoundaryTrace(np.asarray(values), self.s, self.weights, self.length, self.nodes)

    def same_grid(self, other: "BoundaryTrace") -> bool:
        return len(self.s) == len(other.s) and np.array_equal(self.s, other.s) and self.length == other.length

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def is_uniform(self) -> bool:
        ds = np.diff(np.concatenate([self.s, [self.length]]))
        return bool(np.ptp(ds) <= 1e-9 * self.length / len(ds))

    def integral(self):
        return np.sum(self.weights * self.values)

    def mean(self):
        return self.integral() / self.length

    def inner(self, other) -> float:
        b = other.values if isinstance(other, BoundaryTrace) else np.asarray(other)
        return np.sum(self.weights * self.values * np.conj(b))

    def norm(self) -> float:
        """Quadrature L2 norm."""
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def rms(self) -> float:
        return self.norm() / np.sqrt(self.length)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    # arithmetic on the shared grid
    def _other(self, other):
        if isinstance(other, BoundaryTrace):
            if not self.same_grid(other):
                raise ValueError("traces live on different boundary grids")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def conj(self):
        return self.with_values(np.conj(self.values))

    @property
    def real(self):
        return self.with_values(np.real(self.values))

    @property
    def imag(self):
        return self.with_values(np.imag(self.values))


def _spectral_apply(tr: BoundaryTrace, multiplier) -> BoundaryTrace:
    if tr.n < MIN_NODES:
        raise ValueError(f"need at least {MIN_NODES} boundary nodes, got {tr.n}")
    complex_in = np.iscomplexobj(tr.values)
    if tr.is_uniform:
        s, v = tr.s, tr.values
    else:
        m = 1 << int(np.ceil(np.log2(2 * tr.n)))
        s = np.arange(m) * tr.length / m
        v = _periodic_resample(tr.s, tr.values, tr.length, s)
    n = len(v)
    k = 2 * np.pi * np.fft.fftfreq(n, d=tr.length / n)
    mult = multiplier(k)
    if n % 2 == 0:
        mult[n // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(v) * mult)
    if not tr.is_uniform:
        out = _periodic_resample(s, out, tr.length, tr.s)
    if not complex_in:
        out = out.real
    return tr.with_values(out)


def _periodic_resample(s, v, length, s_new):
    ss = np.concatenate([s, [length]])
    if np.iscomplexobj(v):
        re = CubicSpline(ss, np.append(v.real, v.real[0]), bc_type="periodic")(s_new)
        im = CubicSpline(ss, np.append(v.imag, v.imag[0]), bc_type="periodic")(s_new)
        return re + 1j * im
    return CubicSpline(ss, np.append(v, v[0]), bc_type="periodic")(s_new)


def tangential_derivative(tr: BoundaryTrace) -> BoundaryTrace:
    """Derivative with respect to arc length along the boundary tangent."""
    return _spectral_apply(tr, lambda k: 1j * k)


def _inverse_derivative(k):
    out = np.zeros_like(k, dtype=complex)
    nz = k != 0
    out[nz] = 1.0 / (1j * k[nz])
    return out


def integrate_J(tr: BoundaryTrace, tol_mean: float = 1e-6) -> BoundaryTrace:
    """Zero-mean periodic antiderivative of a zero-mean trace.

    Raises :class:`MeanViolation` when ``|mean| > tol_mean * rms``.
    """
    mean = tr.mean()
    rms = tr.rms()
    if abs(mean) > tol_mean * rms or (rms == 0 and mean != 0):
        raise MeanViolation(abs(mean), rms)
    return _spectral_apply(tr - mean, _inverse_derivative)


def relative_mean(tr: BoundaryTrace) -> float:
    """|∫ tr ds| / (sqrt(length) * ||tr||), a number in [0, 1]."""
    nrm = tr.norm()
    if nrm == 0:
        return 0.0
    return float(abs(tr.integral()) / (np.sqrt(tr.length) * nrm))


def fourier_modes(grid: BoundaryTrace, n_modes: int, include_constant: bool = False) -> np.ndarray:
    """Real Fourier modes on the grid, orthonormal in the quadrature inner product.

    Rows are ordered cos 1, sin 1, cos 2, sin 2, ... (constant first when
    requested).
    """
    theta = 2 * np.pi * grid.s / grid.length
    rows = []
    if include_constant:
        rows.append(np.ones_like(theta))
    for k in range(1, n_modes + 1):
        rows.append(np.cos(k * theta))
        rows.append(np.sin(k * theta))
    B = np.array(rows)
    # Gram-Schmidt in the weighted inner product keeps the basis exact on nonuniform grids
    w = grid.weights
    Q = np.zeros_like(B)
    for i, b in enumerate(B):
        v = b.copy()
        for q in Q[:i]:
            v -= np.sum(w * v * q) * q
        Q[i] = v / np.sqrt(np.sum(w * v * v))
    return Q


def mode_frequencies(n_modes: int, include_constant: bool = False) -> np.ndarray:
    f = np.repeat(np.arange(1, n_modes + 1), 2)
    return np.concatenate([[0], f]) if include_constant else f
