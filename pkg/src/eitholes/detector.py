"""Hole detection from the DN map alone, plus recovery of the boundary length."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import _inverse_derivative, _spectral_apply, fourier_modes, mode_frequencies
from .dn import DNOperator, spectrum
from .errors import Indeterminate

NO_HOLES = "NoHoles"
HOLES_GROUNDED = "HolesGrounded"
HOLES_ISOLATED = "HolesIsolated"
INDETERMINATE = "Indeterminate"

TOL_FLOOR = 1e-3
TOL_CAP = 5e-2


@dataclass
class Classification:
    verdict: str
    kernel_dim: int
    lambda1_norm: float
    thresholds: dict
    singular_values: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "kernel_dim": int(self.kernel_dim),
            "lambda1_norm": float(self.lambda1_norm),
            "thresholds": {k: float(v) for k, v in self.thresholds.items()},
        }


def _J(op: DNOperator, values):
    """Boundary integration on the zero-mean part (columns are traces)."""
    tr = op.grid(np.zeros(op.n))
    w = op.weights
    out = np.empty_like(values)
    for c in range(values.shape[1]):
        v = values[:, c]
        v = v - np.sum(w * v) / op.length
        out[:, c] = _spectral_apply(tr.with_values(v), _inverse_derivative).values
    return out


def _check_modes(op: DNOperator, n_modes: int):
    if n_modes < 4:
        raise ValueError("n_modes must be at least 4")
    if 2 * n_modes + 1 > op.n // 2:
        raise ValueError(f"n_modes={n_modes} exceeds the frequencies resolvable on {op.n} nodes")


def cauchy_riemann_defect(op: DNOperator, n_modes: int = 16) -> tuple:
    """Singular values and right singular vectors of I + (ΛJ)² on zero-mean modes."""
    _check_modes(op, n_modes)
    Q = fourier_modes(op.grid(), n_modes).T  # (n, 2 n_modes)
    LJ = op.matrix @ _J(op, Q)
    T = Q + op.matrix @ _J(op, LJ)
    _, sig, Vt = np.linalg.svd(np.sqrt(op.weights)[:, None] * T, full_matrices=False)
    return sig, Vt


def mode_rayleigh(op: DNOperator, n_modes: int) -> np.ndarray:
    """Rayleigh quotients of Λ on cos/sin modes 1..n_modes, scaled to unit length 2π."""
    Q = fourier_modes(op.grid(), n_modes)
    rq = np.einsum("ki,i,ij,kj->k", Q, op.weights, op.matrix, Q)
    return rq * op.length / (2 * np.pi)


def _column_defects(op: DNOperator, n_modes: int) -> np.ndarray:
    Q = fourier_modes(op.grid(), n_modes).T
    T = Q + op.matrix @ _J(op, op.matrix @ _J(op, Q))
    return np.sqrt(np.sum(op.weights[:, None] * T * T, axis=0))


def estimate_kernel_tol(op: DNOperator, n_modes: int = 16, coarse: DNOperator = None) -> float:
    """Three times the discretisation defect of I + (ΛJ)² at the top probed mode.

    Hole contributions decay exponentially with frequency while the
    discretisation defect grows, so the top mode pair measures the latter.
    With a coarser operator of the same domain the two-grid Richardson
    estimate is used when it is larger.  Clipped to [1e-3, 5e-2].
    """
    _check_modes(op, n_modes)
    est = _column_defects(op, n_modes)[-2:].max()
    if coarse is not None:
        c = _column_defects(coarse, n_modes)[-2:].max()
        est = max(est, abs(c - est) / 3.0)
    return float(np.clip(3 * est, TOL_FLOOR, TOL_CAP))


def kernel_dimension(op: DNOperator, n_modes: int = 16, tol: float = None) -> int:
    """Number of zero-mean modes (out of 2·n_modes) in the near-kernel of I + (ΛJ)².

    Singular values are compared with ``tol`` on the unit scale of the
    identity part of the operator.
    """
    sig, _ = cauchy_riemann_defect(op, n_modes)
    if tol is None:
        tol = estimate_kernel_tol(op, n_modes)
    return int(np.sum(sig < tol))


def lambda1_norm(op: DNOperator) -> float:
    """RMS of Λ1, made dimensionless by the boundary length."""
    v = op.matrix @ np.ones(op.n)
    rms = np.sqrt(np.sum(op.weights * v * v) / op.length)
    return float(rms * op.length / (2 * np.pi))


def classify(op: DNOperator, n_modes: int = 16, tol_kernel: float = None, tol_const: float = 1e-6,
             coarse: DNOperator = None, strict: bool = True) -> Classification:
    """Assign boundary data to one of the three cases.

    NoHoles when every probed mode lies in the near-kernel.  Otherwise the
    dominant defect must sit in the low half of the band (hole effects decay
    with frequency, discretisation error grows); the flavour then follows from
    ‖Λ1‖.  Anything else is Indeterminate, raised when ``strict``.
    """
    if tol_kernel is None:
        tol_kernel = estimate_kernel_tol(op, n_modes, coarse)
    sig, Vt = cauchy_riemann_defect(op, n_modes)
    l1 = lambda1_norm(op)
    thresholds = {"tol_kernel": tol_kernel, "tol_const": tol_const, "n_modes": n_modes}
    count = int(np.sum(sig < tol_kernel)) if tol_kernel > 0 else 0
    freq = mode_frequencies(n_modes)
    top_freq = float(np.sum(Vt[0] ** 2 * freq))
    if not (tol_kernel > 0 and np.isfinite(tol_kernel)):
        verdict = INDETERMINATE
    elif count == 2 * n_modes:
        verdict = NO_HOLES
    elif top_freq <= n_modes / 2:
        verdict = HOLES_GROUNDED if l1 > tol_const else HOLES_ISOLATED
    else:
        verdict = INDETERMINATE
    result = Classification(verdict, count, l1, thresholds, sig)
    if verdict == INDETERMINATE and strict:
        raise Indeterminate(
            f"kernel count {count} of {2 * n_modes} with dominant defect at frequency {top_freq:.1f}",
            kernel_dim=count, lambda1_norm=l1,
        )
    return result


def recover_boundary_length(op: DNOperator, k: int = 16) -> float:
    """Total length of Γ0 from the linear growth of the DN eigenvalues.

    The ratios r_j = λ_{2j}/j tend to 2π/ℓ geometrically fast once hole
    effects are present, so the last three ratios are Aitken-extrapolated
    when they decay geometrically; otherwise a through-origin fit over the
    upper half of the pairs is used.
    """
    if k < 8:
        raise ValueError("need at least 8 eigenvalues")
    lam, _ = spectrum(op, k + 1)
    jmax = k // 2
    j = np.arange(1, jmax + 1)
    pairs = lam[2 * j]
    if np.any(np.diff(pairs) <= 0) or np.any(pairs <= 0):
        raise ValueError("eigenvalue tail is not monotone")
    band = j > jmax // 2
    a = np.sum(j[band] * pairs[band]) / np.sum(j[band] ** 2)
    r = pairs / j
    d1, d2 = r[-2] - r[-3], r[-1] - r[-2]
    if d1 != 0 and 0 < d2 / d1 < 0.9:
        a = r[-1] - d2 * d2 / (d2 - d1)
    return float(2 * np.pi / a)
