"""Holomorphy criteria for boundary traces and the involutive trace algebra.

A hermitian trace is the restriction to Γ0 of a function holomorphic on M
and real on the holes.  With grounded holes it is ``JΛf - i f + c`` for an
admissible real ``f``; with isolated holes it is ``h + i(JΛh + c_h)`` for an
admissible ``h``.  General elements are pairs ``w1 + i w2`` of hermitian
traces, stored as such so the decomposition is never re-derived.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .boundary import BoundaryTrace, _inverse_derivative, _spectral_apply, fourier_modes, tangential_derivative
from .dn import DNOperator
from .errors import AlgebraClosureError, CriterionFailure

DEFAULT_TOL_MEAN = 1e-6
DEFAULT_CRITERION_TOL = 1e-2


class GroundedResidual(NamedTuple):
    mean_flux: float
    residual: float


class IsolatedResidual(NamedTuple):
    c_h: float
    residual: float


def _as_trace(op: DNOperator, f) -> BoundaryTrace:
    if isinstance(f, BoundaryTrace):
        if f.n != op.n:
            raise ValueError("trace does not live on the operator's boundary grid")
        return f
    return op.grid(np.asarray(f, dtype=float))


def _J0(tr: BoundaryTrace) -> BoundaryTrace:
    """J after removing the mean; callers are responsible for the mean check."""
    return _spectral_apply(tr - tr.mean(), _inverse_derivative)


def _relative_mean(op: DNOperator, g: BoundaryTrace) -> float:
    # the flux is compared with ‖Λf‖ so that the test is scale free
    scale = np.sqrt(op.length) * g.norm()
    return abs(g.integral()) / scale if scale > 0 else 0.0


def grounded_terms(op: DNOperator, f) -> tuple:
    """The two sides ``2Λ(f·JΛf)`` and ``∂γ[(JΛf)² − f²]`` of the grounded criterion."""
    f = _as_trace(op, f)
    jlf = _J0(op(f))
    lhs = 2 * op(f * jlf)
    rhs = tangential_derivative(jlf * jlf - f * f)
    return lhs, rhs


def residual_grounded(op: DNOperator, f, tol_mean: float = DEFAULT_TOL_MEAN,
                      relative: bool = False) -> GroundedResidual:
    """Mean flux ∫Λf ds and the grounded criterion residual.

    The residual is +inf when the flux fails the zero-mean prefilter
    ``|∫Λf| ≤ tol_mean·√ℓ·‖Λf‖``; J is undefined there.  With ``relative``
    the residual is divided by the size of the two sides.
    """
    f = _as_trace(op, f)
    g = op(f)
    flux = float(g.integral())
    if _relative_mean(op, g) > tol_mean:
        return GroundedResidual(flux, float("inf"))
    lhs, rhs = grounded_terms(op, f)
    res = (lhs - rhs).norm()
    if relative:
        scale = lhs.norm() + rhs.norm()
        res = res / scale if scale > 0 else 0.0
    return GroundedResidual(flux, float(res))


def isolated_terms(op: DNOperator, h) -> tuple:
    """Left side, c_h direction ``(∂γ + ΛJΛ)h`` and the size of the left-side terms."""
    h = _as_trace(op, h)
    lh = op(h)
    jlh = _J0(lh)
    terms = (0.5 * op(h * h - jlh * jlh), h * lh, jlh * tangential_derivative(h))
    lhs = terms[0] - terms[1] - terms[2]
    direction = tangential_derivative(h) + op(jlh)
    return lhs, direction, sum(t.norm() for t in terms)


def residual_isolated(op: DNOperator, h, relative: bool = False, eps: float = 1e-10) -> IsolatedResidual:
    """Least-squares c_h and the isolated criterion residual.

    With ``relative`` the residual is divided by the summed sizes of the
    individual terms.  Raises :class:`CriterionFailure` when the c_h
    direction vanishes while the left side does not, so no c_h can satisfy
    the equation.
    """
    h = _as_trace(op, h)
    lhs, d, size = isolated_terms(op, h)
    dd = d.norm() ** 2
    if d.norm() <= eps * max(h.norm(), 1e-300) * op.n:
        # the scale bounds |Λ(h²)| so round-off in a vanishing left side is not mistaken for a failure
        scale = size + np.abs(op.matrix).max() * (h * h).norm()
        if lhs.norm() > eps * max(scale, 1e-300):
            raise CriterionFailure("degenerate c_h direction with nonzero left side")
        return IsolatedResidual(0.0, 0.0)
    c = float(np.real(lhs.inner(d)) / dd)
    res = (lhs - c * d).norm()
    if relative:
        scale = size + abs(c) * np.sqrt(dd)
        res = res / scale if scale > 0 else 0.0
    return IsolatedResidual(c, float(res))


def criterion_residual(op: DNOperator, flavor: str, g, tol_mean: float = DEFAULT_TOL_MEAN) -> float:
    """Relative criterion residual of one generator for either flavor."""
    if flavor == "grounded":
        return residual_grounded(op, g, tol_mean, relative=True).residual
    return residual_isolated(op, g, relative=True).residual


# -- admissible traces --------------------------------------------------------


@dataclass
class AdmissibleBasis:
    traces: list
    residuals: list
    complete: bool
    mode: str

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def __getitem__(self, i):
        return self.traces[i]


def period_functionals(op: DNOperator, flavor: str, mesh, n_modes: int) -> np.ndarray:
    """Linear admissibility functionals evaluated on the Fourier modes 1..n_modes.

    Grounded: the flux of u^f through every hole.  Isolated: differences of
    the hole levels of the conjugate of v^h (one fewer than the hole count).
    Rows are functionals, columns the modes cos 1, sin 1, ...
    """
    from .fem import conjugate_isolated, hole_periods, solve_grounded

    Q = fourier_modes(op.grid(), n_modes)
    cols = []
    for q in Q:
        tr = op.grid(q)
        if flavor == "grounded":
            cols.append(hole_periods(mesh, solve_grounded(mesh, tr)))
        else:
            _, levels = conjugate_isolated(mesh, tr)
            cols.append(levels[1:] - levels[0])
    return np.array(cols).T.reshape(-1, len(Q))


def _low_frequency_kernel(P: np.ndarray, N: int, rtol: float = 1e-8) -> np.ndarray:
    """Up to N orthonormal kernel vectors of P, each using the fewest leading modes."""
    n = P.shape[1]
    scale = max(np.abs(P).max(), 1e-300)
    basis = []
    for k in range(1, n + 1):
        sub = P[:, :k] / scale
        _, s, Vt = np.linalg.svd(sub)
        rank = int(np.sum(s > rtol))
        null = Vt[rank:].T
        if null.shape[1] > len(basis):
            cand = np.zeros((n, null.shape[1]))
            cand[:k] = null
            for b in basis:
                cand -= np.outer(b, b @ cand)
            j = int(np.argmax(np.linalg.norm(cand, axis=0)))
            v = cand[:, j]
            basis.append(v / np.linalg.norm(v))
            if len(basis) == N:
                break
    return np.array(basis).reshape(-1, n)


def admissible_basis(op: DNOperator, flavor: str, N: int, mode: str = "validation", mesh=None,
                     tol: float = DEFAULT_CRITERION_TOL, tol_mean: float = DEFAULT_TOL_MEAN,
                     n_modes: int = None, seed: int = 0) -> AdmissibleBasis:
    """Up to N admissible generators, orthonormal in the boundary quadrature.

    ``validation`` uses the mesh to evaluate the exact linear admissibility
    functionals and returns their kernel in the span of low Fourier modes.
    ``blind`` runs a Gauss–Newton search on the criterion residual from
    Fourier seeds and keeps the converged, mutually independent results; a
    short result is flagged through ``complete=False``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if flavor not in ("grounded", "isolated"):
        raise ValueError("flavor must be grounded or isolated")
    if mode == "validation":
        if mesh is None:
            raise ValueError("validation mode needs the mesh")
        m = mesh.n_holes
        n_modes = n_modes or max(2, (N + m + 1) // 2 + 1)
        Q = fourier_modes(op.grid(), n_modes)
        P = period_functionals(op, flavor, mesh, n_modes) if m else np.zeros((0, 2 * n_modes))
        C = _low_frequency_kernel(P, N) if len(P) else np.eye(2 * n_modes)[:N]
        traces = [op.grid(c @ Q) for c in C]
    elif mode == "blind":
        traces = _blind_search(op, flavor, N, tol, tol_mean, n_modes or N, seed)
    else:
        raise ValueError("mode must be validation or blind")
    res = [criterion_residual(op, flavor, t, tol_mean) for t in traces]
    return AdmissibleBasis(traces, res, len(traces) >= N, mode)


def _residual_vector(op, flavor, Q, c, tol_mean):
    f = op.grid(c @ Q)
    r = np.sqrt(op.weights)
    if flavor == "grounded":
        lhs, rhs = grounded_terms(op, f)
        flux = op(f).integral() / np.sqrt(op.length)
        return np.concatenate([r * (lhs - rhs).values, [flux]])
    lhs, d, _ = isolated_terms(op, f)
    dd = d.norm() ** 2
    c_h = np.real(lhs.inner(d)) / dd if dd > 0 else 0.0
    return r * (lhs - c_h * d).values


def _gauss_newton(fun, x0, pin, max_iter=50, step_tol=1e-10):
    x = x0.copy()
    free = np.setdiff1d(np.arange(len(x)), [pin])
    r = fun(x)
    for _ in range(max_iter):
        Jm = np.empty((len(r), len(free)))
        for k, i in enumerate(free):
            e = np.zeros_like(x)
            e[i] = 1e-4
            # the residual is quadratic in the coefficients, so central differences are exact
            Jm[:, k] = (fun(x + e) - fun(x - e)) / 2e-4
        step = np.linalg.lstsq(Jm, -r, rcond=None)[0]
        t = 1.0
        while True:
            xn = x.copy()
            xn[free] += t * step
            rn = fun(xn)
            if np.linalg.norm(rn) <= np.linalg.norm(r) or t < 1e-6:
                break
            t *= 0.5
        done = np.linalg.norm(t * step) < step_tol
        x, r = xn, rn
        if done:
            break
    return x, r


def _blind_search(op, flavor, N, tol, tol_mean, n_modes, seed):
    n_modes = max(n_modes, N)
    Q = fourier_modes(op.grid(), n_modes)
    rng = np.random.default_rng(seed)
    kept, coeffs = [], []
    for j in range(min(2 * N, Q.shape[0])):
        x0 = np.zeros(Q.shape[0])
        x0[j] = 1.0
        x0 += 1e-3 * rng.standard_normal(len(x0)) * (np.arange(len(x0)) != j)
        x, _ = _gauss_newton(lambda c: _residual_vector(op, flavor, Q, c, tol_mean), x0, j)
        tr = op.grid(x @ Q)
        if criterion_residual(op, flavor, tr, tol_mean) > tol:
            continue
        cand = np.array(coeffs + [x / np.linalg.norm(x)])
        if np.linalg.svd(cand, compute_uv=False)[-1] < 1e-6:
            continue
        coeffs.append(x / np.linalg.norm(x))
        kept.append(tr.with_values(tr.values / tr.norm()))
        if len(kept) == N:
            break
    return kept


# -- the trace algebra --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TraceAlgebraElement:
    """η = w1 + i·w2 with hermitian traces w1, w2 on a shared boundary grid."""

    w1: BoundaryTrace
    w2: BoundaryTrace
    provenance: tuple = field(default=((), ()))

    def __post_init__(self):
        if not self.w1.same_grid(self.w2):
            raise ValueError("hermitian parts live on different grids")
        for name in ("w1", "w2"):
            tr = getattr(self, name)
            object.__setattr__(self, name, tr.with_values(np.asarray(tr.values, dtype=complex)))

    @property
    def values(self) -> np.ndarray:
        return self.w1.values + 1j * self.w2.values

    @property
    def star_values(self) -> np.ndarray:
        return self.w1.values - 1j * self.w2.values

    @property
    def trace(self) -> BoundaryTrace:
        return self.w1.with_values(self.values)

    def __add__(self, other: "TraceAlgebraElement") -> "TraceAlgebraElement":
        return TraceAlgebraElement(self.w1 + other.w1, self.w2 + other.w2,
                                   (("sum", self.provenance, other.provenance), ()))

    def scale(self, c: complex) -> "TraceAlgebraElement":
        a, b = float(np.real(c)), float(np.imag(c))
        return TraceAlgebraElement(a * self.w1 - b * self.w2, a * self.w2 + b * self.w1,
                                   (("scale", c, self.provenance), ()))

    __rmul__ = scale


def hermitian_trace(op: DNOperator, flavor: str, generator, constant: float = 0.0,
                    tol_mean: float = DEFAULT_TOL_MEAN) -> tuple:
    """Hermitian trace built from one generator, plus its provenance record."""
    g = _as_trace(op, generator) if generator is not None else op.grid()
    if flavor == "grounded":
        if generator is None or g.norm() == 0:
            return op.grid(np.full(op.n, constant, dtype=complex)), {"f": None, "c": constant}
        jlf = _J0(op(g))
        return jlf + constant - 1j * g, {"f": g, "c": constant}
    if flavor == "isolated":
        if generator is None:
            return op.grid(np.full(op.n, constant, dtype=complex)), {"h": None, "c_h": 0.0}
        hv = g.values
        if np.ptp(hv) <= 1e-12 * max(1.0, np.abs(hv).max()):
            return g.with_values(hv.astype(complex)), {"h": g, "c_h": 0.0}
        c_h = residual_isolated(op, g).c_h
        return g + 1j * (_J0(op(g)) + c_h), {"h": g, "c_h": c_h}
    raise ValueError("flavor must be grounded or isolated")


def make_element(op: DNOperator, flavor: str, generator=None, constant: complex = 0.0,
                 tol: float = DEFAULT_CRITERION_TOL, tol_mean: float = DEFAULT_TOL_MEAN) -> TraceAlgebraElement:
    """Element generated by one admissible trace, plus a complex constant.

    The real part of ``constant`` goes into the hermitian part built from the
    generator, the imaginary part becomes a constant second hermitian part.
    """
    if generator is not None:
        res = criterion_residual(op, flavor, generator, tol_mean)
        if not res <= tol:
            raise CriterionFailure(f"generator fails the {flavor} criterion: residual {res:.3e} > {tol:.3e}")
    c1, c2 = float(np.real(constant)), float(np.imag(constant))
    w1, prov1 = hermitian_trace(op, flavor, generator)
    w1 = w1 + c1
    prov1 = dict(prov1, constant=c1)
    w2 = op.grid(np.full(op.n, c2, dtype=complex))
    return TraceAlgebraElement(w1, w2, (prov1, {"constant": c2}))


def hermitian_defect(op: DNOperator, flavor: str, w: BoundaryTrace, tol_mean: float = DEFAULT_TOL_MEAN) -> float:
    """Relative distance of a trace from the hermitian traces of the given flavor.

    The generator is read off the trace, its criterion residual is evaluated,
    and the remaining part is compared with the formula up to a real constant.
    """
    vals = np.asarray(w.values, dtype=complex)
    size = max(np.sqrt(np.sum(w.weights * np.abs(vals) ** 2)), 1e-300)
    if flavor == "grounded":
        f = op.grid(-vals.imag)
        if f.norm() <= 1e-12 * size:
            rest = op.grid(vals.real)
            return float((rest - rest.mean()).norm() / size)
        crit = criterion_residual(op, flavor, f, tol_mean)
        rest = op.grid(vals.real) - _J0(op(f))
    else:
        h = op.grid(vals.real)
        if np.ptp(h.values) <= 1e-12 * size:
            return float(op.grid(vals.imag).norm() / size)
        crit = criterion_residual(op, flavor, h, tol_mean)
        rest = op.grid(vals.imag) - _J0(op(h))
    return float(max(crit, (rest - rest.mean()).norm() / size))


def product(op: DNOperator, flavor: str, a: TraceAlgebraElement, b: TraceAlgebraElement,
            tol: float = DEFAULT_CRITERION_TOL, tol_mean: float = DEFAULT_TOL_MEAN,
            verify: bool = True) -> TraceAlgebraElement:
    """(w1 + i w2)(w3 + i w4) with both new hermitian parts re-verified.

    A part whose defect exceeds 10× ``tol`` raises :class:`AlgebraClosureError`.
    """
    if not a.w1.same_grid(b.w1):
        raise ValueError("elements live on different grids")
    w1, w2, w3, w4 = a.w1, a.w2, b.w1, b.w2
    p1 = w1 * w3 - w2 * w4
    p2 = w1 * w4 + w2 * w3
    if verify:
        for name, part in (("first", p1), ("second", p2)):
            d = hermitian_defect(op, flavor, part, tol_mean)
            if d > 10 * tol:
                raise AlgebraClosureError(f"{name} hermitian part of the product has defect {d:.3e}")
    return TraceAlgebraElement(p1, p2, (("product", a.provenance, b.provenance), ()))


def involution(a: TraceAlgebraElement) -> TraceAlgebraElement:
    """(w1 + i w2)* = w1 − i w2."""
    return TraceAlgebraElement(a.w1, -a.w2, (("star", a.provenance), ()))


def triple_norm(a: TraceAlgebraElement) -> float:
    """max(sup|η|, sup|η*|) over the boundary nodes."""
    return float(max(np.abs(a.values).max(), np.abs(a.star_values).max()))
