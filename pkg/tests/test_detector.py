import numpy as np
import pytest

from eitholes.detector import (
    HOLES_GROUNDED,
    HOLES_ISOLATED,
    INDETERMINATE,
    NO_HOLES,
    TOL_CAP,
    TOL_FLOOR,
    classify,
    estimate_kernel_tol,
    kernel_dimension,
    lambda1_norm,
    recover_boundary_length,
)
from eitholes.dn import DNOperator, assemble_dn
from eitholes.errors import Indeterminate
from eitholes.mesh import build_synthetic


def test_disk_is_no_holes(disk):
    cls = classify(assemble_dn(disk, "grounded"), 16)
    assert cls.verdict == NO_HOLES
    assert cls.kernel_dim == 32


@pytest.mark.parametrize("flavor, verdict", [("grounded", HOLES_GROUNDED), ("isolated", HOLES_ISOLATED)])
def test_annulus_flavors(annulus_ops, flavor, verdict):
    cls = classify(annulus_ops[flavor], 16)
    assert cls.verdict == verdict
    assert cls.kernel_dim < 32


@pytest.mark.parametrize("flavor, verdict", [("grounded", HOLES_GROUNDED), ("isolated", HOLES_ISOLATED)])
def test_two_hole_flavors(two_holes, flavor, verdict):
    assert classify(assemble_dn(two_holes, flavor), 16).verdict == verdict


def test_zero_tolerance_is_indeterminate(annulus_ops):
    op = annulus_ops["grounded"]
    with pytest.raises(Indeterminate) as exc:
        classify(op, 16, tol_kernel=0.0)
    assert exc.value.kernel_dim == 0
    assert classify(op, 16, tol_kernel=0.0, strict=False).verdict == INDETERMINATE


def test_high_frequency_defect_is_indeterminate(disk):
    # a perturbation at the top of the probed band looks like discretisation error, not a hole
    op = assemble_dn(disk, "grounded")
    th = 2 * np.pi * op.s / op.length
    q = np.cos(15 * th)
    P = 5.0 * np.outer(q, q * op.weights)
    bad = DNOperator("grounded", op.matrix + P, op.s, op.weights, op.length)
    assert classify(bad, 16, strict=False).verdict == INDETERMINATE


def test_kernel_tol_is_clipped(annulus_ops, disk):
    for op in (*annulus_ops.values(), assemble_dn(disk, "grounded")):
        tol = estimate_kernel_tol(op, 16)
        assert TOL_FLOOR <= tol <= TOL_CAP


def test_coarse_operator_only_raises_the_tolerance(disk):
    fine = assemble_dn(disk, "grounded")
    coarse = assemble_dn(build_synthetic({"kind": "disk", "h": 0.08}), "grounded")
    assert estimate_kernel_tol(fine, 8, coarse) >= estimate_kernel_tol(fine, 8)


def test_kernel_dimension_monotone_in_tol(annulus_ops):
    op = annulus_ops["grounded"]
    dims = [kernel_dimension(op, 16, t) for t in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
    assert dims == sorted(dims)


def test_lambda1_norm_separates_flavors(annulus_ops):
    assert lambda1_norm(annulus_ops["isolated"]) < 1e-10
    assert lambda1_norm(annulus_ops["grounded"]) == pytest.approx(1 / np.log(2), rel=0.02)


def test_too_many_modes_rejected(annulus_ops):
    with pytest.raises(ValueError):
        classify(annulus_ops["grounded"], 200)


@pytest.mark.parametrize("flavor", ["grounded", "isolated"])
def test_boundary_length_recovery(annulus_ops, flavor):
    op = annulus_ops[flavor]
    assert recover_boundary_length(op) == pytest.approx(op.length, rel=0.01)


def test_boundary_length_scales_with_metric():
    mesh = build_synthetic({"kind": "disk", "h": 0.05, "metric": [[4.0, 0.0], [0.0, 4.0]]})
    op = assemble_dn(mesh, "grounded")
    assert op.length == pytest.approx(4 * np.pi, rel=1e-3)
    assert recover_boundary_length(op) == pytest.approx(op.length, rel=0.01)
