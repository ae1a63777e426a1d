import numpy as np
import pytest

from eitholes.algebra import admissible_basis, make_element
from eitholes.dn import assemble_dn
from eitholes.mesh import build_synthetic

TWO_HOLES = {"kind": "holes", "centers": [[0.45, 0.0], [-0.45, 0.0]], "radii": [0.2, 0.2]}


@pytest.fixture(scope="session")
def annulus():
    return build_synthetic({"kind": "annulus", "r": 0.5, "h": 0.04})


@pytest.fixture(scope="session")
def disk():
    return build_synthetic({"kind": "disk", "h": 0.04})


@pytest.fixture(scope="session")
def two_holes():
    return build_synthetic(dict(TWO_HOLES, h=0.04))


@pytest.fixture(scope="session")
def annulus_ops(annulus):
    return {fl: assemble_dn(annulus, fl) for fl in ("grounded", "isolated")}


@pytest.fixture(scope="session")
def annulus_gens(annulus, annulus_ops):
    out = {}
    for fl, op in annulus_ops.items():
        basis = admissible_basis(op, fl, 4, "validation", annulus)
        out[fl] = [make_element(op, fl, g) for g in basis]
    return out


def theta(op):
    return 2 * np.pi * op.s / op.length


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
