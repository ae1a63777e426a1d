import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitholes.errors import FormatError, MeshError
from eitholes.mesh import (
    SurfaceMesh,
    build_synthetic,
    extract_boundary_loops,
    read_surf2,
    rotate_loop,
    validate_mesh,
    write_surf2,
)


@pytest.mark.parametrize(
    "desc, loops, chi",
    [
        ({"kind": "disk", "h": 0.1}, 1, 1),
        ({"kind": "annulus", "r": 0.5, "h": 0.1}, 2, 0),
        ({"kind": "holes", "centers": [[0.45, 0], [-0.45, 0]], "radii": [0.2, 0.2], "h": 0.06}, 3, -1),
    ],
)
def test_synthetic_domains_are_valid(desc, loops, chi):
    mesh = build_synthetic(desc)
    rep = validate_mesh(mesh)
    assert rep.ok, rep.violations
    assert rep.loops == loops
    assert rep.euler_characteristic == chi
    assert rep.min_quality > 0.3
    # outer circle is Γ0 and has length close to 2π
    assert abs(mesh.loop_length(mesh.gamma0_index) - 2 * np.pi) < 0.01


def test_gamma0_starts_on_positive_x_axis(annulus):
    p = annulus.vertices[annulus.gamma0[0]]
    assert p[0] > 0.99 and abs(p[1]) < 1e-12


def test_boundary_loops_follow_orientation(annulus):
    t = annulus.triangles
    directed = {(a, b) for tri in t for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))}
    for loop in annulus.boundary_loops:
        for a, b in zip(loop, np.roll(loop, -1)):
            assert (a, b) in directed and (b, a) not in directed


@pytest.mark.parametrize(
    "desc",
    [
        {"kind": "disk", "h": 0.0},
        {"kind": "disk", "h": -1},
        {"kind": "annulus", "r": 1.2, "h": 0.1},
        {"kind": "holes", "centers": [[0.9, 0]], "radii": [0.3], "h": 0.05},
        {"kind": "holes", "centers": [[0.1, 0], [-0.1, 0]], "radii": [0.2, 0.2], "h": 0.05},
        {"kind": "holes", "centers": [[0.1, 0]], "radii": [-0.2], "h": 0.05},
        {"kind": "sphere", "h": 0.1},
    ],
)
def test_invalid_descriptors_raise(desc):
    with pytest.raises(MeshError):
        build_synthetic(desc)


def test_validate_reports_flipped_triangle(annulus):
    t = annulus.triangles.copy()
    t[0] = t[0][[1, 0, 2]]
    bad = SurfaceMesh(annulus.vertices, t, annulus.metric, annulus.boundary_loops)
    rep = validate_mesh(bad)
    assert not rep.ok
    assert not rep.orientation_consistent
    with pytest.raises(MeshError):
        rep.raise_if_failed()


def test_validate_reports_indefinite_metric(annulus):
    g = annulus.metric.copy()
    g[3] = [[1.0, 0.0], [0.0, -1.0]]
    rep = validate_mesh(SurfaceMesh(annulus.vertices, annulus.triangles, g, annulus.boundary_loops))
    assert not rep.metric_spd
    assert any("metric" in v for v in rep.violations)


def test_edge_length_rejects_non_edge(annulus):
    a, b = annulus.gamma0[0], annulus.hole_loops[0][0]
    with pytest.raises(MeshError):
        annulus.edge_length(int(a), int(b))


def test_metric_scales_lengths():
    flat = build_synthetic({"kind": "disk", "h": 0.1})
    scaled = build_synthetic({"kind": "disk", "h": 0.1, "metric": [[4.0, 0.0], [0.0, 4.0]]})
    assert scaled.loop_length(0) == pytest.approx(2 * flat.loop_length(0), rel=1e-12)


def test_surf2_round_trip(tmp_path):
    mesh = build_synthetic({"kind": "annulus", "r": 0.5, "h": 0.1, "metric": [[2.0, 0.3], [0.3, 1.0]]})
    write_surf2(mesh, tmp_path / "m.surf2")
    back = read_surf2(tmp_path / "m.surf2")
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.allclose(back.metric, mesh.metric, rtol=0, atol=1e-15)
    for a, b in zip(back.boundary_loops, mesh.boundary_loops):
        assert np.array_equal(a, b)
    assert validate_mesh(back).ok


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("MESH 1 1 1\n", 1),
        ("SURF2 1 0 0\nv 0 0 x\ngamma0 0\n", 2),
        ("SURF2 1 0 0\nq 1\n", 2),
        ("SURF2 2 0 0\nv 0 0 0\ngamma0 0\n", 3),
    ],
)
def test_surf2_format_errors_carry_line(tmp_path, text, line):
    p = tmp_path / "bad.surf2"
    p.write_text(text)
    with pytest.raises(FormatError) as exc:
        read_surf2(p)
    assert exc.value.line == line


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 40), shift=st.integers(0, 39))
def test_boundary_loop_of_fan_is_recovered(n, shift):
    # triangle fan around a centre vertex: the boundary is the rim, counter-clockwise
    tris = np.array([[0, 1 + i, 1 + (i + 1) % n] for i in range(n)])
    loops = extract_boundary_loops(tris)
    assert len(loops) == 1
    base = 1 + shift % n
    loop = rotate_loop(loops[0], base)
    assert loop[0] == base
    assert list(loop) == [1 + (shift + i) % n for i in range(n)]
