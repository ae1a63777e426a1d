"""End-to-end runs: mesh, DN map, detection, traces, double, spectrum, reconstruction.

Every number in the report is stored as ``{"value", "tolerance", "stage"}``
so it can be traced back to the stage that produced it.  Reports contain no
timestamps or timings, hence identical configurations give byte-identical
JSON.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .algebra import admissible_basis, make_element
from .config import ExperimentConfig
from .cover import double_cover
from .detector import NO_HOLES, classify, recover_boundary_length
from .dn import DNOperator, assemble_dn, spectrum
from .errors import EitHolesError, Indeterminate, MeshError
from .mesh import build_synthetic, validate_mesh, write_surf2
from .reconstruct import (
    annulus_eigenvalues,
    compare_on_modes,
    dn_from_sheet,
    find_seam,
    fit_conformal_metric,
    gelfand_embed,
    identify_boundary,
    metric_patch,
    reconstruct_sheet,
    recover_annulus_modulus,
    shilov_check,
    split_components,
)

SCHEMA = "eitholes-report/1"
ROUND_TRIP_MODES = 8
ROUND_TRIP_TOL = 0.05
LENGTH_TOL = 0.01
MODULUS_PAIRS = 4


class PipelineError(EitHolesError):
    """A stage failed; the partial report and artifacts are kept on disk."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _clean(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    return x


class Report:
    def __init__(self, config: ExperimentConfig):
        self.data = {
            "schema": SCHEMA,
            "config": config.to_dict(),
            "status": "running",
            "verdict": None,
            "values": {},
            "checks": {},
            "skipped": {},
            "stages": [],
            "artifacts": [],
            "error": None,
        }

    def stage(self, name):
        self.data["stages"].append(name)
        self.current = name

    def num(self, key, value, tol=None):
        self.data["values"][key] = {"value": value, "tolerance": tol, "stage": self.current}

    def check(self, key, passed, detail=None):
        self.data["checks"][key] = {"passed": bool(passed), "stage": self.current, "detail": detail}

    def artifact(self, name):
        self.data["artifacts"].append(name)

    def to_json(self) -> str:
        return json.dumps(_clean(self.data), indent=2, sort_keys=True) + "\n"

    def write(self, out: Path):
        (out / "report.json").write_text(self.to_json())


def load_report(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != SCHEMA:
        raise ValueError(f"report schema {data.get('schema')!r} is not {SCHEMA!r}")
    return data


def write_traces_csv(path, s, elements) -> None:
    head = ["s"] + [f"{p}{j}" for j in range(len(elements)) for p in ("re", "im")]
    with open(path, "w") as fh:
        fh.write(",".join(head) + "\n")
        for i in range(len(s)):
            row = [repr(float(s[i]))]
            for e in elements:
                z = e.values[i]
                row += [repr(float(z.real)), repr(float(z.imag))]
            fh.write(",".join(row) + "\n")


def run_pipeline(config: ExperimentConfig, out_dir=None) -> dict:
    """Run every stage the configuration allows and write artifacts and report.json.

    An indeterminate classification ends the run with status
    ``indeterminate``; any other stage error is recorded and re-raised as
    :class:`PipelineError`.
    """
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(config)
    rep.current = "setup"
    try:
        _run(config, out, rep)
        if rep.data["status"] == "running":
            rep.data["status"] = "ok"
    except Indeterminate as exc:
        rep.data["status"] = "indeterminate"
        rep.data["verdict"] = "Indeterminate"
        rep.num("kernel_dim", exc.kernel_dim)
        rep.num("lambda1_norm", exc.lambda1_norm, config.tol_const)
        rep.data["error"] = {"stage": rep.current, "type": "Indeterminate", "message": str(exc)}
    except Exception as exc:
        rep.data["status"] = "error"
        rep.data["error"] = {"stage": rep.current, "type": type(exc).__name__, "message": str(exc)}
        rep.write(out)
        raise PipelineError(rep.current, exc) from exc
    rep.write(out)
    return rep.data


def _plot(config, fn, *args, **kw):
    if config.plots:
        from . import plotting

        getattr(plotting, fn)(*args, **kw)


def _run(config: ExperimentConfig, out: Path, rep: Report):
    flavor = config.flavor

    rep.stage("mesh")
    mesh = build_synthetic(config.domain_descriptor())
    report = validate_mesh(mesh)
    report.raise_if_failed()
    write_surf2(mesh, out / "mesh.surf2")
    rep.artifact("mesh.surf2")
    rep.num("n_vertices", mesh.n_vertices)
    rep.num("boundary_loops", report.loops)
    rep.num("euler_characteristic", report.euler_characteristic)
    rep.num("min_quality", report.min_quality)

    rep.stage("dn")
    assemble_dn(mesh, flavor).to_csv(out / "dn.csv")
    rep.artifact("dn.csv")
    # downstream stages only see what the CSV carries
    op = DNOperator.from_csv(out / "dn.csv")
    rep.num("boundary_nodes", op.n)
    rep.num("boundary_length", op.length)

    rep.stage("detect")
    cls = classify(op, config.n_modes, config.tol_kernel, config.tol_const, strict=False)
    rep.data["verdict"] = cls.verdict
    rep.num("kernel_dim", cls.kernel_dim, cls.thresholds["tol_kernel"])
    rep.num("lambda1_norm", cls.lambda1_norm, config.tol_const)
    rep.num("n_modes", config.n_modes)
    _plot(config, "plot_singular_values", out / "singular_values.png", cls.singular_values,
          max(cls.thresholds["tol_kernel"], 1e-16))
    if config.plots:
        rep.artifact("singular_values.png")
    if cls.verdict == "Indeterminate":
        raise Indeterminate("classification is indeterminate", cls.kernel_dim, cls.lambda1_norm)

    rep.stage("length")
    rep.num("recovered_length", recover_boundary_length(op), LENGTH_TOL)

    if cls.verdict == NO_HOLES:
        rep.data["skipped"]["reconstruction"] = (
            "one-component boundary: the trace algebra has no seam to glue along"
        )
        return
    expected = "HolesGrounded" if flavor == "grounded" else "HolesIsolated"
    rep.check("verdict_matches_flavor", cls.verdict == expected, expected)

    rep.stage("modulus")
    lam, _ = spectrum(op, 2 * MODULUS_PAIRS + 1)
    fit = recover_annulus_modulus(lam, flavor, op.length, MODULUS_PAIRS)
    rep.num("modulus", fit.L if fit.ok else None, 0.02)
    rep.num("modulus_fit_residual", fit.residual, 5e-2)
    rep.check("annulus_spectrum", fit.ok)
    if config.plots:
        eigs, _ = spectrum(op, 2 * MODULUS_PAIRS + 5)
        model = annulus_eigenvalues(fit.L, flavor, MODULUS_PAIRS, op.length) if fit.ok else None
        _plot(config, "plot_spectrum", out / "spectrum.png", eigs, model)
        rep.artifact("spectrum.png")

    rep.stage("traces")
    basis = admissible_basis(op, flavor, config.k, config.mode, mesh if config.mode == "validation" else None,
                             tol=config.tol_criterion, tol_mean=config.tol_mean, seed=config.seed)
    elements = [make_element(op, flavor, g, tol=config.tol_criterion, tol_mean=config.tol_mean) for g in basis]
    write_traces_csv(out / "traces.csv", op.s, elements)
    rep.artifact("traces.csv")
    rep.num("generators", len(elements))
    rep.num("max_criterion_residual", max(basis.residuals) if basis.residuals else None, config.tol_criterion)
    rep.check("generators_complete", basis.complete)
    _plot(config, "plot_traces", out / "traces.png", op.s, [e.values for e in elements])
    if config.plots:
        rep.artifact("traces.png")

    if config.mode == "blind":
        rep.data["skipped"]["reconstruction"] = "blind mode stops after detection, modulus and trace export"
        return
    if len(elements) < 2:
        rep.data["skipped"]["reconstruction"] = "fewer than two generators"
        return

    rep.stage("cover")
    doubled = double_cover(mesh)
    problems = doubled.check()
    if problems:
        raise MeshError("; ".join(problems), problems)
    rep.num("euler_characteristic_double", doubled.mesh.euler_characteristic)
    rep.check("euler_doubles", doubled.mesh.euler_characteristic == 2 * mesh.euler_characteristic)

    rep.stage("embed")
    cloud = gelfand_embed(doubled, elements)
    rep.num("max_cr_residual", max(cloud.cr_residuals))
    rep.num("cloud_points", cloud.n_points)

    rep.stage("shilov")
    sh = shilov_check(cloud)
    rep.check("shilov_boundary", sh.ok, sh.violations)

    rep.stage("seam")
    seam = find_seam(cloud)
    truth = set(map(int, doubled.seam))
    found = set(map(int, seam))
    rep.num("seam_size", len(seam))
    rep.num("seam_recall", len(truth & found) / len(truth), 0.99)
    rep.num("seam_precision", len(truth & found) / max(len(found), 1))

    rep.stage("boundary")
    plus, minus, mismatch = identify_boundary(cloud, elements)
    rep.num("boundary_mismatch", mismatch)
    rep.check("boundary_identified", np.array_equal(plus, doubled.gamma0_plus)
              and np.array_equal(minus, doubled.gamma0_minus_matched))

    rep.stage("split")
    sheet = split_components(cloud, seam)
    rep.num("components", 2)
    rep.num("sheet_points", int(np.sum(sheet == 1)))
    cloud.to_csv(out / "cloud.csv")
    rep.artifact("cloud.csv")
    _plot(config, "plot_cloud", out / "cloud.png", cloud.values, sheet, seam)
    if config.plots:
        rep.artifact("cloud.png")

    rep.stage("metric")
    coords, fields, _ = metric_patch(cloud)
    mf = fit_conformal_metric(coords, fields)
    rep.num("metric_fit_residual", mf.residual)
    rep.num("metric_identity_deviation", float(np.linalg.norm(mf.metric - np.eye(2))), 1e-2)

    rep.stage("roundtrip")
    rec = reconstruct_sheet(doubled, cloud, 1)
    rec_op = dn_from_sheet(rec, flavor, op, doubled)
    rep.num("dn_mismatch", compare_on_modes(op, rec_op, ROUND_TRIP_MODES), ROUND_TRIP_TOL)
