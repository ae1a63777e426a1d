"""Command-line interface.

Exit codes: 0 success, 2 invariant violation, 3 indeterminate
classification, 4 input/output error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import EitHolesError, FormatError, Indeterminate

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_INDETERMINATE = 3
EXIT_IO = 4


def _emit(obj) -> None:
    from .pipeline import _clean

    print(json.dumps(_clean(obj), indent=2, sort_keys=True))


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _domain_from_args(args) -> dict:
    d = {"kind": args.kind, "h": args.h}
    if args.kind == "annulus":
        d["r"] = args.r
    if args.kind == "holes":
        d["centers"] = [_floats(c) for c in args.centers.split(";")]
        d["radii"] = _floats(args.radii)
    if args.metric:
        g11, g12, g22 = _floats(args.metric)
        d["metric"] = [[g11, g12], [g12, g22]]
    return d


def read_trace_csv(path, n: int) -> np.ndarray:
    """Trace values from a CSV with header ``s,value``."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "s,value":
        raise FormatError("expected header 's,value'", 1)
    vals = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError("expected two fields", lineno)
        try:
            vals.append(float(parts[1]))
        except ValueError:
            raise FormatError("non-numeric value", lineno) from None
    if len(vals) != n:
        raise FormatError(f"expected {n} samples, found {len(vals)}", len(lines) + 1)
    return np.array(vals)


def cmd_mesh_gen(args) -> int:
    from .mesh import build_synthetic, validate_mesh, write_surf2

    mesh = build_synthetic(_domain_from_args(args))
    rep = validate_mesh(mesh)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_surf2(mesh, out / "mesh.surf2")
    _emit({"ok": rep.ok, "loops": rep.loops, "euler_characteristic": rep.euler_characteristic,
           "min_quality": rep.min_quality, "n_vertices": mesh.n_vertices, "violations": rep.violations})
    return EXIT_OK if rep.ok else EXIT_INVARIANT


def cmd_dn_assemble(args) -> int:
    from .dn import assemble_dn
    from .mesh import read_surf2, validate_mesh

    mesh = read_surf2(args.mesh)
    validate_mesh(mesh).raise_if_failed()
    op = assemble_dn(mesh, args.flavor)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    op.to_csv(out / "dn.csv")
    _emit({"flavor": op.flavor, "n": op.n, "length": op.length, "fingerprint": op.fingerprint})
    return EXIT_OK


def cmd_detect(args) -> int:
    from .detector import classify
    from .dn import DNOperator

    op = DNOperator.from_csv(args.dn)
    coarse = DNOperator.from_csv(args.coarse) if args.coarse else None
    try:
        cls = classify(op, args.modes, args.tol, args.tol_const, coarse=coarse)
    except Indeterminate as exc:
        _emit({"verdict": "Indeterminate", "kernel_dim": exc.kernel_dim, "lambda1_norm": exc.lambda1_norm,
               "message": str(exc)})
        return EXIT_INDETERMINATE
    _emit(cls.to_dict())
    return EXIT_OK


def cmd_criteria(args) -> int:
    from .algebra import residual_grounded, residual_isolated
    from .dn import DNOperator

    op = DNOperator.from_csv(args.dn)
    tr = op.grid(read_trace_csv(args.trace, op.n))
    if op.flavor == "grounded":
        flux, res = residual_grounded(op, tr, args.tol_mean)
        _emit({"mean_flux": flux, "residual": res, "c_h": None})
    else:
        c_h, res = residual_isolated(op, tr)
        _emit({"mean_flux": float(op(tr).integral()), "residual": res, "c_h": c_h})
    return EXIT_OK


def cmd_traces(args) -> int:
    from .algebra import admissible_basis, make_element
    from .dn import DNOperator
    from .mesh import read_surf2
    from .pipeline import write_traces_csv

    op = DNOperator.from_csv(args.dn)
    mesh = read_surf2(args.mesh) if args.mesh else None
    if args.mode == "validation" and mesh is None:
        raise SystemExit("validation mode needs --mesh")
    basis = admissible_basis(op, op.flavor, args.k, args.mode, mesh, tol=args.tol, seed=args.seed)
    elements = [make_element(op, op.flavor, g, tol=args.tol) for g in basis]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_traces_csv(out / "traces.csv", op.s, elements)
    _emit({"generators": len(elements), "complete": basis.complete, "residuals": basis.residuals})
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    import tempfile

    from .algebra import admissible_basis, make_element
    from .cover import double_cover
    from .detector import classify
    from .dn import DNOperator, assemble_dn, spectrum
    from .mesh import read_surf2
    from .reconstruct import (compare_on_modes, dn_from_sheet, find_seam, fit_conformal_metric, gelfand_embed,
                              metric_patch, reconstruct_sheet, recover_annulus_modulus, split_components)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.mode == "validation":
        if not args.mesh:
            raise SystemExit("validation mode needs --mesh")
        mesh = read_surf2(args.mesh)
        with tempfile.TemporaryDirectory() as tmp:
            assemble_dn(mesh, args.flavor).to_csv(Path(tmp) / "dn.csv")
            op = DNOperator.from_csv(Path(tmp) / "dn.csv")
    else:
        if not args.dn:
            raise SystemExit("blind mode needs --dn")
        mesh, op = None, DNOperator.from_csv(args.dn)
    flavor = op.flavor
    try:
        cls = classify(op, args.modes, args.tol)
    except Indeterminate as exc:
        _emit({"verdict": "Indeterminate", "message": str(exc)})
        return EXIT_INDETERMINATE
    result = {"verdict": cls.verdict, "modulus": None, "seam_size": None, "components": None,
              "metric_fit_residual": None}
    if cls.verdict == "NoHoles":
        result["skipped"] = "one-component boundary"
        _emit(result)
        return EXIT_OK
    lam, _ = spectrum(op, 9)
    fit = recover_annulus_modulus(lam, flavor, op.length)
    result["modulus"] = fit.L if fit.ok else None
    if mesh is None:
        _emit(result)
        return EXIT_OK
    basis = admissible_basis(op, flavor, args.k, "validation", mesh)
    gens = [make_element(op, flavor, g) for g in basis]
    doubled = double_cover(mesh)
    cloud = gelfand_embed(doubled, gens)
    seam = find_seam(cloud)
    split_components(cloud, seam)
    cloud.to_csv(out / "cloud.csv")
    coords, fields, _ = metric_patch(cloud)
    result["seam_size"] = len(seam)
    result["components"] = 2
    result["metric_fit_residual"] = fit_conformal_metric(coords, fields).residual
    rec = reconstruct_sheet(doubled, cloud, 1)
    result["dn_mismatch"] = compare_on_modes(op, dn_from_sheet(rec, flavor, op, doubled))
    _emit(result)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    from .pipeline import run_pipeline

    cfg = ExperimentConfig.from_json(args.config)
    overrides = {}
    for key in ("flavor", "mode"):
        if getattr(args, key):
            overrides[key] = getattr(args, key)
    if args.modes:
        overrides["n_modes"] = args.modes
    if args.tol is not None:
        overrides["tol_kernel"] = args.tol
    if args.no_plots:
        overrides["plots"] = False
    if overrides:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    report = run_pipeline(cfg, args.out)
    _emit({k: report[k] for k in ("status", "verdict", "skipped")})
    return EXIT_INDETERMINATE if report["status"] == "indeterminate" else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eitholes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, flavor=True, modes=True, tol=True, mode=False, out=True):
        if flavor:
            q.add_argument("--flavor", choices=("grounded", "isolated"), default="grounded")
        if modes:
            q.add_argument("--modes", type=int, default=16)
        if tol:
            q.add_argument("--tol", type=float, default=None)
        if mode:
            q.add_argument("--mode", choices=("validation", "blind"), default="validation")
        if out:
            q.add_argument("--out", default=".")

    mesh = sub.add_parser("mesh", help="mesh utilities")
    msub = mesh.add_subparsers(dest="action", required=True)
    gen = msub.add_parser("gen", help="generate a synthetic domain")
    gen.add_argument("--kind", choices=("disk", "annulus", "holes"), required=True)
    gen.add_argument("--h", type=float, default=0.04)
    gen.add_argument("--r", type=float, default=0.5)
    gen.add_argument("--centers", default="0.45,0;-0.45,0", help="'x,y;x,y'")
    gen.add_argument("--radii", default="0.2,0.2")
    gen.add_argument("--metric", default=None, help="constant 'g11,g12,g22' in xy coordinates")
    common(gen, flavor=False, modes=False, tol=False)
    gen.set_defaults(func=cmd_mesh_gen)

    dn = sub.add_parser("dn", help="DN operator utilities")
    dsub = dn.add_subparsers(dest="action", required=True)
    asm = dsub.add_parser("assemble", help="assemble the DN matrix of a SURF2 mesh")
    asm.add_argument("--mesh", required=True)
    common(asm, modes=False, tol=False)
    asm.set_defaults(func=cmd_dn_assemble)

    det = sub.add_parser("detect", help="classify a DN matrix")
    det.add_argument("--dn", required=True)
    det.add_argument("--coarse", default=None, help="DN CSV of the same domain on a coarser mesh")
    det.add_argument("--tol-const", type=float, default=1e-6)
    common(det, flavor=False, out=False)
    det.set_defaults(func=cmd_detect)

    cr = sub.add_parser("criteria", help="holomorphy criterion of one trace")
    cr.add_argument("--dn", required=True)
    cr.add_argument("--trace", required=True)
    cr.add_argument("--tol-mean", type=float, default=1e-6)
    cr.set_defaults(func=cmd_criteria)

    tr = sub.add_parser("traces", help="export admissible trace-algebra generators")
    tr.add_argument("--dn", required=True)
    tr.add_argument("--mesh", default=None)
    tr.add_argument("--k", type=int, default=4)
    tr.add_argument("--seed", type=int, default=0)
    common(tr, flavor=False, modes=False, tol=False, mode=True)
    tr.add_argument("--tol", type=float, default=1e-2)
    tr.set_defaults(func=cmd_traces)

    rc = sub.add_parser("reconstruct", help="spectrum, seam, sheets and modulus")
    rc.add_argument("--mesh", default=None)
    rc.add_argument("--dn", default=None)
    rc.add_argument("--k", type=int, default=4)
    common(rc, mode=True)
    rc.set_defaults(func=cmd_reconstruct)

    pl = sub.add_parser("pipeline", help="run a configured experiment end to end")
    pl.add_argument("--config", required=True)
    pl.add_argument("--no-plots", action="store_true", help="write CSV and JSON only")
    pl.add_argument("--flavor", choices=("grounded", "isolated"), default=None)
    pl.add_argument("--mode", choices=("validation", "blind"), default=None)
    pl.add_argument("--modes", type=int, default=None)
    pl.add_argument("--tol", type=float, default=None)
    pl.add_argument("--out", default=None)
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Indeterminate as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except EitHolesError as exc:
        cause = getattr(exc, "cause", None)
        if isinstance(cause, (OSError, FormatError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
