"""Command-line pipeline: build surfaces, verify meshes, render reports.

Commands
--------
* ``build``: construct the odd or even surface for (m, ell), verify it, and
  write mesh exports plus ``report.json`` / ``convergence.json``.
* ``verify MESH``: topology/area/separation checks on an exported mesh file.
* ``report DIR``: render ``report.csv``, ``convergence.csv`` and PNG figures
  from a build directory.
* ``config-dump``: print the named configuration geometry as JSON.

Exit codes: 0 all requested checks pass, 1 build/verification failure,
2 usage error.  ``S3MINSURF_THREADS`` controls the verification thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import assembly, io, pipeline, verify
from .errors import (
    AssemblyError,
    ExportError,
    ParameterError,
    SolverError,
    TopologyError,
    WeldError,
)
from .plateau import SolveOptions
from .tessellation import build_configuration

USAGE_ERROR, BUILD_ERROR = 2, 1


@dataclass
class BuildRequest:
    variant: str
    m: int
    ell: int
    refinement: int = 3
    solver: SolveOptions = field(default_factory=SolveOptions)
    outdir: str = "out"
    formats: tuple = ("csv4", "ply4")
    deterministic: bool = True
    seed: int = 0
    pole: np.ndarray | None = None

    def validate(self):
        if self.variant not in ("odd", "even"):
            raise ParameterError(f"variant must be odd or even, got {self.variant!r}")
        if self.m < 2:
            raise ParameterError("m must be >= 2")
        if self.variant == "odd" and self.ell < 1:
            raise ParameterError("odd surfaces need ell >= 1")
        if self.variant == "even" and self.ell < 2:
            raise ParameterError("even surfaces need ell >= 2")
        if self.refinement < 1:
            raise ParameterError("refinement level must be >= 1")
        bad = set(self.formats) - {"csv4", "ply4", "ply3-stereo"}
        if bad:
            raise ParameterError(f"unknown export formats: {sorted(bad)}")


def _json_dump(data: dict, path: str) -> str:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def run_build(req: BuildRequest) -> tuple:
    """Execute a build request; returns (exit code, artifact paths)."""
    req.validate()
    os.makedirs(req.outdir, exist_ok=True)
    artifacts = {}
    t_start = time.time()
    try:
        cfg = build_configuration(req.m, req.ell)
        if req.variant == "odd":
            fund = pipeline.solve_fundamental_odd(cfg, req.refinement, req.solver)
        else:
            fund = pipeline.solve_fundamental_even(cfg, req.refinement, req.solver)
        copies, welded = pipeline.build_surface(cfg, fund.mesh, req.variant)
        report = verify.build_surface_report(
            cfg, req.variant, welded, copies, fund.mesh, fund.record, req.refinement
        )
    except (SolverError, WeldError, AssemblyError, TopologyError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        artifacts["diagnostic"] = _json_dump(diag, os.path.join(req.outdir, "diagnostic.json"))
        return BUILD_ERROR, artifacts

    report_dict = report.to_json_dict()
    if not req.deterministic:
        report_dict["timing_seconds"] = time.time() - t_start
    artifacts["report"] = _json_dump(report_dict, os.path.join(req.outdir, "report.json"))
    artifacts["convergence"] = _json_dump(
        fund.record.to_json_dict(), os.path.join(req.outdir, "convergence.json")
    )
    for fmt in req.formats:
        suffix = {"csv4": "csv", "ply4": "ply", "ply3-stereo": "stereo.ply"}[fmt]
        path = os.path.join(req.outdir, f"mesh.{suffix}")
        try:
            io.export_mesh(welded.V, welded.F, path, fmt=fmt, pole=req.pole)
        except ExportError as exc:
            diag = {"error": "ExportError", "message": str(exc)}
            artifacts["diagnostic"] = _json_dump(
                diag, os.path.join(req.outdir, "diagnostic.json")
            )
            return BUILD_ERROR, artifacts
        artifacts[fmt] = path
    return (0 if report.passes() else BUILD_ERROR), artifacts


def run_verify(mesh_path: str) -> tuple:
    """Standalone checks on an exported mesh; returns (exit code, result dict)."""
    V, F = io.import_mesh(mesh_path)
    out = {"vertices": int(V.shape[0]), "faces": int(F.shape[0])}
    try:
        chi, genus, orientable = assembly.euler_genus((V, F))
        out["chi"] = int(chi)
        out["genus"] = int(genus)
        out["orientable"] = bool(orientable)
        out["closed"] = True
    except TopologyError as exc:
        out["closed"] = False
        out["error"] = str(exc)
        return BUILD_ERROR, out
    out["connected"] = assembly.connected_components(F, V.shape[0]) == 1
    from .plateau import mesh_area

    out["area"] = float(mesh_area((V, F)))
    out["min_separation"] = float(verify.min_separation((V, F)))
    out["embedded_at_resolution"] = out["min_separation"] > 1e-8
    ok = out["closed"] and out["orientable"] and out["embedded_at_resolution"]
    return (0 if ok else BUILD_ERROR), out


def run_report(directory: str) -> tuple:
    from . import report as report_mod

    report = convergence = mesh = None
    rp = os.path.join(directory, "report.json")
    cp = os.path.join(directory, "convergence.json")
    mp = os.path.join(directory, "mesh.csv")
    if os.path.exists(rp):
        with open(rp) as fh:
            report = json.load(fh)
    if os.path.exists(cp):
        with open(cp) as fh:
            convergence = json.load(fh)
    if os.path.exists(mp):
        mesh = io.import_mesh(mp)
    if report is None and convergence is None and mesh is None:
        raise ParameterError(f"no build artifacts found in {directory!r}")
    written = report_mod.render_report(directory, report, convergence, mesh)
    return 0, written


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="s3minsurf", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build and verify a surface")
    b.add_argument("--variant", choices=["odd", "even"], required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--ell", type=int, required=True)
    b.add_argument("--refine", type=int, default=3, dest="refinement")
    b.add_argument("--out", default="out", dest="outdir")
    b.add_argument("--formats", default="csv4,ply4",
                   help="comma-separated: csv4,ply4,ply3-stereo")
    b.add_argument("--grad-tol", type=float, default=1e-7)
    b.add_argument("--max-iterations", type=int, default=4000)
    b.add_argument("--deterministic", action="store_true")
    b.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("verify", help="verify an exported mesh file")
    v.add_argument("mesh")

    r = sub.add_parser("report", help="render report tables and figures")
    r.add_argument("directory")

    c = sub.add_parser("config-dump", help="dump the named configuration as JSON")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--ell", type=int, required=True)
    c.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        if args.command == "build":
            req = BuildRequest(
                variant=args.variant,
                m=args.m,
                ell=args.ell,
                refinement=args.refinement,
                solver=SolveOptions(
                    grad_tol=args.grad_tol, max_iterations=args.max_iterations
                ),
                outdir=args.outdir,
                formats=tuple(args.formats.split(",")),
                deterministic=args.deterministic,
                seed=args.seed,
            )
            code, artifacts = run_build(req)
            print(json.dumps({"exit": code, "artifacts": artifacts}, indent=2, sort_keys=True))
            return code
        if args.command == "verify":
            code, out = run_verify(args.mesh)
            print(json.dumps(out, indent=2, sort_keys=True))
            return code
        if args.command == "report":
            code, written = run_report(args.directory)
            print(json.dumps({"written": written}, indent=2, sort_keys=True))
            return code
        if args.command == "config-dump":
            cfg = build_configuration(args.m, args.ell)
            text = json.dumps(cfg.to_json_dict(), indent=2, sort_keys=True)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            return 0
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
