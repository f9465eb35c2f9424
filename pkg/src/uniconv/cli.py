"""
Command line entry point.

    uniconv {certify,image-check,solve,gap,all} FILE [--radius R] [--seed S]
            [--cells N] [--samples N] [--tol T] [--out PATH] [--format text|json]

Flags take precedence over the file's ``options`` section, which takes
precedence over the built-in defaults. The report is a mapping with the
sections ``certificate``, ``image_check``, ``solve`` and ``gap`` (those the
command ran), plus ``status``, ``exit_code``, ``diagnostics`` and
``provenance``. Only ``provenance.timings`` varies between identical runs.
Infinite values are written as the strings "inf" / "-inf"; absent values as
null.

Exit codes: 0 ok, 2 parse error, 3 not certified, 4 infeasible,
5 verification failure (including any other diagnosed error).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from importlib import resources

import numpy as np
import scipy
import yaml

from . import __version__, kernels
from .certify import certify_problem
from .errors import InfeasibleError, NotOntoError, ProblemFileError, UniconvError
from .imagecheck import (
    convex_like_check,
    empirical_image_modulus,
    midpoint_convexity_test,
    rasterize_image,
    write_modulus_csv,
)
from .optim import build_image_map, duality_gap, solve
from .problemfile import ProblemFile, load_problem_file

EXIT_OK, EXIT_PARSE, EXIT_NOT_CERTIFIED, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 2, 3, 4, 5
COMMANDS = ("certify", "image-check", "solve", "gap", "all")
BOUNDARY_TOL = 1e-6
GAP_TOL = 1e-4
WEAK_DUALITY_TOL = 1e-9


def _clean(v):
    """JSON/YAML-safe copy with non-finite floats spelled out."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def render(report: dict, fmt: str) -> str:
    data = _clean(report)
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _resolve(path: str) -> str:
    """Fall back to the packaged problem files for bare names like planar_example.problem."""
    if os.path.exists(path) or os.path.dirname(path):
        return path
    packaged = resources.files("uniconv") / "data" / path
    return str(packaged) if packaged.is_file() else path


class _Run:
    def __init__(self, pf: ProblemFile, opts: dict, out: str | None):
        self.pf, self.opts, self.out = pf, opts, out
        self.report: dict = {}
        self.timings: dict = {}
        self.diagnostics: list = []
        self.codes: set = set()
        self._cert = None

    def timed(self, name, fn):
        t = time.perf_counter()
        try:
            return fn()
        finally:
            self.timings[name] = time.perf_counter() - t

    def fail(self, code: int, diag: str, message: str):
        self.codes.add(code)
        self.diagnostics.append({"code": diag, "message": message})

    # --------------------------------------------------------------- sections

    def certificate(self):
        if self._cert is None:
            spec = self.pf.spec
            Phi = build_image_map(spec).map
            try:
                self._cert = certify_problem(Phi, spec.S, spec.x0, seed=self.opts["seed"])
            except NotOntoError as exc:
                from .certify import Certificate

                self._cert = Certificate(spec.S.power2_constant(), math.inf, math.nan, math.inf, False, reason=str(exc))
        return self._cert

    def certify(self, record=True):
        cert = self.timed("certify", self.certificate)
        self.report["certificate"] = cert.as_dict()
        if record and not cert.certified:
            self.fail(EXIT_NOT_CERTIFIED, "not-certified", cert.reason or "condition fails")

    def image_check(self):
        spec, seed = self.pf.spec, self.opts["seed"]
        cert = self.certificate()

        def run():
            Phi = build_image_map(spec).map
            img = rasterize_image(Phi, spec.S, cells=self.opts["cells"], seed=seed)
            mid = midpoint_convexity_test(img, seed=seed)
            sec = {
                "cell": img.h,
                "shape": list(img.shape),
                "marked_count": img.marked_count,
                "midpoint_violations": mid.violations,
                "midpoint_ok": mid.ok,
            }
            if mid.ok:
                mod = empirical_image_modulus(img)
                like = convex_like_check(Phi, spec.S, "zero", samples=self.opts["samples"], img=img, seed=seed)
                sec.update(
                    c_hat=mod.c_hat,
                    c_tolerance=mod.c_tolerance,
                    delta_tolerance=mod.tolerance,
                    curve=[{"epsilon": e, "delta_hat": d} for e, d in mod.rows()],
                    skipped_epsilon=mod.skipped,
                    convex_like_ok=like.ok,
                )
                if self.out:
                    path = self.out + ".modulus.csv"
                    write_modulus_csv(path, mod)
                    sec["modulus_csv"] = os.path.basename(path)
            return sec, mid, sec.get("c_hat")

        sec, mid, c_hat = self.timed("image_check", run)
        self.report["image_check"] = sec
        if cert.certified:
            if not mid.ok:
                self.fail(EXIT_VERIFY, "verification-failure", "certified image failed the midpoint test")
            elif c_hat < cert.image_modulus_constant - sec["c_tolerance"]:
                self.fail(EXIT_VERIFY, "verification-failure", "image modulus below the certified constant")

    def solve(self):
        spec = self.pf.spec
        cert = self.certificate()
        try:
            rep = self.timed("solve", lambda: solve(spec, tol=self.opts["tol"], seed=self.opts["seed"], certificate=cert))
        except InfeasibleError as exc:
            self.report["solve"] = None
            self.fail(EXIT_INFEASIBLE, exc.code, str(exc))
            return None
        self.report["solve"] = rep.as_dict()
        if rep.feasibility > self.opts["tol"]:
            self.fail(EXIT_VERIFY, "verification-failure", "reported solution is infeasible")
        if cert.certified:
            if rep.boundary_distance > BOUNDARY_TOL:
                self.fail(EXIT_VERIFY, "verification-failure", "certified solution is not on the boundary of S")
            if not rep.lagrangian_min_ok:
                self.fail(EXIT_VERIFY, "verification-failure", f"multiplier search: {rep.multiplier_status}")
            if rep.saddle_ok is False:
                self.fail(EXIT_VERIFY, "verification-failure", "saddle point inequalities fail")
        return rep

    def gap(self, solution=None):
        spec = self.pf.spec
        cert = self.certificate()
        if spec.cone is None:
            self.report["gap"] = None
            self.fail(EXIT_VERIFY, "precondition", "the duality gap needs a cone C")
            return
        try:
            est = self.timed("gap", lambda: duality_gap(spec, solution=solution, seed=self.opts["seed"]))
        except InfeasibleError as exc:
            self.report["gap"] = None
            self.fail(EXIT_INFEASIBLE, exc.code, str(exc))
            return
        self.report["gap"] = {
            "primal": est.primal,
            "dual": est.dual,
            "gap": est.gap,
            "y": est.y,
            "truncated": est.truncated,
        }
        if est.gap < -WEAK_DUALITY_TOL:
            self.fail(EXIT_VERIFY, "verification-failure", "weak duality violated")
        if cert.certified and est.gap > GAP_TOL:
            self.fail(EXIT_VERIFY, "verification-failure", f"duality gap {est.gap:.3g} exceeds {GAP_TOL}")


def _exit_code(codes: set) -> int:
    for code in (EXIT_PARSE, EXIT_VERIFY, EXIT_INFEASIBLE, EXIT_NOT_CERTIFIED):
        if code in codes:
            return code
    return EXIT_OK


def run(command: str, path: str, radius=None, seed=None, cells=None, samples=None, tol=None, out=None):
    """Execute one command; returns (report, exit status)."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    report: dict = {"command": command, "problem": os.path.basename(path)}
    try:
        pf = load_problem_file(_resolve(path))
        radius = radius if radius is not None else pf.options.get("radius")
        if radius is not None:
            pf = pf.with_radius(radius)
    except ProblemFileError as exc:
        report.update(status="error", exit_code=EXIT_PARSE, diagnostics=[{"code": exc.code, "line": exc.line, "message": str(exc)}])
        return report, EXIT_PARSE
    except (OSError, UniconvError) as exc:
        code = getattr(exc, "code", "io")
        report.update(status="error", exit_code=EXIT_PARSE, diagnostics=[{"code": code, "message": str(exc)}])
        return report, EXIT_PARSE
    opts = dict(pf.options)
    for key, val in (("seed", seed), ("cells", cells), ("samples", samples), ("tol", tol)):
        if val is not None:
            opts[key] = val
    if "radius" in pf.data["set"]:
        opts["radius"] = pf.data["set"]["radius"]
    r = _Run(pf, opts, out)
    try:
        if command in ("certify", "all"):
            r.certify()
        if command in ("image-check", "all"):
            r.image_check()
        sol = None
        if command in ("solve", "all"):
            sol = r.solve()
        if command in ("gap", "all"):
            r.gap(sol)
    except UniconvError as exc:
        r.fail(EXIT_VERIFY, exc.code, str(exc))
    status = _exit_code(r.codes)
    report.update(r.report)
    report["status"] = {0: "ok", 3: "not-certified", 4: "infeasible", 5: "verification-failure"}[status]
    report["exit_code"] = status
    report["diagnostics"] = r.diagnostics
    report["provenance"] = {
        "options": opts,
        "versions": {
            "uniconv": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernels": kernels.BACKEND,
        },
        "timings": r.timings,
    }
    return report, status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uniconv", description="Certify, rasterize and solve problem files.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("file", help="problem file (bare packaged names such as planar_example.problem also work)")
    ap.add_argument("--radius", type=float, help="override the set radius (ball and intersection sets)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--cells", type=int, help="target raster size for image-check")
    ap.add_argument("--samples", type=int, help="sample pairs for the convex-like check")
    ap.add_argument("--tol", type=float, help="feasibility and multiplier tolerance")
    ap.add_argument("--out", help="write the report here (atomically) instead of stdout")
    ap.add_argument("--format", choices=("text", "json"), default="text")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    report, status = run(
        args.command, args.file, radius=args.radius, seed=args.seed, cells=args.cells,
        samples=args.samples, tol=args.tol, out=args.out,
    )
    text = render(report, args.format)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
