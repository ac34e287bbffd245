"""Run orchestration: config -> residual report (+ meshes) -> exit code.

Exit codes: 0 pass, 1 usage, 2 I/O, 3 integrability failure, 4 numeric
tolerance failure.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import errors as E
from .config import RunConfig, format_lambda
from .export import export_mesh
from .forms import Grid, mc_residual, per_degree_residuals, sampled_family_residual
from .frames import _threads, holonomy_residual, integrate_frame
from .geometry import (frame_geometry, fundamental_forms, metric_scaling_check,
                       project_to_target, split_blocks, vp_membership_residual)
from .loop import ThreeInvolutionSetup, default_samples
from .matrix import Involution
from .systems import (S2_TAU, WaveData, build_flat_s3_family, build_s2_curve_example,
                      build_vacuum_family, clip_domain, default_vacuum_setup, flat_s3_setup,
                      great_circle, reality_report, small_circle, twist_report)

log = logging.getLogger(__name__)

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTEGRABILITY, EXIT_TOLERANCE = 0, 1, 2, 3, 4


class Checks:
    """Ordered list of threshold comparisons."""

    def __init__(self, tolerances):
        self.tol = tolerances
        self.items = []

    def add(self, name, value, tol_key, kind="tolerance", lam=None, gating=True, note=None):
        threshold = self.tol[tol_key]
        item = {"name": name, "value": float(value), "threshold": threshold,
                "passed": bool(value <= threshold), "kind": kind, "gating": gating}
        if lam is not None:
            item["lambda"] = format_lambda(lam)
        if note:
            item["note"] = note
        self.items.append(item)

    def exit_code(self):
        failed = [c for c in self.items if c["gating"] and not c["passed"]]
        if any(c["kind"] == "integrability" for c in failed):
            return EXIT_INTEGRABILITY
        return EXIT_TOLERANCE if failed else EXIT_OK


def _grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.nx, cfg.ny, cfg.x0, cfg.y0, cfg.hx, cfg.hy)


def _unique(lams):
    out = []
    for v in lams:
        if v not in out:
            out.append(v)
    return out


def _map(fn, items):
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _mesh_outputs(cfg, points, stem, lam, write):
    if not write or cfg.mesh_format == "none":
        return []
    out = []
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if cfg.mesh_format in ("obj", "both"):
        out.append(export_mesh(points, cfg.output_dir / f"{stem}.obj",
                               "obj-stereographic", format_lambda(lam)).name)
    if cfg.mesh_format in ("csv", "both"):
        out.append(export_mesh(points, cfg.output_dir / f"{stem}.csv", "csv-4d").name)
    return out


def _run_flat_s3(cfg: RunConfig, checks: Checks, write: bool) -> dict:
    lams = _unique(cfg.lambdas)
    if any(complex(v).imag != 0 for v in lams):
        raise E.ConfigError([(0, "flat-s3 lambdas must be real")])
    lams = [complex(v).real for v in lams]
    grid = _grid(cfg)
    if cfg.phi is not None:
        w = WaveData.from_field(lambda X, Y: cfg.phi({"x": X, "y": Y}), grid)
    else:
        w = WaveData.from_functions(cfg.phi1, cfg.phi2, grid)
    w, grid, rect = clip_domain(w, grid)
    family = build_flat_s3_family(w, grid)

    res = {}
    res["per_degree"] = {str(k): v for k, v in per_degree_residuals(family)}
    for k, v in res["per_degree"].items():
        checks.add(f"per_degree[{k}]", v, "per_degree", "integrability")
    samples = default_samples(family.lo, family.hi, "real-axis")
    res["sampled_family"] = sampled_family_residual(family, samples)
    checks.add("sampled_family", res["sampled_family"], "sampled_family", "integrability")

    setup = flat_s3_setup()
    res["twist"] = twist_report(family, setup)
    res["reality"] = reality_report(family, setup)
    note = "degrees [0, 1] admit no tau-bar twist"
    for t, v in res["twist"].items():
        checks.add(f"twist[{t}]", v, "twist", gating=t != "tau-bar",
                   note=note if t == "tau-bar" else None)
    for r, v in res["reality"].items():
        checks.add(f"reality[{r}]", v, "reality", gating=r != "unit-circle",
                   note=note if r == "unit-circle" else None)

    def one(lam):
        alpha = family.eval(lam)
        frames = integrate_frame(alpha, np.eye(4), group_tag="special-orthogonal",
                                 reorth_every=cfg.reorth_every)
        geo = frame_geometry(frames)
        ff = fundamental_forms(split_blocks(alpha))
        r = {
            "mc": mc_residual(alpha)[1],
            "holonomy": holonomy_residual(alpha, frames),
            "orthogonality": frames.membership_residual(),
            "gauss_curvature_max_abs": geo["gauss_curvature_max_abs"],
            "extrinsic_ratio_defect": float(np.abs(ff.extrinsic_ratio + 1).max()),
            "gauss_equation": ff.residuals["gauss_equation"],
            "gauss_equation_two_way": ff.residuals["gauss_equation_two_way"],
            "structure_equation": ff.residuals["structure_equation"],
            "codazzi": ff.residuals["codazzi"],
            "metric_scaling": metric_scaling_check(family, lams[0], lam),
            "unit_norm": geo["unit_norm"],
        }
        points = project_to_target(frames, -1)
        meshes = _mesh_outputs(cfg, points, f"surface_lambda_{format_lambda(lam)}", lam, write)
        return {"lambda": format_lambda(lam), "residuals": r, "meshes": meshes}

    runs = _map(one, lams)
    for lam, run in zip(lams, runs):
        r = run["residuals"]
        checks.add("mc", r["mc"], "mc", "integrability", lam)
        checks.add("holonomy", r["holonomy"], "holonomy", "integrability", lam)
        checks.add("gauss_equation", r["gauss_equation"], "mc", "integrability", lam)
        checks.add("orthogonality", r["orthogonality"], "orthogonality", lam=lam)
        checks.add("gauss_curvature_max_abs", r["gauss_curvature_max_abs"], "gauss_curvature",
                   lam=lam)
        checks.add("extrinsic_ratio_defect", r["extrinsic_ratio_defect"], "gauss_ratio", lam=lam)
        checks.add("metric_scaling", r["metric_scaling"], "metric_scaling", lam=lam)
    domain = {"nodes": [int(v) for v in rect], "clipped": grid.nx != cfg.nx or grid.ny != cfg.ny,
              "grid": grid.to_dict()}
    return {"domain": domain, "residuals": res, "lambda_runs": runs}


def _run_s2_curve(cfg: RunConfig, checks: Checks, write: bool) -> dict:
    t = cfg.x0 + cfg.hx * np.arange(cfg.nx)
    curve = great_circle() if cfg.curve == "great-circle" else small_circle(cfg.latitude)
    alpha, p_basis, F_exact = build_s2_curve_example(t, curve, rotate=cfg.frame_rotation)
    res = {"vp_membership": vp_membership_residual(alpha, S2_TAU, p_basis)}
    checks.add("vp_membership", res["vp_membership"], "vp_membership")
    frames = integrate_frame(alpha, F_exact[0, 0], group_tag="special-orthogonal",
                             reorth_every=cfg.reorth_every)
    res["orthogonality"] = frames.membership_residual()
    res["frame_closed_form_error"] = float(np.abs(frames.F - F_exact).max())
    checks.add("orthogonality", res["orthogonality"], "orthogonality")
    checks.add("frame_closed_form_error", res["frame_closed_form_error"], "closed_form",
               gating=False, note="second-order stepping; exact only for constant curvature")
    points = project_to_target(frames, -1)
    meshes = _mesh_outputs(cfg, points, f"curve_{cfg.curve}", 1.0, write)
    return {"domain": {"grid": alpha.grid.to_dict()}, "residuals": res,
            "lambda_runs": [], "meshes": meshes}


def _parse_matrix(m, n):
    a = np.asarray([[complex(*v) if isinstance(v, list) else complex(v) for v in row]
                    for row in m])
    if a.shape != (n, n):
        raise E.InvalidInputError(f"seed matrix has shape {a.shape}, expected {(n, n)}")
    return a.real.copy() if np.all(a.imag == 0) else a


def _parse_involution(spec, n, name):
    kind = spec.get("kind")
    C = _parse_matrix(spec["conjugator"], n) if "conjugator" in spec else None
    return Involution(kind, C, name)


def load_seeds(path):
    """Read a vacuum seeds JSON file: ``(setup, A_seeds, B_seeds)``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    n = int(data.get("dimension", 4))
    if "involutions" in data:
        inv = data["involutions"]
        setup = ThreeInvolutionSetup(
            _parse_involution(inv.get("rho", {"kind": "complex-conjugation"}), n, "rho"),
            _parse_involution(inv["sigma_hat"], n, "sigma-hat"),
            _parse_involution(inv["tau_bar"], n, "tau-bar"), n)
    else:
        setup = default_vacuum_setup()
    seeds = []
    for key in ("A", "B"):
        seeds.append({int(k): _parse_matrix(v, n) for k, v in data.get(key, {}).items()})
    return setup, seeds[0], seeds[1]


def seeds_json(setup: ThreeInvolutionSetup, A: dict, B: dict) -> str:
    def mat(M):
        M = np.asarray(M)
        if np.iscomplexobj(M):
            return [[[float(v.real), float(v.imag)] for v in row] for row in M]
        return [[float(v) for v in row] for row in M]

    def inv(i):
        d = {"kind": i.kind}
        if i.conjugator is not None:
            d["conjugator"] = mat(i.conjugator)
        return d

    data = {"dimension": setup.n,
            "involutions": {"rho": inv(setup.rho), "sigma_hat": inv(setup.sigma_hat),
                            "tau_bar": inv(setup.tau_bar)},
            "A": {str(k): mat(v) for k, v in sorted(A.items())},
            "B": {str(k): mat(v) for k, v in sorted(B.items())}}
    return json.dumps(data, indent=2) + "\n"


def _run_vacuum(cfg: RunConfig, checks: Checks, write: bool) -> dict:
    setup, A, B = load_seeds(cfg.seeds)
    grid = _grid(cfg)
    fam = build_vacuum_family(setup, A, B, grid)
    family = fam.form
    res = {"twist": twist_report(family, setup), "reality": reality_report(family, setup)}
    for t, v in res["twist"].items():
        checks.add(f"twist[{t}]", v, "twist")
    for r, v in res["reality"].items():
        checks.add(f"reality[{r}]", v, "reality")
    res["per_degree"] = {str(k): v for k, v in per_degree_residuals(family)}
    for k, v in res["per_degree"].items():
        checks.add(f"per_degree[{k}]", v, "per_degree", "integrability")
    res["sampled_family"] = sampled_family_residual(family, default_samples(-1, 1))
    checks.add("sampled_family", res["sampled_family"], "sampled_family", "integrability")

    lams = _unique(cfg.lambdas)

    def one(lam):
        alpha = family.eval(lam)
        frames = integrate_frame(alpha, np.eye(setup.n), group_tag="general")
        r = {"mc": mc_residual(alpha)[1],
             "holonomy": holonomy_residual(alpha, frames),
             "closed_form": float(np.abs(frames.F - fam.closed_form(lam)).max())}
        return {"lambda": format_lambda(lam), "residuals": r, "meshes": []}

    runs = _map(one, lams)
    for lam, run in zip(lams, runs):
        r = run["residuals"]
        checks.add("mc", r["mc"], "mc", "integrability", lam)
        checks.add("holonomy", r["holonomy"], "holonomy", "integrability", lam)
        checks.add("closed_form", r["closed_form"], "closed_form", lam=lam)
    return {"domain": {"grid": grid.to_dict()}, "residuals": res, "lambda_runs": runs}


_RUNNERS = {"flat-s3": _run_flat_s3, "s2-curve": _run_s2_curve, "vacuum": _run_vacuum}


def _error_code(exc) -> tuple:
    if isinstance(exc, E.ConfigError):
        return EXIT_USAGE, "config"
    if isinstance(exc, FileNotFoundError):
        return EXIT_IO, "file-not-found"
    if isinstance(exc, (OSError, json.JSONDecodeError, KeyError)):
        return EXIT_IO, "io"
    if isinstance(exc, E.NotAVacuumError):
        return EXIT_INTEGRABILITY, "not-a-vacuum"
    if isinstance(exc, E.TwistError):
        return EXIT_TOLERANCE, "twist"
    return EXIT_TOLERANCE, type(exc).__name__


def run(cfg: RunConfig, write_meshes: bool = True, write_report: bool = True):
    """Execute a run; returns ``(exit_code, report)`` and writes report.json."""
    checks = Checks(cfg.tolerances)
    report = {"schema": SCHEMA, "tool": "loopgeom", "system": cfg.system, "config": cfg.echo()}
    try:
        body = _RUNNERS[cfg.system](cfg, checks, write_meshes)
    except (E.LoopGeomError, OSError, json.JSONDecodeError, KeyError) as exc:
        code, kind = _error_code(exc)
        report.update({"status": "error", "exit_code": code,
                       "error": {"kind": kind, "message": str(exc)}})
        if isinstance(exc, E.TwistError) and exc.involution:
            report["error"]["involution"] = exc.involution
    else:
        report.update(body)
        code = checks.exit_code()
        report["checks"] = checks.items
        report["failed"] = [c["name"] + (f"@{c['lambda']}" if "lambda" in c else "")
                            for c in checks.items if c["gating"] and not c["passed"]]
        report["status"] = "pass" if code == EXIT_OK else "fail"
        report["exit_code"] = code
    if write_report:
        try:
            cfg.output_dir.mkdir(parents=True, exist_ok=True)
            with open(cfg.output_dir / cfg.report, "w", newline="\n") as fh:
                fh.write(dumps(report))
        except OSError as exc:
            log.error("cannot write report: %s", exc)
            return EXIT_IO, report
    return code, report


def dumps(report) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"
