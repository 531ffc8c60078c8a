"""Command-line driver.

Every run reads a JSON config (model plus numeric knobs), applies command-line
overrides and writes CSV/JSON artifacts into the output directory.

Exit codes: 0 success, 2 config error, 3 evolution event, 4 certification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier1d import bayes_set, check_assumptions
from .density import ClassificationModel
from .errors import CertificateError, CurveError, DegenerateModelError, DimensionError, EvolutionError
from .evolution1d import Thresholds, evolve
from .geometry2d import (
    Curve2D,
    RadialModel,
    bayes_contours,
    evolve_curve,
    hausdorff_to_circle,
    radial_oracle,
)
from .otcert import DualReport, build_certificate, duality_report, verify_certificate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVENT = 3
EXIT_CERT = 4

COMMANDS = ("bayes", "evolve1d", "certify", "evolve2d", "radial")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; built from JSON and CLI overrides.

    ``model`` is either a Gaussian-mixture model or the radial disc model
    (``{"type": "radial"}``).  ``grid`` is the transport grid size for 1D
    commands and the marching-squares lattice size for ``evolve2d``.
    """

    model: ClassificationModel | RadialModel
    command: str | None = None
    eps_max: float = 0.5
    step: float = 1e-3
    grid: int = 4000
    window: tuple[float, ...] | None = None
    output_dir: Path = Path("out")
    thresholds: Thresholds = Thresholds()
    certify_eps: tuple[float, ...] = ()
    snapshots: tuple[float, ...] | None = None
    vertices: int = 256
    r0: float = 0.5
    d: int = 2
    ends: str = "free"

    def __post_init__(self):
        if not self.eps_max > 0:
            raise ConfigError("eps_max must be positive")
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if self.grid < 2:
            raise ConfigError("grid must be at least 2")
        if any(e < 0 for e in self.certify_eps):
            raise ConfigError("certify_eps values must be nonnegative")
        if self.ends not in ("free", "fixed"):
            raise ConfigError("ends must be 'free' or 'fixed'")

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "ExperimentConfig":
        if "model" not in data:
            raise ConfigError("config has no 'model' section")
        try:
            model = _model_from_dict(data["model"])
            kw = {}
            for key in ("command", "eps_max", "step", "grid", "vertices", "r0", "d", "ends"):
                if key in data:
                    kw[key] = data[key]
            for key in ("eps_max", "step", "r0"):
                if key in kw:
                    kw[key] = float(kw[key])
            for key in ("grid", "vertices", "d"):
                if key in kw:
                    kw[key] = int(kw[key])
            if "window" in data:
                kw["window"] = tuple(float(v) for v in data["window"])
            if "output_dir" in data:
                out = Path(data["output_dir"])
                kw["output_dir"] = out if out.is_absolute() or base is None else base / out
            if "thresholds" in data:
                kw["thresholds"] = Thresholds(**data["thresholds"])
            if "certify_eps" in data:
                kw["certify_eps"] = tuple(float(e) for e in data["certify_eps"])
            if "snapshots" in data:
                kw["snapshots"] = tuple(float(e) for e in data["snapshots"])
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        return cls(model, **kw)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


def _model_from_dict(d: dict):
    kind = d.get("type", "mixture")
    if kind == "radial":
        return RadialModel()
    if kind != "mixture":
        raise ConfigError(f"unknown model type {kind!r}")
    return ClassificationModel.from_dict(d)


# ----------------------------------------------------------------------------
# Commands


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _need_dim(cfg: ExperimentConfig, d: int) -> None:
    if cfg.model.dimension != d:
        raise ConfigError(f"command needs a {d}D model, config has dimension {cfg.model.dimension}")


def run_bayes(cfg: ExperimentConfig, log=print) -> int:
    out = cfg.output_dir
    if cfg.model.dimension == 1:
        A = bayes_set(cfg.model, search_window=cfg.window)
        rep = check_assumptions(cfg.model)
        _write_json(out / "bayes.json", {"bayes_set": A.to_json(), "assumptions": rep.to_dict()})
        log(f"bayes set {A.to_json()}")
        return EXIT_OK
    curves = _contours(cfg)
    data = [{"closed": c.closed, "vertices": c.vertices.tolist()} for c in curves]
    _write_json(out / "bayes_contours.json", {"polylines": data})
    log(f"{len(curves)} zero contour(s); longest has {len(curves[0])} vertices, length {curves[0].length:.6g}")
    return EXIT_OK


def _trajectory(cfg: ExperimentConfig, eps_max: float):
    A = bayes_set(cfg.model, search_window=cfg.window)
    return evolve(cfg.model, A, eps_max, cfg.step, cfg.thresholds)


def _dual_rows(cfg, traj, eps_values) -> list[DualReport]:
    rows = []
    for e in eps_values:
        snap = traj.at(e)
        if abs(snap.eps - e) > 0.5 * cfg.step:
            continue
        rows.append(duality_report(cfg.model, snap.as_set(), snap.eps, cfg.grid))
    return rows


def _write_dual(path: Path, rows: Sequence[DualReport]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(DualReport.CSV_COLUMNS) + "\n")
        for r in rows:
            fh.write(r.csv_row() + "\n")


def run_evolve1d(cfg: ExperimentConfig, certify: bool = False, log=print) -> int:
    _need_dim(cfg, 1)
    out = cfg.output_dir
    rep = check_assumptions(cfg.model)
    _write_json(out / "assumptions.json", rep.to_dict())
    traj = _trajectory(cfg, cfg.eps_max)
    traj.to_csv(out / "trajectory.csv")
    last = traj.snapshots[-1]
    log(f"evolved to eps={last.eps:.6g}: lefts={list(last.lefts)} rights={list(last.rights)}")
    if certify:
        eps_values = cfg.certify_eps or tuple(np.linspace(0, last.eps, 6)[1:])
        rows = _dual_rows(cfg, traj, eps_values)
        _write_dual(out / "duality.csv", rows)
        for r in rows:
            log(f"eps={r.eps:.6g} primal={r.primal_risk:.8f} implied={r.implied_risk:.8f} gap={r.gap:.3e}")
    for e in traj.events:
        log(f"event at eps={e.eps:.6g}: {e.kind} ({e.detail})")
    return EXIT_OK if traj.completed else EXIT_EVENT


def run_certify(cfg: ExperimentConfig, log=print) -> int:
    _need_dim(cfg, 1)
    out = cfg.output_dir
    eps_values = cfg.certify_eps or (cfg.eps_max,)
    traj = _trajectory(cfg, max(max(eps_values), cfg.step))
    status = EXIT_OK
    rows = []
    for e in eps_values:
        snap = traj.at(e)
        if abs(snap.eps - e) > 0.5 * cfg.step:
            log(f"eps={e:.6g}: FAIL evolution halted at eps={snap.eps:.6g}")
            status = max(status, EXIT_EVENT)
            continue
        tag = f"{e:.6g}"
        rows.append(duality_report(cfg.model, snap.as_set(), snap.eps, cfg.grid))
        try:
            cert = build_certificate(cfg.model, snap)
        except CertificateError as exc:
            _write_json(out / f"certificate_eps{tag}.json", {"eps": e, "error": str(exc)})
            log(f"eps={tag}: FAIL construction: {exc}")
            status = EXIT_CERT
            continue
        verdict = verify_certificate(cfg.model, cert, snap)
        cert.to_json(out / f"certificate_eps{tag}.json", verdict)
        word = "PASS" if verdict.passed else "FAIL"
        log(
            f"eps={tag}: {word} identity defect {verdict.identity_defect:.3e}, "
            f"max displacement {cert.max_displacement:.6g} (2 eps = {2 * e:.6g})"
            + ("" if verdict.passed else f"; {'; '.join(verdict.failures)}")
        )
        if not verdict.passed:
            status = EXIT_CERT
    _write_dual(out / "duality.csv", rows)
    return status


def _contours(cfg: ExperimentConfig) -> list[Curve2D]:
    window = cfg.window or (-3.0, 3.0, -3.0, 3.0)
    if len(window) != 4:
        raise ConfigError("2D window must be (xmin, xmax, ymin, ymax)")
    grid = min(cfg.grid, 2001)
    curves = bayes_contours(cfg.model, window=window, grid=grid)
    if not curves:
        raise DegenerateModelError("no zero contour of the class gap inside the window")
    return curves


def run_evolve2d(cfg: ExperimentConfig, log=print) -> int:
    _need_dim(cfg, 2)
    out = cfg.output_dir
    radial = isinstance(cfg.model, RadialModel)
    if radial:
        curve = Curve2D.circle(cfg.r0, cfg.vertices)
    else:
        curve = _contours(cfg)[0]
    snaps = cfg.snapshots if cfg.snapshots is not None else tuple(np.linspace(0, cfg.eps_max, 5))
    traj = evolve_curve(cfg.model, curve, cfg.eps_max, cfg.step, snapshots=snaps, ends=cfg.ends)
    traj.to_csv(out / "curves.csv")
    traj.to_json(out / "curves.json")
    summary = {"eps": traj.eps.tolist(), "length": traj.lengths().tolist(), "vertices": [len(s.curve) for s in traj.snapshots]}
    if radial:
        orc = radial_oracle(2, cfg.r0, cfg.eps_max, min(cfg.step, 1e-4))
        summary["oracle_radius"] = [float(orc(e)) for e in traj.eps]
        summary["hausdorff"] = [hausdorff_to_circle(s.curve, float(orc(s.eps))) for s in traj.snapshots]
    summary["events"] = [{"eps": e.eps, "kind": e.kind, "detail": e.detail} for e in traj.events]
    _write_json(out / "summary.json", summary)
    for s in traj.snapshots:
        log(f"eps={s.eps:.6g}: {len(s.curve)} vertices, length {s.curve.length:.6g}, max |residual| {np.max(np.abs(s.residual)):.3e}")
    for e in traj.events:
        log(f"event at eps={e.eps:.6g}: {e.kind} ({e.detail})")
    return EXIT_OK if traj.completed else EXIT_EVENT


def run_radial(cfg: ExperimentConfig, log=print) -> int:
    if not cfg.r0 > cfg.eps_max:
        raise ConfigError("r0 must exceed eps_max")
    sol = radial_oracle(cfg.d, cfg.r0, cfg.eps_max, cfg.step)
    with open(cfg.output_dir / "radial.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        exact = cfg.d == 2 and cfg.r0 == 0.5
        w.writerow(["eps", "r"] + (["r_closed_form"] if exact else []))
        for e, r in zip(sol.eps, sol.r):
            w.writerow([repr(float(e)), repr(float(r))] + ([repr(RadialModel.critical_radius(float(e)))] if exact else []))
    log(f"d={cfg.d}: r(0)={sol.r[0]:.6g}, r({sol.eps[-1]:.6g})={sol.r[-1]:.10g}")
    return EXIT_OK


# ----------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advflow", description="Adversarially robust decision boundaries.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("bayes", "Bayes set (1D) or zero contours (2D)"),
        ("evolve1d", "evolve 1D endpoints from the Bayes set"),
        ("certify", "build and verify transport certificates"),
        ("evolve2d", "front-track a planar boundary"),
        ("radial", "radial closed-form oracle"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, type=Path, help="experiment JSON")
        s.add_argument("--eps-max", type=float, dest="eps_max")
        s.add_argument("--step", type=float)
        s.add_argument("--grid", type=int)
        s.add_argument("--out", type=Path, help="output directory")
        s.add_argument("--certify", action="store_true", help="also write duality reports (evolve1d)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    log = lambda msg: print(msg, flush=True)
    try:
        cfg = ExperimentConfig.load(args.config)
        over = {k: getattr(args, k) for k in ("eps_max", "step", "grid") if getattr(args, k) is not None}
        if args.out is not None:
            over["output_dir"] = args.out
        cfg = replace(cfg, command=args.command, **over)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "bayes":
            return run_bayes(cfg, log)
        if args.command == "evolve1d":
            return run_evolve1d(cfg, args.certify, log)
        if args.command == "certify":
            return run_certify(cfg, log)
        if args.command == "evolve2d":
            return run_evolve2d(cfg, log)
        return run_radial(cfg, log)
    except (ConfigError, DimensionError, DegenerateModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvolutionError, CurveError) as exc:
        print(f"evolution error: {exc}", file=sys.stderr)
        return EXIT_EVENT


if __name__ == "__main__":
    sys.exit(main())
