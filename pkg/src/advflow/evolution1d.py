"""Boundary evolution in one dimension.

Each finite endpoint of the decision set moves independently with the
adversarial strength ``eps``.  Right endpoints ``b`` keep the balance
``w1 rho1(b - eps) = w0 rho0(b + eps)`` and left endpoints ``a`` keep
``w1 rho1(a + eps) = w0 rho0(a - eps)``.  Differentiating the balance gives an
explicit ODE which is integrated with classical RK4; after every step one
Newton correction pulls the endpoint back onto the balance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .classifier1d import IntervalUnion, _require_1d
from .density import ClassificationModel
from .errors import DegeneracyError, EvolutionError

Side = Literal["left", "right"]

DENOMINATOR_SMALL = "denominator_small"
INTERVAL_COLLISION = "interval_collision"
RESIDUAL_BLOWUP = "residual_blowup"


@dataclass(frozen=True)
class Thresholds:
    """Event detection knobs.

    ``denominator_rel`` is relative to the endpoint's derivative scale
    ``|w0 rho0'| + |w1 rho1'|`` measured at its starting position.
    """

    denominator_rel: float = 1e-8
    residual_tol: float = 1e-6


def _terms(model: ClassificationModel, x: float, side: Side, eps: float) -> tuple[float, float]:
    # (outer, inner) derivative terms so that velocity = -(outer + inner) / (outer - inner)
    if side == "right":
        return float(model.grad_joint0(x + eps)), float(model.grad_joint1(x - eps))
    return float(model.grad_joint1(x + eps)), float(model.grad_joint0(x - eps))


def denominator(model: ClassificationModel, x: float, side: Side, eps: float) -> float:
    """Denominator of the endpoint velocity; positive under the transversality assumption."""
    p, q = _terms(model, x, side, eps)
    return p - q


def _velocity(model, x, side, eps, threshold):
    p, q = _terms(model, x, side, eps)
    den = p - q
    scale = threshold if threshold is not None else 1e-8 * (abs(p) + abs(q))
    if den == 0.0 or abs(den) <= scale:
        raise DegeneracyError(f"{side} endpoint velocity denominator {den:.3e} at x={x!r}, eps={eps!r}", den)
    return -(p + q) / den


def velocity_right(model: ClassificationModel, b: float, eps: float, threshold: float | None = None) -> float:
    """``db/deps = -(w0 rho0'(b+eps) + w1 rho1'(b-eps)) / (w0 rho0'(b+eps) - w1 rho1'(b-eps))``.

    Raises :class:`DegeneracyError` when ``|denominator| <= threshold`` (default
    1e-8 times the local derivative scale).
    """
    return _velocity(model, b, "right", eps, threshold)


def velocity_left(model: ClassificationModel, a: float, eps: float, threshold: float | None = None) -> float:
    """``da/deps = -(w1 rho1'(a+eps) + w0 rho0'(a-eps)) / (w1 rho1'(a+eps) - w0 rho0'(a-eps))``."""
    return _velocity(model, a, "left", eps, threshold)


def velocity(model: ClassificationModel, x: float, side: Side, eps: float, threshold: float | None = None) -> float:
    return _velocity(model, x, side, eps, threshold)


def necessary_residual(model: ClassificationModel, endpoint: float, side: Side, eps: float) -> float:
    """Signed defect of the endpoint balance; zero at exact critical points."""
    if not math.isfinite(endpoint):
        raise ValueError("residual is only defined at finite endpoints")
    if side == "right":
        return float(model.joint1(endpoint - eps) - model.joint0(endpoint + eps))
    return float(model.joint1(endpoint + eps) - model.joint0(endpoint - eps))


def _residual_slope(model, x, side, eps) -> float:
    # d(residual)/dx
    if side == "right":
        return float(model.grad_joint1(x - eps) - model.grad_joint0(x + eps))
    return float(model.grad_joint1(x + eps) - model.grad_joint0(x - eps))


def newton_correct(model: ClassificationModel, x: float, side: Side, eps: float, iters: int = 1) -> float:
    for _ in range(iters):
        slope = _residual_slope(model, x, side, eps)
        if slope == 0.0:
            break
        x = x - necessary_residual(model, x, side, eps) / slope
    return x


def rk4_step(f, t: float, y: float, h: float) -> float:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass(frozen=True)
class BoundarySnapshot:
    eps: float
    lefts: tuple[float, ...]
    rights: tuple[float, ...]
    left_residuals: tuple[float, ...]
    right_residuals: tuple[float, ...]

    @classmethod
    def from_set(cls, model: ClassificationModel, A: IntervalUnion, eps: float) -> "BoundarySnapshot":
        lefts, rights = tuple(A.lefts), tuple(A.rights)
        return cls(eps, lefts, rights, _residuals(model, lefts, "left", eps), _residuals(model, rights, "right", eps))

    @property
    def residuals(self) -> list[float]:
        return [r for r in self.left_residuals + self.right_residuals if not math.isnan(r)]

    @property
    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals), default=0.0)

    def as_set(self) -> IntervalUnion:
        return IntervalUnion(tuple(zip(self.lefts, self.rights)))

    def endpoints(self):
        """Yield ``(interval_index, side, position, residual)`` in boundary order."""
        for i, (a, b) in enumerate(zip(self.lefts, self.rights)):
            yield i, "left", a, self.left_residuals[i]
            yield i, "right", b, self.right_residuals[i]


def _residuals(model, xs, side, eps) -> tuple[float, ...]:
    return tuple(necessary_residual(model, x, side, eps) if math.isfinite(x) else math.nan for x in xs)


@dataclass(frozen=True)
class EvolutionEvent:
    eps: float
    kind: str
    detail: str
    endpoint_index: int = -1
    side: str = ""


@dataclass
class BoundaryTrajectory:
    snapshots: list[BoundarySnapshot] = field(default_factory=list)
    events: list[EvolutionEvent] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return not self.events

    @property
    def eps(self) -> np.ndarray:
        return np.array([s.eps for s in self.snapshots])

    def positions(self, index: int, side: Side) -> np.ndarray:
        attr = "lefts" if side == "left" else "rights"
        return np.array([getattr(s, attr)[index] for s in self.snapshots])

    def at(self, eps: float) -> BoundarySnapshot:
        """Snapshot whose eps is closest to ``eps``."""
        k = int(np.argmin(np.abs(self.eps - eps)))
        return self.snapshots[k]

    def rows(self) -> list[dict]:
        out = []
        for s in self.snapshots:
            for i, side, x, r in s.endpoints():
                out.append(
                    {"eps": s.eps, "endpoint_index": i, "side": side, "position": x,
                     "residual": "" if math.isnan(r) else r, "event_flag": ""}
                )
        for e in self.events:
            out.append(
                {"eps": e.eps, "endpoint_index": e.endpoint_index, "side": e.side, "position": "",
                 "residual": "", "event_flag": e.kind}
            )
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=TRAJECTORY_COLUMNS)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: _fmt(v) for k, v in row.items()})


TRAJECTORY_COLUMNS = ["eps", "endpoint_index", "side", "position", "residual", "event_flag"]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_trajectory_csv(path: str | Path) -> list[dict]:
    """Parse a trajectory CSV back into typed rows."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_COLUMNS:
            raise ValueError(f"unexpected columns {reader.fieldnames}")
        for row in reader:
            rows.append(
                {
                    "eps": float(row["eps"]),
                    "endpoint_index": int(row["endpoint_index"]),
                    "side": row["side"],
                    "position": float(row["position"]) if row["position"] else None,
                    "residual": float(row["residual"]) if row["residual"] else None,
                    "event_flag": row["event_flag"],
                }
            )
    return rows


def derivative_scales(model: ClassificationModel, snapshot: BoundarySnapshot) -> dict[tuple[int, str], float]:
    scales = {}
    for i, side, x, _ in snapshot.endpoints():
        if math.isfinite(x):
            p, q = _terms(model, x, side, snapshot.eps)
            scales[(i, side)] = abs(p) + abs(q)
    return scales


def detect_events(
    model: ClassificationModel,
    snapshot: BoundarySnapshot,
    thresholds: Thresholds = Thresholds(),
    scales: dict[tuple[int, str], float] | None = None,
) -> list[EvolutionEvent]:
    """Numeric guards that end an evolution.

    * ``denominator_small``: a velocity denominator dropped to (or through) the
      relative threshold.  The check is signed, so a sign flip between steps
      is caught too.
    * ``interval_collision``: neighbouring intervals meet after dilation by
      ``eps`` or an interval vanishes after erosion by ``eps``.
    * ``residual_blowup``: an endpoint balance defect exceeds the tolerance.
    """
    eps = snapshot.eps
    if scales is None:
        scales = derivative_scales(model, snapshot)
    events = []
    for i, side, x, r in snapshot.endpoints():
        if not math.isfinite(x):
            continue
        den = denominator(model, x, side, eps)
        thr = thresholds.denominator_rel * scales.get((i, side), 0.0)
        if den <= thr:
            events.append(EvolutionEvent(eps, DENOMINATOR_SMALL, f"denominator {den:.3e} <= {thr:.3e}", i, side))
        if abs(r) > thresholds.residual_tol:
            events.append(EvolutionEvent(eps, RESIDUAL_BLOWUP, f"residual {r:.3e}", i, side))
    for i, (a, b) in enumerate(zip(snapshot.lefts, snapshot.rights)):
        if b - a <= 2 * eps:
            events.append(EvolutionEvent(eps, INTERVAL_COLLISION, f"interval {i} shorter than 2*eps", i, ""))
        if i + 1 < len(snapshot.lefts) and b + eps >= snapshot.lefts[i + 1] - eps:
            events.append(EvolutionEvent(eps, INTERVAL_COLLISION, f"intervals {i} and {i + 1} meet", i, "right"))
    return events


def evolve(
    model: ClassificationModel,
    initial: IntervalUnion,
    eps_max: float,
    step: float = 1e-3,
    thresholds: Thresholds = Thresholds(),
    newton_iters: int = 1,
    project: bool = True,
) -> BoundaryTrajectory:
    """Track the critical decision set from ``eps = 0`` to ``eps_max``.

    ``initial`` is normally the Bayes set.  Infinite endpoints stay infinite.
    The eps grid is uniform with spacing at most ``step`` and ends exactly at
    ``eps_max``.  Integration halts at the first event, which is recorded in
    the returned trajectory; the offending step is not accepted.

    ``project=False`` skips the Newton correction (used for order studies).
    """
    _require_1d(model)
    if eps_max <= 0 or step <= 0:
        raise ValueError("eps_max and step must be positive")
    start = BoundarySnapshot.from_set(model, initial, 0.0)
    if start.max_residual > thresholds.residual_tol:
        raise EvolutionError(f"initial set is not critical: residual {start.max_residual:.3e}")
    scales = derivative_scales(model, start)
    first = detect_events(model, start, thresholds, scales)
    if first:
        raise EvolutionError(f"event before the first step: {first[0].kind} ({first[0].detail})")

    n = max(int(math.ceil(eps_max / step - 1e-9)), 1)
    grid = np.linspace(0.0, eps_max, n + 1)
    traj = BoundaryTrajectory([start], [])
    cur = start
    for k in range(1, n + 1):
        e0, e1 = float(grid[k - 1]), float(grid[k])
        h = e1 - e0
        new = {"left": list(cur.lefts), "right": list(cur.rights)}
        try:
            for i, side, x, _ in cur.endpoints():
                if not math.isfinite(x):
                    continue
                thr = thresholds.denominator_rel * scales[(i, side)]
                f = lambda t, y, side=side, thr=thr: _velocity(model, y, side, t, thr)
                y = rk4_step(f, e0, x, h)
                if project:
                    y = newton_correct(model, y, side, e1, newton_iters)
                new[side][i] = y
        except DegeneracyError as exc:
            traj.events.append(EvolutionEvent(e1, DENOMINATOR_SMALL, str(exc), i, side))
            break
        lefts, rights = tuple(new["left"]), tuple(new["right"])
        snap = BoundarySnapshot(
            e1, lefts, rights, _residuals(model, lefts, "left", e1), _residuals(model, rights, "right", e1)
        )
        ordered = [v for pair in zip(lefts, rights) for v in pair]
        events = detect_events(model, snap, thresholds if project else Thresholds(thresholds.denominator_rel, math.inf), scales)
        if any(not a < b for a, b in zip(ordered[:-1], ordered[1:])):
            events.append(EvolutionEvent(e1, INTERVAL_COLLISION, "endpoint ordering lost"))
        if events:
            traj.events.extend(events)
            break
        traj.snapshots.append(snap)
        cur = snap
    return traj


def evolve_from_bayes(model: ClassificationModel, eps_max: float, step: float = 1e-3, **kwargs) -> BoundaryTrajectory:
    from .classifier1d import bayes_set

    return evolve(model, bayes_set(model), eps_max, step, **kwargs)
