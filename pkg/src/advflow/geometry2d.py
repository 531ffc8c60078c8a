"""Planar decision-boundary evolution by front tracking.

A boundary is a polyline (closed, or open with free ends) oriented so that the
decision set ``A`` lies to the left of traversal; the outward normal points to
the right.  Normals are edge-normal bisectors and curvature is the signed
circumscribed-circle (Menger) curvature of consecutive vertex triples,
positive where the boundary bends around ``A`` as for a convex set.

Evolution in ``eps`` is a predictor-corrector scheme: an explicit step of the
first-order normal speed

    v = -(grad rho . nu + rho kappa) / ((w0 grad rho0 - w1 grad rho1) . nu)

followed by arclength resampling and a Newton projection of every vertex onto
the exact necessary condition

    w0 rho0(x + eps nu) |1 + eps kappa| = w1 rho1(x - eps nu) |1 - eps kappa|.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .density import ClassificationModel
from .errors import CurveError, DegeneracyError, DimensionError
from .evolution1d import rk4_step

Ends = Literal["free", "fixed"]

SELF_INTERSECTION = "self_intersection"
TRANSVERSALITY = "transversality"
PROJECTION_FAILED = "projection_failed"

MIN_VERTICES = 8


# ----------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class RadialModel:
    """Uniform law on the unit disc split by radius.

    ``w0 rho0(x) = |x| / pi`` and ``w1 rho1(x) = (1 - |x|) / pi`` inside the disc
    (so ``w0 = 2/3``, ``w1 = 1/3``) and zero outside.  The Bayes boundary is
    the circle ``|x| = 1/2`` and, since ``rho`` is constant, only curvature
    drives the boundary.
    """

    @property
    def dimension(self) -> int:
        return 2

    @property
    def w0(self) -> float:
        return 2.0 / 3.0

    @property
    def w1(self) -> float:
        return 1.0 / 3.0

    @staticmethod
    def _radius(x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != 2:
            raise DimensionError(f"expected points with last axis 2, got shape {x.shape}")
        return np.linalg.norm(x, axis=-1)

    def joint0(self, x) -> np.ndarray:
        r = self._radius(x)
        return np.where(r < 1.0, r / math.pi, 0.0)

    def joint1(self, x) -> np.ndarray:
        r = self._radius(x)
        return np.where(r < 1.0, (1.0 - r) / math.pi, 0.0)

    def _unit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = self._radius(x)[..., None]
        inside = r < 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(inside & (r > 0), x / r, 0.0)
        return u / math.pi

    def grad_joint0(self, x) -> np.ndarray:
        return self._unit(x)

    def grad_joint1(self, x) -> np.ndarray:
        return -self._unit(x)

    def marginal(self, x) -> np.ndarray:
        return self.joint0(x) + self.joint1(x)

    def marginal_grad(self, x) -> np.ndarray:
        return self.grad_joint0(x) + self.grad_joint1(x)

    def class_gap(self, x) -> np.ndarray:
        return self.joint1(x) - self.joint0(x)

    @staticmethod
    def critical_radius(eps: float) -> float:
        """Radius of the critical disc: root of ``2 r^2 - r + eps + 2 eps^2 = 0`` near 1/2."""
        disc = 1.0 - 8.0 * eps - 16.0 * eps**2
        if disc < 0:
            raise ValueError(f"no critical circle for eps={eps!r}")
        return 0.25 * (1.0 + math.sqrt(disc))


Model2D = ClassificationModel | RadialModel


def _require_2d(model) -> None:
    if model.dimension != 2:
        raise DimensionError(f"expected a 2D model, got dimension {model.dimension}")


# ----------------------------------------------------------------------------
# Curves


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _right_normal(e: np.ndarray) -> np.ndarray:
    n = np.stack([e[..., 1], -e[..., 0]], axis=-1)
    return n / np.linalg.norm(e, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Curve2D:
    """Polyline boundary with ``A`` on the left of traversal.

    A closed curve around ``A`` is counterclockwise.  The last vertex of a
    closed curve is not repeated.  ``resample_target`` is the arclength
    spacing used by :meth:`resample` (default: current mean spacing).
    """

    vertices: np.ndarray
    closed: bool = True
    resample_target: float | None = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise DimensionError(f"vertices must have shape (n, 2), got {v.shape}")
        if self.closed and len(v) > 1 and np.allclose(v[0], v[-1], rtol=0, atol=1e-14):
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("a curve needs at least three vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def circle(cls, radius: float, n: int, center: Sequence[float] = (0.0, 0.0), phase: float = 0.0) -> "Curve2D":
        th = phase + 2 * np.pi * np.arange(n) / n
        pts = np.asarray(center, dtype=float) + radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        return cls(pts, True)

    @classmethod
    def ellipse(cls, a: float, b: float, n: int) -> "Curve2D":
        th = 2 * np.pi * np.arange(n) / n
        return cls(np.stack([a * np.cos(th), b * np.sin(th)], axis=1), True)

    def with_vertices(self, v: np.ndarray) -> "Curve2D":
        return Curve2D(v, self.closed, self.resample_target)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> np.ndarray:
        v = self.vertices
        if self.closed:
            return np.roll(v, -1, axis=0) - v
        return v[1:] - v[:-1]

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    @property
    def length(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for counterclockwise closed curves."""
        v = self.vertices
        return 0.5 * float(np.sum(_cross(v, np.roll(v, -1, axis=0))))

    @property
    def mean_spacing(self) -> float:
        return float(self.edge_lengths.mean())

    def reversed(self) -> "Curve2D":
        return self.with_vertices(self.vertices[::-1])

    def is_simple(self) -> bool:
        """True when no two non-adjacent edges cross (segment-pair sweep)."""
        v = self.vertices
        p = v
        q = v + self.edges if self.closed else v[1:]
        p = p[: len(q)]
        m = len(q)
        i, j = np.triu_indices(m, k=2)
        if self.closed:
            keep = ~((i == 0) & (j == m - 1))
            i, j = i[keep], j[keep]
        d1 = _cross(q[i] - p[i], p[j] - p[i])
        d2 = _cross(q[i] - p[i], q[j] - p[i])
        d3 = _cross(q[j] - p[j], p[i] - p[j])
        d4 = _cross(q[j] - p[j], q[i] - p[j])
        return not bool(np.any((d1 * d2 < 0) & (d3 * d4 < 0)))

    def resample(self, target: float | None = None, n: int | None = None) -> "Curve2D":
        """Uniform-arclength resampling along a cubic spline through the vertices.

        Closed curves use a periodic spline; open curves keep their end points.
        """
        v = self.vertices
        if self.closed:
            pts = np.vstack([v, v[:1]])
        else:
            pts = v
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
        total = s[-1]
        if target is None:
            target = self.resample_target or total / (len(pts) - 1)
        if n is None:
            n = max(int(round(total / target)), MIN_VERTICES)
        spline = CubicSpline(s, pts, bc_type="periodic" if self.closed else "not-a-knot")
        if self.closed:
            u = total * np.arange(n) / n
        else:
            u = np.linspace(0.0, total, n + 1)
        out = spline(u)
        if not self.closed:
            out[0], out[-1] = v[0], v[-1]
        return Curve2D(out, self.closed, target)


def normals_and_curvature(curve: Curve2D) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex outward unit normal and signed Menger curvature.

    The normal bisects the right normals of the two adjacent edges.  The
    curvature ``2 (e_in x e_out) / (|e_in| |e_out| |chord|)`` is the inverse
    radius of the circle through the vertex and its neighbours, positive on a
    counterclockwise circle, and 0 for collinear triples.  End vertices of
    open curves take the end-edge normal and copy the neighbouring curvature.
    """
    v = curve.vertices
    n = len(v)
    if n < MIN_VERTICES:
        raise ValueError(f"need at least {MIN_VERTICES} vertices, got {n}")
    prev = np.roll(v, 1, axis=0)
    nxt = np.roll(v, -1, axis=0)
    e_in = v - prev
    e_out = nxt - v
    a = np.linalg.norm(e_in, axis=1)
    b = np.linalg.norm(e_out, axis=1)
    c = np.linalg.norm(nxt - prev, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nrm = _right_normal(e_in) + _right_normal(e_out)
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        kappa = 2.0 * _cross(e_in, e_out) / (a * b * c)
    kappa = np.where(np.isfinite(kappa), kappa, 0.0)
    if not curve.closed:
        nrm[0] = _right_normal(e_out[0])
        nrm[-1] = _right_normal(e_in[-1])
        kappa[0], kappa[-1] = kappa[1], kappa[-2]
    if not np.all(np.isfinite(nrm)):
        raise CurveError("normal undefined (a vertex folds back onto its neighbour)")
    return nrm, kappa


def turning_integral(curve: Curve2D) -> float:
    """Sum of ``kappa`` times the dual-cell arclength (``2 pi`` for a simple closed curve)."""
    _, kappa = normals_and_curvature(curve)
    ell = curve.edge_lengths
    if curve.closed:
        ds = 0.5 * (ell + np.roll(ell, 1))
    else:
        ds = 0.5 * (np.concatenate([[0.0], ell]) + np.concatenate([ell, [0.0]]))
    return float(np.sum(kappa * ds))


def hausdorff_to_circle(curve: Curve2D, radius: float, center: Sequence[float] = (0.0, 0.0)) -> float:
    """Hausdorff distance between a closed polyline around ``center`` and a circle.

    Measured radially at vertices and edge midpoints, which bounds both
    one-sided distances for a star-shaped polygon at fine resolution.
    """
    c = np.asarray(center, dtype=float)
    v = curve.vertices
    e = curve.edges
    pts = np.vstack([v, v[: len(e)] + 0.5 * e])
    return float(np.max(np.abs(np.linalg.norm(pts - c, axis=1) - radius)))


# ----------------------------------------------------------------------------
# Speeds and residuals


def _dot(a, b) -> np.ndarray:
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def transversality(model: Model2D, x, nu) -> tuple[np.ndarray, np.ndarray]:
    """``(w0 grad rho0 - w1 grad rho1) . nu`` and its scale ``|w0 grad rho0| + |w1 grad rho1|``."""
    g0 = np.asarray(model.grad_joint0(x))
    g1 = np.asarray(model.grad_joint1(x))
    return _dot(g0 - g1, nu), np.linalg.norm(g0, axis=-1) + np.linalg.norm(g1, axis=-1)


def normal_speed(model: Model2D, x, nu, kappa, rel_threshold: float = 1e-8):
    """First-order normal speed ``-(grad rho . nu + rho kappa) / ((w0 grad rho0 - w1 grad rho1) . nu)``.

    Positive speed moves the boundary along the outward normal.  Vectorised
    over leading axes of ``x`` / ``nu``.

    Raises
    ------
    DegeneracyError
        If the denominator is at most ``rel_threshold`` times its scale
        anywhere (transversality lost).
    """
    _require_2d(model)
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    num = _dot(model.marginal_grad(x), nu) + model.marginal(x) * np.asarray(kappa, dtype=float)
    den, scale = transversality(model, x, nu)
    bad = den <= rel_threshold * scale
    if np.any(bad):
        d = float(np.min(den))
        raise DegeneracyError(f"normal-speed denominator {d:.3e} not positive", d)
    v = -num / den
    return float(v) if np.ndim(v) == 0 else v


def necessary_residual_2d(model: Model2D, curve: Curve2D, eps: float, geometry=None) -> np.ndarray:
    """``w1 rho1(x - eps nu) |1 - eps kappa| - w0 rho0(x + eps nu) |1 + eps kappa|`` per vertex."""
    _require_2d(model)
    nu, kappa = geometry if geometry is not None else normals_and_curvature(curve)
    x = curve.vertices
    return model.joint1(x - eps * nu) * np.abs(1 - eps * kappa) - model.joint0(x + eps * nu) * np.abs(1 + eps * kappa)


def perimeter_regularization_residual(model: Model2D, curve: Curve2D, eps: float, geometry=None) -> np.ndarray:
    """``w0 rho0 - w1 rho1 + eps (grad rho . nu + rho kappa)`` per vertex.

    First-order condition of the risk with an explicit ``eps``-weighted
    perimeter penalty; it agrees with the adversarial condition up to O(eps^2).
    """
    _require_2d(model)
    nu, kappa = geometry if geometry is not None else normals_and_curvature(curve)
    x = curve.vertices
    return (
        model.joint0(x) - model.joint1(x)
        + eps * (_dot(model.marginal_grad(x), nu) + model.marginal(x) * kappa)
    )


def _log_residual(model: Model2D, x: np.ndarray, nu: np.ndarray, kappa: np.ndarray, eps: float) -> np.ndarray:
    # same zero set as the necessary condition, but scale free in the density tails
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            np.log(model.joint0(x + eps * nu) * np.abs(1 + eps * kappa))
            - np.log(model.joint1(x - eps * nu) * np.abs(1 - eps * kappa))
        )
    return out


# ----------------------------------------------------------------------------
# Projection onto the necessary condition


def _banded_jacobian(F, v: np.ndarray, dirs: np.ndarray, f0: np.ndarray, closed: bool, k: int, h: float) -> np.ndarray:
    """Jacobian of ``F`` w.r.t. normal displacements, bandwidth ``k``, by coloured differences."""
    n = len(v)
    width = 2 * k + 1
    if closed:
        regular = n - n % width
        colours = [np.arange(c, regular, width) for c in range(width)]
        colours += [np.array([i]) for i in range(regular, n)]
    else:
        colours = [np.arange(c, n, width) for c in range(width)]
    J = np.zeros((n, n))
    for group in colours:
        if not group.size:
            continue
        vv = v.copy()
        vv[group] += h * dirs[group]
        df = (F(vv) - f0) / h
        for off in range(-k, k + 1):
            rows = group + off
            if closed:
                rows %= n
                J[rows, group] = df[rows]
            else:
                ok = (rows >= 0) & (rows < n)
                J[rows[ok], group[ok]] = df[rows[ok]]
    return J


def project_front(
    model: Model2D,
    curve: Curve2D,
    eps: float,
    ends: Ends = "free",
    tol: float = 1e-11,
    max_iter: int = 40,
    fd_step: float = 1e-7,
) -> Curve2D:
    """Move vertices along their normals until the necessary condition holds.

    Solves the log form of the condition at every movable vertex by damped
    Newton iterations.  The Jacobian is banded (each residual depends on a
    vertex and its neighbours through the normal and curvature).

    Raises
    ------
    CurveError
        If Newton does not reach ``tol`` or a density vanishes at a probe point.
    """
    dirs, _ = normals_and_curvature(curve)
    v = curve.vertices.copy()
    n = len(v)
    movable = np.ones(n, dtype=bool)
    if not curve.closed and ends == "fixed":
        movable[[0, -1]] = False
    k = 1 if curve.closed else 2

    def F(vv):
        c = curve.with_vertices(vv)
        nu, kap = normals_and_curvature(c)
        return _log_residual(model, vv, nu, kap, eps)

    f = F(v)
    for _ in range(max_iter):
        if not np.all(np.isfinite(f[movable])):
            raise CurveError("density vanishes at a probe point; the front left the support")
        err = float(np.max(np.abs(f[movable])))
        if err <= tol:
            return curve.with_vertices(v)
        J = _banded_jacobian(F, v, dirs, f, curve.closed, k, fd_step)
        step = np.zeros(n)
        try:
            step[movable] = np.linalg.solve(J[np.ix_(movable, movable)], -f[movable])
        except np.linalg.LinAlgError as exc:
            raise CurveError(f"singular projection Jacobian at eps={eps!r}") from exc
        alpha = 1.0
        while True:
            trial = v + (alpha * step)[:, None] * dirs
            ft = F(trial)
            terr = float(np.max(np.abs(ft[movable]))) if np.all(np.isfinite(ft[movable])) else math.inf
            if terr < err or alpha < 1e-3:
                break
            alpha *= 0.5
        if not math.isfinite(terr):
            raise CurveError("projection step left the support of the densities")
        v, f = trial, ft
    raise CurveError(f"projection did not converge at eps={eps!r}: residual {err:.3e}")


# ----------------------------------------------------------------------------
# Evolution


@dataclass(frozen=True)
class CurveSnapshot:
    eps: float
    curve: Curve2D
    normals: np.ndarray
    kappa: np.ndarray
    residual: np.ndarray

    @classmethod
    def of(cls, model: Model2D, curve: Curve2D, eps: float) -> "CurveSnapshot":
        nu, kappa = normals_and_curvature(curve)
        return cls(eps, curve, nu, kappa, necessary_residual_2d(model, curve, eps, (nu, kappa)))


@dataclass(frozen=True)
class CurveEvent:
    eps: float
    kind: str
    detail: str


CURVE_COLUMNS = ["eps", "vertex_index", "x", "y", "kappa", "residual"]


@dataclass
class CurveTrajectory:
    snapshots: list[CurveSnapshot] = field(default_factory=list)
    events: list[CurveEvent] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return not self.events

    @property
    def eps(self) -> np.ndarray:
        return np.array([s.eps for s in self.snapshots])

    def at(self, eps: float) -> CurveSnapshot:
        return self.snapshots[int(np.argmin(np.abs(self.eps - eps)))]

    def lengths(self) -> np.ndarray:
        return np.array([s.curve.length for s in self.snapshots])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CURVE_COLUMNS)
            for s in self.snapshots:
                for i, (p, k, r) in enumerate(zip(s.curve.vertices, s.kappa, s.residual)):
                    w.writerow([repr(s.eps), i, repr(float(p[0])), repr(float(p[1])), repr(float(k)), repr(float(r))])

    def to_json(self, path: str | Path) -> None:
        data = {
            "polylines": [
                {"eps": s.eps, "closed": s.curve.closed, "vertices": s.curve.vertices.tolist()}
                for s in self.snapshots
            ],
            "events": [{"eps": e.eps, "kind": e.kind, "detail": e.detail} for e in self.events],
        }
        Path(path).write_text(json.dumps(data))


def _cfl_step(model: Model2D, curve: Curve2D, nu: np.ndarray, cfl: float) -> float:
    # curvature term of the speed acts like diffusion with coefficient rho / denominator
    den, _ = transversality(model, curve.vertices, nu)
    rho = model.marginal(curve.vertices)
    coef = float(np.max(rho / np.maximum(den, 1e-300)))
    h = float(np.min(curve.edge_lengths))
    return cfl * h * h / coef if coef > 0 else math.inf


def _check_transversal(model, curve, nu, rel) -> str | None:
    den, scale = transversality(model, curve.vertices, nu)
    bad = den <= rel * scale
    if np.any(bad):
        i = int(np.argmin(den - rel * scale))
        return f"vertex {i} at {curve.vertices[i].tolist()}: denominator {den[i]:.3e}"
    return None


def evolve_curve(
    model: Model2D,
    curve: Curve2D,
    eps_max: float,
    step: float = 1e-3,
    snapshots: Sequence[float] | None = None,
    ends: Ends = "free",
    target: float | None = None,
    rel_threshold: float = 1e-8,
    cfl: float = 0.25,
    newton_tol: float = 1e-11,
    max_substeps: int = 100_000,
) -> CurveTrajectory:
    """Track the critical boundary from ``eps = 0`` to ``eps_max``.

    Each step takes explicit substeps of :func:`normal_speed` (parabolic CFL
    limit ``cfl * h_min^2 * min(denominator / rho)``), resamples to the target
    spacing and projects onto the necessary condition at the new ``eps``.
    The input curve is first projected at ``eps = 0``.

    ``snapshots`` lists the eps values to record (nearest grid points);
    default is every step.  The run halts on self-intersection, loss of
    transversality or a failed projection, recording the event.

    Raises
    ------
    CurveError
        If the initial curve already violates transversality or cannot be
        projected.
    """
    _require_2d(model)
    if eps_max <= 0 or step <= 0:
        raise ValueError("eps_max and step must be positive")
    target = target or curve.resample_target or curve.mean_spacing
    cur = project_front(model, Curve2D(curve.vertices, curve.closed, target), 0.0, ends, newton_tol)
    nu, _ = normals_and_curvature(cur)
    msg = _check_transversal(model, cur, nu, rel_threshold)
    if msg:
        raise CurveError(f"initial curve is not transversal: {msg}")
    if not cur.is_simple():
        raise CurveError("initial curve self-intersects")

    n = max(int(math.ceil(eps_max / step - 1e-9)), 1)
    grid = np.linspace(0.0, eps_max, n + 1)
    if snapshots is None:
        wanted = set(range(n + 1))
    else:
        wanted = {int(np.argmin(np.abs(grid - e))) for e in snapshots}
    traj = CurveTrajectory()
    if 0 in wanted:
        traj.snapshots.append(CurveSnapshot.of(model, cur, 0.0))
    for k in range(1, n + 1):
        e1 = float(grid[k])
        h = e1 - float(grid[k - 1])
        try:
            x = cur.vertices.copy()
            done = 0.0
            for _ in range(max_substeps):
                if done >= h:
                    break
                c = cur.with_vertices(x)
                nu, kappa = normals_and_curvature(c)
                dt = min(h - done, _cfl_step(model, c, nu, cfl))
                v = normal_speed(model, x, nu, kappa, rel_threshold)
                if not cur.closed and ends == "fixed":
                    v[[0, -1]] = 0.0
                x = x + dt * v[:, None] * nu
                done += dt
            else:
                raise CurveError(f"more than {max_substeps} substeps needed at eps={e1!r}")
            nxt = cur.with_vertices(x).resample(target)
            nxt = project_front(model, nxt, e1, ends, newton_tol)
        except DegeneracyError as exc:
            traj.events.append(CurveEvent(e1, TRANSVERSALITY, str(exc)))
            break
        except CurveError as exc:
            traj.events.append(CurveEvent(e1, PROJECTION_FAILED, str(exc)))
            break
        if not nxt.is_simple():
            traj.events.append(CurveEvent(e1, SELF_INTERSECTION, "front crosses itself"))
            break
        nu, _ = normals_and_curvature(nxt)
        msg = _check_transversal(model, nxt, nu, rel_threshold)
        if msg:
            traj.events.append(CurveEvent(e1, TRANSVERSALITY, msg))
            break
        cur = nxt
        if k in wanted:
            traj.snapshots.append(CurveSnapshot.of(model, cur, e1))
    return traj


# ----------------------------------------------------------------------------
# Radial oracle


def radial_velocity(d: int, r: float, eps: float) -> float:
    """``dr/deps`` for the critical ball of the radial model in dimension ``d``."""
    p = d * (r + eps) ** (d - 1)
    q = (d - 1) * (r - eps) ** (d - 2) - d * (r - eps) ** (d - 1)
    den = p - q
    if den <= 0:
        raise DegeneracyError(f"radial denominator {den:.3e} at r={r!r}, eps={eps!r}", den)
    return -(p + q) / den


@dataclass(frozen=True)
class RadialSolution:
    """RK4 grid solution with cubic Hermite interpolation (uses the exact slopes)."""

    d: int
    eps: np.ndarray
    r: np.ndarray

    def __call__(self, e):
        slopes = np.array([radial_velocity(self.d, r, t) for t, r in zip(self.eps, self.r)])
        return CubicHermiteSpline(self.eps, self.r, slopes)(e)


def radial_oracle(d: int, r0: float, eps_max: float, step: float = 1e-4) -> RadialSolution:
    """Classical RK4 for the radius of the critical ball starting at ``r0``.

    Raises
    ------
    ValueError
        If ``r0 <= eps_max`` or ``d < 2``.
    DegeneracyError
        If the denominator changes sign along the way.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if not r0 > eps_max:
        raise ValueError("r0 must exceed eps_max")
    n = max(int(math.ceil(eps_max / step - 1e-9)), 1)
    grid = np.linspace(0.0, eps_max, n + 1)
    r = np.empty(n + 1)
    r[0] = r0
    f = lambda t, y: radial_velocity(d, y, t)
    for k in range(n):
        r[k + 1] = rk4_step(f, grid[k], r[k], grid[k + 1] - grid[k])
    return RadialSolution(d, grid, r)


# ----------------------------------------------------------------------------
# Bayes contour


def _refine_zero(model: Model2D, pts: np.ndarray, iters: int = 8) -> np.ndarray:
    # Newton along the gradient of log(w1 rho1) - log(w0 rho0)
    x = pts.copy()
    for _ in range(iters):
        j0, j1 = model.joint0(x), model.joint1(x)
        g = np.log(j1) - np.log(j0)
        grad = model.grad_joint1(x) / j1[:, None] - model.grad_joint0(x) / j0[:, None]
        x = x - (g / np.sum(grad * grad, axis=1))[:, None] * grad
    return x


def bayes_contours(
    model: Model2D,
    window: tuple[float, float, float, float] = (-3.0, 3.0, -3.0, 3.0),
    grid: int = 301,
    target: float | None = None,
) -> list[Curve2D]:
    """Zero contours of the class gap in ``window = (xmin, xmax, ymin, ymax)``, longest first.

    Marching squares on a ``grid x grid`` lattice, then each vertex is
    refined onto the exact zero set, oriented with the Bayes set on the left
    and resampled to ``target`` (default: the lattice spacing).
    """
    from skimage.measure import find_contours

    _require_2d(model)
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    X, Y = np.meshgrid(xs, ys)
    Z = model.class_gap(np.stack([X, Y], axis=-1))
    if target is None:
        target = min(xs[1] - xs[0], ys[1] - ys[0])
    curves = []
    for c in find_contours(Z, 0.0):
        pts = np.stack([x0 + c[:, 1] * (xs[1] - xs[0]), y0 + c[:, 0] * (ys[1] - ys[0])], axis=1)
        closed = bool(np.allclose(pts[0], pts[-1]))
        if closed:
            pts = pts[:-1]
        keep = np.concatenate([[True], np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-12])
        pts = pts[keep]
        if len(pts) < MIN_VERTICES:
            continue
        curve = Curve2D(_refine_zero(model, pts), closed, target)
        curve = _orient(model, curve).resample(target)
        curves.append(curve.with_vertices(_refine_zero(model, curve.vertices)))
    curves.sort(key=lambda c: -c.length)
    return curves


def _orient(model: Model2D, curve: Curve2D) -> Curve2D:
    nu, _ = normals_and_curvature(curve)
    g = model.grad_joint1(curve.vertices) - model.grad_joint0(curve.vertices)
    # the class gap must decrease along the outward normal
    return curve if np.sum(_dot(g, nu)) < 0 else curve.reversed()


def bayes_contour(model: Model2D, **kwargs) -> Curve2D:
    """Longest zero contour of the class gap (see :func:`bayes_contours`)."""
    curves = bayes_contours(model, **kwargs)
    if not curves:
        raise CurveError("no Bayes boundary inside the window")
    return curves[0]
