"""Optimality certificates for 1D decision sets via 0-1 threshold transport.

Two independent routes are provided:

* a discrete route: both weighted class densities are binned on a grid and the
  threshold transport problem between the data law and its label-swapped copy
  is solved exactly on the line; the resulting value bounds the minimal
  robust risk from below;
* a constructive route: for a critical set produced by the boundary evolution,
  an explicit zero-cost coupling is assembled around every finite endpoint
  from monotone mass-balancing maps, and a verifier re-checks it by
  quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .classifier1d import (
    INF,
    TAIL_SIGMAS,
    IntervalUnion,
    _require_1d,
    bayes_set,
    bisect_root,
    erode_dilate,
    integrate_density,
    integrate_over,
    robust_risk,
)
from .density import ClassificationModel
from .errors import CertificateError
from .evolution1d import BoundarySnapshot

MASS_TOL = 1e-12


# ----------------------------------------------------------------------------
# Discrete threshold transport


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atoms on the line with positive masses, sorted by position."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        m = np.asarray(self.masses, dtype=float).ravel()
        if pts.shape != m.shape:
            raise ValueError("points and masses differ in length")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        order = np.argsort(pts, kind="stable")
        object.__setattr__(self, "points", pts[order])
        object.__setattr__(self, "masses", m[order])

    @property
    def total(self) -> float:
        return float(self.masses.sum())


def discretize(
    model: ClassificationModel,
    n: int,
    window: tuple[float, float] | None = None,
    max_truncated: float = 1e-6,
    align_to: float | None = None,
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Midpoint-rule cell masses of ``w0 rho0`` and ``w1 rho1`` on ``n`` uniform cells.

    With ``align_to`` the cell width is adjusted (window recentred, ``n``
    kept) so that ``align_to`` is an integer number of cells.  Transport
    thresholds then fall on atom spacings; without this the threshold is
    effectively rounded down to a multiple of the cell width, an O(h) bias
    that does not shrink smoothly with ``n``.
    """
    _require_1d(model)
    if n < 2:
        raise ValueError("need at least two cells")
    lo, hi = window if window is not None else default_window(model)
    if align_to is not None and align_to > 0:
        lo, hi = aligned_window(lo, hi, n, align_to)
    truncated = model.w0 + model.w1 - (
        model.cdf_joint0(hi) - model.cdf_joint0(lo) + model.cdf_joint1(hi) - model.cdf_joint1(lo)
    )
    if truncated > max_truncated:
        raise ValueError(f"window {lo, hi} truncates mass {truncated:.3e} > {max_truncated:.1e}")
    h = (hi - lo) / n
    mids = lo + h * (np.arange(n) + 0.5)
    return DiscreteMeasure(mids, h * model.joint0(mids)), DiscreteMeasure(mids, h * model.joint1(mids))


def default_window(model: ClassificationModel) -> tuple[float, float]:
    return model.support_window(8.0)


def aligned_window(lo: float, hi: float, n: int, length: float) -> tuple[float, float]:
    """Recentred window of ``n`` cells whose width divides ``length`` exactly.

    Returns the input window when ``length`` is below half a cell.
    """
    h0 = (hi - lo) / n
    k = round(length / h0)
    if k < 1:
        return lo, hi
    h = length / k
    c = 0.5 * (lo + hi)
    return c - 0.5 * n * h, c + 0.5 * n * h


def max_matched_mass(mu0: DiscreteMeasure, mu1: DiscreteMeasure, eps: float, slack: float = 1e-12) -> float:
    """Largest mass of a partial coupling of ``mu0`` and ``mu1`` moving at most ``2 eps``.

    On the line every source reaches a contiguous window of sinks and the
    windows slide monotonically, so serving each source (left to right) from
    the leftmost sinks it still reaches is optimal.  Runs in O(n + m).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x, p = mu0.points, mu0.masses
    y, q = mu1.points, mu1.masses.copy()
    reach = 2.0 * eps + slack
    m = len(y)
    j = 0
    moved = 0.0
    for i in range(len(x)):
        supply = p[i]
        xi = x[i]
        while j < m and (q[j] <= 0.0 or y[j] < xi - reach):
            j += 1
        k = j
        while supply > 0.0 and k < m and y[k] <= xi + reach:
            t = min(supply, q[k])
            supply -= t
            q[k] -= t
            moved += t
            k += 1
    return moved


def dual_value(mu0: DiscreteMeasure, mu1: DiscreteMeasure, eps: float, balanced: bool = True, mass_tol: float = 1e-9) -> float:
    """Minimal 0-1 threshold transport cost.

    ``balanced=True``: ``mu0`` and ``mu1`` must carry equal mass and the value
    is ``min over couplings of mass moved farther than 2 eps``, i.e. total
    mass minus the largest matchable mass.

    ``balanced=False``: ``mu0``, ``mu1`` are the weighted class laws and the
    value is the cost between the labelled data law and its label-swapped
    copy.  Only same-label pairs within ``2 eps`` are free, which gives
    ``2 (total0 - M) + (total1 - total0)`` with ``M`` the matchable mass.
    """
    M = max_matched_mass(mu0, mu1, eps)
    t0, t1 = mu0.total, mu1.total
    if balanced:
        if abs(t0 - t1) > mass_tol:
            raise ValueError(f"balanced solve requested but totals differ: {t0!r} vs {t1!r}")
        return max(t0 - M, 0.0)
    return max(t0 + t1 - 2.0 * M, 0.0)


@dataclass(frozen=True)
class DualReport:
    eps: float
    dual_cost: float
    primal_risk: float
    gap: float
    implied_risk: float
    n: int = 0

    def certifies(self, tol: float) -> bool:
        return self.gap <= tol

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "dual_cost": self.dual_cost,
            "primal_risk": self.primal_risk,
            "gap": self.gap,
            "implied_risk": self.implied_risk,
            "n": self.n,
        }

    CSV_COLUMNS = ("eps", "n", "primal_risk", "implied_risk", "dual_cost", "gap")

    def csv_row(self) -> str:
        return ",".join(repr(float(getattr(self, c))) if c != "n" else str(self.n) for c in self.CSV_COLUMNS)


def duality_report(
    model: ClassificationModel,
    A: IntervalUnion,
    eps: float,
    n: int = 4000,
    window: tuple[float, float] | None = None,
    align: bool = True,
) -> DualReport:
    """Primal robust risk of ``A`` against the transport value ``1/2 - cost/2``.

    The transport problem is solved on an ``n``-cell grid (aligned to
    ``2 eps`` unless ``align=False``), so the gap is zero only up to the
    discretisation error, which is O(1/n^2) on aligned grids.
    """
    primal = robust_risk(model, A, eps)
    mu0, mu1 = discretize(model, n, window, align_to=2 * eps if align else None)
    cost = dual_value(mu0, mu1, eps, balanced=False)
    implied = 0.5 - 0.5 * cost
    return DualReport(eps, cost, primal, primal - implied, implied, n)


# ----------------------------------------------------------------------------
# Constructive certificate

MAP_POINTS = 64
BALANCE_TOL = 1e-9
MAP_TOL = 1e-8
IDENTITY_TOL = 1e-6
_SCAN = 2048
_SLOPE_POINTS = 257


@dataclass(frozen=True)
class MapTable:
    """Monotone map tabulated at increasing ``t``; linear in between."""

    t: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))

    def __call__(self, x):
        return np.interp(x, self.t, self.phi)

    @property
    def max_displacement(self) -> float:
        return float(np.max(np.abs(self.t - self.phi))) if self.t.size else 0.0

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "phi": self.phi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MapTable":
        return cls(np.array(d["t"], dtype=float), np.array(d["phi"], dtype=float))


@dataclass(frozen=True)
class EndpointRecord:
    """Transport data around one finite endpoint.

    For a right endpoint ``b``: ``r`` is ``r_plus`` (interior side, below
    ``b - eps``) and ``r_tilde`` is ``r_tilde_plus`` (above ``b + eps``);
    ``phi`` maps ``[r_plus, b - eps]`` into ``[r_plus, b + eps]`` and
    ``phi_tilde`` maps ``[b - eps, r_tilde_plus]`` into ``[b + eps, r_tilde_plus]``.
    Left endpoints are the mirror image (``r_minus`` above ``a + eps``,
    ``r_tilde_minus`` below ``a - eps``).
    """

    index: int
    side: str
    position: float
    bayes_position: float
    r: float
    r_tilde: float
    phi: MapTable
    phi_tilde: MapTable
    balance_residuals: tuple[float, float]

    @property
    def names(self) -> tuple[str, str]:
        return ("r_plus", "r_tilde_plus") if self.side == "right" else ("r_minus", "r_tilde_minus")

    def to_dict(self) -> dict:
        n_r, n_rt = self.names
        return {
            "index": self.index,
            "side": self.side,
            "position": self.position,
            "bayes_position": self.bayes_position,
            n_r: self.r,
            n_rt: self.r_tilde,
            "phi": self.phi.to_dict(),
            "phi_tilde": self.phi_tilde.to_dict(),
            "balance_residuals": list(self.balance_residuals),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointRecord":
        side = d["side"]
        n_r, n_rt = ("r_plus", "r_tilde_plus") if side == "right" else ("r_minus", "r_tilde_minus")
        return cls(
            int(d["index"]), side, float(d["position"]), float(d["bayes_position"]),
            float(d[n_r]), float(d[n_rt]),
            MapTable.from_dict(d["phi"]), MapTable.from_dict(d["phi_tilde"]),
            tuple(float(v) for v in d["balance_residuals"]),
        )


@dataclass(frozen=True)
class ConstructiveCertificate:
    eps: float
    delta: float
    records: tuple[EndpointRecord, ...]

    @property
    def max_displacement(self) -> float:
        return max((m.max_displacement for r in self.records for m in (r.phi, r.phi_tilde)), default=0.0)

    @property
    def balance_residuals(self) -> list[float]:
        return [v for r in self.records for v in r.balance_residuals]

    def record(self, index: int, side: str) -> EndpointRecord:
        for r in self.records:
            if r.index == index and r.side == side:
                return r
        raise KeyError((index, side))

    def to_dict(self, verdict: "CertificateVerdict | None" = None) -> dict:
        out = {
            "eps": self.eps,
            "delta": self.delta,
            "max_displacement": self.max_displacement,
            "records": [r.to_dict() for r in self.records],
        }
        if verdict is not None:
            out["verdict"] = verdict.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ConstructiveCertificate":
        return cls(float(d["eps"]), float(d["delta"]), tuple(EndpointRecord.from_dict(r) for r in d["records"]))

    def to_json(self, path: str | Path, verdict: "CertificateVerdict | None" = None) -> None:
        Path(path).write_text(json.dumps(self.to_dict(verdict), indent=2))

    @classmethod
    def from_json(cls, path: str | Path) -> "ConstructiveCertificate":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_delta(bayes: IntervalUnion, fallback: float = 2.0) -> float:
    """Half the smallest gap between consecutive Bayes crossings (``fallback`` for one crossing)."""
    pts = bayes.finite_endpoints()
    if len(pts) < 2:
        return fallback
    return 0.5 * float(np.min(np.diff(pts)))


def _invert_cdf(cdf, target: float, lo: float, hi: float) -> float:
    # cdf is nondecreasing; clamp when the target sits at a bracket end
    if target <= cdf(lo):
        return lo
    if target >= cdf(hi):
        return hi
    return bisect_root(lambda x: cdf(x) - target, lo, hi, tol=1e-14)


def _right_record(model: ClassificationModel, b: float, b0: float, eps: float, delta: float):
    """(r_plus, r_tilde_plus, phi, phi_tilde) around a right endpoint ``b``."""
    C0 = lambda x: float(model.cdf_joint0(x))
    C1 = lambda x: float(model.cdf_joint1(x))
    if eps == 0.0:
        one = MapTable(np.array([b]), np.array([b]))
        return b, b, one, one
    lo_e, hi_e = b - eps, b + eps
    c1_lo, c0_hi = C1(lo_e), C0(hi_e)

    # r_plus: largest r < b - eps with int_r^{b-eps} w1 rho1 = int_r^{b+eps} w0 rho0
    G = lambda r: (c1_lo - model.cdf_joint1(r)) - (c0_hi - model.cdf_joint0(r))
    r_plus = _scan_root(G, lo_e, b - 0.5 * delta, "r_plus", b)
    # r_tilde_plus: smallest r > b + eps with int_{b-eps}^r w1 rho1 = int_{b+eps}^r w0 rho0
    H = lambda r: (model.cdf_joint1(r) - c1_lo) - (model.cdf_joint0(r) - c0_hi)
    r_tilde = _scan_root(H, hi_e, b + 0.5 * delta, "r_tilde_plus", b)

    if not (b - 0.5 * delta <= r_plus <= b0 + 1e-10 and b0 - 1e-10 <= r_tilde <= b + 0.5 * delta):
        raise CertificateError(
            f"bracket violated at b={b!r}: r_plus={r_plus!r}, b(0)={b0!r}, r_tilde_plus={r_tilde!r}"
        )

    # paired slope condition over the range the maps actually use
    s = np.linspace(r_plus - lo_e, r_tilde - lo_e, _SLOPE_POINTS)
    slope = model.grad_joint0(hi_e + s) - model.grad_joint1(lo_e + s)
    if float(np.min(slope)) <= 0.0:
        k = int(np.argmin(slope))
        raise CertificateError(
            f"slope condition fails near b={b!r} at offset {s[k]:.4g} "
            f"(w0 rho0' - w1 rho1' = {slope[k]:.3e}); eps too large for the construction"
        )

    t = np.linspace(r_plus, lo_e, MAP_POINTS)
    phi = np.array([_invert_cdf(C0, c0_hi - (c1_lo - C1(ti)), r_plus, hi_e) for ti in t])
    tt = np.linspace(lo_e, r_tilde, MAP_POINTS)
    phit = np.array([_invert_cdf(C0, c0_hi + (C1(ti) - c1_lo), hi_e, r_tilde) for ti in tt])
    phi[-1], phit[0] = hi_e, hi_e
    return r_plus, r_tilde, MapTable(t, phi), MapTable(tt, phit)


def _scan_root(F, start: float, stop: float, name: str, b: float) -> float:
    """First sign change of ``F`` walking from ``start`` towards ``stop``, refined by bisection."""
    xs = np.linspace(start, stop, _SCAN + 1)
    vals = np.asarray(F(xs), dtype=float)
    # F(start) has a strict sign (the mass of w0 rho0 on [b - eps, b + eps])
    sgn = np.sign(vals[0])
    hit = np.flatnonzero(np.sign(vals[1:]) != sgn)
    if sgn == 0 or not hit.size:
        raise CertificateError(
            f"no bracket for {name} at b={b!r} within delta/2 (searched [{min(start, stop)!r}, {max(start, stop)!r}])"
        )
    k = int(hit[0]) + 1
    f = lambda x: float(F(x))
    lo, hi = sorted((float(xs[k - 1]), float(xs[k])))
    return bisect_root(f, lo, hi, tol=1e-14)


def _sint(f, lo: float, hi: float) -> float:
    # oriented quadrature
    if hi >= lo:
        return integrate_density(f, lo, hi, tol=1e-11)
    return -integrate_density(f, hi, lo, tol=1e-11)


def _balance(model: ClassificationModel, side: str, x: float, eps: float, r: float, r_tilde: float) -> tuple[float, float]:
    j0, j1 = model.joint0, model.joint1
    if side == "right":
        return (
            _sint(j1, r, x - eps) - _sint(j0, r, x + eps),
            _sint(j1, x - eps, r_tilde) - _sint(j0, x + eps, r_tilde),
        )
    return (
        _sint(j1, x + eps, r) - _sint(j0, x - eps, r),
        _sint(j1, r_tilde, x + eps) - _sint(j0, r_tilde, x - eps),
    )


def _pair_bayes(snapshot: BoundarySnapshot, bayes: IntervalUnion) -> list[tuple[int, str, float, float]]:
    if len(bayes) != len(snapshot.lefts):
        raise CertificateError(
            f"snapshot has {len(snapshot.lefts)} intervals but the Bayes set has {len(bayes)}"
        )
    out = []
    for i, side, x, _ in snapshot.endpoints():
        x0 = bayes.lefts[i] if side == "left" else bayes.rights[i]
        if math.isfinite(x) != math.isfinite(x0):
            raise CertificateError(f"endpoint {i} ({side}) finite at one eps but not the other")
        if math.isfinite(x):
            out.append((i, side, x, x0))
    return out


def build_certificate(
    model: ClassificationModel,
    snapshot: BoundarySnapshot,
    delta: float | None = None,
    bayes: IntervalUnion | None = None,
    residual_tol: float = 1e-6,
) -> ConstructiveCertificate:
    """Explicit zero-cost transport plan around every finite endpoint of a critical set.

    Around a right endpoint ``b``, ``r_plus`` and ``r_tilde_plus`` are the
    nearest points where the two weighted densities carry equal mass into
    ``[r, b +- eps]``; the maps ``phi`` pair mass of ``w1 rho1`` with mass of
    ``w0 rho0`` so that nothing moves farther than ``2 eps``.  Left endpoints
    are handled by reflecting the model.  All roots come from bisection on
    the exact mixture CDFs.

    Parameters
    ----------
    model : ClassificationModel
        One-dimensional model.
    snapshot : BoundarySnapshot
        Critical set at ``snapshot.eps``, typically taken from :func:`evolve`.
    delta : float, optional
        Neighbourhood width; roots are searched within ``delta / 2`` of the
        endpoint.  Defaults to :func:`default_delta` of the Bayes set.
    bayes : IntervalUnion, optional
        The Bayes set, paired index-wise with the snapshot intervals.

    Raises
    ------
    CertificateError
        When a bracket is not found within ``delta / 2`` or the slope
        condition fails on the range used by the maps.
    """
    _require_1d(model)
    eps = float(snapshot.eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if snapshot.max_residual > residual_tol:
        raise ValueError(f"snapshot is not critical: residual {snapshot.max_residual:.3e}")
    if bayes is None:
        bayes = bayes_set(model)
    if delta is None:
        delta = default_delta(bayes)
    if delta <= 0:
        raise ValueError("delta must be positive")
    mirror = model.reflected()
    records = []
    for i, side, x, x0 in _pair_bayes(snapshot, bayes):
        if side == "right":
            r, rt, phi, phit = _right_record(model, x, x0, eps, delta)
        else:
            rr, rrt, mphi, mphit = _right_record(mirror, -x, -x0, eps, delta)
            r, rt = -rr, -rrt
            phi = MapTable(-mphi.t[::-1], -mphi.phi[::-1])
            phit = MapTable(-mphit.t[::-1], -mphit.phi[::-1])
        res = _balance(model, side, x, eps, r, rt) if eps > 0 else (0.0, 0.0)
        records.append(EndpointRecord(i, side, x, x0, r, rt, phi, phit, res))
    return ConstructiveCertificate(eps, float(delta), tuple(records))


@dataclass(frozen=True)
class CertificateVerdict:
    """Outcome of :func:`verify_certificate`.

    ``lhs`` is the mass-balance side ``sum_i int_{r_minus}^{r_plus} (w1 rho1 - w0 rho0)``
    and ``rhs`` the set side ``int_{A^-eps} w1 rho1 - int_{A^eps} w0 rho0``.
    ``certified_risk = w1 - lhs`` is the risk value implied by the plan and
    ``primal_risk = w1 - rhs`` the robust risk of the set.
    """

    passed: bool
    identity_defect: float
    lhs: float
    rhs: float
    max_balance_residual: float
    max_map_residual: float
    max_displacement: float
    certified_risk: float
    primal_risk: float
    failures: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "passed", "identity_defect", "lhs", "rhs", "max_balance_residual",
            "max_map_residual", "max_displacement", "certified_risk", "primal_risk")}
        d["failures"] = list(self.failures)
        return d


def _map_residuals(model, rec: EndpointRecord, eps: float) -> list[float]:
    j0, j1 = model.joint0, model.joint1
    x = rec.position
    out = []
    for t, p in zip(rec.phi.t, rec.phi.phi):
        if rec.side == "right":
            out.append(_sint(j1, t, x - eps) - _sint(j0, p, x + eps))
        else:
            out.append(_sint(j1, x + eps, t) - _sint(j0, x - eps, p))
    for t, p in zip(rec.phi_tilde.t, rec.phi_tilde.phi):
        if rec.side == "right":
            out.append(_sint(j1, x - eps, t) - _sint(j0, x + eps, p))
        else:
            out.append(_sint(j1, t, x + eps) - _sint(j0, p, x - eps))
    return out


def _sign_check(model, lo: float, hi: float, sign: float, window: tuple[float, float]) -> float:
    """Most negative value of ``sign * (w1 rho1 - w0 rho0)`` on ``[lo, hi]`` (clipped to ``window``)."""
    lo, hi = max(lo, window[0]), min(hi, window[1])
    if hi <= lo:
        return 0.0
    xs = np.linspace(lo, hi, 513)
    return float(np.min(sign * model.class_gap(xs)))


# crossings are only known to ROOT_TOL, so the class gap may show a tiny wrong sign there
_SIGN_SLACK = 1e-10


def verify_certificate(
    model: ClassificationModel,
    cert: ConstructiveCertificate,
    snapshot: BoundarySnapshot,
    tol: float = IDENTITY_TOL,
) -> CertificateVerdict:
    """Re-check a certificate by independent quadrature.

    Checks, each of which must hold for a pass:

    * every record sits on a snapshot endpoint and has the same eps;
    * both balance equations per record hold to ``BALANCE_TOL``;
    * every tabulated map point balances mass to ``MAP_TOL``, maps are
      nondecreasing and move at most ``2 eps``;
    * ``w1 rho1 >= w0 rho0`` on every ``[r_minus, r_plus]`` and the reverse on
      the gaps between them (the leftover masses can be coupled at zero cost);
    * the two sides of the cost identity agree to ``tol``.
    """
    _require_1d(model)
    eps = cert.eps
    fails: list[str] = []
    if abs(eps - snapshot.eps) > 1e-12:
        fails.append(f"certificate eps {eps!r} != snapshot eps {snapshot.eps!r}")

    ends = {(i, side): x for i, side, x, _ in snapshot.endpoints() if math.isfinite(x)}
    recs = {(r.index, r.side): r for r in cert.records}
    if set(ends) != set(recs):
        fails.append(f"records {sorted(recs)} do not match finite endpoints {sorted(ends)}")
    for key, rec in recs.items():
        if key in ends and abs(rec.position - ends[key]) > 1e-12:
            fails.append(f"record {key} at {rec.position!r} but endpoint at {ends[key]!r}")

    bal = 0.0
    maps = 0.0
    disp = 0.0
    for rec in cert.records:
        b1, b2 = _balance(model, rec.side, rec.position, eps, rec.r, rec.r_tilde) if eps > 0 else (0.0, 0.0)
        worst = max(abs(b1), abs(b2))
        bal = max(bal, worst)
        if worst > BALANCE_TOL:
            fails.append(f"balance residual {worst:.3e} at {rec.side} endpoint {rec.index}")
        if eps > 0:
            m = max(abs(v) for v in _map_residuals(model, rec, eps))
            maps = max(maps, m)
            if m > MAP_TOL:
                fails.append(f"map mass residual {m:.3e} at {rec.side} endpoint {rec.index}")
        for name, tab in (("phi", rec.phi), ("phi_tilde", rec.phi_tilde)):
            d = tab.max_displacement
            disp = max(disp, d)
            if d > 2 * eps + 1e-12:
                fails.append(f"{name} at {rec.side} endpoint {rec.index} moves {d:.6g} > 2 eps")
            if np.any(np.diff(tab.t) < 0) or np.any(np.diff(tab.phi) < -1e-12):
                fails.append(f"{name} at {rec.side} endpoint {rec.index} is not monotone")

    # coupling regions [r_minus_i, r_plus_i]; infinite endpoints stay infinite
    pieces = []
    for i, (a, b) in enumerate(zip(snapshot.lefts, snapshot.rights)):
        lo = recs[(i, "left")].r if (i, "left") in recs else a
        hi = recs[(i, "right")].r if (i, "right") in recs else b
        pieces.append((lo, hi))
    window = model.support_window(TAIL_SIGMAS)
    prev = -INF
    for k, (lo, hi) in enumerate(pieces):
        if not lo <= hi:
            fails.append(f"coupling region {k} is empty: [{lo!r}, {hi!r}]")
            continue
        if _sign_check(model, lo, hi, 1.0, window) < -_SIGN_SLACK:
            fails.append(f"w1 rho1 < w0 rho0 inside coupling region {k}")
        gap_lo = recs[(k - 1, "right")].r_tilde if (k - 1, "right") in recs else prev
        gap_hi = recs[(k, "left")].r_tilde if (k, "left") in recs else lo
        if _sign_check(model, gap_lo, gap_hi, -1.0, window) < -_SIGN_SLACK:
            fails.append(f"w0 rho0 < w1 rho1 in the gap before region {k}")
        prev = hi
    if (len(pieces) - 1, "right") in recs:
        if _sign_check(model, recs[(len(pieces) - 1, "right")].r_tilde, INF, -1.0, window) < -_SIGN_SLACK:
            fails.append("w0 rho0 < w1 rho1 in the final gap")

    lhs = sum(
        integrate_over(model, model.class_gap, IntervalUnion(((lo, hi),)), tol=1e-11)
        for lo, hi in pieces if lo < hi
    )
    A = snapshot.as_set()
    rhs = integrate_over(model, model.joint1, erode_dilate(A, -eps), tol=1e-11) - integrate_over(
        model, model.joint0, erode_dilate(A, eps), tol=1e-11
    )
    defect = abs(lhs - rhs)
    if defect > tol:
        fails.append(f"cost identity defect {defect:.3e} > {tol:.1e}")
    return CertificateVerdict(
        not fails, defect, lhs, rhs, bal, maps, disp, model.w1 - lhs, model.w1 - rhs, tuple(fails)
    )

