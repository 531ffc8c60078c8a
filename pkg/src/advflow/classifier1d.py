"""One-dimensional decision sets, Bayes extraction and robust risk.

A decision set is a finite union of disjoint intervals.  Endpoint openness is
never observable because every reported quantity is an integral against an
absolutely continuous law.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .density import ClassificationModel
from .errors import DegenerateModelError, DimensionError, QuadratureError

INF = math.inf

ROOT_TOL = 1e-12
QUAD_ABS_TOL = 1e-9
# mixture tails beyond this many std devs carry < 1e-32 mass
TAIL_SIGMAS = 12.0


def _encode(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return float(v)


def _decode(v) -> float:
    if isinstance(v, str):
        return float(v)  # "inf" / "-inf"
    return float(v)


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted disjoint intervals ``(lo, hi)`` with ``lo < hi``.

    Only the first ``lo`` may be ``-inf`` and only the last ``hi`` may be ``+inf``.
    """

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for k, (lo, hi) in enumerate(ivs):
            if not lo < hi:
                raise ValueError(f"interval {k} has lo >= hi: {(lo, hi)}")
            if k > 0 and not ivs[k - 1][1] < lo:
                raise ValueError(f"intervals {k - 1} and {k} overlap or touch")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "IntervalUnion":
        """Build from possibly unsorted / overlapping pairs, merging as needed."""
        return cls(_merge(sorted((float(a), float(b)) for a, b in pairs if a < b)))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def real_line(cls) -> "IntervalUnion":
        return cls(((-INF, INF),))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lefts(self) -> list[float]:
        return [lo for lo, _ in self.intervals]

    @property
    def rights(self) -> list[float]:
        return [hi for _, hi in self.intervals]

    def finite_endpoints(self) -> list[float]:
        return sorted(v for iv in self.intervals for v in iv if math.isfinite(v))

    def contains(self, x: float) -> bool:
        return any(lo < x < hi for lo, hi in self.intervals)

    def complement(self) -> "IntervalUnion":
        out = []
        prev = -INF
        for lo, hi in self.intervals:
            if prev < lo:
                out.append((prev, lo))
            prev = hi
        if prev < INF:
            out.append((prev, INF))
        return IntervalUnion(tuple(out))

    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def to_json(self) -> list:
        return [[_encode(lo), _encode(hi)] for lo, hi in self.intervals]

    @classmethod
    def from_json(cls, data: list) -> "IntervalUnion":
        return cls(tuple((_decode(lo), _decode(hi)) for lo, hi in data))


def _merge(pairs: list[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    out: list[list[float]] = []
    for lo, hi in pairs:
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


def erode_dilate(A: IntervalUnion, s: float) -> IntervalUnion:
    """Sublevel set ``{x : signed_dist_A(x) <= s}``.

    Positive ``s`` dilates (and merges intervals whose gap closes), negative
    ``s`` erodes (intervals of length ``<= 2|s|`` disappear).
    """
    if s >= 0:
        return IntervalUnion(_merge([(lo - s, hi + s) for lo, hi in A.intervals]))
    r = -s
    return IntervalUnion(tuple((lo + r, hi - r) for lo, hi in A.intervals if hi - lo > 2 * r))


def symmetric_difference_measure(A: IntervalUnion, B: IntervalUnion) -> float:
    """Lebesgue measure of ``A xor B`` (must be finite)."""
    cuts = sorted({v for iv in A.intervals + B.intervals for v in iv} | {-INF, INF})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if math.isfinite(lo) and math.isfinite(hi):
            probe = 0.5 * (lo + hi)
        elif math.isfinite(hi):
            probe = hi - 1.0
        elif math.isfinite(lo):
            probe = lo + 1.0
        else:
            probe = 0.0
        if A.contains(probe) != B.contains(probe):
            total += hi - lo
    return total


# ----------------------------------------------------------------------------
# Bayes set


def _require_1d(model: ClassificationModel) -> None:
    if model.dimension != 1:
        raise DimensionError(f"expected a 1D model, got dimension {model.dimension}")


def bisect_root(f, lo: float, hi: float, tol: float = ROOT_TOL, max_iter: int = 200) -> float:
    """Bisection for a sign change of ``f`` on ``[lo, hi]``."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError("no sign change on the bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def find_crossings(
    model: ClassificationModel,
    search_window: tuple[float, float] | None = None,
    scan_resolution: float | None = None,
    max_crossings: int = 100,
) -> tuple[list[float], int, int]:
    """Roots of the class gap in the window plus its signs at both edges."""
    _require_1d(model)
    lo, hi = search_window if search_window is not None else model.support_window()
    if scan_resolution is None:
        scan_resolution = 1e-3 * (hi - lo)
    n = max(int(math.ceil((hi - lo) / scan_resolution)), 2)
    xs = np.linspace(lo, hi, n + 1)
    gap = model.class_gap(xs)
    scale = float(np.max(model.marginal(xs)))
    if float(np.max(np.abs(gap))) <= 1e-12 * scale:
        raise DegenerateModelError("class gap vanishes on the whole search window")
    f = lambda x: float(model.class_gap(x))

    signs = np.sign(gap)
    nz = np.flatnonzero(signs)
    roots = []
    for j, k in zip(nz[:-1], nz[1:]):
        if signs[j] != signs[k]:
            roots.append(bisect_root(f, xs[j], xs[k]))
            if len(roots) > max_crossings:
                raise DegenerateModelError(f"more than {max_crossings} Bayes crossings in the window")
    return roots, int(signs[nz[0]]), int(signs[nz[-1]])


def bayes_set(
    model: ClassificationModel,
    search_window: tuple[float, float] | None = None,
    scan_resolution: float | None = None,
    max_crossings: int = 100,
) -> IntervalUnion:
    """The Bayes decision set ``{x : w1 rho1(x) > w0 rho0(x)}``.

    Crossings are located by a sign scan at ``scan_resolution`` (default a
    thousandth of the window) and refined by bisection to 1e-12.  The default
    window reaches 10 widest standard deviations beyond the extreme means.
    """
    roots, left_sign, _ = find_crossings(model, search_window, scan_resolution, max_crossings)
    pts = []
    inside = left_sign > 0
    start = -INF if inside else None
    for r in roots:
        if inside:
            pts.append((start, r))
        else:
            start = r
        inside = not inside
    if inside:
        pts.append((start, INF))
    return IntervalUnion(tuple(pts))


# ----------------------------------------------------------------------------
# Robust risk


def _truncation(model: ClassificationModel) -> tuple[float, float]:
    return model.support_window(TAIL_SIGMAS)


def integrate_density(f, lo: float, hi: float, breakpoints: Sequence[float] = (), tol: float = QUAD_ABS_TOL) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over a finite interval."""
    if hi <= lo:
        return 0.0
    pts = [p for p in breakpoints if lo < p < hi]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                lambda x: float(f(x)), lo, hi, points=pts or None, epsabs=tol * 1e-3, epsrel=1e-12, limit=500
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge: {exc}") from exc
    if err > tol:
        raise QuadratureError(f"quadrature error estimate {err:.3e} exceeds {tol:.1e} on [{lo}, {hi}]")
    return val


def integrate_over(model: ClassificationModel, f, A: IntervalUnion, tol: float = QUAD_ABS_TOL) -> float:
    """Integral of a mixture-derived density over ``A``; infinite ends are truncated
    at 12 std devs, where the neglected Gaussian tail is below 1e-32."""
    lo_t, hi_t = _truncation(model)
    means = [c.mean[0] for rho in (model.rho0, model.rho1) for c in rho.components]
    total = 0.0
    for lo, hi in A.intervals:
        total += integrate_density(f, max(lo, lo_t), min(hi, hi_t), means, tol)
    return total


def robust_risk(model: ClassificationModel, A: IntervalUnion, eps: float) -> float:
    """Adversarial 0-1 risk ``int_{A^eps} w0 rho0 + w1 - int_{A^-eps} w1 rho1``."""
    _require_1d(model)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    dil = erode_dilate(A, eps)
    ero = erode_dilate(A, -eps)
    risk = integrate_over(model, model.joint0, dil) + model.w1 - integrate_over(model, model.joint1, ero)
    return min(max(risk, 0.0), 1.0)


# ----------------------------------------------------------------------------
# Assumption checks


@dataclass(frozen=True)
class AssumptionReport:
    crossings: tuple[float, ...]
    derivative_gaps: tuple[float, ...]
    min_abs_gap: float
    finite_count_ok: bool
    nondegenerate_ok: bool
    threshold: float = 1e-8

    def to_dict(self) -> dict:
        return {
            "crossings": list(self.crossings),
            "derivative_gaps": list(self.derivative_gaps),
            "min_abs_gap": self.min_abs_gap,
            "finite_count_ok": self.finite_count_ok,
            "nondegenerate_ok": self.nondegenerate_ok,
            "threshold": self.threshold,
        }


def check_assumptions(
    model: ClassificationModel,
    crossings: Sequence[float] | None = None,
    threshold: float = 1e-8,
    max_crossings: int = 100,
) -> AssumptionReport:
    """Finite-crossing and transversality checks at the Bayes crossings.

    ``derivative_gaps[k] = w0 rho0'(t) - w1 rho1'(t)`` at crossing ``t``.  When
    ``crossings`` is omitted they are located with :func:`find_crossings`; a
    degenerate model then yields ``finite_count_ok=False``.
    """
    _require_1d(model)
    if crossings is None:
        try:
            crossings, _, _ = find_crossings(model, max_crossings=max_crossings)
        except DegenerateModelError:
            return AssumptionReport((), (), 0.0, False, False, threshold)
    crossings = tuple(float(t) for t in crossings)
    gaps = tuple(float(model.grad_joint0(t) - model.grad_joint1(t)) for t in crossings)
    min_abs = min((abs(g) for g in gaps), default=INF)
    finite_ok = len(crossings) <= max_crossings
    return AssumptionReport(crossings, gaps, min_abs, finite_ok, finite_ok and min_abs > threshold, threshold)
