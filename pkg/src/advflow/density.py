"""Gaussian-mixture class densities and the binary classification model.

Points are plain floats / arrays in one dimension and arrays whose last axis
has length 2 in two dimensions.  All evaluation is vectorised over leading
axes and done in double precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import DimensionError

WEIGHT_TOL = 1e-9
_LOG_2PI = np.log(2.0 * np.pi)


def _as_cov(cov: Any, dim: int) -> np.ndarray:
    c = np.asarray(cov, dtype=float)
    if dim == 1:
        c = c.reshape(1, 1)
    elif c.shape == (3,):
        # packed (s11, s12, s22)
        c = np.array([[c[0], c[1]], [c[1], c[2]]])
    if c.shape != (dim, dim):
        raise DimensionError(f"covariance of shape {c.shape} does not match dimension {dim}")
    return c


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted normal component ``weight * N(mean, cov)``."""

    mean: np.ndarray
    cov: np.ndarray
    weight: float = 1.0
    _prec: np.ndarray = field(init=False, repr=False, compare=False)
    _log_norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).ravel()
        dim = mean.size
        if dim not in (1, 2):
            raise DimensionError(f"only dimensions 1 and 2 are supported, got {dim}")
        cov = _as_cov(self.cov, dim)
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-14):
            raise ValueError("covariance must be symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig.min() <= 0:
            raise ValueError("covariance must be positive definite")
        if self.weight < 0:
            raise ValueError("component weight must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "_prec", np.linalg.inv(cov))
        _, logdet = np.linalg.slogdet(cov)
        object.__setattr__(self, "_log_norm", -0.5 * (dim * _LOG_2PI + logdet))

    @property
    def dimension(self) -> int:
        return self.mean.size

    @property
    def sigma_max(self) -> float:
        return float(np.sqrt(np.linalg.eigvalsh(self.cov).max()))

    def _centered(self, x: np.ndarray) -> np.ndarray:
        # returns (..., d) displacement from the mean
        if self.dimension == 1:
            return (x - self.mean[0])[..., None]
        return x - self.mean

    def pdf(self, x: np.ndarray) -> np.ndarray:
        z = self._centered(x)
        q = np.einsum("...i,ij,...j->...", z, self._prec, z)
        return np.exp(self._log_norm - 0.5 * q)

    def grad(self, x: np.ndarray) -> np.ndarray:
        z = self._centered(x)
        g = -(z @ self._prec) * self.pdf(x)[..., None]
        return g[..., 0] if self.dimension == 1 else g

    def cdf(self, x: np.ndarray) -> np.ndarray:
        if self.dimension != 1:
            raise DimensionError("cdf is only defined in one dimension")
        return ndtr((x - self.mean[0]) / np.sqrt(self.cov[0, 0]))


@dataclass(frozen=True)
class MixtureDensity:
    """A finite Gaussian mixture whose component weights sum to one."""

    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        dims = {c.dimension for c in comps}
        if len(dims) != 1:
            raise DimensionError(f"components disagree on dimension: {sorted(dims)}")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def normal(cls, mean, cov) -> "MixtureDensity":
        return cls((GaussianComponent(mean, cov, 1.0),))

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureDensity":
        comps = []
        for c in data["components"]:
            comps.append(GaussianComponent(c["mean"], c["cov"], c.get("weight", 1.0)))
        return cls(tuple(comps))

    def to_dict(self) -> dict:
        return {
            "components": [
                {"mean": c.mean.tolist(), "cov": c.cov.tolist(), "weight": c.weight}
                for c in self.components
            ]
        }

    @property
    def dimension(self) -> int:
        return self.components[0].dimension

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dimension == 2 and (x.ndim == 0 or x.shape[-1] != 2):
            raise DimensionError(f"expected points with last axis 2, got shape {x.shape}")
        return x

    def pdf(self, x) -> np.ndarray:
        x = self._check(x)
        return sum(c.weight * c.pdf(x) for c in self.components)

    def grad(self, x) -> np.ndarray:
        x = self._check(x)
        return sum(c.weight * c.grad(x) for c in self.components)

    def cdf(self, x) -> np.ndarray:
        x = self._check(x)
        return sum(c.weight * c.cdf(x) for c in self.components)

    def reflected(self) -> "MixtureDensity":
        """Mixture of the reflected law ``x -> -x``."""
        return MixtureDensity(
            tuple(GaussianComponent(-c.mean, c.cov, c.weight) for c in self.components)
        )

    def support_window(self, n_sigma: float = 10.0) -> tuple[float, float]:
        """1D interval reaching ``n_sigma`` widest std devs beyond the extreme means."""
        if self.dimension != 1:
            raise DimensionError("support_window is one-dimensional")
        means = [c.mean[0] for c in self.components]
        s = max(c.sigma_max for c in self.components)
        return min(means) - n_sigma * s, max(means) + n_sigma * s


@dataclass(frozen=True)
class ClassificationModel:
    """The data law: class densities ``rho0``, ``rho1`` with priors ``w0``, ``w1``.

    ``joint0``/``joint1`` are the weighted densities ``w_i * rho_i``; the
    marginal is ``rho = joint0 + joint1``.
    """

    rho0: MixtureDensity
    rho1: MixtureDensity
    w0: float = 0.5
    w1: float = 0.5

    def __post_init__(self):
        if not (0 < self.w0 < 1 and 0 < self.w1 < 1):
            raise ValueError("class weights must lie in (0, 1)")
        if abs(self.w0 + self.w1 - 1.0) > WEIGHT_TOL:
            raise ValueError(f"w0 + w1 = {self.w0 + self.w1!r}, expected 1")
        if self.rho0.dimension != self.rho1.dimension:
            raise DimensionError("class densities live in different dimensions")

    @property
    def dimension(self) -> int:
        return self.rho0.dimension

    def joint0(self, x) -> np.ndarray:
        return self.w0 * self.rho0.pdf(x)

    def joint1(self, x) -> np.ndarray:
        return self.w1 * self.rho1.pdf(x)

    def grad_joint0(self, x) -> np.ndarray:
        return self.w0 * self.rho0.grad(x)

    def grad_joint1(self, x) -> np.ndarray:
        return self.w1 * self.rho1.grad(x)

    def cdf_joint0(self, x) -> np.ndarray:
        return self.w0 * self.rho0.cdf(x)

    def cdf_joint1(self, x) -> np.ndarray:
        return self.w1 * self.rho1.cdf(x)

    def marginal(self, x) -> np.ndarray:
        return self.joint0(x) + self.joint1(x)

    def marginal_grad(self, x) -> np.ndarray:
        return self.grad_joint0(x) + self.grad_joint1(x)

    def class_gap(self, x) -> np.ndarray:
        """``w1 rho1(x) - w0 rho0(x)``; positive where the Bayes rule predicts 1."""
        return self.joint1(x) - self.joint0(x)

    def conditional_mean(self, x) -> np.ndarray:
        """P(Y=1 | X=x)."""
        return self.joint1(x) / self.marginal(x)

    def swapped(self) -> "ClassificationModel":
        return ClassificationModel(self.rho1, self.rho0, self.w1, self.w0)

    def reflected(self) -> "ClassificationModel":
        return ClassificationModel(self.rho0.reflected(), self.rho1.reflected(), self.w0, self.w1)

    def support_window(self, n_sigma: float = 10.0) -> tuple[float, float]:
        lo0, hi0 = self.rho0.support_window(n_sigma)
        lo1, hi1 = self.rho1.support_window(n_sigma)
        return min(lo0, lo1), max(hi0, hi1)

    @classmethod
    def from_dict(cls, data: dict) -> "ClassificationModel":
        return cls(
            MixtureDensity.from_dict(data["rho0"]),
            MixtureDensity.from_dict(data["rho1"]),
            float(data["w0"]),
            float(data["w1"]),
        )

    def to_dict(self) -> dict:
        return {"w0": self.w0, "w1": self.w1, "rho0": self.rho0.to_dict(), "rho1": self.rho1.to_dict()}

    @classmethod
    def from_json(cls, path: str | Path) -> "ClassificationModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def pdf(density: MixtureDensity, x) -> np.ndarray:
    return density.pdf(x)


def pdf_derivative(density: MixtureDensity, x) -> np.ndarray:
    """Analytic derivative (1D) or gradient (2D, last axis) of ``density``."""
    return density.grad(x)


def class_gap(model: ClassificationModel, x) -> np.ndarray:
    return model.class_gap(x)


def two_gaussian_model() -> ClassificationModel:
    """Class 1 standard normal, class 0 N(2, 4), balanced priors."""
    return ClassificationModel(
        rho0=MixtureDensity.normal(2.0, 4.0),
        rho1=MixtureDensity.normal(0.0, 1.0),
        w0=0.5,
        w1=0.5,
    )


def symmetric_model(shift: float = 1.0) -> ClassificationModel:
    """Class 1 N(-shift, 1) against class 0 N(shift, 1), balanced."""
    return ClassificationModel(
        rho0=MixtureDensity.normal(shift, 1.0),
        rho1=MixtureDensity.normal(-shift, 1.0),
        w0=0.5,
        w1=0.5,
    )


def four_blob_model(variance: float = 0.2) -> ClassificationModel:
    """Planar S-boundary example: two blobs per class, isotropic covariance."""
    cov = variance * np.eye(2)

    def mix(means: Sequence[Sequence[float]]) -> MixtureDensity:
        return MixtureDensity(tuple(GaussianComponent(m, cov, 1.0 / len(means)) for m in means))

    return ClassificationModel(
        rho0=mix([(0.5, -0.5), (0.5, 2.0)]),
        rho1=mix([(-0.5, -2.0), (-0.5, 0.5)]),
        w0=0.5,
        w1=0.5,
    )
