"""Adversarially robust binary classification boundaries.

``density``       Gaussian-mixture class densities and the data model.
``classifier1d``  interval decision sets, Bayes extraction, robust risk.
``evolution1d``   endpoint ODEs in the adversarial strength with event checks.
``otcert``        transport lower bounds and constructive optimality certificates.
``geometry2d``    front tracking of planar boundaries.
``cli``           command-line driver.
"""

from .classifier1d import IntervalUnion, bayes_set, robust_risk
from .density import ClassificationModel, GaussianComponent, MixtureDensity
from .evolution1d import BoundarySnapshot, BoundaryTrajectory, evolve, evolve_from_bayes
from .geometry2d import Curve2D, RadialModel, evolve_curve, normal_speed, radial_oracle
from .otcert import build_certificate, dual_value, duality_report, verify_certificate

__all__ = [
    "BoundarySnapshot",
    "BoundaryTrajectory",
    "ClassificationModel",
    "Curve2D",
    "GaussianComponent",
    "IntervalUnion",
    "MixtureDensity",
    "RadialModel",
    "bayes_set",
    "build_certificate",
    "dual_value",
    "duality_report",
    "evolve",
    "evolve_curve",
    "evolve_from_bayes",
    "normal_speed",
    "radial_oracle",
    "robust_risk",
    "verify_certificate",
]
