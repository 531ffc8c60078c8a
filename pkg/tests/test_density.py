import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from advflow.density import (
    ClassificationModel,
    GaussianComponent,
    MixtureDensity,
    class_gap,
    four_blob_model,
    pdf,
    pdf_derivative,
    symmetric_model,
    two_gaussian_model,
)
from advflow.errors import DimensionError

finite = st.floats(-5, 5, allow_nan=False)
var = st.floats(0.1, 4.0)


@st.composite
def mixtures_1d(draw, max_components=3):
    k = draw(st.integers(1, max_components))
    raw = draw(st.lists(st.floats(0.1, 1.0), min_size=k, max_size=k))
    w = np.array(raw) / sum(raw)
    comps = [GaussianComponent(draw(finite), draw(var), float(wi)) for wi in w]
    # renormalise the last weight against rounding
    comps[-1] = GaussianComponent(comps[-1].mean, comps[-1].cov, 1.0 - float(sum(c.weight for c in comps[:-1])))
    return MixtureDensity(tuple(comps))


@st.composite
def mixtures_2d(draw):
    k = draw(st.integers(1, 3))
    comps = []
    for i in range(k):
        a, b = draw(var), draw(var)
        c = draw(st.floats(-0.9, 0.9)) * math.sqrt(a * b)
        w = 1.0 / k
        comps.append(GaussianComponent((draw(finite), draw(finite)), (a, c, b), w))
    return MixtureDensity(tuple(comps))


def test_standard_normal_values():
    n = MixtureDensity.normal(0.0, 1.0)
    assert pdf(n, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert pdf_derivative(n, 0.0) == 0.0
    assert pdf_derivative(n, 1.0) == pytest.approx(-0.2419707245191434, abs=1e-15)


def test_class0_density_at_mode():
    m = two_gaussian_model()
    assert m.rho0.pdf(2.0) == pytest.approx(1 / (2 * math.sqrt(2 * math.pi)), abs=1e-15)


def test_symmetric_mixture_at_zero():
    mix = MixtureDensity((GaussianComponent(-1.0, 1.0, 0.5), GaussianComponent(1.0, 1.0, 0.5)))
    assert mix.pdf(0.0) == pytest.approx(stats.norm.pdf(1.0), abs=1e-15)


def test_class_gap_examples():
    same = ClassificationModel(MixtureDensity.normal(0.3, 2.0), MixtureDensity.normal(0.3, 2.0))
    xs = np.linspace(-5, 5, 41)
    assert np.all(class_gap(same, xs) == 0.0)
    assert class_gap(symmetric_model(), 0.0) == 0.0


@given(mixtures_1d(), st.floats(-8, 8))
def test_pdf_matches_scipy(mix, x):
    ref = sum(c.weight * stats.norm.pdf(x, c.mean[0], math.sqrt(c.cov[0, 0])) for c in mix.components)
    assert mix.pdf(x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@given(mixtures_2d(), finite, finite)
def test_pdf_2d_matches_scipy(mix, x, y):
    ref = sum(c.weight * stats.multivariate_normal(c.mean, c.cov).pdf([x, y]) for c in mix.components)
    assert mix.pdf(np.array([x, y])) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(mixtures_1d(), st.floats(-6, 6))
def test_derivative_central_difference_1d(mix, x):
    h = 1e-5
    fd = (mix.pdf(x + h) - mix.pdf(x - h)) / (2 * h)
    assert abs(mix.grad(x) - fd) < 1e-7


@given(mixtures_2d(), finite, finite)
def test_gradient_central_difference_2d(mix, x, y):
    h = 1e-5
    p = np.array([x, y])
    g = mix.grad(p)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (mix.pdf(p + e) - mix.pdf(p - e)) / (2 * h)
        assert abs(g[k] - fd) < 1e-7


def test_gradient_error_is_second_order():
    mix = MixtureDensity((GaussianComponent(-1.0, 0.5, 0.3), GaussianComponent(1.5, 2.0, 0.7)))
    xs = np.random.default_rng(0).uniform(-4, 4, 100)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (mix.pdf(xs + h) - mix.pdf(xs - h)) / (2 * h)
        errs.append(np.max(np.abs(fd - mix.grad(xs))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@settings(max_examples=30, deadline=None)
@given(mixtures_1d())
def test_mixture_integrates_to_one(mix):
    lo, hi = mix.support_window(10.0)
    means = sorted(c.mean[0] for c in mix.components)
    val, _ = integrate.quad(mix.pdf, lo, hi, points=means, limit=200)
    assert val == pytest.approx(1.0, abs=1e-6)


@given(mixtures_1d(), st.floats(-8, 8))
def test_cdf_matches_quadrature(mix, x):
    lo, _ = mix.support_window(12.0)
    val, _ = integrate.quad(mix.pdf, lo, x, limit=200) if x > lo else (0.0, 0.0)
    assert mix.cdf(x) == pytest.approx(val, abs=1e-9)


@given(mixtures_1d(), mixtures_1d(), st.floats(0.05, 0.95), st.floats(-6, 6))
def test_swapped_model_negates_class_gap(r0, r1, w0, x):
    m = ClassificationModel(r0, r1, w0, 1.0 - w0)
    assert m.swapped().class_gap(x) == -m.class_gap(x)


@given(mixtures_1d(), mixtures_1d(), st.floats(-6, 6))
def test_reflection(r0, r1, x):
    m = ClassificationModel(r0, r1)
    mr = m.reflected()
    assert mr.joint0(-x) == pytest.approx(m.joint0(x), rel=1e-12, abs=1e-300)
    assert mr.grad_joint1(-x) == pytest.approx(-m.grad_joint1(x), rel=1e-12, abs=1e-300)


@given(mixtures_1d(), mixtures_1d(), st.floats(0.05, 0.95))
def test_dict_round_trip(r0, r1, w0):
    m = ClassificationModel(r0, r1, w0, 1.0 - w0)
    back = ClassificationModel.from_dict(m.to_dict())
    xs = np.linspace(-5, 5, 11)
    assert np.array_equal(back.class_gap(xs), m.class_gap(xs))


def test_four_blob_point_symmetry():
    m = four_blob_model()
    pts = np.random.default_rng(1).uniform(-3, 3, (50, 2))
    assert np.allclose(m.class_gap(-pts), -m.class_gap(pts), atol=1e-15)


def test_validation_errors():
    with pytest.raises(ValueError):
        MixtureDensity((GaussianComponent(0.0, 1.0, 0.6), GaussianComponent(1.0, 1.0, 0.3)))
    with pytest.raises(ValueError):
        GaussianComponent(0.0, -1.0)
    with pytest.raises(ValueError):
        GaussianComponent((0.0, 0.0), [[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(DimensionError):
        MixtureDensity((GaussianComponent(0.0, 1.0, 0.5), GaussianComponent((0.0, 0.0), np.eye(2), 0.5)))
    with pytest.raises(ValueError):
        ClassificationModel(MixtureDensity.normal(0, 1), MixtureDensity.normal(1, 1), 0.6, 0.6)
    with pytest.raises(DimensionError):
        ClassificationModel(MixtureDensity.normal(0, 1), MixtureDensity.normal((0, 0), np.eye(2)))
    with pytest.raises(DimensionError):
        MixtureDensity.normal((0, 0), np.eye(2)).pdf(np.array([1.0, 2.0, 3.0]))


def test_packed_covariance():
    c = GaussianComponent((0.0, 0.0), (2.0, 0.3, 1.0))
    assert np.array_equal(c.cov, [[2.0, 0.3], [0.3, 1.0]])


def test_vectorised_shapes():
    m = four_blob_model()
    pts = np.zeros((4, 5, 2))
    assert m.joint0(pts).shape == (4, 5)
    assert m.grad_joint1(pts).shape == (4, 5, 2)
    one = two_gaussian_model()
    assert one.joint0(np.zeros(7)).shape == (7,)
    assert one.grad_joint0(np.zeros(7)).shape == (7,)
