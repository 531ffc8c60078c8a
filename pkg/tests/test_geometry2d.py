import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from advflow.classifier1d import bayes_set
from advflow.density import ClassificationModel, MixtureDensity, four_blob_model, two_gaussian_model
from advflow.errors import DegeneracyError, DimensionError
from advflow.evolution1d import evolve, velocity_right
from advflow.geometry2d import (
    CURVE_COLUMNS,
    Curve2D,
    RadialModel,
    bayes_contour,
    bayes_contours,
    evolve_curve,
    hausdorff_to_circle,
    necessary_residual_2d,
    normal_speed,
    normals_and_curvature,
    perimeter_regularization_residual,
    project_front,
    radial_oracle,
    radial_velocity,
    turning_integral,
)


def product_model():
    # the two-Gaussian model in x times a shared standard normal in y
    return ClassificationModel(
        MixtureDensity.normal((2.0, 0.0), np.diag([4.0, 1.0])),
        MixtureDensity.normal((0.0, 0.0), np.eye(2)),
    )


def mirror_model():
    return ClassificationModel(
        MixtureDensity.normal((1.0, 0.0), np.eye(2)),
        MixtureDensity.normal((-1.0, 0.0), np.eye(2)),
    )


def vertical_segment(x, half=1.0, n=41):
    # traversed upwards: the set lies at smaller x and the outward normal is +x
    y = np.linspace(-half, half, n)
    return Curve2D(np.stack([np.full(n, x), y], axis=1), closed=False)


def rounded_rectangle(w=2.0, h=1.0, r=0.3, n_side=40, n_arc=20):
    pts = []
    corners = [(w / 2 - r, h / 2 - r, 0.0), (-w / 2 + r, h / 2 - r, 0.5 * np.pi),
               (-w / 2 + r, -h / 2 + r, np.pi), (w / 2 - r, -h / 2 + r, 1.5 * np.pi)]
    for k, (cx, cy, t0) in enumerate(corners):
        t = t0 + 0.5 * np.pi * np.arange(n_arc + 1) / n_arc
        pts.extend(zip(cx + r * np.cos(t), cy + r * np.sin(t)))
        nx_, ny_, _ = corners[(k + 1) % 4]
        a = np.array([cx + r * np.cos(t[-1]), cy + r * np.sin(t[-1])])
        b = np.array([nx_ + r * np.cos(t[-1]), ny_ + r * np.sin(t[-1])])
        for s in np.arange(1, n_side) / n_side:
            pts.append(tuple(a + s * (b - a)))
    return Curve2D(np.array(pts))


# ----------------------------------------------------------------------------
# Discrete geometry


def test_circle_curvature_exact():
    _, kappa = normals_and_curvature(Curve2D.circle(2.0, 256))
    np.testing.assert_allclose(kappa, 0.5, atol=1e-12)


def test_circle_normals_outward():
    c = Curve2D.circle(1.5, 64)
    nu, _ = normals_and_curvature(c)
    np.testing.assert_allclose(nu, c.vertices / 1.5, atol=1e-12)
    assert c.signed_area > 0


def test_ellipse_curvature_converges():
    a, b = 2.0, 1.0
    errs = []
    for n in (64, 128, 256):
        _, kappa = normals_and_curvature(Curve2D.ellipse(a, b, n))
        t = 2 * np.pi * np.arange(n) / n
        exact = a * b / (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5
        errs.append(np.max(np.abs(kappa - exact)))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0), st.integers(32, 256))
def test_turning_integral(a, b, n):
    assert turning_integral(Curve2D.ellipse(a, b, n)) == pytest.approx(2 * math.pi, rel=1e-2)


def test_turning_integral_circle_exact():
    # on an inscribed polygon the dual-cell sum is 2n sin(pi/n), which tends to 2 pi
    n = 400
    assert turning_integral(Curve2D.circle(1.0, n)) == pytest.approx(2 * n * math.sin(math.pi / n), rel=1e-12)


@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_offset_arclength_ratio(eps):
    # parallel curve length equals the integral of |1 + eps kappa| ds (Steiner)
    c = Curve2D.ellipse(2.0, 1.0, 2000)
    nu, kappa = normals_and_curvature(c)
    off = c.with_vertices(c.vertices + eps * nu)
    assert off.length == pytest.approx(c.length + 2 * math.pi * eps, rel=1e-5)


def test_rounded_rectangle_flats():
    c = rounded_rectangle()
    _, kappa = normals_and_curvature(c)
    flat = np.abs(kappa) < 1e-9
    curved = np.abs(kappa - 1 / 0.3) < 0.05
    assert flat.sum() >= 4 * 35
    assert curved.sum() >= 4 * 15
    assert turning_integral(c) == pytest.approx(2 * math.pi, rel=2e-2)


def test_figure_eight_not_simple():
    t = 2 * np.pi * np.arange(200) / 200
    eight = Curve2D(np.stack([np.sin(t), np.sin(t) * np.cos(t)], axis=1))
    assert not eight.is_simple()
    assert Curve2D.circle(1.0, 50).is_simple()


def test_resample_preserves_circle():
    c = Curve2D.circle(1.0, 97, phase=0.3).resample(n=200)
    assert len(c) == 200
    assert np.max(np.abs(np.linalg.norm(c.vertices, axis=1) - 1.0)) < 1e-6
    assert np.ptp(c.edge_lengths) < 1e-4


def test_too_few_vertices():
    with pytest.raises(ValueError):
        normals_and_curvature(Curve2D.circle(1.0, 5))
    with pytest.raises(DimensionError):
        Curve2D(np.zeros((5, 3)))


# ----------------------------------------------------------------------------
# Speeds


def test_radial_speed_at_bayes_circle():
    c = Curve2D.circle(0.5, 128)
    nu, kappa = normals_and_curvature(c)
    np.testing.assert_allclose(normal_speed(RadialModel(), c.vertices, nu, kappa), -1.0, rtol=1e-12)


def test_flat_boundary_in_flat_field_does_not_move():
    seg = vertical_segment(0.5, 0.3, 21)
    nu, kappa = normals_and_curvature(seg)
    np.testing.assert_allclose(normal_speed(RadialModel(), seg.vertices, nu, kappa), 0.0, atol=1e-14)


def test_speed_reduces_to_1d():
    m2, m1 = product_model(), two_gaussian_model()
    b = bayes_set(m1).intervals[0][1]
    seg = vertical_segment(b)
    nu, kappa = normals_and_curvature(seg)
    v = normal_speed(m2, seg.vertices, nu, kappa)
    np.testing.assert_allclose(v, velocity_right(m1, b, 0.0), rtol=1e-10)


def test_speed_degenerate():
    same = ClassificationModel(MixtureDensity.normal((0, 0), np.eye(2)), MixtureDensity.normal((0, 0), np.eye(2)))
    c = Curve2D.circle(1.0, 32)
    nu, kappa = normals_and_curvature(c)
    with pytest.raises(DegeneracyError):
        normal_speed(same, c.vertices, nu, kappa)


def test_residual_on_oracle_circle():
    m = RadialModel()
    for eps in (0.01, 0.05):
        r = RadialModel.critical_radius(eps)
        assert np.max(np.abs(necessary_residual_2d(m, Curve2D.circle(r, 256), eps))) < 1e-6
        assert np.min(np.abs(necessary_residual_2d(m, Curve2D.circle(r + 0.01, 256), eps))) > 1e-3


def test_projection_finds_critical_circle():
    m = RadialModel()
    c = project_front(m, Curve2D.circle(0.45, 128), 0.05)
    assert hausdorff_to_circle(c, RadialModel.critical_radius(0.05)) < 1e-3


# ----------------------------------------------------------------------------
# Radial oracle


def test_radial_oracle_matches_closed_form():
    sol = radial_oracle(2, 0.5, 0.05, 1e-3)
    for e in (0.0, 0.013, 0.05):
        assert float(sol(e)) == pytest.approx(RadialModel.critical_radius(e), abs=1e-9)


def test_radial_oracle_fourth_order():
    exact = RadialModel.critical_radius(0.05)
    errs = [abs(radial_oracle(2, 0.5, 0.05, h).r[-1] - exact) for h in (0.0125, 0.00625)]
    assert errs[0] / errs[1] > 12.0


def test_radial_oracle_three_dimensions():
    # critical radius solves (r + eps)^d = (1 - r + eps)(r - eps)^(d - 1)
    sol = radial_oracle(3, 0.5, 0.05, 1e-4)
    G = lambda r: (r + 0.05) ** 3 - (1 - r + 0.05) * (r - 0.05) ** 2
    assert sol.r[-1] == pytest.approx(optimize.brentq(G, 0.2, 0.5, xtol=1e-14), abs=1e-9)


def test_radial_velocity_at_start():
    assert radial_velocity(2, 0.5, 0.0) == pytest.approx(-1.0, rel=1e-14)
    with pytest.raises(ValueError):
        radial_oracle(2, 0.05, 0.1)


# ----------------------------------------------------------------------------
# Evolution


def test_radial_front_tracking():
    traj = evolve_curve(RadialModel(), Curve2D.circle(0.5, 256), 0.05, 1e-3, snapshots=[0.0, 0.025, 0.05])
    assert traj.completed
    for s in traj.snapshots:
        assert hausdorff_to_circle(s.curve, RadialModel.critical_radius(s.eps)) < 1e-3
        assert np.max(np.abs(s.residual)) < 1e-8


def test_1d_reduction():
    m2, m1 = product_model(), two_gaussian_model()
    A = bayes_set(m1)
    ref = evolve(m1, A, 0.1, 1e-3).at(0.1)
    traj = evolve_curve(m2, vertical_segment(A.intervals[0][1]), 0.1, 1e-2, snapshots=[0.1])
    assert traj.completed
    np.testing.assert_allclose(traj.snapshots[-1].curve.vertices[:, 0], ref.rights[0], atol=1e-4)


def test_stationary_boundary():
    traj = evolve_curve(mirror_model(), vertical_segment(0.0), 0.2, 2e-2, snapshots=[0.2])
    assert traj.completed
    assert np.max(np.abs(traj.snapshots[-1].curve.vertices[:, 0])) < 1e-10


@pytest.fixture(scope="module")
def blob_run():
    model = four_blob_model()
    curve = bayes_contour(model, window=(-3, 3, -3, 3), grid=301)
    traj = evolve_curve(model, curve, 0.02, 1e-3, snapshots=[0.0, 0.005, 0.01, 0.02])
    return model, curve, traj


def test_four_blob_contour(blob_run):
    model, curve, _ = blob_run
    assert not curve.closed
    ends = sorted([tuple(curve.vertices[0]), tuple(curve.vertices[-1])], key=lambda p: p[1])
    # end points are refined onto the zero set, so they sit near (not on) the window edge
    assert ends[0][1] == pytest.approx(-3.0, abs=1e-2)
    assert ends[1][1] == pytest.approx(3.0, abs=1e-2)
    # the model is point symmetric, so is its boundary
    assert ends[0][0] == pytest.approx(-ends[1][0], abs=1e-3)
    assert np.max(np.abs(model.class_gap(curve.vertices))) < 1e-12


def test_four_blob_perimeter_shrinks(blob_run):
    _, _, traj = blob_run
    assert traj.completed
    assert np.all(np.diff(traj.lengths()) < 0)


def test_perimeter_regularization_second_order(blob_run):
    model, _, traj = blob_run
    sizes = [np.max(np.abs(perimeter_regularization_residual(model, s.curve, s.eps, (s.normals, s.kappa))))
             for s in traj.snapshots[1:]]
    slope = np.polyfit(np.log(traj.eps[1:]), np.log(sizes), 1)[0]
    assert 1.8 <= slope <= 2.2


def test_contour_of_identical_classes_is_empty():
    same = ClassificationModel(MixtureDensity.normal((0, 0), np.eye(2)), MixtureDensity.normal((0, 0), np.eye(2)))
    assert bayes_contours(same) == []


def test_export(tmp_path, blob_run):
    _, _, traj = blob_run
    traj.to_csv(tmp_path / "c.csv")
    traj.to_json(tmp_path / "c.json")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].split(",") == CURVE_COLUMNS
    assert len(lines) == 1 + sum(len(s.curve) for s in traj.snapshots)
    data = json.loads((tmp_path / "c.json").read_text())
    assert [p["eps"] for p in data["polylines"]] == traj.eps.tolist()
    np.testing.assert_array_equal(np.array(data["polylines"][-1]["vertices"]), traj.snapshots[-1].curve.vertices)
