import dataclasses
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from advflow.classifier1d import IntervalUnion, bayes_set
from advflow.density import symmetric_model
from advflow.errors import CertificateError
from advflow.evolution1d import evolve
from advflow.otcert import (
    ConstructiveCertificate,
    DiscreteMeasure,
    DualReport,
    aligned_window,
    build_certificate,
    discretize,
    dual_value,
    duality_report,
    max_matched_mass,
    verify_certificate,
)


def lp_matched(mu0, mu1, eps):
    # max flow over admissible pairs as a dense linear program
    x, p, y, q = mu0.points, mu0.masses, mu1.points, mu1.masses
    pairs = [(i, j) for i in range(len(x)) for j in range(len(y)) if abs(x[i] - y[j]) <= 2 * eps + 1e-12]
    if not pairs:
        return 0.0
    A = np.zeros((len(x) + len(y), len(pairs)))
    for k, (i, j) in enumerate(pairs):
        A[i, k] = 1.0
        A[len(x) + j, k] = 1.0
    res = optimize.linprog(-np.ones(len(pairs)), A_ub=A, b_ub=np.concatenate([p, q]), bounds=(0, None), method="highs")
    return -res.fun


def brute_unit_matching(xs, ys, eps):
    # unit atoms: try every injective assignment of the smaller side
    small, big = (xs, ys) if len(xs) <= len(ys) else (ys, xs)
    best = 0
    for perm in itertools.permutations(range(len(big)), len(small)):
        best = max(best, sum(abs(small[i] - big[j]) <= 2 * eps + 1e-12 for i, j in enumerate(perm)))
    return best


points = st.lists(st.floats(-3, 3), min_size=1, max_size=6)


def test_two_point_examples():
    mu0 = DiscreteMeasure([0.0], [1.0])
    mu1 = DiscreteMeasure([1.0], [1.0])
    assert dual_value(mu0, mu1, 0.4) == 1.0
    assert dual_value(mu0, mu1, 0.6) == 0.0
    assert dual_value(mu0, mu1, 0.5) == 0.0


def test_identical_measures_cost_nothing():
    mu = DiscreteMeasure([0.0, 0.5, 2.0], [0.2, 0.3, 0.5])
    assert dual_value(mu, mu, 0.0) == 0.0


def test_unbalanced_rejected():
    with pytest.raises(ValueError):
        dual_value(DiscreteMeasure([0.0], [1.0]), DiscreteMeasure([0.0], [0.5]), 0.1)


def test_unbalanced_value():
    mu0 = DiscreteMeasure([0.0], [0.3])
    mu1 = DiscreteMeasure([0.1, 5.0], [0.2, 0.5])
    # matched 0.2, cost = 0.3 + 0.7 - 0.4
    assert dual_value(mu0, mu1, 0.1, balanced=False) == pytest.approx(0.6, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(points, points, st.floats(0, 1.5))
def test_matches_brute_force_unit_atoms(xs, ys, eps):
    mu0 = DiscreteMeasure(xs, np.ones(len(xs)))
    mu1 = DiscreteMeasure(ys, np.ones(len(ys)))
    assert max_matched_mass(mu0, mu1, eps) == pytest.approx(brute_unit_matching(xs, ys, eps), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-3, 3), st.floats(0.01, 1)), min_size=1, max_size=12),
    st.lists(st.tuples(st.floats(-3, 3), st.floats(0.01, 1)), min_size=1, max_size=12),
    st.floats(0, 1.5),
)
def test_matches_linear_program(a, b, eps):
    mu0 = DiscreteMeasure(*zip(*a))
    mu1 = DiscreteMeasure(*zip(*b))
    assert max_matched_mass(mu0, mu1, eps) == pytest.approx(lp_matched(mu0, mu1, eps), abs=1e-9)


@given(
    st.lists(st.tuples(st.floats(-3, 3), st.floats(0.01, 1)), min_size=1, max_size=12),
    st.lists(st.tuples(st.floats(-3, 3), st.floats(0.01, 1)), min_size=1, max_size=12),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_cost_monotone_in_eps(a, b, e1, e2):
    mu0, mu1 = DiscreteMeasure(*zip(*a)), DiscreteMeasure(*zip(*b))
    lo, hi = sorted((e1, e2))
    assert dual_value(mu0, mu1, hi, balanced=False) <= dual_value(mu0, mu1, lo, balanced=False) + 1e-12


def test_discretize_totals(tg_model):
    mu0, mu1 = discretize(tg_model, 4000, window=(-20.0, 24.0))
    assert mu0.total == pytest.approx(tg_model.w0, abs=1e-9)
    assert mu1.total == pytest.approx(tg_model.w1, abs=1e-9)


def test_discretize_second_order(tg_model):
    # on a window that cuts through the bulk the midpoint rule is O(h^2)
    lo, hi = -1.0, 3.0
    exact = float(tg_model.cdf_joint0(hi) - tg_model.cdf_joint0(lo))
    errs = []
    for n in (50, 100, 200):
        mu0, _ = discretize(tg_model, n, window=(lo, hi), max_truncated=1.0)
        errs.append(abs(mu0.total - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_discretize_refuses_truncation(tg_model):
    with pytest.raises(ValueError):
        discretize(tg_model, 100, window=(-1.0, 1.0))


@given(st.floats(-10, 0), st.floats(1, 20), st.integers(10, 5000), st.floats(0.01, 1))
def test_aligned_window(lo, width, n, length):
    a, b = aligned_window(lo, lo + width, n, length)
    h = (b - a) / n
    if length >= 0.5 * width / n:
        k = length / h
        assert abs(k - round(k)) < 1e-6
        assert (a + b) / 2 == pytest.approx(lo + width / 2, abs=1e-9)


def test_bayes_set_gap_at_zero(tg_model):
    rep = duality_report(tg_model, bayes_set(tg_model), 0.0)
    assert abs(rep.gap) < 1e-6


def test_evolved_set_has_smaller_gap(tg_model, tg_trajectory):
    s = tg_trajectory.at(0.3)
    evolved = duality_report(tg_model, s.as_set(), s.eps)
    naive = duality_report(tg_model, bayes_set(tg_model), s.eps)
    assert abs(evolved.gap) < 1e-5
    assert naive.gap > 1e-3


def test_gap_never_materially_negative(tg_model):
    # the transport value is a lower bound for every set's robust risk
    for A in (IntervalUnion(((-1.0, 1.0),)), IntervalUnion.empty(), IntervalUnion(((-5.0, 0.0), (1.0, 3.0)))):
        for eps in (0.05, 0.2):
            assert duality_report(tg_model, A, eps).gap > -1e-5


def test_report_csv_row():
    rep = DualReport(0.1, 0.2, 0.3, 0.4, 0.5, 7)
    assert rep.csv_row().split(",") == ["0.1", "7", "0.3", "0.5", "0.2", "0.4"]


@pytest.fixture(scope="module")
def cert05(tg_model, tg_trajectory):
    snap = tg_trajectory.at(0.05)
    return snap, build_certificate(tg_model, snap)


def test_certificate_passes(tg_model, cert05):
    snap, cert = cert05
    v = verify_certificate(tg_model, cert, snap)
    assert v.passed, v.failures
    assert v.identity_defect < 1e-6
    assert cert.max_displacement <= 2 * snap.eps + 1e-12
    assert max(cert.balance_residuals) < 1e-9
    assert v.primal_risk == pytest.approx(v.certified_risk, abs=1e-6)


def test_certificate_records(cert05):
    snap, cert = cert05
    right, left = cert.record(0, "right"), cert.record(0, "left")
    assert right.r < snap.rights[0] - snap.eps < right.r_tilde
    assert left.r_tilde < snap.lefts[0] + snap.eps < left.r
    assert right.names == ("r_plus", "r_tilde_plus")
    assert left.names == ("r_minus", "r_tilde_minus")


def test_perturbed_certificate_fails(tg_model, cert05):
    snap, cert = cert05
    rec = cert.record(0, "right")
    bad = dataclasses.replace(rec, r=rec.r + 0.05)
    broken = dataclasses.replace(cert, records=tuple(bad if r is rec else r for r in cert.records))
    v = verify_certificate(tg_model, broken, snap)
    assert not v.passed
    assert v.identity_defect > 1e-3


def test_certificate_wrong_set_fails(tg_model, tg_trajectory, cert05):
    _, cert = cert05
    v = verify_certificate(tg_model, cert, tg_trajectory.at(0.06))
    assert not v.passed


def test_certificate_at_zero(tg_model, tg_trajectory):
    snap = tg_trajectory.snapshots[0]
    cert = build_certificate(tg_model, snap)
    v = verify_certificate(tg_model, cert, snap)
    assert v.passed, v.failures
    assert cert.max_displacement <= 1e-12


def test_symmetric_certificate():
    m = symmetric_model()
    snap = evolve(m, bayes_set(m), 0.1, 0.01).at(0.1)
    cert = build_certificate(m, snap)
    rec = cert.record(0, "right")
    assert rec.r == pytest.approx(-rec.r_tilde, abs=1e-10)
    assert rec.phi(snap.rights[0] - 0.1) == pytest.approx(snap.rights[0] + 0.1, abs=1e-10)
    assert verify_certificate(m, cert, snap).passed


def test_certificate_out_of_range(tg_model, tg_trajectory):
    with pytest.raises(CertificateError):
        build_certificate(tg_model, tg_trajectory.at(0.1))
    with pytest.raises(CertificateError):
        build_certificate(tg_model, tg_trajectory.at(0.2))


def test_certificate_json_round_trip(tmp_path, tg_model, cert05):
    snap, cert = cert05
    path = tmp_path / "cert.json"
    cert.to_json(path, verify_certificate(tg_model, cert, snap))
    back = ConstructiveCertificate.from_json(path)
    assert back.eps == cert.eps
    for a, b in zip(back.records, cert.records):
        assert (a.r, a.r_tilde, a.position) == (b.r, b.r_tilde, b.position)
        np.testing.assert_array_equal(a.phi.phi, b.phi.phi)
    assert verify_certificate(tg_model, back, snap).passed
