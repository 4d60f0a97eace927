import math

import numpy as np
import pytest

from fluidchain import (
    InvalidArgumentError,
    SingularConeError,
    delta_infinity,
    delta_mc,
    field_grid,
    h_field,
    make_delta_infinity_field,
    make_h_field,
    make_proposal,
)
from helpers import build_density, random_off_cone_points

SQRT2PI = math.sqrt(2.0 * math.pi)


# ----------------------------------------------------------- point examples

def test_delta_mc_wedge_far_field():
    d = build_density("wedge-super")
    p = make_proposal("gauss")
    x = (50.0 * math.cos(1.0), 50.0 * math.sin(1.0))
    est = delta_mc(d, p, x, 1_000_000, seed=2)
    target = np.array([-math.cos(1.0), -math.sin(1.0)]) / SQRT2PI
    assert np.all(np.abs(est.value - target) <= 3.0 * est.stderr)


def test_delta_mc_vanishes_at_symmetric_point():
    d = build_density("wedge-super")
    p = make_proposal("gauss")
    est = delta_mc(d, p, (0.0, 0.0), 200_000, seed=5)
    assert np.all(np.abs(est.value) <= 3.0 * est.stderr)


def test_estimators_agree():
    d = build_density("wedge-super")
    p = make_proposal("gauss")
    a = delta_mc(d, p, (20.0, 5.0), 1_000_000, seed=11)
    b = delta_mc(d, p, (20.0, 5.0), 1_000_000, seed=12,
                 estimator="one-step-mean")
    assert a.estimator == "rejection-integrand"
    assert b.estimator == "one-step-mean"
    joint = np.hypot(a.stderr, b.stderr)
    assert np.all(np.abs(a.value - b.value) <= 4.0 * joint)


def test_field_estimate_invariants():
    d = build_density("gauss-mixture")
    p = make_proposal("gauss")
    est = delta_mc(d, p, (4.0, 1.0), 5000, seed=3)
    assert np.all(est.stderr >= 0.0)
    assert np.all(np.isfinite(est.value))
    assert est.n_samples == 5000
    with pytest.raises(InvalidArgumentError):
        delta_mc(d, p, (4.0, 1.0), 999, seed=3)  # n >= 1000 required


def test_delta_infinity_examples():
    p = make_proposal("gauss")
    w = build_density("wedge-super")
    np.testing.assert_allclose(delta_infinity(w, p, (0.0, 7.0)),
                               (0.0, -1.0 / SQRT2PI), atol=1e-12)
    ww = build_density("wedge-weibull")
    np.testing.assert_allclose(delta_infinity(ww, p, (1.0, 0.0)),
                               (-0.4, 0.0), atol=1e-12)
    m = build_density("gauss-mixture")
    n = np.array([2.0, 16.0]) / np.hypot(2.0, 16.0)
    np.testing.assert_allclose(delta_infinity(m, p, (2.0, 1.0)),
                               -n / SQRT2PI, atol=1e-12)


def test_h_field_identities():
    p = make_proposal("gauss")
    w = build_density("wedge-super")
    for x in ((3.0, 1.0), (0.0, 5.0), (-2.0, 7.0)):
        np.testing.assert_array_equal(h_field(w, p, x),
                                      delta_infinity(w, p, x))

    ww = build_density("wedge-weibull")
    u = np.array([0.6, -0.8])  # unit radius: h == delta_infinity
    np.testing.assert_allclose(h_field(ww, p, u),
                               delta_infinity(ww, p, u), atol=1e-15)
    # homogeneity in |x|^(-beta) with beta = 0.2
    h1 = h_field(ww, p, (1.0, 0.0))
    h2 = h_field(ww, p, (2.0, 0.0))
    np.testing.assert_allclose(h2, 2.0 ** -0.2 * h1, atol=1e-14)


def test_superexp_field_magnitude_constant(gauss_proposal):
    rng = np.random.default_rng(77)
    for key in ("wedge-super", "gauss-mixture"):
        d = build_density(key)
        pts = random_off_cone_points(rng, 64, lo=0.5, hi=40.0)
        for x in pts:
            v = delta_infinity(d, gauss_proposal, x)
            assert abs(np.linalg.norm(v) - gauss_proposal.m1) <= 1e-12


def test_mixture_reflection_symmetry(gauss_proposal):
    rng = np.random.default_rng(88)
    for key in ("gauss-mixture", "weibull-mixture"):
        d = build_density(key)
        pts = random_off_cone_points(rng, 64, lo=1.0, hi=30.0)
        for x in pts:
            a = delta_infinity(d, gauss_proposal, x)
            b = delta_infinity(d, gauss_proposal, (x[1], x[0]))
            np.testing.assert_array_equal(a, b[::-1])


def test_delta_infinity_cone_errors(gauss_proposal):
    m = build_density("gauss-mixture")
    with pytest.raises(SingularConeError):
        delta_infinity(m, gauss_proposal, (3.0, 3.0))
    with pytest.raises(InvalidArgumentError):
        delta_infinity(m, gauss_proposal, (0.0, 0.0))


# ------------------------------------------------------------- B2 surrogate

def test_drift_norm_bounded_by_mean_abs_jump():
    rng = np.random.default_rng(99)
    p = make_proposal("gauss")
    for key in ("wedge-super", "gauss-mixture", "wedge-weibull",
                "weibull-mixture"):
        d = build_density(key)
        pts = random_off_cone_points(rng, 50, lo=0.5, hi=40.0, min_angle=0.0)
        for x in pts:
            est = delta_mc(d, p, x, 2000, seed=int(1000 * abs(x[0])) + 1)
            bound = p.mean_abs + 3.0 * float(np.linalg.norm(est.stderr))
            assert np.linalg.norm(est.value) <= bound


# --------------------------------------------------------- radial limit B3

def test_radial_convergence_toward_limit_field(gauss_proposal):
    # max over a compact cone sample of |r^beta Dhat(r u) - Dinf(u)|,
    # medians over five seeds, decreasing along r = 10, 30, 100
    rng = np.random.default_rng(123)
    dirs = random_off_cone_points(rng, 8, lo=1.0, hi=1.0, min_angle=0.25)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    for key in ("wedge-super", "gauss-mixture", "wedge-weibull",
                "weibull-mixture"):
        d = build_density(key)
        beta = d.beta
        sup_errs = []
        for r in (10.0, 30.0, 100.0):
            worst = 0.0
            for u in dirs:
                target = delta_infinity(d, gauss_proposal, u)
                gaps = []
                for seed in range(5):
                    est = delta_mc(d, gauss_proposal, r * u, 100_000,
                                   seed=seed + 17)
                    gaps.append(np.linalg.norm(r ** beta * est.value - target))
                worst = max(worst, float(np.median(gaps)))
            sup_errs.append(worst)
        assert sup_errs[0] > sup_errs[1] > sup_errs[2], (key, sup_errs)


# ------------------------------------------------------------- vector fields

def test_vector_field_objects(gauss_proposal):
    m = build_density("gauss-mixture")
    f = make_h_field(m, gauss_proposal)
    assert f.lock_side == 0
    assert f.in_domain((3.0, 1.0))
    assert not f.in_domain((2.0, 2.0))
    locked = f.with_lock(1)
    assert locked.lock_side == 1
    assert locked.in_domain((2.0, 2.0))

    pts = np.array([[3.0, 1.0], [1.0, 5.0], [-4.0, 2.0]])
    batch = f.eval_batch(pts)
    for x, row in zip(pts, batch):
        np.testing.assert_array_equal(row, f(x))
        np.testing.assert_array_equal(row, h_field(m, gauss_proposal, x))


def test_locked_field_matches_sided_formula(gauss_proposal):
    m = build_density("gauss-mixture")
    base = make_delta_infinity_field(m, gauss_proposal)
    plus = base.with_lock(1)
    x = np.array([2.0, 2.0])
    v = plus(x)
    assert np.all(np.isfinite(v))
    # locked field is continuous across the diagonal from its own side
    v_near = base((2.0 + 1e-6, 2.0 - 1e-6))
    assert np.linalg.norm(v - v_near) < 1e-5


def test_field_points_inward(density, gauss_proposal):
    rng = np.random.default_rng(31)
    pts = random_off_cone_points(rng, 32, lo=1.0, hi=25.0)
    f = make_h_field(density, gauss_proposal)
    for x in pts:
        assert float(x @ f(x)) < 0.0


# ---------------------------------------------------------------- field grid

def test_field_grid_single_point_consistency(gauss_proposal):
    d = build_density("wedge-super")
    rows = field_grid(d, gauss_proposal, region=(7.0, 7.0, 3.0, 3.0),
                      nx=1, ny=1, n_mc=50_000, seed=6)
    assert len(rows) == 1
    row = rows[0]
    assert row["x1"] == 7.0 and row["x2"] == 3.0
    np.testing.assert_allclose((row["dinf1"], row["dinf2"]),
                               delta_infinity(d, gauss_proposal, (7.0, 3.0)),
                               atol=1e-15)
    np.testing.assert_allclose((row["h1"], row["h2"]),
                               h_field(d, gauss_proposal, (7.0, 3.0)),
                               atol=1e-15)
    assert row["in_cone"]
    est = delta_mc(d, gauss_proposal, (7.0, 3.0), 50_000, seed=row_seed(6, 0))
    np.testing.assert_array_equal((row["delta1"], row["delta2"]), est.value)


def row_seed(seed, idx):
    from fluidchain import mix64
    return mix64(seed, idx)


def test_field_grid_diagonal_rows_flagged(gauss_proposal):
    m = build_density("gauss-mixture")
    # 3x3 grid on [1,3]^2 has diagonal nodes (1,1), (2,2), (3,3)
    rows = field_grid(m, gauss_proposal, region=(1.0, 3.0, 1.0, 3.0),
                      nx=3, ny=3, n_mc=2000, seed=8)
    assert len(rows) == 9
    diag = [r for r in rows if r["x1"] == r["x2"]]
    off = [r for r in rows if r["x1"] != r["x2"]]
    assert len(diag) == 3
    for r in diag:
        assert not r["in_cone"]
        assert math.isnan(r["dinf1"]) and math.isnan(r["h2"])
        assert math.isfinite(r["delta1"])  # MC drift still estimated
    for r in off:
        assert r["in_cone"]
        assert math.isfinite(r["dinf1"]) and math.isfinite(r["h1"])


def test_field_grid_error_rows_not_failures(gauss_proposal):
    d = build_density("weibull-mixture")
    # grid includes the origin, where the density is singular
    rows = field_grid(d, gauss_proposal, region=(-1.0, 1.0, -1.0, 1.0),
                      nx=3, ny=3, n_mc=2000, seed=9)
    center = [r for r in rows if r["x1"] == 0.0 and r["x2"] == 0.0]
    assert len(center) == 1
    assert math.isnan(center[0]["delta1"])
    corner = [r for r in rows if r["x1"] == -1.0 and r["x2"] == -1.0]
    assert math.isfinite(corner[0]["delta1"])


def test_field_grid_far_region_closer_to_limit(gauss_proposal):
    d = build_density("wedge-super")
    errs = []
    for lo, hi in ((5.0, 30.0), (50.0, 300.0)):
        rows = field_grid(d, gauss_proposal, region=(lo, hi, lo, hi),
                          nx=8, ny=8, n_mc=20_000, seed=10)
        gaps = [math.hypot(r["delta1"] - r["dinf1"], r["delta2"] - r["dinf2"])
                for r in rows]
        errs.append(float(np.mean(gaps)))
    assert errs[1] < errs[0]
