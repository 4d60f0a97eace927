import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fluidchain import (
    FluidPath,
    InvalidArgumentError,
    NumericError,
    StiffnessError,
    branch_flow,
    closed_absorption_time,
    closed_form_flow,
    integrate_flow,
    make_h_field,
    make_proposal,
    stability_sweep,
)
from helpers import build_density

SQRT2PI = math.sqrt(2.0 * math.pi)
GAUSS = make_proposal("gauss")


def h_of(key):
    return make_h_field(build_density(key), GAUSS)


# ------------------------------------------------------------ FluidPath type

def test_path_validation():
    with pytest.raises(InvalidArgumentError):
        FluidPath(times=[0.0, 1.0, 1.0], points=np.zeros((3, 2)))
    with pytest.raises(InvalidArgumentError):
        FluidPath(times=[0.0, 1.0], points=np.zeros((3, 2)))
    with pytest.raises(InvalidArgumentError):
        FluidPath(times=[0.0, 1.0], points=np.zeros((2, 2)), mode="spline")


def test_path_interpolation_modes():
    times = [0.0, 1.0, 2.0]
    points = np.array([[2.0, 0.0], [1.0, 0.0], [0.5, 0.0]])
    poly = FluidPath(times=times, points=points, mode="polygonal")
    np.testing.assert_allclose(poly.value_at(0.5), (1.5, 0.0))
    np.testing.assert_allclose(poly.value_at(2.0), (0.5, 0.0))
    step = FluidPath(times=times, points=points, mode="step")
    np.testing.assert_allclose(step.value_at(0.5), (2.0, 0.0))
    np.testing.assert_allclose(step.value_at(1.0), (1.0, 0.0))
    # grid values exact in both modes
    for p in (poly, step):
        np.testing.assert_array_equal(p.values_at(times), points)
    assert poly.covers(2.0) and not poly.covers(2.1)


def test_first_passage_interpolation():
    # collinear nodes make the interpolated norm exactly piecewise linear
    times = [0.0, 1.0, 2.0]
    points = np.array([[2.0, 0.0], [1.2, 0.0], [0.3, 0.0]])
    poly = FluidPath(times=times, points=points, mode="polygonal")
    t = poly.first_passage_below(0.5)
    assert math.isclose(t, 1.0 + 0.7 / 0.9, rel_tol=1e-12)
    assert poly.first_passage_below(0.1) is None
    assert poly.first_passage_below(3.0) == 0.0
    step = FluidPath(times=times, points=points, mode="step")
    assert step.first_passage_below(0.5) == 2.0


# ----------------------------------------------------- closed-form oracles

def test_closed_form_flow_examples():
    np.testing.assert_array_equal(
        closed_form_flow("wedge-super", (3.0, 4.0), 1.0, 0.0), (3.0, 4.0))
    np.testing.assert_array_equal(
        closed_form_flow("wedge-super", (1.0, 0.0), 1.0, 10.0), (0.0, 0.0))
    v = closed_form_flow("wedge-weibull", (0.0, 1.0), 1.0, 1.0)
    assert v[0] == 0.0
    assert math.isclose(v[1], 0.52 ** (1.0 / 1.2), rel_tol=1e-14)
    assert abs(v[1] - 0.57989) < 2e-5  # headline figure, rounded
    with pytest.raises(InvalidArgumentError):
        closed_form_flow("gauss-mixture", (1.0, 0.0), 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        closed_form_flow("wedge-super", (1.0, 0.0), 1.0, -0.5)


def test_closed_form_against_independent_integrator():
    # radial ODE dr/dt = -sigma^2 delta r^(2 delta - 1), solved to high
    # accuracy by an off-the-shelf adaptive integrator
    delta = 0.4
    sol = solve_ivp(lambda t, r: -delta * r ** (2.0 * delta - 1.0),
                    (0.0, 1.0), [1.0], rtol=1e-12, atol=1e-14,
                    dense_output=True)
    ours = closed_form_flow("wedge-weibull", (0.0, 1.0), 1.0, 1.0,
                            delta=delta)
    assert abs(ours[1] - sol.y[0, -1]) < 1e-9

    sol2 = solve_ivp(lambda t, r: np.array([-1.0 / SQRT2PI]),
                     (0.0, 2.0), [1.5], rtol=1e-12, atol=1e-14)
    ours2 = closed_form_flow("wedge-super", (1.5, 0.0), 1.0, 2.0)
    assert abs(ours2[0] - sol2.y[0, -1]) < 1e-9


def test_closed_absorption_times():
    assert math.isclose(closed_absorption_time("wedge-super", (1.0, 0.0), 1.0),
                        SQRT2PI, rel_tol=1e-12)
    assert math.isclose(
        closed_absorption_time("wedge-weibull", (0.0, 1.0), 1.0),
        1.0 / 0.48, rel_tol=1e-12)


# ------------------------------------------------------------ the integrator

def test_wedge_flow_matches_closed_form():
    path = integrate_flow(h_of("wedge-super"), (1.0, 0.0), dt=1e-4, t_max=3.0)
    pre = path.times[path.times < path.absorbed_at - 1e-3]
    vals = path.values_at(pre)
    exact = np.array([closed_form_flow("wedge-super", (1.0, 0.0), 1.0, t)
                      for t in pre])
    assert np.max(np.hypot(*(vals - exact).T)) <= 1e-6
    assert abs(path.absorbed_at - SQRT2PI) <= 1e-4
    # clamp and padding: absorbed tail is exactly zero
    np.testing.assert_array_equal(path.points[-1], (0.0, 0.0))
    assert path.t_end == 3.0


def test_weibull_flow_absorption():
    path = integrate_flow(h_of("wedge-weibull"), (0.0, 1.0), dt=1e-4,
                          t_max=3.0)
    assert abs(path.absorbed_at - 1.0 / 0.48) <= 1e-3
    np.testing.assert_array_equal(path.points[-1], (0.0, 0.0))


def test_integrator_order():
    field = h_of("wedge-weibull")
    errs = []
    for dt in (0.02, 0.01):
        path = integrate_flow(field, (1.0, 0.0), dt=dt, t_max=0.8)
        exact = closed_form_flow("wedge-weibull", (1.0, 0.0), 1.0, 0.8)
        errs.append(np.linalg.norm(path.value_at(0.8) - exact))
    assert errs[0] >= 8.0 * errs[1]


def test_flow_semigroup():
    field = h_of("wedge-weibull")
    one = integrate_flow(field, (1.0, 0.0), dt=1e-3, t_max=0.8)
    first = integrate_flow(field, (1.0, 0.0), dt=1e-3, t_max=0.4)
    second = integrate_flow(field, first.value_at(0.4), dt=1e-3, t_max=0.4)
    gap = np.linalg.norm(one.value_at(0.8) - second.value_at(0.4))
    assert gap <= 1e-8


def test_norm_monotone_until_absorption(density):
    x0 = (0.8, 0.6) if not density.has_cone_exclusion else (0.9, 0.4)
    path = integrate_flow(make_h_field(density, GAUSS), x0, dt=1e-3,
                          t_max=6.0)
    norms = path.norms()
    if path.absorbed_at is not None:
        norms = norms[path.times <= path.absorbed_at]
    assert np.all(np.diff(norms) < 0.0)


def test_mixture_flow_stays_in_cone():
    d = build_density("gauss-mixture")
    path = integrate_flow(make_h_field(d, GAUSS), (2.0, 1.0), dt=1e-3,
                          t_max=4.0)
    upto = path.points if path.absorbed_at is None else \
        path.points[path.times <= path.absorbed_at][:-1]
    for p in upto:
        assert d.in_cone(p)


def test_integrate_flow_validation():
    field = h_of("wedge-super")
    with pytest.raises(InvalidArgumentError):
        integrate_flow(field, (0.0, 0.0), dt=1e-3, t_max=1.0)
    with pytest.raises(InvalidArgumentError):
        integrate_flow(field, (1.0, 0.0), dt=0.0, t_max=1.0)
    with pytest.raises(InvalidArgumentError):
        integrate_flow(field, (1.0, 0.0), dt=1e-3, t_max=-1.0)
    with pytest.raises(InvalidArgumentError, match="branch_flow"):
        integrate_flow(h_of("gauss-mixture"), (1.0, 1.0), dt=1e-3, t_max=1.0)


# ----------------------------------------------------------- synthetic events

class _StubDensity:
    def __init__(self, cone):
        self.has_cone_exclusion = cone


class _DiagonalAttractor:
    """Pulls states onto the x1 = x2 diagonal (cone-exit exercise)."""
    lock_side = 0
    density = _StubDensity(True)

    def __call__(self, p):
        m = 0.5 * (p[0] + p[1])
        return np.array([m - p[0], m - p[1]])


class _FastRotation:
    """Enormous speed at constant radius: the step controller can never
    make progress, which must surface as a stiffness error."""
    lock_side = 0
    density = _StubDensity(False)

    def __call__(self, p):
        return 1e9 * np.array([-p[1], p[0]])


def test_cone_exit_detection():
    path = integrate_flow(_DiagonalAttractor(), (2.0, 1.0), dt=1e-3,
                          t_max=20.0)
    assert path.absorbed_at is None
    assert path.cone_exit_at is not None
    # the gap p1 - p2 decays like exp(-t); the 1e-6 angular band around
    # the diagonal is reached near t = log((p1-p2)/(3e-6))
    assert 12.0 < path.cone_exit_at < 13.5
    last = path.points[-1]
    assert abs(last[0] - last[1]) < 1e-4


def test_stiffness_error():
    with pytest.raises(StiffnessError, match="state"):
        integrate_flow(_FastRotation(), (1.0, 0.0), dt=0.05, t_max=0.5)


# ------------------------------------------------------------ branch flows

def test_branch_swap_symmetry():
    field = h_of("gauss-mixture")
    x0 = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    plus, minus = branch_flow(field, x0, dt=1e-3, t_max=10.0)
    assert plus.branch_tag == "plus" and minus.branch_tag == "minus"
    assert plus.times.shape == minus.times.shape
    np.testing.assert_array_equal(plus.times, minus.times)
    assert np.max(np.abs(plus.points - minus.points[:, ::-1])) <= 1e-6


def test_branches_reach_inner_ball():
    for key in ("gauss-mixture", "weibull-mixture"):
        field = h_of(key)
        x0 = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
        plus, minus = branch_flow(field, x0, dt=1e-3, t_max=20.0)
        for path in (plus, minus):
            assert path.first_passage_below(0.5) is not None


def test_branch_keeps_its_side():
    # from (1, 1) the "plus" start is x0 + eps * (-1, 1)/sqrt(2), which is
    # the second-coordinate-dominant side
    field = h_of("gauss-mixture")
    plus, minus = branch_flow(field, (1.0, 1.0), dt=1e-3, t_max=5.0)
    pp = plus.points if plus.absorbed_at is None else \
        plus.points[plus.times <= plus.absorbed_at][:-1]
    assert np.all(np.abs(pp[1:, 1]) >= np.abs(pp[1:, 0]))
    mm = minus.points if minus.absorbed_at is None else \
        minus.points[minus.times <= minus.absorbed_at][:-1]
    assert np.all(np.abs(mm[1:, 0]) >= np.abs(mm[1:, 1]))


def test_branch_angular_distance_to_diagonal_grows():
    # the repulsion invariant, stated on the angular separation: the
    # euclidean projection |<v*, mu>| eventually shrinks as the flow heads
    # to the origin along the dominant axis, but the angle never does
    v_star = np.array([-1.0, 1.0]) / math.sqrt(2.0)
    for key in ("gauss-mixture", "weibull-mixture"):
        plus, _ = branch_flow(h_of(key), (1.0, 1.0), dt=1e-3, t_max=5.0)
        pts = plus.points
        if plus.absorbed_at is not None:
            pts = pts[plus.times <= plus.absorbed_at][:-1]
        norms = np.hypot(pts[:, 0], pts[:, 1])
        # angles are ill-conditioned at the absorption scale, so check only
        # while the state is macroscopic
        pts = pts[norms > 1e-4]
        ang = np.abs(pts @ v_star) / np.hypot(pts[:, 0], pts[:, 1])
        assert np.all(np.diff(ang) >= -1e-12)


def test_branch_continuity_in_perturbation():
    # halving the initial offset moves the path by at most 10x the offset
    d = build_density("gauss-mixture")
    field = make_h_field(d, GAUSS).with_lock(1)
    x0 = np.array([1.0, 1.0])
    v_perp = np.array([-1.0, 1.0]) / math.sqrt(2.0)
    eps = 1e-8 * np.linalg.norm(x0)
    paths = [integrate_flow(field, x0 - e * v_perp, dt=1e-3, t_max=1.0)
             for e in (eps, 0.5 * eps)]
    grid = np.linspace(0.0, 1.0, 401)
    a, b = (p.values_at(grid) for p in paths)
    assert np.max(np.hypot(*(a - b).T)) <= 10.0 * eps


def test_branch_flow_validation():
    field = h_of("gauss-mixture")
    with pytest.raises(InvalidArgumentError):
        branch_flow(field, (2.0, 1.0), dt=1e-3, t_max=1.0)  # off diagonal
    with pytest.raises(InvalidArgumentError):
        branch_flow(h_of("wedge-super"), (1.0, 1.0), dt=1e-3, t_max=1.0)
    with pytest.raises(InvalidArgumentError):
        branch_flow(field, (0.0, 0.0), dt=1e-3, t_max=1.0)


# --------------------------------------------------------------- the sweeps

def test_wedge_sweep_uniform_time():
    res = stability_sweep(h_of("wedge-super"), n_directions=8, rho=0.5,
                          t_max=5.0)
    assert res.all_hit
    expect = SQRT2PI / 2.0
    assert abs(res.worst_time - expect) <= 1e-4
    assert len(res.rows) == 8
    for row in res.rows:
        assert row["branch"] == "."
        assert abs(row["time"] - expect) <= 1e-4


def test_weibull_sweep_uniform_time():
    res = stability_sweep(h_of("wedge-weibull"), n_directions=8, rho=0.5,
                          t_max=5.0)
    expect = (1.0 - 0.5 ** 1.2) / 0.48
    assert res.all_hit
    assert abs(res.worst_time - expect) <= 1e-3


def test_mixture_sweep_with_branches():
    res = stability_sweep(h_of("gauss-mixture"), n_directions=16, rho=0.5,
                          t_max=20.0)
    assert res.all_hit
    assert math.isfinite(res.worst_time)
    branched = [r for r in res.rows if r["branch"] in ("+", "-")]
    plain = [r for r in res.rows if r["branch"] == "."]
    # the four diagonal directions each contribute two branch rows
    assert len(branched) == 8
    assert len(plain) == 12
    assert len(res.rows) == 20


def test_sweep_reports_misses():
    res = stability_sweep(h_of("wedge-super"), n_directions=8, rho=0.5,
                          t_max=0.5)  # too short to reach rho
    assert not res.all_hit
    assert math.isnan(res.worst_time)
    assert all(not r["hit"] for r in res.rows)


def test_sweep_validation():
    field = h_of("wedge-super")
    with pytest.raises(InvalidArgumentError):
        stability_sweep(field, n_directions=4, rho=0.5, t_max=1.0)
    with pytest.raises(InvalidArgumentError):
        stability_sweep(field, n_directions=8, rho=1.5, t_max=1.0)
