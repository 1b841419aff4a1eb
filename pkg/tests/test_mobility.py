import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import erf

from vanetroute.core import RngStream
from vanetroute.errors import (InsufficientSamples, InvalidConfig, InvalidParams, NegativeRadius,
                               NonPositiveVariance)
from vanetroute.mobility import (EpochModelParams, Fleet, GaussianDistanceModel, HighwayConfig, build_highway,
                                 distance, distance_cdf, distance_pdf, efficiency, epoch_params_for_variance,
                                 fit_gaussian, monte_carlo_cdf, normalization_mass, simulate_epochs,
                                 step_kinematics)


def erf_cdf(mean, var, r):
    s = math.sqrt(2 * var)
    return 0.5 * (erf((r - mean) / s) - erf((0 - mean) / s))


# --- highway


def test_four_nodes_take_four_lanes():
    nodes = build_highway(HighwayConfig(), 4, 15.0, RngStream(1, "mobility"))
    assert sorted(n.lane_index for n in nodes) == [0, 1, 2, 3]
    assert {n.heading for n in nodes} == {1, -1}


def test_placement_is_deterministic_and_speeds_exact():
    a = build_highway(HighwayConfig(), 25, 7.0, RngStream(9, "mobility"))
    b = build_highway(HighwayConfig(), 25, 7.0, RngStream(9, "mobility"))
    assert a == b
    assert all(n.speed == 7.0 for n in a)
    assert all(0 <= n.x < 1000 for n in a)


@pytest.mark.parametrize("n,speed", [(1, 10.0), (10, -1.0)])
def test_build_highway_rejects_bad_input(n, speed):
    with pytest.raises(InvalidConfig):
        build_highway(HighwayConfig(), n, speed, RngStream(0, "m"))


def test_step_kinematics():
    cfg = HighwayConfig()
    base = build_highway(cfg, 2, 15.0, RngStream(0, "m"))[0]
    fwd = base.__class__(0, 0.0, 2.5, 0, 15.0, 1)
    assert step_kinematics(fwd, 1.0, cfg).x == 15.0
    near_end = fwd.__class__(0, 990.0, 2.5, 0, 30.0, 1)
    assert step_kinematics(near_end, 1.0, cfg).x == pytest.approx(20.0)
    slow = fwd.__class__(0, 100.0, 2.5, 0, 2.0, 1)
    assert step_kinematics(slow, 0.03, cfg).x - 100.0 == pytest.approx(0.06)
    back = fwd.__class__(0, 5.0, 17.5, 3, 10.0, -1)
    assert step_kinematics(back, 1.0, cfg).x == pytest.approx(995.0)
    with pytest.raises(InvalidConfig):
        step_kinematics(fwd, 0.0, cfg)


def test_distance():
    assert distance((1, 2), (1, 2)) == 0
    assert distance((0, 0), (3, 4)) == 5
    rng = np.random.default_rng(0)
    for a, b in rng.uniform(-500, 500, size=(100, 2, 2)):
        assert distance(a, b) == distance(b, a) >= 0


def test_fleet_matches_stepping_and_wraps():
    cfg = HighwayConfig()
    nodes = build_highway(cfg, 8, 30.0, RngStream(3, "m"))
    fleet = Fleet(cfg, nodes)
    stepped = [step_kinematics(n, 12.5, cfg) for n in nodes]
    assert np.allclose(fleet.xs(12.5), [n.x for n in stepped])
    d = fleet.distances_from(0, 0.0)
    assert d[0] == 0
    assert np.all(d <= math.hypot(500, cfg.lanes * cfg.lane_width))


# --- Gaussian distance model


def test_pdf_values():
    assert distance_pdf(GaussianDistanceModel(0, 1), 0) == pytest.approx(0.39894228, abs=1e-8)
    assert distance_pdf(GaussianDistanceModel(5, 4), 5) == pytest.approx(1 / math.sqrt(8 * math.pi), rel=1e-12)
    m = GaussianDistanceModel(3, 2)
    for d in np.linspace(0, 5, 11):
        assert distance_pdf(m, 3 + d) == pytest.approx(distance_pdf(m, 3 - d), rel=1e-12)


def test_nonpositive_variance_rejected():
    with pytest.raises(NonPositiveVariance):
        distance_pdf(GaussianDistanceModel(0, 0), 0)
    with pytest.raises(NonPositiveVariance):
        distance_cdf(GaussianDistanceModel(0, -1), 1)


def test_cdf_values():
    assert distance_cdf(GaussianDistanceModel(0, 1), 0) == 0
    assert distance_cdf(GaussianDistanceModel(0, 1), 8) == pytest.approx(0.5, abs=1e-9)
    assert distance_cdf(GaussianDistanceModel(100, 25), 100) == pytest.approx(erf_cdf(100, 25, 100), abs=1e-9)
    assert distance_cdf(GaussianDistanceModel(100, 25), 100) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(NegativeRadius):
        distance_cdf(GaussianDistanceModel(0, 1), -0.1)


def test_cdf_against_erf_oracle_grid():
    for mean, var in [(0, 1), (50, 400), (-3, 2), (250, 10_000), (10, 0.01)]:
        m = GaussianDistanceModel(mean, var)
        for r in np.linspace(0, mean + 6 * math.sqrt(var) + 1, 25):
            if r >= 0:
                assert distance_cdf(m, r) == pytest.approx(erf_cdf(mean, var, r), abs=1e-9)


def test_normalization_mass():
    for mean, var in [(0, 1), (1e3, 1e4), (-7, 0.5)]:
        mass = normalization_mass(GaussianDistanceModel(mean, var))
        assert 1 - 1e-6 <= mass <= 1


def test_efficiency():
    m = GaussianDistanceModel(0, 1)
    assert efficiency(m, 0) == 0
    assert efficiency(m, 50) == pytest.approx(50.0, abs=1e-7)
    effs = [efficiency(GaussianDistanceModel(80, 900), r) for r in np.linspace(0, 300, 61)]
    assert all(b >= a for a, b in zip(effs, effs[1:]))


def test_fit_gaussian():
    assert fit_gaussian([0, 2]) == GaussianDistanceModel(1.0, 2.0)
    degenerate = fit_gaussian([1, 1, 1, 1])
    assert degenerate.variance == 0
    with pytest.raises(NonPositiveVariance):
        distance_pdf(degenerate, 1)
    with pytest.raises(InsufficientSamples):
        fit_gaussian([3.0])
    xs = RngStream(4, "fit").gen.normal(5.0, 3.0, size=100_000)
    fit = fit_gaussian(xs)
    assert abs(fit.mean - 5) < 0.05
    assert abs(fit.variance - 9) < 0.3


# --- epoch sampler


def test_epoch_sample_count():
    out = simulate_epochs(EpochModelParams(), 10.0, RngStream(0, "e"), cadence=0.3)
    assert len(out) == math.floor(10 / 0.3) + 1


def test_stationary_epochs():
    out = simulate_epochs(EpochModelParams(speed_range=(0.0, 0.0)), 50.0, RngStream(0, "e"), initial=42.0)
    assert np.all(out == 42.0)


@pytest.mark.parametrize("params", [EpochModelParams(epoch_rate=0), EpochModelParams(speed_range=(5, 1)),
                                    EpochModelParams(speed_range=(-1, 1))])
def test_epoch_params_validated(params):
    with pytest.raises(InvalidParams):
        simulate_epochs(params, 10.0, RngStream(0, "e"))


def test_velocity_moments_match_sampling():
    p = EpochModelParams(speed_range=(5.0, 25.0), heading_mean=0.3, heading_spread=1.0)
    rng = np.random.default_rng(1)
    v = rng.uniform(5, 25, 400_000) * np.cos(0.3 + rng.uniform(-1, 1, 400_000))
    mean, var = p.velocity_moments()
    assert mean == pytest.approx(v.mean(), rel=5e-3)
    assert var == pytest.approx(v.var(), rel=1e-2)


def test_epoch_end_points_are_gaussian():
    params = epoch_params_for_variance(400.0, horizon=100.0)
    rng = RngStream(21, "epochs")
    ends = np.array([simulate_epochs(params, 100.0, rng, cadence=100.0, initial=300.0)[-1]
                     for _ in range(10_000)])
    fit = fit_gaussian(ends)
    ks = stats.kstest(ends, "norm", args=(fit.mean, math.sqrt(fit.variance))).statistic
    assert ks < 0.05
    assert abs(fit.mean - 300.0) < 1.0
    assert fit.variance == pytest.approx(400.0, rel=0.1)


def test_monte_carlo_cdf_tracks_model():
    model = GaussianDistanceModel(60.0, 900.0)
    radii = [0, 30, 60, 90, 120]
    mc = monte_carlo_cdf(model, radii, 3000, RngStream(2, "mc"))
    exact = [distance_cdf(model, r) for r in radii]
    assert np.max(np.abs(mc - exact)) < 0.04
