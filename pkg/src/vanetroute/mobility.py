"""Highway kinematics and the Gaussian node-distance model.

Two halves live here. The simulation half places vehicles on a multi-lane,
bidirectional strip and moves them at constant speed (optionally on a ring
so density is preserved). The analytical half evaluates the normal density of
a node's distance from a highway segment, its integral from 0 to ``r``, and
the derived percentage, together with an epoch-based random-motion sampler
used to cross-check the Gaussian assumption.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import RngStream
from .errors import (
    InsufficientSamples,
    InvalidConfig,
    InvalidParams,
    NegativeRadius,
    NonPositiveVariance,
)

# ---------------------------------------------------------------- highway


@dataclass(frozen=True)
class HighwayConfig:
    length: float = 1000.0
    lanes: int = 4
    lane_width: float = 5.0
    directions: tuple[int, ...] | None = None
    wraparound: bool = True

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidConfig(f"highway length must be > 0, got {self.length}")
        if self.lanes < 1:
            raise InvalidConfig(f"need at least one lane, got {self.lanes}")
        if not self.lane_width > 0:
            raise InvalidConfig(f"lane width must be > 0, got {self.lane_width}")
        if self.directions is not None:
            if len(self.directions) != self.lanes or any(d not in (1, -1) for d in self.directions):
                raise InvalidConfig("directions must give +1 or -1 for every lane")

    def lane_heading(self, lane: int) -> int:
        if self.directions is not None:
            return self.directions[lane]
        # first half of the lanes run +x, the rest -x
        return 1 if lane < (self.lanes + 1) // 2 else -1

    def lane_y(self, lane: int) -> float:
        return (lane + 0.5) * self.lane_width


@dataclass(frozen=True)
class NodeKinematics:
    node_id: int
    x: float
    y: float
    lane_index: int
    speed: float
    heading: int

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def build_highway(cfg: HighwayConfig, n_nodes: int, speed: float, rng: RngStream) -> list[NodeKinematics]:
    """Spread ``n_nodes`` vehicles round-robin over the lanes at uniform random x."""
    if n_nodes < 2:
        raise InvalidConfig(f"need at least 2 nodes, got {n_nodes}")
    if speed < 0:
        raise InvalidConfig(f"speed must be non-negative, got {speed}")
    nodes = []
    for i in range(n_nodes):
        lane = i % cfg.lanes
        x = rng.uniform(0.0, cfg.length)
        nodes.append(NodeKinematics(i, x, cfg.lane_y(lane), lane, float(speed), cfg.lane_heading(lane)))
    return nodes


def step_kinematics(node: NodeKinematics, dt: float, cfg: HighwayConfig) -> NodeKinematics:
    if not dt > 0:
        raise InvalidConfig(f"dt must be > 0, got {dt}")
    x = node.x + node.heading * node.speed * dt
    if cfg.wraparound:
        x %= cfg.length
    return replace(node, x=x)


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class Fleet:
    """Vectorised closed-form positions for constant-velocity vehicles.

    ``positions(t)`` is exact for any ``t`` (no integration drift), which lets
    the channel query geometry only when a frame is actually sent.
    """

    def __init__(self, cfg: HighwayConfig, nodes: Sequence[NodeKinematics]):
        self.cfg = cfg
        self.x0 = np.array([n.x for n in nodes], dtype=float)
        self.y = np.array([n.y for n in nodes], dtype=float)
        self.vx = np.array([n.heading * n.speed for n in nodes], dtype=float)
        self._cache_t: float | None = None
        self._cache_x: np.ndarray | None = None

    def __len__(self):
        return len(self.x0)

    def xs(self, t: float) -> np.ndarray:
        if t != self._cache_t:
            x = self.x0 + self.vx * t
            if self.cfg.wraparound:
                x = np.mod(x, self.cfg.length)
            self._cache_t, self._cache_x = t, x
        return self._cache_x

    def positions(self, t: float) -> np.ndarray:
        return np.column_stack((self.xs(t), self.y))

    def distances_from(self, i: int, t: float) -> np.ndarray:
        """Distance from node ``i`` to every node; along-road offset wraps on a ring."""
        x = self.xs(t)
        dx = np.abs(x - x[i])
        if self.cfg.wraparound:
            dx = np.minimum(dx, self.cfg.length - dx)
        dy = self.y - self.y[i]
        return np.sqrt(dx * dx + dy * dy)


# ------------------------------------------------------ analytical model


@dataclass(frozen=True)
class GaussianDistanceModel:
    mean: float
    variance: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


def _check_variance(model: GaussianDistanceModel) -> None:
    if not model.variance > 0:
        raise NonPositiveVariance(f"variance must be > 0, got {model.variance}")


def distance_pdf(model: GaussianDistanceModel, r: float) -> float:
    _check_variance(model)
    d = r - model.mean
    return math.exp(-d * d / (2.0 * model.variance)) / math.sqrt(2.0 * math.pi * model.variance)


def _simpson_adaptive(f: Callable[[float], float], a: float, b: float, tol: float, max_depth: int = 60) -> float:
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, max_depth)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth - 1))
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth - 1))
    return total


def integrate_pdf(model: GaussianDistanceModel, a: float, b: float, tol: float = 1e-9) -> float:
    """Adaptive-Simpson integral of the distance density over [a, b].

    The interval is cut at whole multiples of sigma around the mean before
    refinement so a narrow peak can never fall between the first sample points.
    """
    _check_variance(model)
    if b <= a:
        return 0.0
    mu, s = model.mean, model.sigma
    inv_norm = 1.0 / math.sqrt(2.0 * math.pi * model.variance)
    two_var = 2.0 * model.variance

    def f(z):
        d = z - mu
        return inv_norm * math.exp(-d * d / two_var)

    k_lo = math.floor((a - mu) / s)
    k_hi = math.ceil((b - mu) / s)
    cuts = [a] + [mu + k * s for k in range(k_lo + 1, k_hi) if a < mu + k * s < b] + [b]
    per_cell = tol / (len(cuts) - 1)
    return sum(_simpson_adaptive(f, lo, hi, per_cell) for lo, hi in zip(cuts, cuts[1:]))


def pdf_mass(model: GaussianDistanceModel, a: float, b: float, tol: float = 1e-9) -> float:
    """Probability mass of the density on [a, b], clipped to [0, 1] against quadrature round-off."""
    return min(1.0, max(0.0, integrate_pdf(model, a, b, tol)))


def distance_cdf(model: GaussianDistanceModel, r: float, tol: float = 1e-9) -> float:
    """Probability mass of the distance density on [0, r].

    The density is not renormalised for the part below zero; mass is clipped to
    eight standard deviations either side of the mean, where the remainder is
    below double precision.
    """
    _check_variance(model)
    if r < 0:
        raise NegativeRadius(f"radius must be >= 0, got {r}")
    lo = max(0.0, model.mean - 8.0 * model.sigma)
    hi = min(r, model.mean + 8.0 * model.sigma)
    if hi <= lo:
        return 0.0
    return pdf_mass(model, lo, hi, tol)


def normalization_mass(model: GaussianDistanceModel) -> float:
    """Quadrature of the density over mean +/- 8 sigma (1 up to round-off)."""
    _check_variance(model)
    return pdf_mass(model, model.mean - 8.0 * model.sigma, model.mean + 8.0 * model.sigma)


def nonnegative_mass(model: GaussianDistanceModel) -> float:
    """Mass the model places on non-negative distances (the ceiling of the cdf)."""
    return distance_cdf(model, max(0.0, model.mean + 8.0 * model.sigma))


def efficiency(model: GaussianDistanceModel, r: float) -> float:
    """Communication efficiency in percent (cdf scaled by 100)."""
    return distance_cdf(model, r) * 100.0


def fit_gaussian(samples: Sequence[float]) -> GaussianDistanceModel:
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {arr.size}")
    return GaussianDistanceModel(float(arr.mean()), float(arr.var(ddof=1)))


# ------------------------------------------------------- epoch sampler


@dataclass(frozen=True)
class EpochModelParams:
    """Random-epoch motion along the axis through the segment.

    Each epoch lasts an exponential time, and carries a speed drawn uniformly
    from ``speed_range`` and a heading drawn uniformly from
    ``heading_mean ± heading_spread`` (radians). Only the along-axis component
    ``speed * cos(heading)`` changes the distance.
    """

    epoch_rate: float = 1.0
    speed_range: tuple[float, float] = (0.0, 30.0)
    heading_mean: float = 0.0
    heading_spread: float = math.pi

    def validate(self) -> None:
        lo, hi = self.speed_range
        if not self.epoch_rate > 0:
            raise InvalidParams(f"epoch_rate must be > 0, got {self.epoch_rate}")
        if lo < 0 or hi < lo:
            raise InvalidParams(f"speed_range must satisfy 0 <= min <= max, got {self.speed_range}")
        if self.heading_spread < 0:
            raise InvalidParams("heading_spread must be >= 0")

    def velocity_moments(self) -> tuple[float, float]:
        """Mean and variance of the along-axis velocity in one epoch."""
        lo, hi = self.speed_range
        es = 0.5 * (lo + hi)
        es2 = (lo * lo + lo * hi + hi * hi) / 3.0
        mu, w = self.heading_mean, self.heading_spread
        if w == 0:
            ec, ec2 = math.cos(mu), math.cos(mu) ** 2
        else:
            ec = math.cos(mu) * math.sin(w) / w
            ec2 = 0.5 + math.cos(2 * mu) * math.sin(2 * w) / (4 * w)
        mean = es * ec
        return mean, es2 * ec2 - mean * mean


def simulate_epochs(
    params: EpochModelParams,
    horizon: float,
    rng: RngStream,
    cadence: float = 1.0,
    initial: float = 0.0,
) -> np.ndarray:
    """Sample one piecewise-constant-velocity trajectory every ``cadence`` seconds."""
    params.validate()
    if not horizon > 0:
        raise InvalidParams(f"horizon must be > 0, got {horizon}")
    if not cadence > 0:
        raise InvalidParams(f"cadence must be > 0, got {cadence}")
    n = int(math.floor(horizon / cadence + 1e-9)) + 1
    times = np.arange(n) * cadence
    out = np.empty(n)
    lo, hi = params.speed_range

    t_start, x_start = 0.0, float(initial)
    t_end = vel = None
    for k, t in enumerate(times):
        while t_end is None or t >= t_end:
            if t_end is not None:
                x_start += vel * (t_end - t_start)
                t_start = t_end
            t_end = t_start + rng.exponential(params.epoch_rate)
            speed = lo if hi == lo else rng.uniform(lo, hi)
            w = params.heading_spread
            heading = params.heading_mean if w == 0 else params.heading_mean + rng.uniform(-w, w)
            vel = speed * math.cos(heading)
        out[k] = x_start + vel * (t - t_start)
    return out


def epoch_params_for_variance(variance: float, horizon: float = 100.0, epoch_rate: float = 1.0) -> EpochModelParams:
    """Zero-drift epoch parameters whose long-run spread after ``horizon`` is ``variance``.

    For iid velocities with exponential epochs of mean ``tau`` the displacement
    variance grows as ``2 * tau * Var(v) * t``; with full-circle headings and
    speeds uniform on [0, s] that variance is ``s**2 / 6``.
    """
    if not variance > 0:
        raise NonPositiveVariance(f"variance must be > 0, got {variance}")
    tau = 1.0 / epoch_rate
    var_v = variance / (2.0 * tau * horizon)
    return EpochModelParams(epoch_rate=epoch_rate, speed_range=(0.0, math.sqrt(6.0 * var_v)),
                            heading_mean=0.0, heading_spread=math.pi)


def monte_carlo_cdf(model: GaussianDistanceModel, radii: Sequence[float], n_traj: int, rng: RngStream,
                    horizon: float = 100.0) -> np.ndarray:
    """Fraction of epoch-model end points in [0, r], for each r in ``radii``."""
    _check_variance(model)
    params = epoch_params_for_variance(model.variance, horizon)
    ends = np.array([simulate_epochs(params, horizon, rng, cadence=horizon, initial=model.mean)[-1]
                     for _ in range(n_traj)])
    ends.sort()
    lo = np.searchsorted(ends, 0.0, side="left")
    return np.array([(np.searchsorted(ends, r, side="right") - lo) / n_traj for r in radii])
