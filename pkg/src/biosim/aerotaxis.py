"""Aerotactic band formation in a capillary.

A two-speed advection-reaction model for right- and left-moving bacteria
coupled to a diffusing, consumed oxygen field, plus the matching
steady-state and quasi-steady-state algebra, a Monte-Carlo comparator for
slow turning-rate adaptation, the drift-diffusion reduction of the
telegraph system, and a two-part receptor ("piston") toy model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    Bracket,
    Grid1D,
    Trajectory,
    ftcs_diffusion_step,
    rk4_integrate,
    solve_scalar_root,
    upwind_advection_reaction_step,
)


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class TurningThresholds:
    """Oxygen levels and rates defining the piecewise turning functions.

    The band is preferred between l_min and l_max; lt_min and lt_max are
    the outer detection thresholds.  c_low is the small in-band rate,
    c_high the large out-of-band rate.
    """

    lt_min: float
    l_min: float
    l_max: float
    lt_max: float
    c_low: float
    c_high: float

    def __post_init__(self):
        if not (0 <= self.lt_min < self.l_min < self.l_max < self.lt_max):
            raise ValueError("thresholds must satisfy 0 <= lt_min < l_min < l_max < lt_max")
        if not (0 <= self.c_low < self.c_high):
            raise ValueError("rates must satisfy 0 <= c_low < c_high")


@dataclass(frozen=True)
class AerotaxisParams:
    """Nondimensional parameters of the band-formation run."""

    v: float = 0.2
    D: float = 0.01
    kappa: float = 0.018
    L0: float = 1.0
    b0: float = 1.0
    domain_length: float = 1.0
    grid: Grid1D = field(default_factory=lambda: Grid1D(n=40, dx=1.0 / 39.0, dt=0.01))
    thresholds: TurningThresholds = field(
        default_factory=lambda: TurningThresholds(0.2, 0.35, 0.45, 0.7, 0.0, 80.0)
    )

    def __post_init__(self):
        for name in ("v", "D", "kappa", "L0", "b0", "domain_length"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        cfl = self.v * self.grid.dt / self.grid.dx
        dnum = self.D * self.grid.dt / self.grid.dx**2
        if cfl > 1:
            raise ValueError(f"CFL number {cfl:.3g} exceeds 1")
        if dnum > 0.5:
            raise ValueError(f"diffusion number {dnum:.3g} exceeds 0.5")


@dataclass
class CellField:
    """Right-movers, left-movers and oxygen on the grid."""

    r: np.ndarray
    l: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.l = np.asarray(self.l, dtype=float)
        self.L = np.asarray(self.L, dtype=float)
        if not (len(self.r) == len(self.l) == len(self.L)):
            raise ValueError("fields must share the grid")
        if (self.r < 0).any() or (self.l < 0).any() or (self.L < 0).any():
            raise ValueError("fields must be nonnegative")

    @property
    def density(self) -> np.ndarray:
        return self.r + self.l

    def total(self, dx: float) -> float:
        return float(self.density.sum()) * dx


@dataclass
class BandMetrics:
    has_band: bool
    width_h: float = float("nan")
    distance_d: float = float("nan")
    ratio_front: float = float("nan")
    ratio_behind: float = float("nan")
    formation_time: float = float("nan")


@dataclass
class SteadyStateSolution:
    """Piecewise steady profile constants for one oxygen regime.

    Lengths d (front), h (band) and z (depletion tail) are measured in the
    same unit as the run length s; lam is exp(z / s).
    """

    regime: str
    B: float
    c1: float
    c2: float
    c3: float
    d: float
    h: float
    z: float
    s: float
    k: float
    lam: float
    L0: float
    l_min: float
    l_max: float

    def oxygen(self, x) -> np.ndarray:
        """Evaluate the reconstructed piecewise oxygen profile."""
        x = np.asarray(x, dtype=float)
        kB, s = self.k * self.B, self.s
        d, h, z = self.d, self.h, self.z
        out = np.zeros_like(x)
        if self.regime == "general":
            front = x <= d
            out[front] = (
                self.L0 - self.c1 * x[front]
                + kB * s**2 * (np.exp((x[front] - d) / s) - math.exp(-d / s))
            )
            band = (x > d) & (x <= d + h)
            xi = x[band] - d
            out[band] = self.l_max - self.c2 * xi + 0.5 * kB * xi**2
            tail = (x > d + h) & (x <= d + h + z)
            xi = x[tail] - d - h
            out[tail] = self.l_min - self.c3 * xi + kB * s**2 * (np.exp(-xi / s) - 1.0)
        elif self.regime == "intermediate":
            band = x <= h
            out[band] = self.L0 + self.c1 * x[band] + 0.5 * kB * x[band] ** 2
            tail = (x > h) & (x <= h + z)
            xi = x[tail] - h
            out[tail] = (self.l_min + self.c2 * xi
                         + kB * s**2 * (np.exp(-xi / s) - 1.0))
        else:  # low: a single depletion layer, no band
            layer = x <= z
            out[layer] = (self.L0 + self.c1 * x[layer]
                          + kB * s**2 * (np.exp(-x[layer] / s) - 1.0))
        return out


@dataclass(frozen=True)
class MonteCarloConfig:
    """Biased random-walk comparator settings.

    t_a is the adaptation (memory) time of the turning-rate pulse fired
    when a walker exits the favourable band.  t_a = 0 selects the
    instant-adaptation limit: the rate tracks the current stimulus with
    no lag, so a walker receding from the band turns at rate c and an
    approaching one does not turn at all.
    """

    v: float = 1.0
    c: float = 50.0
    t_a: float = 0.02
    band_half_width: float = 1.0
    wall_half_width: float = 2.0
    n_trials: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.band_half_width < self.wall_half_width:
            raise ValueError("need 0 < band_half_width < wall_half_width")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")


@dataclass(frozen=True)
class PistonParams:
    """Two-part receptor: fast part tracks the driving signal, slow part lags."""

    z_f0: float = 0.0
    delta_z: float = 1.0
    c0: float = 1.0
    c1: float = 1.0
    k: float = 1.0
    tau: float = 0.5
    lock_tol: float = 0.05

    def __post_init__(self):
        if self.tau <= 0 or self.delta_z <= 0 or self.lock_tol <= 0:
            raise ValueError("tau, delta_z and lock_tol must be positive")


# --------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class CharacteristicScales:
    """Unit choices: 2 mm, 10 s, 1 uM/ml oxygen, 2e7 cells/ml bacteria."""

    length_m: float = 2e-3
    time_s: float = 10.0
    oxygen_uM_per_ml: float = 1.0
    bacteria_per_ml: float = 2e7


def nondimensionalize(speed_m_per_s: float, diffusivity_m2_per_s: float,
                      turning_rate_per_s: float, consumption_uM_per_cell_s: float,
                      scales: CharacteristicScales = CharacteristicScales()):
    """Convert dimensional inputs to the model's nondimensional set.

    Speed scales by time/length, diffusivity by time/length^2, rates by
    time, and consumption as kappa = k * t0 * b0 / L0.
    """
    for val in (speed_m_per_s, diffusivity_m2_per_s, turning_rate_per_s,
                consumption_uM_per_cell_s):
        if val <= 0:
            raise ValueError("dimensional inputs must be positive")
    x0, t0 = scales.length_m, scales.time_s
    return {
        "v": speed_m_per_s * t0 / x0,
        "D": diffusivity_m2_per_s * t0 / x0**2,
        "turning": turning_rate_per_s * t0,
        "kappa": consumption_uM_per_cell_s * t0 * scales.bacteria_per_ml
        / scales.oxygen_uM_per_ml,
    }


# --------------------------------------------------------------------------
# turning rates and the PDE run


def turning_rates(L, th: TurningThresholds):
    """Piecewise-constant turning-rate pair (f_rl, f_lr) at oxygen level L.

    Bins are half-open, [lo, hi).  The pair is written for an axis that
    points from the closed end of the capillary toward the oxygen source.
    """
    L = np.asarray(L, dtype=float)
    c, C = th.c_low, th.c_high
    f_rl = np.select(
        [L < th.lt_min, L < th.l_min, L < th.l_max, L < th.lt_max],
        [C, c, c, C],
        default=C,
    )
    f_lr = np.select(
        [L < th.lt_min, L < th.l_min, L < th.l_max, L < th.lt_max],
        [C, C, c, c],
        default=C,
    )
    if L.ndim == 0:
        return float(f_rl), float(f_lr)
    return f_rl, f_lr


def simulate_band(params: AerotaxisParams, t_end: float = 30.0,
                  sample_every: int = 100):
    """Run the band-formation model from the standard initial state.

    Starts from uniform bacteria (r = l = b0/2) and oxygen L0 held at node
    0, zero elsewhere.  Returns (times, list of CellField) sampled every
    sample_every steps, always including the final state.
    """
    grid = params.grid
    n = grid.n
    r = np.full(n, params.b0 / 2)
    l = np.full(n, params.b0 / 2)
    L = np.zeros(n)
    L[0] = params.L0
    steps = int(round(t_end / grid.dt))
    times = [0.0]
    fields = [CellField(r.copy(), l.copy(), L.copy())]
    for step in range(1, steps + 1):
        f_rl, f_lr = turning_rates(L, params.thresholds)
        # the grid points the other way (oxygen source at node 0), so the
        # two rates of the threshold table swap roles
        r, l = upwind_advection_reaction_step(r, l, params.v, f_lr, f_rl, grid)
        L = ftcs_diffusion_step(L, params.D, grid, bc=("dirichlet", "zero-flux"))
        L = np.maximum(L - grid.dt * params.kappa * (r + l), 0.0)
        L[0] = params.L0
        if step % sample_every == 0 or step == steps:
            times.append(step * grid.dt)
            fields.append(CellField(r.copy(), l.copy(), L.copy()))
    return np.array(times), fields


def band_metrics(cf: CellField, grid: Grid1D) -> BandMetrics:
    """Locate the band as the contiguous region at or above half maximum.

    Front is the region between the oxygen source (node 0) and the band,
    behind the region past it; ratios are of region means.
    """
    b = cf.density
    bmax = float(b.max())
    mean = float(b.mean())
    if mean <= 0 or bmax / mean < 2:
        return BandMetrics(has_band=False)
    am = int(np.argmax(b))
    half = 0.5 * bmax
    lo = am
    while lo > 0 and b[lo - 1] >= half:
        lo -= 1
    hi = am
    while hi < len(b) - 1 and b[hi + 1] >= half:
        hi += 1
    band_mean = float(b[lo:hi + 1].mean())
    front = b[:lo]
    behind = b[hi + 1:]
    ratio_front = band_mean / float(front.mean()) if front.size else float("inf")
    ratio_behind = band_mean / float(behind.mean()) if behind.size else float("inf")
    return BandMetrics(
        has_band=True,
        width_h=(hi - lo + 1) * grid.dx,
        distance_d=lo * grid.dx,
        ratio_front=ratio_front,
        ratio_behind=ratio_behind,
    )


def band_formation_time(times, fields, grid: Grid1D):
    """First sampled time with a detectable band, or nan."""
    for t, cf in zip(times, fields):
        if band_metrics(cf, grid).has_band:
            return float(t)
    return float("nan")


# --------------------------------------------------------------------------
# steady-state algebra


def _k_and_s(params: AerotaxisParams, k, s):
    if k is None:
        k = params.kappa / params.D
    if s is None:
        s = params.v / (params.thresholds.c_high - params.thresholds.c_low)
    return k, s


def steady_state_general(params: AerotaxisParams, l_min: float, l_max: float,
                         k: float | None = None, s: float | None = None
                         ) -> SteadyStateSolution:
    """Fully developed three-region steady state for L0 > l_max.

    z is the leading-order depletion length alpha*s with
    alpha = 1 + l_min / (k b0 s^2); h is the exact positive root of the
    band-width quadratic y^2 - 2 y (lam-1)/lam - u = 0; d is the
    leading-order front length s (L0 / (k b0 s^2 lam) + 1) / 2.
    """
    k, s = _k_and_s(params, k, s)
    L0, b0 = params.L0, params.b0
    if not L0 > l_max:
        raise ValueError("general regime needs L0 > l_max")
    alpha = 1.0 + l_min / (k * b0 * s**2)
    z = alpha * s
    lam = math.exp(z / s)
    B = b0 * lam
    gamma = (lam - 1.0) / lam
    u = 2.0 * (l_max - l_min) / (k * b0 * s**2 * lam)
    y = gamma + math.sqrt(gamma * gamma + u)
    h = y * s
    d = s * (L0 / (k * b0 * s**2 * lam) + 1.0) / 2.0
    c3 = k * b0 * s
    c1 = k * b0 * (s + h * lam)
    c2 = c1 - k * B * s
    return SteadyStateSolution("general", B, c1, c2, c3, d, h, z, s, k, lam,
                               L0, l_min, l_max)


def steady_state_intermediate(params: AerotaxisParams, l_min: float,
                              l_max: float, k: float | None = None,
                              s: float | None = None) -> SteadyStateSolution:
    """Two-region steady state for l_min < L0 < l_max: band at the source.

    z solves e^zeta - zeta - alpha = 0; h is the positive root of the
    quadratic obtained from flux matching at the band's back edge, with
    beta = k b0 e^(z/s).
    """
    k, s = _k_and_s(params, k, s)
    L0, b0 = params.L0, params.b0
    if not l_min < L0 < l_max:
        raise ValueError("intermediate regime needs l_min < L0 < l_max")
    alpha = 1.0 + l_min / (k * b0 * s**2)
    g = lambda zeta: math.exp(zeta) - zeta - alpha
    hi = 1.0
    while g(hi) < 0:
        hi *= 2
    zeta = solve_scalar_root(g, Bracket(1e-12, hi), tol=1e-12)
    z = zeta * s
    lam = math.exp(zeta)
    beta = k * b0 * lam
    B = b0 * lam
    # h^2 + 2 [s - s^2/z + (k b0 s^2 + l_min)/(z beta)] h + 2 (l_min - L0)/beta = 0
    p = s - s**2 / z + (k * b0 * s**2 + l_min) / (z * beta)
    q = 2.0 * (l_min - L0) / beta
    h = -p + math.sqrt(p * p - q)
    c1 = (l_min - L0) / h - 0.5 * beta * h
    c2 = (beta * s**2 * (1.0 - 1.0 / lam) - l_min) / z
    return SteadyStateSolution("intermediate", B, c1, c2,
                               k * b0 * s, 0.0, h, z, s, k, lam,
                               L0, l_min, l_max)


def steady_state_low(params: AerotaxisParams, l_min: float,
                     k: float | None = None, s: float | None = None
                     ) -> SteadyStateSolution:
    """Single-region steady state for L0 < l_min: no band forms.

    The depletion length solves the flux balance in its primitive form
    e^zeta - zeta - 1 = L0 / (k b0 s^2), which has exactly one
    nonnegative root.
    """
    k, s = _k_and_s(params, k, s)
    L0, b0 = params.L0, params.b0
    if not L0 < l_min:
        raise ValueError("low regime needs L0 < l_min")
    target = L0 / (k * b0 * s**2)
    if target == 0.0:
        zeta = 0.0
    else:
        g = lambda zeta: math.exp(zeta) - zeta - 1.0 - target
        hi = 1.0
        while g(hi) < 0:
            hi *= 2
        zeta = solve_scalar_root(g, Bracket(1e-15, hi), tol=1e-13)
    z = zeta * s
    lam = math.exp(zeta)
    return SteadyStateSolution("low", b0 * lam, k * b0 * s, float("nan"),
                               float("nan"), 0.0, 0.0, z, s, k, lam,
                               L0, l_min, l_min)


def quasi_steady_state(L0: float, l_max: float, k_b0: float):
    """Two-region estimate for the band-building window.

    d = sqrt(L0 / (k b0)), h = 2 l_max / (k b0 d), B/b0 = (d + h)/h and
    c1 = (L0 - l_max)/d.  Valid while d >> h; the returned dict carries
    an assumption flag that clears when d < 5 h.
    """
    if L0 <= 0 or l_max <= 0 or k_b0 <= 0:
        raise ValueError("L0, l_max and k*b0 must be positive")
    d = math.sqrt(L0 / k_b0)
    h = 2.0 * l_max / (k_b0 * d)
    B_over_b0 = (d + h) / h
    return {
        "d": d,
        "h": h,
        "B_over_b0": B_over_b0,
        "c1": (L0 - l_max) / d,
        "assumption_ok": d >= 5.0 * h,
    }


def rear_arrival_time(distance: float, speed: float, turning_rate: float) -> float:
    """Diffusive time for rear cells to cover `distance` with run-and-turn
    motility of diffusivity speed^2 / turning_rate."""
    return distance**2 * turning_rate / speed**2


def keller_segel_coefficients(v: float, sigma_plus: float, sigma_minus: float):
    """Drift-diffusion reduction of the telegraph system.

    mu = v^2 / (2 sigma0) and chi = v (sigma+ - sigma-) / (2 sigma0) with
    sigma0 the mean turning rate.
    """
    sigma0 = 0.5 * (sigma_plus + sigma_minus)
    if sigma0 <= 0:
        raise ValueError("mean turning rate must be positive")
    delta = 0.5 * (sigma_plus - sigma_minus)
    return v**2 / (2.0 * sigma0), v * delta / sigma0


# --------------------------------------------------------------------------
# Monte-Carlo comparator


def monte_carlo_slow_adaptation(cfg: MonteCarloConfig, t_end: float = 80.0,
                                dt: float = 0.01, burn_in: float | None = None):
    """Density ratio inside vs outside the favourable band for walkers
    whose turning rate after leaving the band decays as c exp(-age/t_a).

    Walkers start at the centre, move at speed v, never turn inside the
    band, and reflect off the outer walls.  Turns are drawn with the
    exact per-step thinning probability 1 - exp(-sigma dt).  Trials use
    independent RNG streams keyed by (seed, trial), processed in chunks.
    """
    if burn_in is None:
        burn_in = 0.1 * t_end
    steps = int(round(t_end / dt))
    band, wall = cfg.band_half_width, cfg.wall_half_width
    time_in = 0.0
    time_out = 0.0
    chunk = 1000
    for start in range(0, cfg.n_trials, chunk):
        m = min(chunk, cfg.n_trials - start)
        rngs = [np.random.default_rng((cfg.seed, start + i)) for i in range(m)]
        draws = np.stack([rng.random(steps + 1) for rng in rngs])
        x = np.zeros(m)
        sgn = np.where(draws[:, -1] < 0.5, 1.0, -1.0)
        age = np.zeros(m)
        outside = np.zeros(m, dtype=bool)
        for j in range(steps):
            x = x + sgn * cfg.v * dt
            over = x > wall
            x[over] = 2 * wall - x[over]
            sgn[over] = -1.0
            under = x < -wall
            x[under] = -2 * wall - x[under]
            sgn[under] = 1.0
            out_now = np.abs(x) > band
            age = np.where(out_now & ~outside, 0.0, age + dt)
            outside = out_now
            if cfg.t_a > 0:
                sigma = np.where(outside, cfg.c * np.exp(-age / cfg.t_a), 0.0)
            else:
                receding = np.sign(x) * sgn > 0
                sigma = np.where(outside & receding, cfg.c, 0.0)
            turn = draws[:, j] < -np.expm1(-sigma * dt)
            sgn[turn] = -sgn[turn]
            t = (j + 1) * dt
            if t > burn_in:
                n_out = int(out_now.sum())
                time_out += n_out * dt
                time_in += (m - n_out) * dt
    dens_in = time_in / (2.0 * band)
    dens_out = time_out / (2.0 * (wall - band))
    return {"inside_outside_ratio": dens_in / dens_out if dens_out > 0 else float("inf")}


# --------------------------------------------------------------------------
# piston receptor


def piston_separation_closed_form(p: PistonParams, ramp_sign: int, t):
    """Fast-minus-slow position for a linear signal ramp, exactly."""
    t = np.asarray(t, dtype=float)
    lag = ramp_sign * p.c1 * p.k * p.tau
    return p.delta_z + lag * (1.0 - np.exp(-t / p.tau))


def piston_receptor_simulate(p: PistonParams, ramp_sign: int, t_end: float,
                             h: float | None = None):
    """Integrate the slow receptor part against the fast one.

    The driving signal is c0 +/- k t; the fast part sits at its
    equilibrium at all times while the slow part relaxes toward its own
    with time constant tau.  Returns the (z_f, z_s) trajectory and the
    times at which the two parts first come within lock_tol (tumble
    events).
    """
    if ramp_sign not in (-1, 1):
        raise ValueError("ramp_sign must be +1 or -1")
    if h is None:
        h = p.tau / 50.0

    def signal(t):
        return ramp_sign * p.k * t + p.c0

    def z_fast(t):
        return p.z_f0 + p.c1 * signal(t)

    def z_slow_target(t):
        return p.z_f0 - p.delta_z + p.c1 * signal(t)

    rhs = lambda t, y: (z_slow_target(t) - y) / p.tau
    zs0 = z_slow_target(0.0)
    traj = rk4_integrate(rhs, [zs0], 0.0, t_end, h)
    zf = z_fast(traj.times)
    zs = traj.states[:, 0]
    sep = zf - zs
    locked = np.abs(sep) <= p.lock_tol
    events = [float(traj.times[i]) for i in range(1, len(locked))
              if locked[i] and not locked[i - 1]]
    states = np.column_stack([zf, zs])
    return Trajectory(traj.times, states), events
