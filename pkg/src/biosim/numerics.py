"""Shared low-level numerical kernels.

Fixed-step time integrators, explicit finite-difference steps for 1-D
transport and diffusion, a bracketed scalar root finder, and small dense
linear algebra.  Everything here is a pure function of value-semantic
inputs and is safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NumericsError(Exception):
    """Base class for numerical-kernel failures."""


class StabilityError(NumericsError):
    """An explicit scheme was asked to take an unstable step."""


class IntegrationError(NumericsError):
    """A time integrator met a non-finite value."""


class BracketError(NumericsError):
    """Root bracket does not enclose a sign change."""


class SingularMatrixError(NumericsError):
    def __init__(self, pivot_index: int, pivot_value: float):
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        super().__init__(
            f"matrix numerically singular: pivot {pivot_index} has magnitude "
            f"{abs(pivot_value):.3e}"
        )


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D grid: node count, spacing and time step."""

    n: int
    dx: float
    dt: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {self.n}")
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("dx and dt must be positive")

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket must satisfy lo < hi, got [{self.lo}, {self.hi}]")


@dataclass
class Trajectory:
    """Time series of state vectors; times strictly increasing, values finite."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.states))):
            raise ValueError("trajectory contains non-finite values")

    def __len__(self) -> int:
        return len(self.times)

    def final(self) -> np.ndarray:
        return self.states[-1]


def _step_times(t0: float, t1: float, h: float) -> np.ndarray:
    """Times for fixed steps of h from t0, with a short final step onto t1."""
    if h <= 0:
        raise ValueError("step size must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    n_full = int(math.floor((t1 - t0) / h + 1e-9))
    times = t0 + h * np.arange(n_full + 1)
    if times[-1] < t1 - 1e-9 * h:
        times = np.append(times, t1)
    else:
        times[-1] = t1
    return times


def rk4_integrate(rhs, y0, t0: float, t1: float, h: float) -> Trajectory:
    """Classical four-stage Runge-Kutta with a fixed step.

    rhs(t, y) must return dy/dt.  The local truncation error is O(h^5),
    global O(h^4).  Aborts with the offending time if the derivative or
    state turns non-finite.
    """
    times = _step_times(t0, t1, h)
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    states = np.empty((len(times), y.size))
    states[0] = y
    for i in range(len(times) - 1):
        t = times[i]
        dt = times[i + 1] - t
        k1 = np.asarray(rhs(t, y))
        if not np.all(np.isfinite(k1)):
            raise IntegrationError(f"non-finite derivative at t={t!r}")
        k2 = np.asarray(rhs(t + dt / 2, y + dt / 2 * k1))
        k3 = np.asarray(rhs(t + dt / 2, y + dt / 2 * k2))
        k4 = np.asarray(rhs(t + dt, y + dt * k3))
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state after step at t={times[i + 1]!r}")
        states[i + 1] = y
    return Trajectory(times, states)


def euler_integrate(rhs, y0, t0: float, t1: float, h: float) -> Trajectory:
    """Explicit Euler with a fixed step; first order."""
    times = _step_times(t0, t1, h)
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    states = np.empty((len(times), y.size))
    states[0] = y
    for i in range(len(times) - 1):
        t = times[i]
        dt = times[i + 1] - t
        k = np.asarray(rhs(t, y))
        if not np.all(np.isfinite(k)):
            raise IntegrationError(f"non-finite derivative at t={t!r}")
        y = y + dt * k
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state after step at t={times[i + 1]!r}")
        states[i + 1] = y
    return Trajectory(times, states)


def ftcs_diffusion_step(field, diffusivity: float, grid: Grid1D,
                        bc=("zero-flux", "zero-flux")) -> np.ndarray:
    """One forward-time centred-space diffusion step.

    bc gives the (left, right) boundary kind, each "zero-flux" (mirrored
    ghost node) or "dirichlet" (boundary value held fixed).  Requires the
    diffusion number diffusivity*dt/dx^2 <= 1/2.
    """
    f = np.asarray(field, dtype=float)
    nu = diffusivity * grid.dt / grid.dx**2
    if nu > 0.5 + 1e-12:
        raise StabilityError(
            f"diffusion number {nu:.4g} exceeds the explicit limit 0.5"
        )
    lap = np.zeros_like(f)
    lap[1:-1] = f[2:] - 2 * f[1:-1] + f[:-2]
    left, right = bc
    if left == "zero-flux":
        lap[0] = 2 * (f[1] - f[0])
    elif left != "dirichlet":
        raise ValueError(f"unknown boundary kind {left!r}")
    if right == "zero-flux":
        lap[-1] = 2 * (f[-2] - f[-1])
    elif right != "dirichlet":
        raise ValueError(f"unknown boundary kind {right!r}")
    return f + nu * lap


def upwind_advection_reaction_step(r, l, v: float, frl, flr, grid: Grid1D):
    """One step of the two-speed advection-reaction system.

    Right-movers r are differenced backward, left-movers l forward
    (upwind for each).  Wall outflow is added to the opposite-direction
    density at the same node, so the total population is conserved
    exactly.  frl and flr are per-node turning-rate fields.  Requires
    CFL = v*dt/dx <= 1.
    """
    r = np.asarray(r, dtype=float)
    l = np.asarray(l, dtype=float)
    c = v * grid.dt / grid.dx
    if c > 1 + 1e-12:
        raise StabilityError(f"CFL number {c:.4g} exceeds 1")
    rt = np.empty_like(r)
    lt = np.empty_like(l)
    rt[1:] = (1 - c) * r[1:] + c * r[:-1]
    rt[0] = (1 - c) * r[0] + c * l[0]
    lt[:-1] = (1 - c) * l[:-1] + c * l[1:]
    lt[-1] = (1 - c) * l[-1] + c * r[-1]
    swap = grid.dt * (np.asarray(frl) * r - np.asarray(flr) * l)
    return rt - swap, lt + swap


def solve_scalar_root(f, bracket: Bracket, tol: float = 1e-12,
                      max_iter: int = 200) -> float:
    """Bisection on a sign-changing bracket.

    Stops when |f| <= tol or the bracket width falls below tol.
    """
    lo, hi = bracket.lo, bracket.hi
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo!r}, f(hi)={fhi!r}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) <= tol or (hi - lo) <= tol:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def solve_linear_dense(A, b) -> np.ndarray:
    """Solve Ax = b by Gaussian elimination with partial pivoting.

    Raises SingularMatrixError naming the failing pivot when a pivot
    magnitude falls below 1e-12 relative to the matrix scale.
    """
    M = np.array(A, dtype=float)
    x = np.array(b, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n) or x.shape != (n,):
        raise ValueError("need square A and matching b")
    scale = max(np.abs(M).max(), 1.0)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        if abs(M[piv, col]) <= 1e-12 * scale:
            raise SingularMatrixError(col, M[piv, col])
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
            x[[col, piv]] = x[[piv, col]]
        inv = 1.0 / M[col, col]
        for row in range(col + 1, n):
            factor = M[row, col] * inv
            if factor != 0.0:
                M[row, col:] -= factor * M[col, col:]
                x[row] -= factor * x[col]
    for col in range(n - 1, -1, -1):
        x[col] = (x[col] - M[col, col + 1:] @ x[col + 1:]) / M[col, col]
    return x


def eig2(A):
    """Eigenvalues and eigenvectors of a real 2x2 matrix.

    Roots of lambda^2 - tr(A) lambda + det(A); a complex pair is returned
    as conjugates.  Eigenvectors are the columns of the returned matrix.
    """
    M = np.asarray(A, dtype=float)
    a, b = M[0]
    c, d = M[1]
    tr = a + d
    det = a * d - b * c
    disc = tr * tr - 4 * det
    if disc >= 0:
        root = math.sqrt(disc)
        lam1 = (tr + root) / 2
        lam2 = (tr - root) / 2
        dtype = float
    else:
        root = math.sqrt(-disc)
        lam1 = complex(tr / 2, root / 2)
        lam2 = complex(tr / 2, -root / 2)
        dtype = complex
    vecs = np.zeros((2, 2), dtype=dtype)
    for j, lam in enumerate((lam1, lam2)):
        v1 = np.array([b, lam - a], dtype=dtype)
        v2 = np.array([lam - d, c], dtype=dtype)
        v = v1 if np.abs(v1).sum() >= np.abs(v2).sum() else v2
        norm = np.sqrt(np.abs(v[0]) ** 2 + np.abs(v[1]) ** 2)
        if norm == 0:
            # scaled identity: any direction is an eigenvector
            v = np.array([1.0, 0.0] if j == 0 else [0.0, 1.0], dtype=dtype)
            norm = 1.0
        vecs[:, j] = v / norm
    return lam1, lam2, vecs
