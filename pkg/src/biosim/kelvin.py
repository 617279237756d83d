"""Viscoelastic Kelvin-body networks under steady and oscillatory forcing.

A Kelvin body is a spring-dashpot pair in series, in parallel with a
second spring.  Bodies compose in series (forces equal, deformations
add) and in parallel (deformations equal, forces split).  Parallel
groups integrate the state (u, a_1 F, ..., a_{n-1} F); the force-times-
coefficient form keeps the system matrix constant even when the forcing
crosses zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import Trajectory, eig2, rk4_integrate, solve_linear_dense


@dataclass(frozen=True)
class KelvinBody:
    """Dashpot viscosity eta1, isolated spring mu01, series spring mu11."""

    eta1: float
    mu01: float
    mu11: float

    def __post_init__(self):
        if min(self.eta1, self.mu01, self.mu11) <= 0:
            raise ValueError("all three parameters must be positive")

    def scaled(self, factor: float) -> "KelvinBody":
        return KelvinBody(self.eta1 * factor, self.mu01 * factor, self.mu11 * factor)


def material_params(kind: str) -> KelvinBody:
    """Standard bodies: actin, nucleus, or transmembrane."""
    table = {
        "actin": KelvinBody(5000.0, 50.0, 100.0),
        "nucleus": KelvinBody(10000.0, 200.0, 400.0),
        "transmembrane": KelvinBody(7.5, 100.0, 200.0),
    }
    try:
        return table[kind]
    except KeyError:
        raise ValueError(f"unknown material {kind!r}; know {sorted(table)}") from None


def relaxation_times(b: KelvinBody):
    """(tau_sigma, tau_epsilon): creep and strain relaxation times."""
    tau_sigma = b.eta1 / b.mu01 * (1.0 + b.mu01 / b.mu11)
    tau_epsilon = b.eta1 / b.mu11
    return tau_sigma, tau_epsilon


def convert_micropipette_params(a: float, delta_p: float, L0: float, Ls: float,
                                tau: float):
    """Body parameters from aspiration data.

    a: pipette radius, delta_p: applied pressure, L0/Ls: initial and
    steady deformations, tau: observed relaxation time.  Returns
    (force, KelvinBody); spring constants carry the units of
    force/deformation.
    """
    if min(a, delta_p, L0, Ls, tau) <= 0:
        raise ValueError("inputs must be positive")
    if Ls <= L0:
        raise ValueError("steady deformation must exceed the initial one")
    F = delta_p * math.pi * a * a
    mu01 = F / Ls
    mu11 = F / L0 - mu01
    eta1 = tau * mu01 * mu11 / (mu01 + mu11)
    return F, KelvinBody(eta1, mu01, mu11)


# --------------------------------------------------------------------------
# forcing


@dataclass(frozen=True)
class Forcing:
    kind: str           # "steady" or "oscillatory"
    F0: float
    omega: float = 0.0  # rad/s, oscillatory only

    def __post_init__(self):
        if self.kind not in ("steady", "oscillatory"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if not math.isfinite(self.F0):
            raise ValueError("F0 must be finite")
        if self.kind == "oscillatory" and self.omega <= 0:
            raise ValueError("oscillatory forcing needs omega > 0")

    @staticmethod
    def steady(F0: float) -> "Forcing":
        return Forcing("steady", F0)

    @staticmethod
    def oscillatory(F0: float, omega: float) -> "Forcing":
        return Forcing("oscillatory", F0, omega)

    def value(self, t):
        if self.kind == "steady":
            return self.F0 * np.ones_like(np.asarray(t, dtype=float))
        return self.F0 * np.cos(self.omega * np.asarray(t, dtype=float))

    def derivative(self, t):
        if self.kind == "steady":
            return np.zeros_like(np.asarray(t, dtype=float))
        return -self.F0 * self.omega * np.sin(self.omega * np.asarray(t, dtype=float))

    @property
    def period(self) -> float:
        if self.kind != "oscillatory":
            raise ValueError("period is defined for oscillatory forcing only")
        return 2.0 * math.pi / self.omega


# --------------------------------------------------------------------------
# single body and series


def single_body_deform(b: KelvinBody, f: Forcing, t_end: float,
                       h: float = 0.1) -> Trajectory:
    """Deformation u(t) from the instantaneous-spring initial state."""
    coef = b.eta1 * (1.0 + b.mu01 / b.mu11)
    lead = b.eta1 / b.mu11

    def rhs(t, y):
        return np.array([(float(f.value(t)) + lead * float(f.derivative(t))
                          - b.mu01 * y[0]) / coef])

    u0 = float(f.value(0.0)) / (b.mu01 + b.mu11)
    return rk4_integrate(rhs, [u0], 0.0, t_end, h)


def single_body_steady_closed_form(b: KelvinBody, F0: float, t):
    """Creep solution under constant force."""
    tau_sigma, tau_epsilon = relaxation_times(b)
    t = np.asarray(t, dtype=float)
    return F0 / b.mu01 * (1.0 - (1.0 - tau_epsilon / tau_sigma)
                          * np.exp(-t / tau_sigma))


@dataclass
class DeformationResult:
    """Per-element deformations, per-branch forces, and their sum."""

    times: np.ndarray
    element_u: dict
    branch_forces: dict
    total_u: np.ndarray


def series_deform(bodies, f: Forcing, t_end: float, h: float = 0.1,
                  labels=None) -> DeformationResult:
    """Same force through every body; total deformation is the sum."""
    if labels is None:
        labels = [f"body{i + 1}" for i in range(len(bodies))]
    element_u = {}
    times = None
    for label, b in zip(labels, bodies):
        traj = single_body_deform(b, f, t_end, h)
        times = traj.times
        element_u[label] = traj.states[:, 0]
    total = np.sum(list(element_u.values()), axis=0)
    forces = {label: f.value(times) for label in element_u}
    return DeformationResult(times, element_u, forces, total)


# --------------------------------------------------------------------------
# parallel groups


@dataclass(frozen=True)
class ParallelGroup:
    bodies: tuple

    def __post_init__(self):
        if len(self.bodies) < 1:
            raise ValueError("a group needs at least one body")
        object.__setattr__(self, "bodies", tuple(self.bodies))

    def __len__(self):
        return len(self.bodies)

    @property
    def mu0_sum(self) -> float:
        return sum(b.mu01 for b in self.bodies)

    @property
    def stiff_sum(self) -> float:
        return sum(b.mu01 + b.mu11 for b in self.bodies)


def parallel_assemble(g: ParallelGroup, F_at_0: float):
    """System matrices for the state (u, a_1 F, ..., a_{n-1} F).

    Row i < n couples body i+1's force share; the last row eliminates the
    nth share via force closure.  Returns (A, D, c_builder, u0) where
    c_builder(F, dF) produces the forcing vector.
    """
    n = len(g)
    if n < 2:
        raise ValueError("assembly needs at least two bodies")
    A = np.zeros((n, n))
    D = np.zeros((n, n))
    for i, b in enumerate(g.bodies):
        A[i, 0] = b.eta1 * (1.0 + b.mu01 / b.mu11)
        D[i, 0] = -b.mu01
        if i < n - 1:
            A[i, i + 1] = -b.eta1 / b.mu11
            D[i, i + 1] = 1.0
    last = g.bodies[-1]
    A[n - 1, 1:] = last.eta1 / last.mu11
    D[n - 1, 1:] = -1.0
    lead = last.eta1 / last.mu11

    def c_builder(F, dF):
        c = np.zeros(n)
        c[-1] = F + lead * dF
        return c

    u0 = np.zeros(n)
    u0[0] = F_at_0 / g.stiff_sum
    for i, b in enumerate(g.bodies[:-1]):
        u0[i + 1] = u0[0] * (b.mu01 + b.mu11)
    return A, D, c_builder, u0


def _invert(A):
    n = A.shape[0]
    cols = [solve_linear_dense(A, e) for e in np.eye(n)]
    return np.column_stack(cols)


def parallel_simulate(g: ParallelGroup, f: Forcing, t_end: float,
                      h: float = 0.1) -> DeformationResult:
    """Integrate the group state; the nth branch force is reconstructed
    from force closure."""
    n = len(g)
    if n == 1:
        traj = single_body_deform(g.bodies[0], f, t_end, h)
        u = traj.states[:, 0]
        return DeformationResult(traj.times, {"u": u},
                                 {"branch1": f.value(traj.times)}, u)
    A, D, c_builder, u0 = parallel_assemble(g, float(f.value(0.0)))
    Ainv = _invert(A)
    M = Ainv @ D

    def rhs(t, y):
        c = c_builder(float(f.value(t)), float(f.derivative(t)))
        return M @ y + Ainv @ c

    traj = rk4_integrate(rhs, u0, 0.0, t_end, h)
    u = traj.states[:, 0]
    F = f.value(traj.times)
    branches = {}
    partial = np.zeros_like(u)
    for i in range(n - 1):
        branches[f"branch{i + 1}"] = traj.states[:, i + 1]
        partial += traj.states[:, i + 1]
    branches[f"branch{n}"] = F - partial
    return DeformationResult(traj.times, {"u": u}, branches, u)


def rhs_closed_forms(g: ParallelGroup, F: float, dF: float):
    """Closed-form y = D^-1 c and x = A^-1 c via the sparse recurrences.

    y_1 = -(F + (eta_n/mu_1n) dF) / sum(mu_0i) and y_{i+1} = mu_0i y_1;
    x_1 = (F + (eta_n/mu_1n) dF) / (h_n + d_n sum(h_i / d_i)) with
    h_i = eta_i (1 + mu_0i / mu_1i), d_i = -eta_i / mu_1i, and
    x_{i+1} = -h_i x_1 / d_i.
    """
    n = len(g)
    last = g.bodies[-1]
    rhs_val = F + last.eta1 / last.mu11 * dF
    y = np.zeros(n)
    y[0] = -rhs_val / g.mu0_sum
    for i, b in enumerate(g.bodies[:-1]):
        y[i + 1] = b.mu01 * y[0]
    hs = [b.eta1 * (1.0 + b.mu01 / b.mu11) for b in g.bodies]
    ds = [-b.eta1 / b.mu11 for b in g.bodies]
    denom = hs[-1] + ds[-1] * sum(hs[i] / ds[i] for i in range(n - 1))
    if denom == 0.0:
        raise ValueError("degenerate group: closed-form denominator vanished")
    x = np.zeros(n)
    x[0] = rhs_val / denom
    for i in range(n - 1):
        x[i + 1] = -hs[i] * x[0] / ds[i]
    return y, x


def exact_parallel_solution(g: ParallelGroup, f: Forcing, times):
    """Eigen-decomposed solution for a two-body group in steady flow.

    u(t) = -D^-1 c + V exp(L t) V^-1 (u0 + D^-1 c).  Falls back to the
    integrator (flagged) if the eigenbasis is defective.  Groups larger
    than two need the numeric path in parallel_simulate.
    """
    if f.kind != "steady":
        raise ValueError("closed form implemented for steady forcing")
    if len(g) != 2:
        raise ValueError("closed form implemented for two-body groups")
    times = np.asarray(times, dtype=float)
    A, D, c_builder, u0 = parallel_assemble(g, f.F0)
    c = c_builder(f.F0, 0.0)
    y = solve_linear_dense(D, c)
    M = _invert(A) @ D
    lam1, lam2, V = eig2(M)
    if abs(np.linalg.det(V.astype(complex))) < 1e-12:
        traj = rk4_integrate(lambda t, s: M @ s + _invert(A) @ c, u0,
                             0.0, float(times[-1]), 0.01)
        idx = np.searchsorted(traj.times, times)
        return traj.states[np.clip(idx, 0, len(traj) - 1)], True
    Vc = V.astype(complex)
    w0 = np.linalg.solve(Vc, (u0 + y).astype(complex))
    lam = np.array([lam1, lam2], dtype=complex)
    states = np.empty((len(times), 2))
    for i, t in enumerate(times):
        states[i] = np.real(Vc @ (np.exp(lam * t) * w0)) - y
    return states, False


# --------------------------------------------------------------------------
# metrics


def peak_envelope(times, values, f: Forcing):
    """Per-period maxima of an oscillatory response.

    Requires at least three full periods; the steady peak is the maximum
    over the last complete period.
    """
    T = f.period
    t_end = float(times[-1])
    n_periods = int(t_end / T)
    if n_periods < 3:
        raise ValueError(f"need at least 3 periods, got {t_end / T:.2f}")
    peak_times, peaks = [], []
    for k in range(n_periods):
        mask = (times >= k * T) & (times <= (k + 1) * T)
        if not mask.any():
            continue
        seg = np.asarray(values)[mask]
        peaks.append(float(seg.max()))
        peak_times.append((k + 0.5) * T)
    return np.array(peak_times), np.array(peaks)


def steady_peak(times, values, f: Forcing) -> float:
    _, peaks = peak_envelope(times, values, f)
    return float(peaks[-1])


def _settle_time(g: ParallelGroup) -> float:
    return max(relaxation_times(b)[0] for b in g.bodies)


def group_steady_metrics(g: ParallelGroup, f: Forcing, t_end: float | None = None,
                         h: float = 0.1):
    """Steady deformation and first-branch force for either flow kind.

    Steady flow reports the final values with a settling check; the
    oscillatory kind reports last-period peaks.
    """
    if f.kind == "steady":
        if t_end is None:
            t_end = min(max(2000.0, 8.0 * _settle_time(g)), 12000.0)
        res = parallel_simulate(g, f, t_end, h)
        u = res.total_u
        i90 = int(np.searchsorted(res.times, 0.9 * t_end))
        settled = abs(u[-1] - u[i90]) < 1e-4 * max(abs(u[-1]), 1e-300)
        return {"steady_u": float(u[-1]),
                "steady_aF": float(res.branch_forces["branch1"][-1]),
                "settled": bool(settled)}
    T = f.period
    if t_end is None:
        t_end = 5.0 * _settle_time(g) + 5.0 * T
    h_osc = min(h, T / 200.0)
    res = parallel_simulate(g, f, t_end, h_osc)
    return {"steady_u": steady_peak(res.times, res.total_u, f),
            "steady_aF": steady_peak(res.times, res.branch_forces["branch1"], f),
            "settled": True}


def parameter_sweep(base: ParallelGroup, param: str, values,
                    forcings=None, map_fn=map):
    """Rows (value, flow_kind, steady_u, steady_aF) as one parameter of the
    second body (or all of them at once) sweeps over values."""
    if len(base) != 2:
        raise ValueError("the sweep is defined for two-body groups")
    if forcings is None:
        forcings = (Forcing.steady(1.0), Forcing.oscillatory(1.0, 2 * math.pi))

    def variant(value):
        b1, b2 = base.bodies
        if param == "mu02":
            b2 = KelvinBody(b2.eta1, value, b2.mu11)
        elif param == "mu12":
            b2 = KelvinBody(b2.eta1, b2.mu01, value)
        elif param == "eta12":
            b2 = KelvinBody(value, b2.mu01, b2.mu11)
        elif param == "all":
            b2 = b2.scaled(value)
        else:
            raise ValueError(f"unknown sweep parameter {param!r}")
        return ParallelGroup((b1, b2))

    def run(value):
        g = variant(value)
        rows = []
        for f in forcings:
            m = group_steady_metrics(g, f)
            rows.append((float(value), f.kind, m["steady_u"], m["steady_aF"]))
        return rows

    out = []
    for rows in map_fn(run, list(values)):
        out.extend(rows)
    return out


def frequency_sweep(g: ParallelGroup, freqs_hz, F0: float = 1.0, map_fn=map):
    """Rows (freq_hz, norm_u, norm_aF): oscillatory steady peaks divided by
    the steady-flow steady values."""
    ref = group_steady_metrics(g, Forcing.steady(F0))
    u_ref, aF_ref = ref["steady_u"], ref["steady_aF"]

    def run(f_hz):
        if f_hz <= 0:
            raise ValueError("frequencies must be positive")
        f = Forcing.oscillatory(F0, 2 * math.pi * f_hz)
        T = f.period
        t_end = 5.0 * _settle_time(g) + 5.0 * T
        m = group_steady_metrics(g, f, t_end=t_end)
        return (float(f_hz), m["steady_u"] / u_ref, m["steady_aF"] / aF_ref)

    return list(map_fn(run, list(freqs_hz)))


# --------------------------------------------------------------------------
# networks


@dataclass(frozen=True)
class KelvinNetwork:
    """Series chain of single bodies and parallel groups, with labels."""

    elements: tuple  # of (label, KelvinBody | ParallelGroup)

    def __post_init__(self):
        if len(self.elements) < 1:
            raise ValueError("a network needs at least one element")
        object.__setattr__(self, "elements", tuple(self.elements))


def network_one() -> KelvinNetwork:
    actin = material_params("actin")
    return KelvinNetwork((
        ("sensor", material_params("transmembrane")),
        ("actin_pair", ParallelGroup((actin, actin))),
        ("nucleus", material_params("nucleus")),
    ))


def network_two() -> KelvinNetwork:
    actin = material_params("actin")
    return KelvinNetwork((
        ("sensor", material_params("transmembrane")),
        ("actin_pair", ParallelGroup((actin, actin))),
        ("nucleus", material_params("nucleus")),
        ("bundle_pair", ParallelGroup((actin, actin))),
        ("attachment", material_params("transmembrane")),
    ))


def network_deform(net: KelvinNetwork, f: Forcing, t_end: float,
                   h: float = 0.1) -> DeformationResult:
    """Solve every series element under the shared forcing and sum.

    Branch forces within groups are keyed "<label>/branch<i>"; single
    bodies carry the full forcing.
    """
    element_u = {}
    branch_forces = {}
    times = None
    for label, elem in net.elements:
        if isinstance(elem, ParallelGroup):
            res = parallel_simulate(elem, f, t_end, h)
            times = res.times
            element_u[label] = res.total_u
            for bname, series in res.branch_forces.items():
                branch_forces[f"{label}/{bname}"] = series
        else:
            traj = single_body_deform(elem, f, t_end, h)
            times = traj.times
            element_u[label] = traj.states[:, 0]
            branch_forces[label] = f.value(times)
    total = np.sum(list(element_u.values()), axis=0)
    return DeformationResult(times, element_u, branch_forces, total)
