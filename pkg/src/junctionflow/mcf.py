"""Curve-network mean curvature flow with a free common junction (n = 1).

q graph curves share one junction point (gamma, P): sheets 1..s live on
[gamma, x_right], the rest on [x_left, gamma], all pinned at the outer
ends.  Each step advances the sheet interiors with a theta-weighted
implicit linearized heat solve (coefficient 1/(1+|u_x|^2) frozen at the
previous level), then moves (gamma, P) by Newton so the multiplicity-
weighted conormal balance holds at the junction; sheets are resampled
onto uniform grids over the moved domains.

Flat ambient geometry throughout; pins are Dirichlet.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import JunctionEscape
from .geometry import JunctionConfig, boundary_balance_residual


@dataclass(frozen=True)
class SolverParams:
    """Discretization knobs.

    scheme_weight is the implicitness of the interior solve (1 = backward
    Euler, 1/2 = trapezoidal); explicit content requires the parabolic
    step restriction dt <= 0.5 h^2.
    """

    h: float
    dt: float
    newton_tol: float = 1e-10
    newton_max_iters: int = 30
    scheme_weight: float = 1.0
    steady_tol: float = 0.0      # 0 disables steady-state detection

    def __post_init__(self):
        if self.h <= 0 or self.dt <= 0:
            raise ValueError("h and dt must be positive")
        if not (0.5 <= self.scheme_weight <= 1.0):
            raise ValueError("scheme_weight must lie in [1/2, 1]")
        if self.newton_tol <= 0 or self.newton_max_iters < 1:
            raise ValueError("bad Newton parameters")
        if self.scheme_weight < 1.0 and self.dt > 0.5 * self.h ** 2:
            raise ValueError("explicit content needs dt <= 0.5 h^2")


@dataclass(frozen=True)
class NetworkState:
    """Time-stamped curve network.

    Sheet arrays are junction-ordered: node 0 carries the junction value
    P, the last node the outer pin.  Sheet k <= s spans [gamma, x_right],
    sheet k > s spans [x_left, gamma].
    """

    t: float
    gamma: float
    value: np.ndarray               # junction value P in R^m
    sheets: tuple                   # q arrays of shape (N_k + 1, m)
    pins: np.ndarray                # (q, m) outer Dirichlet values
    theta: tuple[int, ...]
    s: int
    x_left: float
    x_right: float

    def __post_init__(self):
        if not (self.x_left < self.gamma < self.x_right):
            raise JunctionEscape(
                f"junction {self.gamma} outside ({self.x_left}, {self.x_right})")
        value = np.asarray(self.value, dtype=float).reshape(-1)
        pins = np.asarray(self.pins, dtype=float)
        frozen = []
        for k, sheet in enumerate(self.sheets):
            arr = np.asarray(sheet, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != value.shape[0]:
                raise ValueError("sheet arrays must have shape (N+1, m)")
            if np.max(np.abs(arr[0] - value)) > 1e-6:
                raise ValueError(f"sheet {k + 1} detached from the junction")
            arr = arr.copy()
            arr.flags.writeable = False
            frozen.append(arr)
        value.flags.writeable = False
        pins.flags.writeable = False
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "pins", pins)
        object.__setattr__(self, "sheets", tuple(frozen))

    @property
    def q(self) -> int:
        return len(self.sheets)

    @property
    def m(self) -> int:
        return self.value.shape[0]

    def domain_length(self, k: int) -> float:
        """Length of sheet k's base interval (k is 0-based)."""
        return (self.x_right - self.gamma) if k < self.s else (self.gamma - self.x_left)

    def spacing(self, k: int) -> float:
        return self.domain_length(k) / (self.sheets[k].shape[0] - 1)

    def x_nodes(self, k: int) -> np.ndarray:
        """Physical node positions of sheet k, junction-ordered."""
        j = np.arange(self.sheets[k].shape[0])
        h = self.spacing(k)
        return self.gamma + (j * h if k < self.s else -j * h)

    def junction_slopes(self) -> np.ndarray:
        """One-sided second-order physical-x derivatives at the junction,
        one row per sheet."""
        out = np.empty((self.q, self.m))
        for k in range(self.q):
            v = self.sheets[k]
            h = self.spacing(k)
            d = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            out[k] = d if k < self.s else -d
        return out

    def config_at_junction(self) -> JunctionConfig:
        """Tangent-cone data at the current junction point."""
        return JunctionConfig(
            n=1, m=self.m, q=self.q, s=self.s, theta=self.theta,
            slopes=tuple(tuple(row) for row in self.junction_slopes()),
        )


@dataclass(frozen=True)
class StepInfo:
    newton_iterations: int
    converged: bool
    residual_norm: float


@dataclass(frozen=True)
class Diagnostics:
    """Per-record scalar summary of a network state."""

    t: float
    total_area: float
    balance_norm: float
    brakke_residual: float
    max_mcf_residual: float
    gamma: float
    value: tuple

    def __post_init__(self):
        for name in ("t", "total_area", "balance_norm", "brakke_residual",
                     "max_mcf_residual", "gamma"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.total_area <= 0:
            raise ValueError("total_area must be positive")


@dataclass(frozen=True)
class RunResult:
    diagnostics: list
    final_state: NetworkState
    status: str                      # completed | steady | newton_diverged


def straight_network(x_left: float, x_right: float, gamma: float,
                     value: Sequence[float], pins: np.ndarray,
                     theta: Sequence[int], s: int, h: float,
                     t: float = 0.0) -> NetworkState:
    """Network of straight segments from the outer pins to (gamma, P)."""
    value = np.asarray(value, dtype=float).reshape(-1)
    pins = np.asarray(pins, dtype=float)
    q = pins.shape[0]
    sheets = []
    for k in range(q):
        L = (x_right - gamma) if k < s else (gamma - x_left)
        N = max(4, round(L / h))
        lam = np.linspace(0.0, 1.0, N + 1)[:, None]
        sheets.append(value[None, :] * (1 - lam) + pins[k][None, :] * lam)
    return NetworkState(t=t, gamma=gamma, value=value, sheets=tuple(sheets),
                        pins=pins, theta=tuple(int(x) for x in theta), s=s,
                        x_left=x_left, x_right=x_right)


def symmetric_y_network(h: float, half_width: float = 0.5,
                        gamma_offset: float = 0.0,
                        bump_amplitude: float = 0.0) -> NetworkState:
    """The equal-angle three-sheet configuration over equilateral pins:
    pins at (sqrt(3) v, +-v) and (0, 0), junction at (2v/sqrt(3), 0).
    gamma_offset displaces the junction; bump_amplitude adds a smooth
    interior bump to every sheet."""
    v = half_width
    x_right = np.sqrt(3.0) * v
    gamma_star = 2.0 * v / np.sqrt(3.0)
    pins = np.array([[v], [-v], [0.0]])
    state = straight_network(0.0, x_right, gamma_star + gamma_offset,
                             [0.0], pins, (1, 1, 1), 2, h)
    if bump_amplitude:
        sheets = []
        for k in range(3):
            lam = np.linspace(0.0, 1.0, state.sheets[k].shape[0])
            bump = bump_amplitude * np.sin(np.pi * lam) ** 2
            sheets.append(state.sheets[k] + bump[:, None])
        state = replace(state, sheets=tuple(sheets))
    return state


def steiner_junction(state: NetworkState) -> tuple[float, np.ndarray]:
    """Exact balance point for the symmetric three-pin network (centroid
    of equilateral pins); for reference in tests and reports."""
    v = float(state.pins[0, 0])
    return 2.0 * v / np.sqrt(3.0), np.zeros(state.m)


def junction_conditions(state: NetworkState) -> np.ndarray:
    """Stacked junction balance equations (m + 1 components) from
    one-sided slope estimates; zero at balanced junctions."""
    return boundary_balance_residual(
        np.zeros(0), state.junction_slopes(), state.config_at_junction())


def total_area(state: NetworkState) -> float:
    """Multiplicity-weighted polyline length of the network."""
    area = 0.0
    for k in range(state.q):
        v = state.sheets[k]
        h = state.spacing(k)
        seg = np.sqrt(h * h + np.sum(np.diff(v, axis=0) ** 2, axis=1))
        area += state.theta[k] * float(np.sum(seg))
    return area


def _advance_interiors(state: NetworkState, params: SolverParams) -> list:
    """Theta-weighted implicit solve per sheet with the gradient factor
    frozen at the current level; junction and pin values held fixed."""
    w = params.scheme_weight
    new_sheets = []
    for k in range(state.q):
        v = state.sheets[k]
        h = state.spacing(k)
        N = v.shape[0] - 1
        grad = (v[2:] - v[:-2]) / (2.0 * h)
        coef = 1.0 / (1.0 + np.sum(grad * grad, axis=1))      # interior nodes
        r = params.dt * coef / h ** 2
        d2 = v[2:] - 2.0 * v[1:-1] + v[:-2]
        rhs = v[1:-1] + (1.0 - w) * r[:, None] * d2
        # tridiagonal (I - w r D2) on the interior, Dirichlet ends
        ab = np.zeros((3, N - 1))
        ab[0, 1:] = -w * r[:-1]
        ab[1, :] = 1.0 + 2.0 * w * r
        ab[2, :-1] = -w * r[1:]
        rhs[0] += w * r[0] * v[0]
        rhs[-1] += w * r[-1] * v[N]
        interior = solve_banded((1, 1), ab, rhs)
        nv = v.copy()
        nv[1:-1] = interior
        new_sheets.append(nv)
    return new_sheets


def _remap(state: NetworkState, sheets: list, gamma: float,
           value: np.ndarray) -> NetworkState:
    """Rebuild the network at a candidate junction point: resample each
    sheet onto the uniform grid over its moved domain, imposing the new
    junction value at node 0 and the pin at the far end."""
    if gamma == state.gamma and np.array_equal(value, state.value):
        new = [s.copy() for s in sheets]
        for k in range(state.q):
            new[k][0] = value
        return replace(state, t=state.t, gamma=gamma, value=value,
                       sheets=tuple(new))
    new_sheets = []
    for k in range(state.q):
        v = sheets[k]
        N = v.shape[0] - 1
        x_old = state.x_nodes(k)
        L_new = (state.x_right - gamma) if k < state.s else (gamma - state.x_left)
        h_new = L_new / N
        j = np.arange(N + 1)
        x_new = gamma + (j * h_new if k < state.s else -j * h_new)
        xs = x_old if k < state.s else x_old[::-1]
        vs = v if k < state.s else v[::-1]
        spline = CubicSpline(xs, vs)
        nv = spline(x_new)
        nv[0] = value
        nv[N] = state.pins[k]
        new_sheets.append(nv)
    return replace(state, gamma=gamma, value=value, sheets=tuple(new_sheets))


def _escape_guard(state: NetworkState, params: SolverParams, gamma: float) -> None:
    margin = 4.0 * params.h
    if not (state.x_left + margin < gamma < state.x_right - margin):
        raise JunctionEscape(f"junction moved to {gamma}")


def _junction_newton(state: NetworkState, sheets: list,
                     params: SolverParams) -> tuple[NetworkState, StepInfo]:
    """Move (gamma, P) until the junction balance vanishes, remapping the
    given sheet values onto the candidate domains as it goes."""

    def residual(z):
        _escape_guard(state, params, z[0])
        cand = _remap(state, sheets, float(z[0]), z[1:].copy())
        return junction_conditions(cand), cand

    z = np.concatenate(([state.gamma], state.value))
    F, cand = residual(z)
    iters = 0
    converged = float(np.linalg.norm(F)) <= params.newton_tol
    while not converged and iters < params.newton_max_iters:
        J = np.empty((state.m + 1, state.m + 1))
        for i in range(state.m + 1):
            eps = 1e-7 * max(1.0, abs(z[i]))
            zp = z.copy(); zp[i] += eps
            zm = z.copy(); zm[i] -= eps
            J[:, i] = (residual(zp)[0] - residual(zm)[0]) / (2.0 * eps)
        z = z - np.linalg.solve(J, F)
        F, cand = residual(z)
        iters += 1
        converged = float(np.linalg.norm(F)) <= params.newton_tol
    return cand, StepInfo(newton_iterations=iters, converged=converged,
                          residual_norm=float(np.linalg.norm(F)))


def rebalance(state: NetworkState, params: SolverParams) -> NetworkState:
    """Solve the junction balance at the current time without advancing
    the interiors; produces admissible initial data from synthetic
    sheets."""
    cand, info = _junction_newton(state, [s.copy() for s in state.sheets], params)
    return cand


def step(state: NetworkState, params: SolverParams) -> tuple[NetworkState, StepInfo]:
    """One flow step: interior solve, then the junction Newton.

    Returns the advanced state and a StepInfo; a Newton failure is
    reported through info.converged with the last iterate returned.
    """
    sheets = _advance_interiors(state, params)
    cand, info = _junction_newton(state, sheets, params)
    return replace(cand, t=state.t + params.dt), info


def _sheet_derivatives(v: np.ndarray, h: float):
    """Second-order u_x and u_xx on all nodes (one-sided at the ends;
    the one-sided second derivative is first order, which the quadrature
    weight absorbs)."""
    ux = np.empty_like(v)
    ux[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    ux[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    ux[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    uxx = np.empty_like(v)
    uxx[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h ** 2
    uxx[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h ** 2
    uxx[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h ** 2
    return ux, uxx


def mcf_residual(state: NetworkState, k: int,
                 prev: NetworkState | None = None,
                 du_dt: np.ndarray | None = None) -> np.ndarray:
    """Interior residual D_t u - u_xx / (1 + |u_x|^2) for sheet k
    (0-based).  Supply either the previous state (D_t by differencing,
    with the older sheet resampled onto the current nodes) or an analytic
    du_dt array on the interior nodes."""
    v = state.sheets[k]
    h = state.spacing(k)
    grad = (v[2:] - v[:-2]) / (2.0 * h)
    d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h ** 2
    rhs = d2 / (1.0 + np.sum(grad * grad, axis=1))[:, None]
    if du_dt is None:
        if prev is None:
            raise ValueError("need prev state or analytic du_dt")
        dt = state.t - prev.t
        x_now = state.x_nodes(k)[1:-1]
        xs = prev.x_nodes(k)
        vs = prev.sheets[k]
        if k >= state.s:
            xs, vs = xs[::-1], vs[::-1]
        v_prev = CubicSpline(xs, vs)(x_now)
        du_dt = (v[1:-1] - v_prev) / dt
    return du_dt - rhs


def minimal_residual(state: NetworkState) -> list:
    """Divergence-form stationary residual per sheet: difference of the
    midpoint fluxes u_x / sqrt(1 + |u_x|^2); zero on straight lines."""
    out = []
    for k in range(state.q):
        v = state.sheets[k]
        h = state.spacing(k)
        dv = np.diff(v, axis=0) / h
        flux = dv / np.sqrt(1.0 + np.sum(dv * dv, axis=1))[:, None]
        out.append(np.diff(flux, axis=0) / h)
    return out


def curvature_vector(v: np.ndarray, h: float) -> np.ndarray:
    """Mean curvature vector of the graph curve (x, u(x)) at each node:
    (0, u_xx)/(1+|u_x|^2) - (1, u_x) (u_x . u_xx)/(1+|u_x|^2)^2."""
    ux, uxx = _sheet_derivatives(v, h)
    n = v.shape[0]
    m = v.shape[1]
    H = np.zeros((n, 1 + m))
    w = 1.0 + np.sum(ux * ux, axis=1)
    dot = np.sum(ux * uxx, axis=1)
    H[:, 1:] = uxx / w[:, None]
    H[:, 0] -= dot / w ** 2
    H[:, 1:] -= ux * (dot / w ** 2)[:, None]
    return H


@dataclass(frozen=True)
class SpaceTimeBump:
    """Smooth compactly supported test function on R x R^{1+m}:
    amplitude * exp(-1/(1 - r^2)) inside the ball of the given radius
    around center, zero outside; time-independent."""

    center: tuple
    radius: float
    amplitude: float = 1.0

    def _r2(self, X):
        c = np.asarray(self.center, dtype=float)
        d = (np.asarray(X, dtype=float) - c) / self.radius
        return np.sum(d * d, axis=-1)

    def value(self, t, X):
        r2 = self._r2(X)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    def grad(self, t, X):
        X = np.asarray(X, dtype=float)
        r2 = self._r2(X)
        out = np.zeros_like(X)
        inside = r2 < 1.0
        c = np.asarray(self.center, dtype=float)
        diff = (X - c) / self.radius ** 2
        f = np.zeros_like(r2)
        f[inside] = self.amplitude * np.exp(-1.0 / (1.0 - r2[inside]))
        fac = np.zeros_like(r2)
        fac[inside] = -2.0 / (1.0 - r2[inside]) ** 2
        return f[..., None] * fac[..., None] * diff

    def dt(self, t, X):
        return np.zeros(np.shape(self._r2(X)))


def _weighted_integral(state: NetworkState, node_values) -> float:
    """Trapezoid of per-node integrand arrays against arclength, summed
    over sheets with multiplicities."""
    acc = 0.0
    for k in range(state.q):
        v = state.sheets[k]
        h = state.spacing(k)
        seg = np.sqrt(h * h + np.sum(np.diff(v, axis=0) ** 2, axis=1))
        f = node_values[k]
        acc += state.theta[k] * float(np.sum(0.5 * (f[1:] + f[:-1]) * seg))
    return acc


def _ambient_points(state: NetworkState, k: int) -> np.ndarray:
    x = state.x_nodes(k)
    return np.column_stack([x, state.sheets[k]])


def brakke_identity_residual(prev: NetworkState, next_state: NetworkState,
                             test_fn) -> float:
    """Discrete defect of the smooth-flow area identity

        d/dt int phi dA = sum_k int (phi_t + grad phi . H - phi |H|^2)

    with the left side differenced between the two states and the right
    side averaged over them."""
    dt = next_state.t - prev.t

    def phi_mass(state):
        vals = [test_fn.value(state.t, _ambient_points(state, k))
                for k in range(state.q)]
        return _weighted_integral(state, vals)

    def rhs(state):
        vals = []
        for k in range(state.q):
            X = _ambient_points(state, k)
            H = curvature_vector(state.sheets[k], state.spacing(k))
            phi = test_fn.value(state.t, X)
            gphi = test_fn.grad(state.t, X)
            pt = test_fn.dt(state.t, X)
            vals.append(pt + np.sum(gphi * H, axis=1) - phi * np.sum(H * H, axis=1))
        return _weighted_integral(state, vals)

    lhs = (phi_mass(next_state) - phi_mass(prev)) / dt
    return float(lhs - 0.5 * (rhs(prev) + rhs(next_state)))


def brakke_window_residual(states: Sequence[NetworkState], test_fn) -> float:
    """Defect of the area identity integrated over the time window spanned
    by consecutive recorded states: the left side telescopes to the mass
    difference of the endpoints, the right side is a composite trapezoid
    over every recorded state.  Per-step junction jitter averages out, so
    this converges at the scheme order under dt refinement."""
    if len(states) < 2:
        raise ValueError("need at least two states")
    window = states[-1].t - states[0].t

    def phi_mass(state):
        vals = [test_fn.value(state.t, _ambient_points(state, k))
                for k in range(state.q)]
        return _weighted_integral(state, vals)

    def rhs(state):
        vals = []
        for k in range(state.q):
            X = _ambient_points(state, k)
            H = curvature_vector(state.sheets[k], state.spacing(k))
            phi = test_fn.value(state.t, X)
            gphi = test_fn.grad(state.t, X)
            pt = test_fn.dt(state.t, X)
            vals.append(pt + np.sum(gphi * H, axis=1) - phi * np.sum(H * H, axis=1))
        return _weighted_integral(state, vals)

    lhs = (phi_mass(states[-1]) - phi_mass(states[0])) / window
    acc = 0.0
    for a, b in zip(states, states[1:]):
        acc += 0.5 * (rhs(a) + rhs(b)) * (b.t - a.t)
    return float(lhs - acc / window)


def run(initial: NetworkState, params: SolverParams, T: float,
        record_every: int = 1, test_fn=None, state_hook=None) -> RunResult:
    """March the flow to time T (or to steady state when steady_tol is
    set), recording diagnostics every record_every steps.  state_hook,
    when given, receives (record_index, state) at each recording."""
    state = initial
    prev = None
    diagnostics = []
    status = "completed"
    n_steps = int(np.ceil(T / params.dt))
    if test_fn is None:
        span = min(initial.x_right - initial.gamma,
                   initial.gamma - initial.x_left)
        test_fn = SpaceTimeBump(
            center=(initial.gamma,) + tuple(initial.value),
            radius=0.8 * span)

    def record(state, prev):
        # rate quantities need two states; the initial record carries 0
        brakke = 0.0
        max_res = 0.0
        if prev is not None:
            brakke = brakke_identity_residual(prev, state, test_fn)
            max_res = max(
                float(np.max(np.abs(mcf_residual(state, k, prev=prev))))
                for k in range(state.q))
        diagnostics.append(Diagnostics(
            t=state.t, total_area=total_area(state),
            balance_norm=float(np.linalg.norm(junction_conditions(state))),
            brakke_residual=brakke, max_mcf_residual=max_res,
            gamma=state.gamma, value=tuple(state.value)))
        if state_hook is not None:
            state_hook(len(diagnostics) - 1, state)

    record(state, None)
    for i in range(n_steps):
        new_state, info = step(state, params)
        if not info.converged:
            status = "newton_diverged"
            state = new_state
            break
        rate = _change_rate(state, new_state, params.dt)
        prev, state = state, new_state
        if (i + 1) % record_every == 0 or i == n_steps - 1:
            record(state, prev)
        if params.steady_tol > 0 and rate < params.steady_tol:
            status = "steady"
            break
    return RunResult(diagnostics=diagnostics, final_state=state, status=status)


def _change_rate(old: NetworkState, new: NetworkState, dt: float) -> float:
    rate = abs(new.gamma - old.gamma) / dt
    rate = max(rate, float(np.max(np.abs(new.value - old.value))) / dt)
    for k in range(old.q):
        rate = max(rate, float(np.max(np.abs(new.sheets[k] - old.sheets[k]))) / dt)
    return rate


def steady_solve(initial: NetworkState, params: SolverParams,
                 T_max: float = 50.0, steady_tol: float = 1e-11) -> NetworkState:
    """Relax the network until nothing moves; the limit solves the
    stationary system with balanced junction."""
    p = replace(params, steady_tol=steady_tol)
    result = run(initial, p, T_max, record_every=1000)
    return result.final_state
