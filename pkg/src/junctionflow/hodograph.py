"""Graph-flattening transform on sampled data.

The transform trades the normal coordinate for the height difference
w = u_1^1 - u_2^1 of the first two sheets: y_n = w(x) maps the plus-side
domain onto {y_n > 0} and sends the common interface to {y_n = 0}.  The
inverse is x_n = psi(y) on the plus side and, with a shear constant C
exceeding every slope of psi, x_n = psi(y) - C y_n on the minus side.
Sheet values ride along as phi_k(y) = u_k at the pulled-back point.

All inversions are per-node scalar root solves on a monotone spline
(safeguarded Newton with a bisection fallback).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InterfaceMismatch, NewtonDiverged, NonMonotone, OutOfRange

NEWTON_TOL = 1e-12
NEWTON_MAX_ITERS = 50
INTERFACE_TOL = 1e-8


@dataclass(frozen=True)
class GraphFunction:
    """Vector-valued graph samples on a uniform half-line grid.

    Node j sits at x = interface + j*h on the plus side and at
    x = interface - j*h on the minus side, so index 0 is always the
    interface node.  values has shape (..., N+1, m); leading axes, if
    any, enumerate tangential grid lines.
    """

    interface: float
    h: float
    values: np.ndarray
    is_plus: bool
    h_prime: float | None = None    # tangential spacing; defaults to h

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 2:
            raise ValueError("values must have shape (..., N+1, m)")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    @property
    def node_count(self) -> int:
        return self.values.shape[-2]

    def x_nodes(self) -> np.ndarray:
        j = np.arange(self.node_count)
        return self.interface + (j * self.h if self.is_plus else -j * self.h)


@dataclass(frozen=True)
class HodographPair:
    """Transformed unknowns on the flattened grid.

    psi has shape (..., Ny+1) over y nodes j*h_y (a leading time axis in
    the parabolic case); phi holds one (..., Ny+1, m) array per sheet.
    w_def records which height difference generated the normal
    coordinate.
    """

    psi: np.ndarray
    phi: tuple
    C: float
    h_y: float
    s: int
    interface: float
    w_def: str = "w = u_1^1 - u_2^1"
    dt: float | None = None

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        dpsi = np.diff(psi, axis=-1) / self.h_y
        if np.any(dpsi <= 0):
            raise NonMonotone("psi must be strictly increasing in y_n")
        if np.any(dpsi >= self.C):
            raise ValueError("discrete slope of psi must stay below C")
        psi = psi.copy()
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)
        frozen = []
        for p in self.phi:
            p = np.asarray(p, dtype=float).copy()
            p.flags.writeable = False
            frozen.append(p)
        object.__setattr__(self, "phi", tuple(frozen))

    @property
    def q(self) -> int:
        return len(self.phi)

    @property
    def parabolic(self) -> bool:
        return self.dt is not None

    def y_nodes(self) -> np.ndarray:
        return self.h_y * np.arange(self.psi.shape[-1])


def _invert_monotone(spline, targets, lo, hi):
    """Solve spline(x) = t for each target on [lo, hi]; the spline data is
    strictly increasing.  Newton with bisection safeguard."""
    xs = np.empty_like(targets)
    deriv = spline.derivative()
    scale = max(1.0, abs(spline(hi) - spline(lo)))
    x = lo
    for i, t in enumerate(targets):
        a, b = lo, hi
        if not (spline(a) - t <= NEWTON_TOL * scale and spline(b) - t >= -NEWTON_TOL * scale):
            raise OutOfRange(f"target {t} outside transformed range")
        x = min(max(x, a), b)
        converged = False
        for _ in range(NEWTON_MAX_ITERS):
            f = spline(x) - t
            if abs(f) <= NEWTON_TOL * scale:
                converged = True
                break
            if f > 0:
                b = x
            else:
                a = x
            d = deriv(x)
            step = f / d if d > 0 else np.inf
            x_new = x - step
            if not (a < x_new < b):
                x_new = 0.5 * (a + b)
            x = x_new
        if not converged:
            raise NewtonDiverged(f"inversion stalled at target {t}")
        xs[i] = x
    return xs


def choose_C(psi: np.ndarray, h_y: float) -> float:
    """Shear constant: twice the largest discrete slope of psi, so the
    strict inequality D_y psi < C holds with margin."""
    dpsi = np.diff(np.asarray(psi, dtype=float), axis=-1) / h_y
    return 2.0 * float(np.max(dpsi))


def _check_sides(sheets: Sequence[GraphFunction], s: int) -> None:
    q = len(sheets)
    if not (2 <= s < q):
        raise ValueError("need 2 <= s < q")
    if any(not g.is_plus for g in sheets[:s]) or any(g.is_plus for g in sheets[s:]):
        raise ValueError("sheets 1..s must be plus-side, the rest minus-side")
    m = sheets[0].m
    if any(g.m != m for g in sheets):
        raise ValueError("all sheets must share the codimension m")
    for group in (sheets[:s], sheets[s:]):
        if any(abs(g.interface - group[0].interface) > 1e-14 for g in group):
            raise ValueError("sheets on one side must share the window origin")
    shapes = {g.values.shape[:-2] for g in sheets}
    if len(shapes) != 1:
        raise ValueError("all sheets must share the tangential grid")
    if len(next(iter(shapes))) > 1:
        raise ValueError("transform operations support at most one "
                         "tangential axis (base dimension <= 2)")


def _check_coincidence(phi, scale: float) -> None:
    """The transformed values at y = 0 are the sheet values at the common
    interface point; they must agree across sheets."""
    iface = np.stack([p[..., 0, :] for p in phi])
    spread = np.max(np.abs(iface - iface[0]))
    if spread > INTERFACE_TOL * scale:
        raise InterfaceMismatch(
            f"interface values spread {spread:.3e} exceeds tolerance")


def default_target_grid(sheets: Sequence[GraphFunction], s: int,
                        count: int | None = None) -> np.ndarray:
    """A safe uniform y grid: capped by the range of w on the plus side
    and by the reach of the sheared minus-side evaluation."""
    _check_sides(sheets, s)
    u1, u2 = sheets[0], sheets[1]
    w = u1.values[..., 0] - u2.values[..., 0]
    if np.any(np.diff(w, axis=-1) <= 0):
        raise NonMonotone("w is not strictly increasing toward the plus side")
    y_top = float(np.min(w[..., -1]))
    # conservative shear estimate from the discrete slopes of w
    dw = np.diff(w, axis=-1) / u1.h
    c_est = 2.0 / float(np.min(dw))
    minus_len = (sheets[s].node_count - 1) * sheets[s].h
    y_cap = minus_len / c_est
    y_max = 0.95 * min(y_top, y_cap)
    if count is None:
        count = u1.node_count - 1
    return np.linspace(0.0, y_max, count + 1)


def _line_splines(g: GraphFunction):
    """Per-line cubic splines of each component on ascending x."""
    x = g.x_nodes()
    vals = g.values
    if not g.is_plus:
        x = x[::-1]
        vals = vals[..., ::-1, :]
    lines = {}
    for idx in np.ndindex(vals.shape[:-2]):
        lines[idx] = CubicSpline(x, vals[idx])
    return lines, (float(x[0]), float(x[-1]))


def forward_transform(sheets: Sequence[GraphFunction], s: int,
                      target_grid: np.ndarray | None = None) -> HodographPair:
    """Flatten the sheets onto the target y grid.

    Requires the discrete w = u_1^1 - u_2^1 strictly increasing on the
    plus side (NonMonotone otherwise) and matching interface values
    (InterfaceMismatch otherwise).
    """
    _check_sides(sheets, s)
    if target_grid is None:
        target_grid = default_target_grid(sheets, s)
    y = np.asarray(target_grid, dtype=float)
    if y.ndim != 1 or y[0] != 0.0 or len(y) < 3:
        raise ValueError("target grid must be a 1-D array starting at 0")
    h_y = float(y[1] - y[0])
    if np.max(np.abs(np.diff(y) - h_y)) > 1e-12 * h_y:
        raise ValueError("target grid must be uniform")

    u1, u2 = sheets[0], sheets[1]
    w = u1.values[..., 0] - u2.values[..., 0]
    if np.any(np.diff(w, axis=-1) <= 0):
        raise NonMonotone("w is not strictly increasing toward the plus side")

    line_shape = u1.values.shape[:-2]
    psi = np.empty(line_shape + (len(y),))
    x_plus = u1.x_nodes()
    for idx in np.ndindex(line_shape):
        spline_w = CubicSpline(x_plus, w[idx])
        psi[idx] = _invert_monotone(spline_w, y, float(x_plus[0]), float(x_plus[-1]))

    C = choose_C(psi, h_y)

    phi = []
    for k, g in enumerate(sheets):
        splines, (lo, hi) = _line_splines(g)
        pk = np.empty(line_shape + (len(y), g.m))
        for idx in np.ndindex(line_shape):
            arg = psi[idx] if k < s else psi[idx] - C * y
            if np.min(arg) < lo - 1e-12 or np.max(arg) > hi + 1e-12:
                raise OutOfRange(
                    f"sheet {k + 1}: pulled-back points leave its domain")
            pk[idx] = splines[idx](np.clip(arg, lo, hi))
        phi.append(pk)
    scale = max(1.0, max(float(np.max(np.abs(g.values))) for g in sheets))
    _check_coincidence(phi, scale)
    return HodographPair(psi=psi, phi=tuple(phi), C=C, h_y=h_y, s=s,
                         interface=sheets[0].interface)


def inverse_transform(pair: HodographPair, plus_grid: np.ndarray,
                      minus_grid: np.ndarray) -> list[GraphFunction]:
    """Reconstruct the sheets on the requested uniform x grids (both given
    as ascending node arrays; the plus grid starts at the interface, the
    minus grid ends there)."""
    if pair.parabolic:
        raise ValueError("inverse of a parabolic pair works slice by slice")
    y = pair.y_nodes()
    line_shape = pair.psi.shape[:-1]
    xp = np.asarray(plus_grid, dtype=float)
    xm = np.asarray(minus_grid, dtype=float)
    hp = float(xp[1] - xp[0])
    hm = float(xm[1] - xm[0])

    out = []
    for k in range(pair.q):
        m = pair.phi[k].shape[-1]
        if k < pair.s:
            vals = np.empty(line_shape + (len(xp), m))
        else:
            vals = np.empty(line_shape + (len(xm), m))
        for idx in np.ndindex(line_shape):
            psi_line = pair.psi[idx]
            phi_spline = CubicSpline(y, pair.phi[k][idx])
            if k < pair.s:
                spl = CubicSpline(y, psi_line)
                lo, hi = float(psi_line[0]), float(psi_line[-1])
                if xp[0] < lo - 1e-12 or xp[-1] > hi + 1e-12:
                    raise OutOfRange("plus grid exceeds transformed support")
                yy = _invert_monotone(spl, xp, 0.0, float(y[-1]))
                vals[idx] = phi_spline(yy)
            else:
                # x = psi(y) - C y is strictly decreasing in y
                shear = psi_line - pair.C * y
                spl = CubicSpline(y, -shear)
                lo, hi = float(shear[-1]), float(shear[0])
                if xm[0] < lo - 1e-12 or xm[-1] > hi + 1e-12:
                    raise OutOfRange("minus grid exceeds transformed support")
                yy = _invert_monotone(spl, -xm[::-1], 0.0, float(y[-1]))
                vals[idx] = phi_spline(yy)[::-1]
        if k < pair.s:
            out.append(GraphFunction(interface=pair.interface, h=hp,
                                     values=vals, is_plus=True))
        else:
            # store junction-ordered (index 0 at the interface)
            out.append(GraphFunction(interface=pair.interface, h=hm,
                                     values=vals[..., ::-1, :], is_plus=False))
    return out


def _centered(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Second-order first derivative: centered inside, 3-point one-sided
    at the ends."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    d = np.empty_like(v)
    d[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2 * h)
    d[..., 0] = (-3 * v[..., 0] + 4 * v[..., 1] - v[..., 2]) / (2 * h)
    d[..., -1] = (3 * v[..., -1] - 4 * v[..., -2] + v[..., -3]) / (2 * h)
    return np.moveaxis(d, -1, axis)


def verify_chain_rule(sheets: Sequence[GraphFunction], pair: HodographPair,
                      tol: float) -> dict:
    """Check the derivative identities linking w and psi with centered
    differences on both grids:

      |D_xn w - 1 / D_yn psi|,
      |D_xi w + D_yi psi / D_yn psi|   (tangential axes, if any),
      |D_t w + D_tau psi / D_yn psi|   (parabolic pairs).

    Reports the max interior-node error of each identity; passes iff all
    are within tol.
    """
    u1, u2 = sheets[0], sheets[1]
    time_axis = pair.parabolic
    base = u1.slice_at(0) if time_axis else u1
    w = u1.values[..., 0] - u2.values[..., 0]
    x_plus = base.x_nodes()

    psi = pair.psi
    dpsi_dy = _centered(psi, pair.h_y, axis=-1)
    dw_dx = _centered(w, u1.h, axis=-1)

    def interp_w_deriv(arr, idx, points):
        return np.interp(points, x_plus, arr[idx])

    line_shape = psi.shape[:-1] if not time_axis else psi.shape[1:-1]
    errors = {"normal": 0.0}
    n_lines = len(line_shape)
    if n_lines:
        errors["tangential"] = 0.0
    if time_axis:
        errors["time"] = 0.0
        dpsi_dtau = _centered(psi, pair.dt, axis=0)
        dw_dt = _centered(w, pair.dt, axis=0)
    interior = slice(1, -1)

    def line_iter():
        if time_axis:
            for t in range(psi.shape[0]):
                for idx in np.ndindex(line_shape):
                    yield (t,) + idx
        else:
            yield from np.ndindex(line_shape)

    h_line = base.h_prime if base.h_prime is not None else base.h
    for idx in line_iter():
        pts = psi[idx][interior]
        lhs = interp_w_deriv(dw_dx, idx, pts)
        err = np.max(np.abs(lhs - 1.0 / dpsi_dy[idx][interior]))
        errors["normal"] = max(errors["normal"], float(err))
        if n_lines:
            for ax in range(len(line_shape)):
                full_ax = ax if not time_axis else ax + 1
                dpsi_i = _centered(psi, h_line, axis=full_ax)[idx][interior]
                dw_i = _centered(w, h_line, axis=full_ax)
                lhs_i = interp_w_deriv(dw_i, idx, pts)
                err = np.max(np.abs(lhs_i + dpsi_i / dpsi_dy[idx][interior]))
                errors["tangential"] = max(errors["tangential"], float(err))
        if time_axis:
            lhs_t = interp_w_deriv(dw_dt, idx, pts)
            err = np.max(np.abs(lhs_t + dpsi_dtau[idx][interior]
                                / dpsi_dy[idx][interior]))
            errors["time"] = max(errors["time"], float(err))

    max_error = max(errors.values())
    return {"errors": errors, "max_error": max_error, "tol": tol,
            "pass": max_error <= tol}


@dataclass(frozen=True)
class TimeDependentGraph:
    """Graph samples with a leading time axis: values (T+1, ..., N+1, m)."""

    interface: float
    h: float
    dt: float
    values: np.ndarray
    is_plus: bool

    def slice_at(self, t_index: int) -> GraphFunction:
        return GraphFunction(interface=self.interface, h=self.h,
                             values=self.values[t_index], is_plus=self.is_plus)

    @property
    def steps(self) -> int:
        return self.values.shape[0]


def forward_transform_parabolic(sheets: Sequence[TimeDependentGraph], s: int,
                                target_grid: np.ndarray | None = None) -> HodographPair:
    """Slice-by-slice flattening with the time variable passed through;
    one shear constant is chosen for the whole time range."""
    steps = sheets[0].steps
    if any(g.steps != steps for g in sheets):
        raise ValueError("all sheets must share the time axis")
    if target_grid is None:
        target_grid = default_target_grid([g.slice_at(0) for g in sheets], s)
    slices = [forward_transform([g.slice_at(t) for g in sheets], s, target_grid)
              for t in range(steps)]
    psi = np.stack([p.psi for p in slices])
    phi = tuple(np.stack([p.phi[k] for p in slices])
                for k in range(len(sheets)))
    C = max(p.C for p in slices)
    return HodographPair(psi=psi, phi=phi, C=C, h_y=slices[0].h_y, s=s,
                         interface=sheets[0].interface, dt=sheets[0].dt)


def synthetic_sheet_family(name: str, n_intervals: int,
                           width: float = 0.5) -> tuple[list[GraphFunction], int]:
    """Named smooth sheet families over [0, width] used by refinement
    studies and the CLI.  Returns (sheets, s)."""
    h = width / n_intervals
    xp = h * np.arange(n_intervals + 1)       # plus side, ascending
    xm = -xp                                  # minus side, junction-ordered
    col = lambda f, x: f(x)[:, None]

    if name == "mixed_poly":
        u1 = GraphFunction(0.0, h, col(lambda x: x + x ** 2, xp), True)
        u2 = GraphFunction(0.0, h, col(lambda x: -x + 0.3 * x ** 3, xp), True)
        u3 = GraphFunction(0.0, h, col(lambda x: 0.1 * np.sin(2 * x), xm), False)
        return [u1, u2, u3], 2
    if name == "two_codim":
        def v(fa, fb, x):
            return np.column_stack([fa(x), fb(x)])
        u1 = GraphFunction(0.0, h, v(lambda x: x + 0.2 * x ** 2,
                                     lambda x: 0.3 * x, xp), True)
        u2 = GraphFunction(0.0, h, v(lambda x: -0.5 * x,
                                     lambda x: 0.3 * x - 0.1 * x ** 2, xp), True)
        u3 = GraphFunction(0.0, h, v(lambda x: 0.2 * np.sin(x),
                                     lambda x: 0.1 * x, xm), False)
        u4 = GraphFunction(0.0, h, v(lambda x: -0.1 * x ** 2,
                                     lambda x: 0.05 * x, xm), False)
        return [u1, u2, u3, u4], 2
    if name == "steep_trig":
        u1 = GraphFunction(0.0, h, col(lambda x: np.sin(3 * x) + 2 * x, xp), True)
        u2 = GraphFunction(0.0, h, col(lambda x: -x - 0.5 * np.sin(2 * x), xp), True)
        u3 = GraphFunction(0.0, h, col(lambda x: 0.3 * np.cos(2 * x) - 0.3, xm), False)
        return [u1, u2, u3], 2
    raise ValueError(f"unknown sheet family {name!r}")


SYNTHETIC_FAMILIES = ("mixed_poly", "two_codim", "steep_trig")


def refinement_study(name: str, n_values=(32, 64, 128),
                     width: float = 0.5) -> dict:
    """Roundtrip and chain-rule errors of one family under grid
    refinement, with observed orders between consecutive levels."""
    roundtrip = []
    chain = []
    base_sheets, s = synthetic_sheet_family(name, n_values[0], width)
    y_top = 0.98 * float(default_target_grid(base_sheets, s)[-1])
    for n in n_values:
        sheets, s = synthetic_sheet_family(name, n, width)
        # fixed y window across levels so errors are comparable
        y = np.linspace(0.0, y_top, n + 1)
        pair = forward_transform(sheets, s, y)
        xq = np.linspace(0.0, 0.9 * float(np.min(pair.psi[..., -1])), n)
        x_lo = float(np.max(pair.psi[..., -1] - pair.C * y[-1]))
        xqm = np.linspace(0.9 * x_lo, 0.0, n)
        rec = inverse_transform(pair, xq, xqm)
        err = 0.0
        for k, g in enumerate(rec):
            ref = _eval_family(name, k, g.x_nodes(), width)
            err = max(err, float(np.max(np.abs(g.values - ref))))
        roundtrip.append(err)
        rep = verify_chain_rule(sheets, pair, tol=np.inf)
        chain.append(rep["max_error"])
    h_values = [width / n for n in n_values]
    return {
        "family": name,
        "h_values": h_values,
        "roundtrip_errors": roundtrip,
        "chain_rule_errors": chain,
        "roundtrip_orders": _orders(roundtrip),
        "chain_rule_orders": _orders(chain),
    }


def _orders(errors):
    return [float(np.log2(a / b)) for a, b in zip(errors, errors[1:])]


def _eval_family(name: str, k: int, x: np.ndarray, width: float) -> np.ndarray:
    """Analytic values of sheet k of a named family at arbitrary points."""
    fns = {
        "mixed_poly": [
            lambda x: np.column_stack([x + x ** 2]),
            lambda x: np.column_stack([-x + 0.3 * x ** 3]),
            lambda x: np.column_stack([0.1 * np.sin(2 * x)]),
        ],
        "two_codim": [
            lambda x: np.column_stack([x + 0.2 * x ** 2, 0.3 * x]),
            lambda x: np.column_stack([-0.5 * x, 0.3 * x - 0.1 * x ** 2]),
            lambda x: np.column_stack([0.2 * np.sin(x), 0.1 * x]),
            lambda x: np.column_stack([-0.1 * x ** 2, 0.05 * x]),
        ],
        "steep_trig": [
            lambda x: np.column_stack([np.sin(3 * x) + 2 * x]),
            lambda x: np.column_stack([-x - 0.5 * np.sin(2 * x)]),
            lambda x: np.column_stack([0.3 * np.cos(2 * x) - 0.3]),
        ],
    }
    return fns[name][k](np.asarray(x, dtype=float))


def graph_to_csv(g: GraphFunction, path) -> None:
    """One row per node: x coordinate then the m value columns."""
    if g.values.ndim != 2:
        raise ValueError("CSV export supports one-dimensional grids")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x"] + [f"u{j + 1}" for j in range(g.m)])
        for x, row in zip(g.x_nodes(), g.values):
            writer.writerow([repr(float(x))] + [repr(float(v)) for v in row])


def graph_from_csv(path, is_plus: bool) -> GraphFunction:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    x = data[:, 0]
    h = abs(x[1] - x[0])
    interface = float(x[0])
    vals = data[:, 1:]
    return GraphFunction(interface=interface, h=h, values=vals, is_plus=is_plus)
