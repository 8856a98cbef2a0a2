"""Junction configurations: q graph sheets meeting along a common boundary.

A configuration records the tangent data of the sheets at one boundary
point: sheets 1..s live over the plus side of the interface, sheets
s+1..q over the minus side, and sheet k leaves the junction with slope
vector a_k (the normal-direction derivative of its graph function).
The stationarity test is that the multiplicity-weighted outward unit
conormals sum to zero.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateConfig

# Configs whose first two slopes are closer than this are rejected by
# operations that divide by |a_1 - a_2|.
GAP_FLOOR = 1e-10

# Tolerance for the "normalized" predicate (transverse components of the
# first two slopes must vanish to this level).
_NORMALIZED_TOL = 1e-12


@dataclass(frozen=True)
class JunctionConfig:
    """Tangent-cone model of a junction: dimensions, side split,
    multiplicities, and per-sheet slope vectors.

    n: base dimension (the simulator requires n = 1, analysis allows any).
    m: codimension of the graphs.
    q: number of sheets (>= 3).
    s: number of sheets on the plus side (2 <= s < q).
    theta: positive integer multiplicities, one per sheet.
    slopes: q vectors in R^m, slope of sheet k at the junction point.
    """

    n: int
    m: int
    q: int
    s: int
    theta: tuple[int, ...]
    slopes: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive integers")
        if self.q < 3:
            raise ValueError("need at least three sheets (q >= 3)")
        if not (2 <= self.s < self.q):
            raise ValueError("side split must satisfy 2 <= s < q")
        if len(self.theta) != self.q:
            raise ValueError("theta must list one multiplicity per sheet")
        if any(int(t) != t or t < 1 for t in self.theta):
            raise ValueError("multiplicities must be integers >= 1")
        if len(self.slopes) != self.q:
            raise ValueError("slopes must list one vector per sheet")
        if any(len(a) != self.m for a in self.slopes):
            raise ValueError("each slope vector must have m components")
        object.__setattr__(self, "theta", tuple(int(t) for t in self.theta))
        object.__setattr__(
            self, "slopes", tuple(tuple(float(c) for c in a) for a in self.slopes)
        )

    @property
    def slope_array(self) -> np.ndarray:
        """Slopes as a (q, m) float array."""
        return np.array(self.slopes, dtype=float)

    @property
    def gap(self) -> float:
        """|a_1 - a_2|, the separation of the first two slopes."""
        a = self.slope_array
        return float(np.linalg.norm(a[0] - a[1]))

    @property
    def normalized(self) -> bool:
        """True iff a_1, a_2 lie in span(e_1) with a_1^1 > a_2^1."""
        a = self.slope_array
        if a[0, 0] <= a[1, 0]:
            return False
        if self.m == 1:
            return True
        return bool(np.max(np.abs(a[:2, 1:])) <= _NORMALIZED_TOL)

    def with_slopes(self, slopes: np.ndarray) -> "JunctionConfig":
        return JunctionConfig(
            self.n, self.m, self.q, self.s, self.theta,
            tuple(tuple(float(c) for c in row) for row in np.asarray(slopes)),
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "q": self.q, "s": self.s,
            "theta": list(self.theta),
            "slopes": [list(a) for a in self.slopes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JunctionConfig":
        keys = {"n", "m", "q", "s", "theta", "slopes"}
        unknown = set(d) - keys
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        missing = keys - set(d)
        if missing:
            raise ValueError(f"missing config fields: {sorted(missing)}")
        return cls(d["n"], d["m"], d["q"], d["s"],
                   tuple(d["theta"]), tuple(tuple(a) for a in d["slopes"]))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "JunctionConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class AmbientGeometry:
    """Second fundamental form of the ambient manifold, as a pluggable
    bilinear map (point, v, w) -> vector in R^{n+m}. Flat space uses the
    zero form."""

    second_fundamental_form: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    is_flat: bool = False

    @classmethod
    def flat(cls) -> "AmbientGeometry":
        def zero_form(point, v, w):
            return np.zeros(len(point))
        return cls(second_fundamental_form=zero_form, is_flat=True)


@dataclass(frozen=True)
class BalanceReport:
    """Multiplicity-weighted conormal sum at the junction."""

    residual: np.ndarray            # vector in R^{1+m}
    norm: float
    per_sheet_conormals: tuple      # q unit vectors in R^{1+m}


def unit_conormal(config: JunctionConfig, k: int) -> np.ndarray:
    """Outward unit conormal of sheet k at the junction, in the
    (x_n, z)-coordinates: -(1, a_k)/sqrt(1+|a_k|^2) on the plus side
    (k <= s), +(1, a_k)/sqrt(1+|a_k|^2) on the minus side.

    k is 1-based.
    """
    if not (1 <= k <= config.q):
        raise IndexError(f"sheet index {k} out of range 1..{config.q}")
    a = np.asarray(config.slopes[k - 1], dtype=float)
    v = np.concatenate(([1.0], a))
    v /= np.linalg.norm(v)
    return -v if k <= config.s else v


def balance_residual(config: JunctionConfig) -> BalanceReport:
    """Sum of theta_k times the outward unit conormals; zero exactly at
    stationary cones."""
    conormals = tuple(unit_conormal(config, k) for k in range(1, config.q + 1))
    residual = np.zeros(1 + config.m)
    for t, eta in zip(config.theta, conormals):
        residual += t * eta
    return BalanceReport(residual=residual,
                         norm=float(np.linalg.norm(residual)),
                         per_sheet_conormals=conormals)


def boundary_balance_residual(
    psi_gradient: Sequence[float],
    directional_derivatives: Sequence[Sequence[float]],
    config: JunctionConfig,
) -> np.ndarray:
    """Stacked left-hand sides of the curved-boundary balance equations:

        sum_{k<=s} theta_k / w_k  -  sum_{k>s} theta_k / w_k          (1 row)
        sum_{k<=s} theta_k d_k / w_k - sum_{k>s} theta_k d_k / w_k    (m rows)

    with w_k = sqrt(1 + |psi_gradient|^2 + |d_k|^2) and d_k the supplied
    directional derivative of sheet k along (-psi_gradient, 1).

    Note the overall sign: this stack equals minus the conormal sum of
    balance_residual when psi_gradient = 0 and d_k = a_k (both vanish
    together at stationary configurations).
    """
    g = np.asarray(psi_gradient, dtype=float).reshape(-1)
    if g.shape[0] != config.n - 1:
        raise ValueError(f"psi_gradient must have {config.n - 1} components")
    d = np.asarray(directional_derivatives, dtype=float)
    if d.shape != (config.q, config.m):
        raise ValueError(f"need {config.q} derivative vectors of length {config.m}")
    g2 = float(g @ g)
    out = np.zeros(1 + config.m)
    for k in range(config.q):
        w = np.sqrt(1.0 + g2 + d[k] @ d[k])
        sign = 1.0 if k < config.s else -1.0
        out[0] += sign * config.theta[k] / w
        out[1:] += sign * config.theta[k] * d[k] / w
    return out


def not_all_tangent(config: JunctionConfig) -> bool:
    """True iff the sheets are not all tangent to one plane at the
    junction, i.e. the slope vectors are not all equal."""
    a = config.slope_array
    return bool(np.any(a != a[0]))


def normalization_rotation(config: JunctionConfig) -> np.ndarray:
    """Orthogonal m x m matrix R sending a_1 - a_2 to |a_1 - a_2| e_1 and
    a_1 + a_2 into span(e_1, e_2), completed to a full orthonormal basis.

    The completion is deterministic (Gram-Schmidt against the standard
    basis) and irrelevant to every verdict computed downstream.
    """
    a = config.slope_array
    diff = a[0] - a[1]
    gap = np.linalg.norm(diff)
    if gap < GAP_FLOOR:
        raise DegenerateConfig(
            f"|a_1 - a_2| = {gap:.3e} below floor {GAP_FLOOR:.0e}")
    rows = [diff / gap]
    plus = a[0] + a[1]
    plus = plus - (plus @ rows[0]) * rows[0]
    if np.linalg.norm(plus) > 1e-13:
        rows.append(plus / np.linalg.norm(plus))
    for e in np.eye(config.m):
        if len(rows) == config.m:
            break
        v = e.copy()
        for r in rows:
            v -= (v @ r) * r
        nv = np.linalg.norm(v)
        if nv > 1e-10:
            rows.append(v / nv)
    return np.array(rows)


def normalize(config: JunctionConfig) -> tuple[JunctionConfig, np.ndarray]:
    """Rotate slope space so the first two slopes are split along e_1.

    Returns (rotated config, rotation R) with a_k(new) = R a_k(old).
    After rotation, a_1 - a_2 = |a_1 - a_2| e_1; the transverse parts of
    a_1 and a_2 are equal, and zero exactly when a_1, a_2 are collinear
    with their difference (an m x m rotation cannot do better: it
    preserves linear independence).

    Raises DegenerateConfig when a_1 = a_2 within the gap floor.
    """
    R = normalization_rotation(config)
    new_slopes = (R @ config.slope_array.T).T
    # The rotation makes the transverse parts of a_1 and a_2 equal exactly;
    # enforce that against last-bit rounding.
    if config.m > 1:
        new_slopes[1, 1:] = new_slopes[0, 1:]
    return config.with_slopes(new_slopes), R


def metric_matrix(p: np.ndarray) -> np.ndarray:
    """Graph metric G(p) = I + p^T p for a slope matrix p in R^{m x n}.

    Symmetric positive definite with det >= 1 for every p.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    n = p.shape[1]
    return np.eye(n) + p.T @ p


def curvature_source(
    ambient: AmbientGeometry,
    x: Sequence[float],
    z: Sequence[float],
    p: np.ndarray,
) -> np.ndarray:
    """Curvature source vector with components
    sum_{ij} G^{ij}(p) A((e_i, p_i), (e_j, p_j)) in R^{n+m},
    where p_i is the i-th column of the slope matrix p.

    Identically zero for flat ambient geometry.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    p = np.atleast_2d(np.asarray(p, dtype=float))
    m, n = p.shape
    if ambient.is_flat:
        return np.zeros(n + m)
    point = np.concatenate([x, z])
    G = metric_matrix(p)
    Ginv = np.linalg.solve(G, np.eye(n))
    tangents = [np.concatenate([np.eye(n)[i], p[:, i]]) for i in range(n)]
    out = np.zeros(n + m)
    for i in range(n):
        for j in range(n):
            out += Ginv[i, j] * np.asarray(
                ambient.second_fundamental_form(point, tangents[i], tangents[j]),
                dtype=float,
            )
    return out
