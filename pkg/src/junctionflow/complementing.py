"""Boundary-system analysis for the linearized junction equations.

After the flattening transform, the sheet equations linearize (at the
junction, in the frame where the first two slopes split along e_1 with
gap g = a_1^1 - a_2^1 > 0) to diagonal second-order equations on the
half space {y_n > 0}, and the junction conditions become algebraic
constraints on the amplitudes c_k^kappa of decaying exponential
solutions.  Whether the only admissible amplitude vector is zero is
decided two independent ways:

* closed form: a determinant D expressed as a weighted sum of
  Cauchy-Schwarz defects, nonnegative, and zero exactly when every
  sheet carries the same slope;
* numeric: assemble the full boundary matrix at frequency samples and
  read the kernel dimension off its singular values.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BranchFailure, DegenerateConfig, EmptySamples, JunctionFlowError
from .geometry import GAP_FLOOR, JunctionConfig, normalize, not_all_tangent

# Relative singular-value threshold deciding rank deficiency.
SV_RTOL = 1e-8


@dataclass(frozen=True)
class LinearizedSystem:
    """Normalized junction data plus the shear constant, ready for the
    boundary-system tests.

    degenerate marks reference systems built from equal-slope
    configurations: the flattening transform does not exist there, the
    gap is nominal, and only the reduced boundary matrix (which is then
    singular) is meaningful.
    """

    config: JunctionConfig
    C: float
    gap: float
    mode: str = "elliptic"
    degenerate: bool = False

    def __post_init__(self):
        if self.mode not in ("elliptic", "parabolic"):
            raise ValueError("mode must be 'elliptic' or 'parabolic'")
        if self.gap <= 0.0:
            raise ValueError("gap must be positive")
        if self.C * self.gap <= 1.0:
            raise ValueError("need C * gap > 1")

    @property
    def strictly_normalized(self) -> bool:
        return self.config.normalized


@dataclass(frozen=True)
class ExponentTable:
    """Decay exponents of the exponential solutions, per sheet and
    component (they do not depend on the component)."""

    lam: np.ndarray                 # (q, m) complex, Re > 0
    xi_prime: np.ndarray
    rho: complex | None = None


@dataclass(frozen=True)
class BoundaryMatrix:
    """Boundary system after eliminating the amplitudes down to
    (c_1^1, c_2^1, chat_1); rows are the weighted-slope equation followed
    by the m rows of the vector equation."""

    reduced: np.ndarray             # (m+1, m+1) real
    full_unknowns: str = (
        "c_k = c_1^1 (a_k - a_2)/g + c_2^1 (a_1 - a_k)/g + (0, chat_1)"
    )


@dataclass(frozen=True)
class Verdict:
    """Outcome of the complementing test."""

    mode: str
    elliptic_ok: bool | None
    parabolic_ok: bool | None
    D: float
    kernel_dim: int
    min_singular_value: float
    delta: float | None
    per_sample_min_singular_value: tuple[float, ...] = ()

    @property
    def ok(self) -> bool:
        return self.elliptic_ok if self.mode == "elliptic" else self.parabolic_ok


def build_linearization(config: JunctionConfig, C: float | None = None,
                        mode: str = "elliptic") -> LinearizedSystem:
    """Normalize the configuration and package it with the shear constant.

    C defaults to 2/gap, twice the flattened-frame slope at the origin,
    so that C * gap = 2 > 1.
    """
    if not not_all_tangent(config):
        raise DegenerateConfig("all sheets tangent to one plane")
    norm_config, _ = normalize(config)
    gap = norm_config.gap
    if gap < GAP_FLOOR:
        raise DegenerateConfig("first two slopes coincide")
    if C is None:
        C = 2.0 / gap
    return LinearizedSystem(config=norm_config, C=float(C), gap=gap, mode=mode)


def equal_slope_system(config: JunctionConfig, mode: str = "elliptic") -> LinearizedSystem:
    """Reference system for an equal-slope configuration.

    All sheets share one slope vector; the common slope is rotated onto
    e_1 and the gap is set to a nominal 1 (the reduced boundary matrix is
    singular independently of that choice).
    """
    a = config.slope_array
    if np.any(a != a[0]):
        raise ValueError("equal_slope_system needs identical slopes")
    common = a[0]
    norm = np.linalg.norm(common)
    if norm > 0 and config.m > 1:
        rot_first = np.full(config.q, norm)
        new = np.zeros_like(a)
        new[:, 0] = rot_first
        config = config.with_slopes(new)
    return LinearizedSystem(config=config, C=2.0, gap=1.0, mode=mode,
                            degenerate=True)


def _theta_tilde(config: JunctionConfig) -> np.ndarray:
    a = config.slope_array
    return np.asarray(config.theta, dtype=float) / (1.0 + np.sum(a * a, axis=1))


def principal_coefficient(sys: LinearizedSystem, k: int) -> float:
    """Coefficient of the normal-direction second derivative in the
    flattened sheet equation for sheet k (1-based), after dividing by the
    tangential coefficient."""
    a = sys.config.slope_array[k - 1]
    base = sys.gap ** 2 / (1.0 + a @ a)
    if k <= sys.config.s:
        return float(base)
    return float(base / (1.0 - sys.C * sys.gap) ** 2)


def delta_bound(sys: LinearizedSystem) -> float:
    """Half of min{1, coefficients}: every diagonal symbol root then has
    Re rho <= -2 delta |xi|^2 with margin."""
    coefs = [principal_coefficient(sys, k) for k in range(1, sys.config.q + 1)]
    return 0.5 * min([1.0] + coefs)


def _frequency_factor(sys: LinearizedSystem, xi_prime, rho) -> complex:
    xi = np.atleast_1d(np.asarray(xi_prime, dtype=float))
    xi2 = float(xi @ xi)
    if sys.mode == "elliptic" or rho is None:
        if xi2 == 0.0:
            raise ValueError("elliptic samples need xi' != 0")
        return complex(np.sqrt(xi2))
    rho = complex(rho)
    if rho == 0 and xi2 == 0.0:
        raise ValueError("parabolic samples need (rho, xi') != (0, 0)")
    delta1 = delta_bound(sys) / 2.0
    if rho.real < -delta1 * xi2 - 1e-12:
        raise ValueError("parabolic sample violates Re rho >= -delta_1 |xi'|^2")
    z = rho + xi2
    if z.real < 0.0 and abs(z.imag) <= 1e-14 * abs(z):
        raise BranchFailure(f"rho + |xi'|^2 = {z} on the negative real axis")
    return cmath.sqrt(z)


def decay_exponents(sys: LinearizedSystem, xi_prime,
                    rho: complex | None = None) -> ExponentTable:
    """Exponents lambda_k of the decaying solutions: sqrt(1+|a_k|^2) mu / gap
    on the plus side and (C gap - 1) sqrt(1+|a_k|^2) mu / gap on the minus
    side, where mu = |xi'| (elliptic) or the principal branch of
    sqrt(rho + |xi'|^2) (parabolic)."""
    mu = _frequency_factor(sys, xi_prime, rho)
    a = sys.config.slope_array
    root = np.sqrt(1.0 + np.sum(a * a, axis=1))
    fac = np.where(np.arange(sys.config.q) < sys.config.s, 1.0,
                   sys.C * sys.gap - 1.0)
    lam_sheet = fac * root * mu / sys.gap
    lam = np.tile(lam_sheet[:, None], (1, sys.config.m)).astype(complex)
    if np.any(lam.real <= 0.0):
        raise BranchFailure("computed exponent without positive real part")
    return ExponentTable(lam=lam, xi_prime=np.atleast_1d(np.asarray(xi_prime, float)),
                         rho=None if rho is None else complex(rho))


def _elimination_maps(sys: LinearizedSystem) -> list[np.ndarray]:
    """Per-sheet matrices E_k with c_k = E_k (c_1^1, c_2^1, c_1^2..c_1^m)."""
    cfg = sys.config
    a = cfg.slope_array
    g = sys.gap
    maps = []
    for k in range(cfg.q):
        E = np.zeros((cfg.m, cfg.m + 1))
        E[:, 0] = (a[k] - a[1]) / g
        E[:, 1] = (a[0] - a[k]) / g
        for kappa in range(1, cfg.m):
            E[kappa, kappa + 1] = 1.0
        maps.append(E)
    return maps


def reduced_matrix(sys: LinearizedSystem) -> BoundaryMatrix:
    """Boundary system in the unknowns (c_1^1, c_2^1, chat_1) obtained by
    substituting the interface-matching elimination into the two balance
    equations."""
    cfg = sys.config
    if not sys.degenerate and sys.gap < GAP_FLOOR:
        raise DegenerateConfig("gap below floor")
    a = cfg.slope_array
    tt = _theta_tilde(cfg)
    theta = np.asarray(cfg.theta, dtype=float)
    rows = np.zeros((cfg.m + 1, cfg.m + 1))
    for k, E in enumerate(_elimination_maps(sys)):
        rows[0] += tt[k] * (a[k] @ E)
        proj = (1.0 + a[k] @ a[k]) * np.eye(cfg.m) - np.outer(a[k], a[k])
        rows[1:] += tt[k] * (proj @ E)
    return BoundaryMatrix(reduced=rows)


def _require_normalized(sys: LinearizedSystem) -> None:
    if sys.degenerate:
        return
    if not sys.strictly_normalized:
        raise DegenerateConfig(
            "determinant formulas need the first two slopes in span(e_1); "
            "a slope-space rotation cannot reach that frame here")


def determinant_bruteforce(sys: LinearizedSystem) -> float:
    """Determinant of the reduced boundary matrix restricted to
    (c_1^1, c_2^1, c_1^2) (all of it when m = 1)."""
    _require_normalized(sys)
    M = reduced_matrix(sys).reduced
    if sys.config.m == 1:
        return float(np.linalg.det(M))
    idx = [0, 1, 2]
    return float(np.linalg.det(M[np.ix_(idx, idx)]))


def determinant_closed_form(sys: LinearizedSystem) -> float:
    """The grouped Cauchy-Schwarz form of the boundary determinant.

    With weights tt_k = theta_k / (1 + |a_k|^2), first/second slope
    components A1, A2, and remaining components atil_k:

      g D = w1 (S tt S tt A1^2 - (S tt A1)^2)
          + w2 (S tt S tt A2^2 - (S tt A2)^2)
          + S tt|a|^2 (S tt A1^2 S tt A2^2 - (S tt A1 A2)^2)
          + 2 (S tt S tt A1^2 S tt A2^2 - S tt A1 S tt A2 S tt A1 A2)
          + S tt|atil|^2 (S theta)^2

    with w1 = S tt (1 + A1^2 + |atil|^2), w2 likewise for A2.  For m = 1
    the same derivation leaves the single defect S tt S tt a^2 - (S tt a)^2
    over g.  Nonnegative; zero exactly when all slopes coincide.
    """
    _require_normalized(sys)
    return float(sum(cauchy_schwarz_terms(sys))) / sys.gap


def cauchy_schwarz_terms(sys: LinearizedSystem) -> list[float]:
    """The nonnegative defect terms whose sum is gap * D; five of them for
    m >= 2 (the fourth carrying its factor 2), one for m = 1."""
    _require_normalized(sys)
    cfg = sys.config
    a = cfg.slope_array
    tt = _theta_tilde(cfg)
    A1 = a[:, 0]
    s0 = tt.sum()
    s1 = tt @ A1
    s11 = tt @ A1 ** 2
    if cfg.m == 1:
        return [float(s0 * s11 - s1 ** 2)]
    A2 = a[:, 1]
    atil2 = np.sum(a[:, 2:] ** 2, axis=1)
    absa2 = np.sum(a * a, axis=1)
    s2 = tt @ A2
    s22 = tt @ A2 ** 2
    s12 = tt @ (A1 * A2)
    stil = tt @ atil2
    sabs = tt @ absa2
    w1 = tt @ (1.0 + A1 ** 2 + atil2)
    w2 = tt @ (1.0 + A2 ** 2 + atil2)
    stheta = float(np.sum(cfg.theta))
    return [
        float(w1 * (s0 * s11 - s1 ** 2)),
        float(w2 * (s0 * s22 - s2 ** 2)),
        float(sabs * (s11 * s22 - s12 ** 2)),
        float(2.0 * (s0 * s11 * s22 - s1 * s2 * s12)),
        float(stil * stheta ** 2),
    ]


def boundary_matrix_full(sys: LinearizedSystem, xi_prime,
                         rho: complex | None = None) -> np.ndarray:
    """Assemble the full boundary system in all q*m amplitudes c_k^kappa
    at one frequency sample: the two linearized balance equations (with
    the decay exponents in place) plus the interface-matching rows.

    Column order: (k, kappa) -> k*m + kappa, zero-based.
    """
    cfg = sys.config
    if sys.degenerate:
        raise DegenerateConfig("full boundary assembly needs a genuine gap")
    q, m, s = cfg.q, cfg.m, cfg.s
    a = cfg.slope_array
    g = sys.gap
    lam = decay_exponents(sys, xi_prime, rho).lam
    theta = np.asarray(cfg.theta, dtype=float)
    M = np.zeros((q * m, q * m), dtype=complex)

    def col(k, kappa):
        return k * m + kappa

    # Balance rows: sheet k enters with sign +1 on the plus side, -1 on
    # the minus side, and the minus side carries the 1/(1 - C g) factor.
    for k in range(q):
        sb = (1.0 if k < s else -1.0 / (1.0 - sys.C * g)) * theta[k]
        norm2 = 1.0 + a[k] @ a[k]
        for kappa in range(m):
            d = -lam[k, kappa]
            M[0, col(k, kappa)] += sb * a[k, kappa] * d / norm2 ** 1.5
            for mu in range(m):
                M[1 + mu, col(k, kappa)] += sb * d * (
                    (1.0 if mu == kappa else 0.0) / norm2 ** 0.5
                    - a[k, kappa] * a[k, mu] / norm2 ** 1.5
                )

    # Interface rows.  On the boundary the flattened functions recover
    # psi0 = (c_2^1 - c_1^1)/g and phi_2^1 = (a_1^1 c_2^1 - a_2^1 c_1^1)/g.
    r = 1 + m
    for k in range(2, q):
        M[r, col(k, 0)] += 1.0
        M[r, col(0, 0)] += (a[1, 0] - a[k, 0]) / g
        M[r, col(1, 0)] += (a[k, 0] - a[0, 0]) / g
        r += 1
    for kappa in range(1, m):
        for k in range(1, q):
            M[r, col(k, kappa)] += 1.0
            M[r, col(0, kappa)] += -1.0
            M[r, col(0, 0)] += -(a[k, kappa] - a[0, kappa]) / g
            M[r, col(1, 0)] += (a[k, kappa] - a[0, kappa]) / g
            r += 1
    assert r == q * m
    return M


def default_samples(sys: LinearizedSystem) -> list[tuple]:
    """Deterministic frequency samples: tangential directions e_1 (plus
    e_1 + e_2 when n >= 3), times {0, i, 1+i, -delta_1/2} in the parabolic
    case.  For n = 1 the tangential frequency is the formal unit scalar
    (the boundary system does not depend on it)."""
    n = sys.config.n
    if n == 1:
        xis = [np.array([1.0])]
    else:
        xis = [np.eye(n - 1)[0]]
        if n >= 3:
            xis.append(np.eye(n - 1)[0] + np.eye(n - 1)[1])
    if sys.mode == "elliptic":
        return [(xi, None) for xi in xis]
    delta1 = delta_bound(sys) / 2.0
    rhos = [0.0, 1j, 1.0 + 1j, -delta1 / 2.0]
    return [(xi, rho) for xi in xis for rho in rhos]


def _kernel_dim(M: np.ndarray) -> tuple[int, float]:
    sv = np.linalg.svd(M, compute_uv=False)
    tol = SV_RTOL * sv[0] if sv[0] > 0 else SV_RTOL
    return int(np.sum(sv < tol)), float(sv[-1])


def check_complementing(sys: LinearizedSystem,
                        samples: Sequence[tuple] | None = None) -> Verdict:
    """Decide the complementing condition.

    Assembles the boundary matrix at every sample, reads the kernel
    dimension off its singular values, and cross-checks the verdict
    against the sign of the closed-form determinant.  The verdict must
    be identical across samples (the exponents scale all balance rows by
    one common factor).
    """
    if samples is None:
        samples = default_samples(sys)
    if not samples:
        raise EmptySamples("no frequency samples supplied")
    dims = []
    mins = []
    for xi, rho in samples:
        if sys.degenerate:
            # No flattened frame exists; the reduced system already
            # carries the (singular) boundary algebra.
            kd, sv = _kernel_dim(reduced_matrix(sys).reduced)
        else:
            kd, sv = _kernel_dim(boundary_matrix_full(sys, xi, rho))
        dims.append(kd)
        mins.append(sv)
    if len(set(dims)) != 1:
        raise JunctionFlowError(f"sample-dependent kernel dimensions: {dims}")
    kernel_dim = dims[0]
    D = determinant_closed_form(sys)
    d_scale = max(1.0, float(np.sum(sys.config.theta)) ** 3)
    d_nonzero = abs(D) > 1e-10 * d_scale
    ok = kernel_dim == 0
    if ok != d_nonzero:
        raise JunctionFlowError(
            f"determinant and kernel test disagree: D={D}, kernel_dim={kernel_dim}")
    delta = delta_bound(sys) if sys.mode == "parabolic" else None
    return Verdict(
        mode=sys.mode,
        elliptic_ok=ok if sys.mode == "elliptic" else None,
        parabolic_ok=ok if sys.mode == "parabolic" else None,
        D=D,
        kernel_dim=kernel_dim,
        min_singular_value=min(mins),
        delta=delta,
        per_sample_min_singular_value=tuple(mins),
    )
