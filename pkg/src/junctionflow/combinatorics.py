"""Exact-arithmetic verification of the weighted combinatorial bounds and
the majorant power inequality used by the Gevrey induction.

Everything here is computed in rational arithmetic (fractions.Fraction);
no floating point enters any verdict.  The two irrational constants of
the source inequalities are replaced by explicit rationals on the
conservative side, so a pass certifies the original statement:

* Q_PI = 123370/6250 = 19.7392 < 2 pi^2   (upper-bound constant),
* C0_LOW = 257391/10000 = 25.7391 < 6 + 2 pi^2
  (the power bound is increasing in this constant).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable

from .errors import RangeError, ShapeMismatch

Q_PI = Fraction(123370, 6250)        # 19.7392, strictly below 2 pi^2
C0_LOW = Fraction(257391, 10000)     # 25.7391, strictly below 6 + 2 pi^2


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    if n < 0:
        raise RangeError(f"factorial of negative {n}")
    return 1 if n <= 1 else n * _fact(n - 1)


def vandermonde_check(m: int, n: int, k: int) -> bool:
    """Exact check of sum_i C(m,i) C(n,k-i) = C(m+n,k)."""
    if m < 0 or n < 0 or not (0 <= k <= m + n):
        raise RangeError("need m,n >= 0 and 0 <= k <= m+n")
    lhs = sum(comb(m, i) * comb(n, k - i)
              for i in range(max(0, k - n), min(m, k) + 1))
    return lhs == comb(m + n, k)


def combo_index_set(b: int, m: int, n: int) -> list[tuple[int, int]]:
    """Admissible (i, j): 0 <= i <= m, 0 <= j <= n, 2 <= 2bi+j <= 2bm+n-2."""
    return [(i, j) for i in range(m + 1) for j in range(n + 1)
            if 2 <= 2 * b * i + j <= 2 * b * m + n - 2]


def combo_sum(b: int, m: int, n: int) -> Fraction:
    """Exact value of the weighted double factorial sum

        sum (2bi+j-2)! (2b(m-i)+n-j-2)! / (i! j! (m-i)! (n-j)!)

    over the admissible index window."""
    if b < 1 or m < 0 or n < 0:
        raise RangeError("need b >= 1 and m, n >= 0")
    if 2 * b * m + n < 4:
        raise RangeError("sum needs 2bm + n >= 4")
    total = Fraction(0)
    for i, j in combo_index_set(b, m, n):
        total += Fraction(
            _fact(2 * b * i + j - 2) * _fact(2 * b * (m - i) + n - j - 2),
            _fact(i) * _fact(j) * _fact(m - i) * _fact(n - j),
        )
    return total


@dataclass(frozen=True)
class ComboVerdict:
    lhs: Fraction
    rhs_bound: Fraction
    holds: bool
    b: int
    m: int
    n: int


def combo_bound_check(b: int, m: int, n: int) -> ComboVerdict:
    """Strengthened inequality: combo_sum <= Q_PI (2bm+n-2)!/(m! n!),
    with Q_PI strictly under 2 pi^2 so a pass implies the original."""
    lhs = combo_sum(b, m, n)
    rhs = Q_PI * Fraction(_fact(2 * b * m + n - 2), _fact(m) * _fact(n))
    return ComboVerdict(lhs=lhs, rhs_bound=rhs, holds=lhs <= rhs, b=b, m=m, n=n)


def combo2_check(N: int) -> bool:
    """Exact check of sum_{k=2}^{N-2} N!/((k-1)^2 (N-k-1)^2) <= Q_PI (N-2)!."""
    if N < 4:
        raise RangeError("need N >= 4")
    lhs = sum(Fraction(_fact(N), (k - 1) ** 2 * (N - k - 1) ** 2)
              for k in range(2, N - 1))
    return lhs <= Q_PI * _fact(N - 2)


class MajorantPoly:
    """Truncated bivariate polynomial sum c_ij tau^i xi^j with exact
    rational coefficients, 0 <= i <= p, 0 <= j <= q, plus the weight b of
    the anisotropic order 2bi + j.

    Coefficients must be nonnegative (this is a calculus of majorants).
    The domination order compares coefficients entrywise over the weight
    window 2bi + j <= 2bp + q, ignoring the constant term.
    """

    __slots__ = ("b", "p", "q", "coeffs")

    def __init__(self, b: int, p: int, q: int, coeffs=None):
        if b < 1 or p < 0 or q < 0:
            raise RangeError("need b >= 1 and p, q >= 0")
        self.b = b
        self.p = p
        self.q = q
        if coeffs is None:
            coeffs = [[Fraction(0)] * (q + 1) for _ in range(p + 1)]
        self.coeffs = coeffs
        for row in coeffs:
            for c in row:
                if c < 0:
                    raise ValueError("majorant coefficients must be >= 0")

    def same_shape(self, other: "MajorantPoly") -> bool:
        return (self.b, self.p, self.q) == (other.b, other.p, other.q)

    def set(self, i: int, j: int, value) -> None:
        self.coeffs[i][j] = Fraction(value)

    def get(self, i: int, j: int) -> Fraction:
        return self.coeffs[i][j]

    def in_window(self, i: int, j: int) -> bool:
        return 2 * self.b * i + j <= 2 * self.b * self.p + self.q

    def copy(self) -> "MajorantPoly":
        return MajorantPoly(self.b, self.p, self.q,
                            [row[:] for row in self.coeffs])

    @classmethod
    def one(cls, b: int, p: int, q: int) -> "MajorantPoly":
        out = cls(b, p, q)
        out.set(0, 0, 1)
        return out

    def __eq__(self, other):
        return (isinstance(other, MajorantPoly) and self.same_shape(other)
                and self.coeffs == other.coeffs)

    def __repr__(self):
        terms = [f"{c}*t^{i}x^{j}" for i, row in enumerate(self.coeffs)
                 for j, c in enumerate(row) if c != 0]
        return f"MajorantPoly(b={self.b}, {' + '.join(terms) or '0'})"


def majorant_leq(f: MajorantPoly, g: MajorantPoly) -> bool:
    """Domination order f << g: every coefficient of f is at most the
    matching coefficient of g, over all in-window (i, j) except (0, 0)."""
    if not f.same_shape(g):
        raise ShapeMismatch("majorants must share (b, p, q)")
    for i in range(f.p + 1):
        for j in range(f.q + 1):
            if (i, j) == (0, 0) or not f.in_window(i, j):
                continue
            if f.coeffs[i][j] > g.coeffs[i][j]:
                return False
    return True


def majorant_product(f: MajorantPoly, g: MajorantPoly) -> MajorantPoly:
    """Convolution truncated to the shared rectangle.  Dropping
    out-of-rectangle terms only removes nonnegative coefficients, and the
    order ignores out-of-window entries, so monotonicity in both factors
    is preserved."""
    if not f.same_shape(g):
        raise ShapeMismatch("majorants must share (b, p, q)")
    out = MajorantPoly(f.b, f.p, f.q)
    for i1 in range(f.p + 1):
        for j1 in range(f.q + 1):
            c1 = f.coeffs[i1][j1]
            if c1 == 0:
                continue
            for i2 in range(f.p + 1 - i1):
                for j2 in range(f.q + 1 - j1):
                    c2 = g.coeffs[i2][j2]
                    if c2 == 0:
                        continue
                    out.coeffs[i1 + i2][j1 + j2] += c1 * c2
    return out


def majorant_power(f: MajorantPoly, k: int) -> MajorantPoly:
    if k < 1:
        raise RangeError("power must be >= 1")
    out = f.copy()
    for _ in range(k - 1):
        out = majorant_product(out, f)
    return out


def base_majorant(b: int, p: int, q: int, s: int, H0, H) -> MajorantPoly:
    """The seed majorant

        w = H0 xi + sum_{2 <= 2bi+j <= 2bp+q} (2bi+j-2)!/(i! j!)
                    H0 H^{max(2bi+j+s-2, 0)} tau^i xi^j.
    """
    H0 = Fraction(H0)
    H = Fraction(H)
    w = MajorantPoly(b, p, q)
    if q >= 1:
        w.set(0, 1, H0)
    for i in range(p + 1):
        for j in range(q + 1):
            wt = 2 * b * i + j
            if 2 <= wt <= 2 * b * p + q:
                w.coeffs[i][j] += (Fraction(_fact(wt - 2), _fact(i) * _fact(j))
                                   * H0 * H ** max(wt + s - 2, 0))
    return w


def power_bound_rhs(k: int, b: int, p: int, q: int, s: int, H0, H) -> MajorantPoly:
    """The claimed dominating polynomial for w^k:

        H0^k xi^k + sum_{k+1 <= 2bi+j <= 2bp+q} (2bi+j-2)!/(i! j!)
                    C0^{k-1} H0^k H^{max(2bi+j+s-k-1, 0)} tau^i xi^j.
    """
    H0 = Fraction(H0)
    H = Fraction(H)
    rhs = MajorantPoly(b, p, q)
    if k <= q:
        rhs.set(0, k, H0 ** k)
    for i in range(p + 1):
        for j in range(q + 1):
            wt = 2 * b * i + j
            if k + 1 <= wt <= 2 * b * p + q:
                rhs.coeffs[i][j] += (Fraction(_fact(wt - 2), _fact(i) * _fact(j))
                                     * C0_LOW ** (k - 1) * H0 ** k
                                     * H ** max(wt + s - k - 1, 0))
    return rhs


def verify_power_bound(k: int, p: int, q: int, b: int, s: int, H0, H) -> bool:
    """Exact check that w^k (computed by repeated truncated convolution)
    is dominated by the claimed bound with the conservative constant
    C0_LOW; the bound is increasing in that constant, so a pass certifies
    the original claim."""
    if Fraction(H0) < 1 or Fraction(H) < 1:
        raise RangeError("need H0, H >= 1")
    if not (1 <= k <= 2 * b * p + q):
        raise RangeError("need 1 <= k <= 2bp + q")
    if s > 0:
        raise RangeError("the weight shift s must be <= 0")
    w = base_majorant(b, p, q, s, H0, H)
    return majorant_leq(majorant_power(w, k), power_bound_rhs(k, b, p, q, s, H0, H))


def inductive_step_check(k: int, p: int, q: int, b: int, s: int, H0, H) -> bool:
    """Run the induction step explicitly: multiply the level-k bound by w
    and test domination by the level-(k+1) bound, all exact."""
    w = base_majorant(b, p, q, s, H0, H)
    lhs = majorant_product(w, power_bound_rhs(k, b, p, q, s, H0, H))
    return majorant_leq(lhs, power_bound_rhs(k + 1, b, p, q, s, H0, H))


def full_report(b_max: int = 3, degree_max: int = 30,
                vandermonde_max: int = 20, combo2_max: int = 40,
                power_grid: Iterable[tuple] | None = None) -> dict:
    """Run every exact verdict over the documented ranges and collect the
    outcomes with the constants used."""
    if power_grid is None:
        power_grid = default_power_grid()
    vandermonde_ok = all(
        vandermonde_check(m, n, k)
        for m in range(vandermonde_max + 1)
        for n in range(vandermonde_max + 1)
        for k in range(m + n + 1))
    combo_cases = []
    for b in range(1, b_max + 1):
        for m in range(degree_max // (2 * b) + 1):
            for n in range(degree_max + 1):
                if 4 <= 2 * b * m + n <= degree_max:
                    v = combo_bound_check(b, m, n)
                    combo_cases.append({
                        "b": b, "m": m, "n": n, "holds": v.holds,
                        "lhs": str(v.lhs), "rhs_bound": str(v.rhs_bound)})
    combo2_ok = {N: combo2_check(N) for N in range(4, combo2_max + 1)}
    power_cases = []
    for (b, p, q, s, H0, H) in power_grid:
        for k in range(1, 2 * b * p + q + 1):
            power_cases.append({
                "b": b, "p": p, "q": q, "s": s, "H0": str(Fraction(H0)),
                "H": str(Fraction(H)), "k": k,
                "holds": verify_power_bound(k, p, q, b, s, H0, H)})
    all_hold = (vandermonde_ok
                and all(c["holds"] for c in combo_cases)
                and all(combo2_ok.values())
                and all(c["holds"] for c in power_cases))
    return {
        "constants": {"q_pi": str(Q_PI), "c0_low": str(C0_LOW)},
        "vandermonde": {"max_mn": vandermonde_max, "holds": vandermonde_ok},
        "combo_bound": {"cases": len(combo_cases),
                        "holds": all(c["holds"] for c in combo_cases),
                        "failures": [c for c in combo_cases if not c["holds"]]},
        "combo2": {"range": [4, combo2_max],
                   "holds": all(combo2_ok.values()),
                   "failures": [N for N, ok in combo2_ok.items() if not ok]},
        "power_bound": {"cases": len(power_cases),
                        "holds": all(c["holds"] for c in power_cases),
                        "failures": [c for c in power_cases if not c["holds"]]},
        "all_hold": all_hold,
    }


def default_power_grid() -> list[tuple]:
    """(b, p, q, s, H0, H) cases exercised by the report: every k in
    1..2bp+q is checked for each."""
    return [
        (1, 4, 4, 0, 1, 1),
        (1, 3, 3, -1, 1, 2),
        (2, 3, 5, -2, 1, 1),
        (2, 2, 3, 0, 2, 1),
        (3, 2, 4, 0, 1, 1),
    ]
