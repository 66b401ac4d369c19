"""Equilibria of the full one-third-street game and of the simplified game.

Each player's expectation is affine in that player's own frequencies, so the
best response is read off from the sign of each own-parameter coefficient.
That gives the exact equilibrium test used everywhere here, and the set of
equalities that a branch-by-branch numeric search has to solve.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .game_core import (
    ExpectationTriple,
    FullStrategy,
    Number,
    SkpStrategy,
    _coerce,
    as_number,
    check_pot,
    expectation_full,
    expectation_skp,
)

FULL_PARAMS = FullStrategy.names()
SKP_PARAMS = SkpStrategy.names()

# which player controls each parameter
FULL_OWNER = {"b_j": 3, "b_q": 3, "c_q": 1, "c_k": 1, "d_q": 2, "d_k": 2, "o_k": 2}
SKP_OWNER = {"b_j": 3, "c_k": 1, "d_q": 2}

BIFURCATION_TOL = 1e-9


def pstar() -> float:
    """Pot size above which the simplified game has three equilibria."""
    return (5 + math.sqrt(73)) / 2


def _pstar_sign(P: Number) -> int:
    """Sign of P^2 - 5P - 12, exact for rational P."""
    if isinstance(P, Fraction):
        v = P * P - 5 * P - 12
        return (v > 0) - (v < 0)
    if abs(P - pstar()) <= BIFURCATION_TOL:
        return 0
    return 1 if P > pstar() else -1


def _near(P: Number, value: Number) -> bool:
    if isinstance(P, Fraction):
        return P == value
    return abs(P - value) <= BIFURCATION_TOL


# --------------------------------------------------------------------------
# own-parameter coefficients


def full_coefficients(strategy: FullStrategy, P: Number) -> dict[str, Number]:
    """d E_owner / d param for every parameter (exact: E is affine in own params)."""
    vals = _coerce(list(strategy.as_tuple()) + [P])
    bJ, bQ, cQ, cK, dQ, dK, oK, P = vals
    coef = {
        "b_j": 2 * P - 4 - (P + 1) * (cQ * (1 - dK) + dK + cK * (1 - dQ) + dQ),
        "b_q": 2 * P - 4 - (P + 1) * (cK + dK),
        "c_q": -2 + bJ * (P - (P + 2) * oK),
        "c_k": -2 + P * (bJ + bQ),
        "d_q": cK - 2 + bJ * (1 - cK) * (P + 1),
        "d_k": cQ - 2 + bJ * (1 - cQ) * (P + 1) + bQ * (P + 1),
        "o_k": -cQ - bQ - bJ + bJ * cQ * (P + 2),
    }
    return {k: v / 24 for k, v in coef.items()}


def skp_coefficients(strategy: SkpStrategy, P: Number) -> dict[str, Number]:
    b, c, d, P = _coerce(list(strategy.as_tuple()) + [P])
    coef = {
        "b_j": P - 5 - (P + 1) * (d + (1 - d) * c),
        "c_k": P * b - 2,
        "d_q": c - 2 + b * (1 - c) * (P + 1),
    }
    return {k: v / 24 for k, v in coef.items()}


@dataclass(frozen=True)
class EquilibriumCheck:
    is_equilibrium: bool
    gap: tuple  # best-response gain for Players 1, 2, 3
    branches: tuple  # 'a' (param pushed to 1), 'b' (pushed to 0), 'c' (indifferent)
    coefficients: dict


def check_equilibrium(variant: str, strategy, P: Number, eps: float = 1e-12) -> EquilibriumCheck:
    """Test a strategy profile against every player's best response.

    A parameter whose coefficient exceeds ``eps`` should be 1, one below
    ``-eps`` should be 0, anything else is free.  The gap is the expectation
    a player gains by moving every violated parameter to its corner.
    """
    check_pot(P)
    if variant == "skp":
        coefs, owner = skp_coefficients(strategy, P), SKP_OWNER
    elif variant == "full":
        if isinstance(strategy, SkpStrategy):
            strategy = strategy.embed()
        coefs, owner = full_coefficients(strategy, P), FULL_OWNER
    else:
        raise ValueError(f"unknown variant {variant!r}")
    gap = [0, 0, 0]
    branches = []
    for name, k in coefs.items():
        x = getattr(strategy, name)
        if k > eps:
            branches.append("a")
            gap[owner[name] - 1] += k * (1 - x)
        elif k < -eps:
            branches.append("b")
            gap[owner[name] - 1] += -k * x
        else:
            branches.append("c")
    ok = all(g <= eps for g in gap)
    return EquilibriumCheck(ok, tuple(gap), tuple(branches), coefs)


# --------------------------------------------------------------------------
# closed-form families of the full game


@dataclass(frozen=True)
class EquilibriumFamily:
    """A convex set of equilibria, stored as its vertices.

    ``free`` names the parameters that vary across the family; ``note``
    records side conditions in words.
    """

    label: str
    P: Number
    vertices: tuple  # FullStrategy corners; one vertex means an isolated point
    free: tuple = ()
    note: str = ""

    @property
    def dimension(self) -> int:
        if len(self.vertices) < 2:
            return 0
        base = np.array(self.vertices[0].as_tuple(), dtype=float)
        m = np.array([np.array(v.as_tuple(), dtype=float) - base for v in self.vertices[1:]])
        return int(np.linalg.matrix_rank(m, tol=1e-12))

    def sample(self, n: int = 5) -> list[FullStrategy]:
        """``n`` deterministic members strictly inside the family (if it has an inside)."""
        if len(self.vertices) == 1:
            return [self.vertices[0]] * n
        out = []
        m = len(self.vertices)
        for i in range(n):
            # fixed, distinct barycentric weights with every weight positive
            w = [1 + ((i + 1) * (j + 1) * 7) % (2 * m + 3) for j in range(m)]
            tot = sum(w)
            w = [Fraction(x, tot) for x in w]
            vals = [sum(wj * as_number(getattr(v, name)) for wj, v in zip(w, self.vertices))
                    for name in FULL_PARAMS]
            out.append(FullStrategy(*_coerce(vals)))
        return out

    def member(self, t: Number) -> FullStrategy:
        """Point ``(1-t)*v0 + t*v1`` on a segment family."""
        if len(self.vertices) != 2:
            raise ValueError(f"{self.label} is not a segment")
        a, b = self.vertices
        vals = [(1 - t) * as_number(x) + t * as_number(y) for x, y in zip(a.as_tuple(), b.as_tuple())]
        return FullStrategy(*_coerce(vals))

    def contains(self, strategy: FullStrategy, tol: float = 1e-9) -> bool:
        x = np.array(strategy.as_tuple(), dtype=float)
        V = np.array([v.as_tuple() for v in self.vertices], dtype=float)
        if len(V) == 1:
            return bool(np.max(np.abs(x - V[0])) <= tol)
        # least-squares barycentric weights (affine hull), then sign check
        A = np.vstack([V.T, np.ones(len(V))])
        rhs = np.append(x, 1.0)
        w, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        if np.max(np.abs(A @ w - rhs)) > tol:
            return False
        if len(V) == 2:
            return bool(w.min() >= -tol)
        return _in_hull(x, V, tol)


def _in_hull(x, V, tol) -> bool:
    # small 2-d polytopes: split into triangles fanned from vertex 0 after
    # ordering the vertices by angle in their own plane
    c = V.mean(axis=0)
    u, s, vt = np.linalg.svd(V - c)
    basis = vt[:2]
    pts = (V - c) @ basis.T
    order = np.argsort(np.arctan2(pts[:, 1], pts[:, 0]))
    pts = pts[order]
    q = (x - c) @ basis.T
    for i in range(1, len(pts) - 1):
        a, b, d = pts[0], pts[i], pts[i + 1]
        m = np.column_stack([b - a, d - a])
        try:
            lam = np.linalg.solve(m, q - a)
        except np.linalg.LinAlgError:
            continue
        if lam.min() >= -tol and lam.sum() <= 1 + tol:
            return True
    return False


def _fs(**kw) -> FullStrategy:
    vals = {k: kw.get(k, 0) for k in FULL_PARAMS}
    return FullStrategy(*_coerce([vals[k] for k in FULL_PARAMS]))


def equilibrium_families_full(P: Number) -> list[EquilibriumFamily]:
    """All equilibrium families of the full game at pot size ``P``."""
    check_pot(P)
    P = as_number(P)
    if _near(P, 2):
        P2 = as_number(2) if isinstance(P, Fraction) else P
        top = Fraction(2, 3) if isinstance(P2, Fraction) else 2 / 3
        return [EquilibriumFamily(
            "eq1", P2,
            (_fs(), _fs(b_j=top), _fs(b_q=top)),
            ("b_j", "b_q"), "0 <= b_J + b_Q <= 2/3, J/Q split free")]
    if P < 2:
        return [EquilibriumFamily(
            "trivial", P, (_fs(o_k=0), _fs(o_k=1)), ("o_k",), "all zero, o_K undetermined")]
    if P < 5 and not _near(P, 5):
        tot = 2 / (P + 1)
        dk = (2 * P - 4) / (P + 1)
        return [EquilibriumFamily(
            "eq2", P, (_fs(b_j=tot, d_k=dk), _fs(b_q=tot, d_k=dk)),
            ("b_j", "b_q"), "b_J + b_Q = 2/(P+1), split free")]
    if _near(P, 5):
        lo, hi = (Fraction(1, 3), Fraction(2, 5)) if isinstance(P, Fraction) else (1 / 3, 2 / 5)
        # b_J above 1/3 makes calling with Q profitable for Player 2
        return [EquilibriumFamily(
            "eq3", P,
            (_fs(b_j=lo, d_k=1), _fs(b_q=lo, d_k=1), _fs(b_q=hi, d_k=1),
             _fs(b_j=lo, b_q=hi - lo, d_k=1)),
            ("b_j", "b_q"), "1/3 <= b_J + b_Q <= 2/5 with b_J <= 1/3")]
    tot = 2 / P
    ck = (P - 5) / (P + 1)
    sign = _pstar_sign(P)
    if sign < 0:
        lb = (12 + 5 * P - P * P) / (6 * P * (P + 1))
        return [EquilibriumFamily(
            "eq4a", P,
            (_fs(b_j=tot - lb, b_q=lb, c_k=ck, d_k=1), _fs(b_q=tot, c_k=ck, d_k=1)),
            ("b_j", "b_q"),
            "b_J + b_Q = 2/P with b_Q >= (12+5P-P^2)/(6P(P+1))")]
    cq_max = 2 / (P + 4)
    return [
        EquilibriumFamily(
            "A", P, (_fs(b_j=tot, c_k=ck, d_k=1), _fs(b_q=tot, c_k=ck, d_k=1)),
            ("b_j", "b_q"), "Solution A: b_J + b_Q = 2/P, split free"),
        EquilibriumFamily(
            "B", P, (_fs(b_j=tot, c_k=ck, d_k=1), _fs(b_j=tot, c_q=cq_max, c_k=ck, d_k=1)),
            ("c_q",), "Solution B: b_Q = 0, 0 <= c_Q <= 2/(P+4)"),
    ]


def full_equilibrium_expectations(P: Number, label: str, total: Number | None = None,
                                  c_q: Number = 0) -> ExpectationTriple:
    """Closed-form equilibrium expectations for each full-game regime.

    ``total`` is b_J + b_Q (needed only at P = 5); ``c_q`` selects the member
    of Solution B.
    """
    P = as_number(P)
    if label in ("trivial", "eq1"):
        z = P * 0
        return ExpectationTriple(z, z, z)
    if label == "eq2":
        e = (P - 2) / (12 * (P + 1))
        return ExpectationTriple(-e, -e, 2 * e)
    if label == "eq3":
        if total is None:
            raise ValueError("eq3 expectations depend on b_J + b_Q")
        t = as_number(total)
        return ExpectationTriple(-t / 8, Fraction(-1, 12) + t / 8, Fraction(1, 12) + 0 * t)
    e1 = -(P - 2) / (12 * P)
    e2 = -(P - 1) * (P - 2) / (12 * P * (P + 1))
    e3 = (P - 2) / (6 * (P + 1))
    if label in ("eq4a", "A"):
        return ExpectationTriple(e1, e2, e3)
    if label == "B":
        cq = as_number(c_q)
        return ExpectationTriple(e1, e2 - cq / 24, e3 + cq / 24)
    raise ValueError(f"unknown family {label!r}")


# --------------------------------------------------------------------------
# the simplified game


def _require_skp_pot(P: Number) -> None:
    if not P > 5:
        raise ValueError("the simplified game needs P > 5")


def skp_solutions(P: Number) -> list[tuple[int, SkpStrategy]]:
    """``(index, strategy)`` for Solution 1 and, when P >= P*, Solutions 2 and 3."""
    _require_skp_pot(P)
    P = as_number(P)
    sols = [(1, SkpStrategy(2 / (P + 1), 0 * P, (P - 5) / (P + 1)))]
    sign = _pstar_sign(P)
    if sign >= 0:
        sols.append((2, SkpStrategy(2 / P, (P - 5) / (P + 1), 0 * P)))
        d3 = (P * P - 5 * P - 12) / (P * (P + 1))
        if sign == 0 or d3 < 0:
            d3 = 0 * P
        sols.append((3, SkpStrategy(2 / P, 2 / (P + 2), d3)))
    return sols


def skp_solution(P: Number, index: int) -> SkpStrategy:
    for i, s in skp_solutions(P):
        if i == index:
            return s
    raise ValueError(f"Solution {index} does not exist at P={P}")


def skp_equilibrium_expectations(P: Number, solution_index: int) -> ExpectationTriple:
    _require_skp_pot(P)
    skp_solution(P, solution_index)  # validates the index for this P
    P = as_number(P)
    if solution_index == 1:
        e = (P - 2) / (12 * (P + 1))
        return ExpectationTriple(-e, -e, 2 * e)
    if solution_index == 2:
        return ExpectationTriple(
            -(P - 2) / (12 * P),
            -(P - 1) * (P - 2) / (12 * P * (P + 1)),
            (P - 2) / (6 * (P + 1)),
        )
    return ExpectationTriple(
        -(P - 2) / (12 * P),
        -(P * P - P - 8) / (12 * P * (P + 2)),
        (2 * P * P - P - 12) / (12 * P * (P + 2)),
    )


@dataclass(frozen=True)
class MaxminResult:
    P: Number
    choice: tuple  # solution index chosen by Players 1, 2, 3
    worst: tuple  # guaranteed expectation of each choice
    ties: tuple  # per player: tuple of indices tied at the optimum (len > 1 means a tie)
    table: dict = field(repr=False)  # (player, index) -> worst-case expectation


def maxmin_restricted(P: Number) -> MaxminResult:
    """Each player's best worst case when everyone picks among Solutions 1-3.

    Options with the same frequency (Player 3's Solutions 2 and 3) are merged
    under the lower index.  Ties go to the lowest index and are reported.
    Rational ``P`` gives exact comparisons.
    """
    _require_skp_pot(P)
    P = as_number(P)
    sols = skp_solutions(P)

    def options(attr):
        seen = {}
        for i, s in sols:
            v = getattr(s, attr)
            if not any(_same(v, w) for w in seen.values()):
                seen[i] = v
        return seen

    opts = {1: options("c_k"), 2: options("d_q"), 3: options("b_j")}
    table = {}
    for player in (1, 2, 3):
        others = [p for p in (1, 2, 3) if p != player]
        for idx, own in opts[player].items():
            worst = None
            for o1, o2 in itertools.product(opts[others[0]].values(), opts[others[1]].values()):
                vals = {player: own, others[0]: o1, others[1]: o2}
                e = expectation_skp(SkpStrategy(vals[3], vals[1], vals[2]), P)[player - 1]
                worst = e if worst is None else min(worst, e)
            table[(player, idx)] = worst
    choice, worst, ties = [], [], []
    for player in (1, 2, 3):
        cand = sorted(i for (p, i) in table if p == player)
        best = max(table[(player, i)] for i in cand)
        tied = tuple(i for i in cand if _same(table[(player, i)], best))
        choice.append(tied[0])
        worst.append(best)
        ties.append(tied)
    return MaxminResult(P, tuple(choice), tuple(worst), tuple(ties), table)


def _same(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


# --------------------------------------------------------------------------
# support enumeration


def _coef_array_full(X: np.ndarray, P: float) -> np.ndarray:
    bJ, bQ, cQ, cK, dQ, dK, oK = (X[..., i] for i in range(7))
    return np.stack([
        2 * P - 4 - (P + 1) * (cQ * (1 - dK) + dK + cK * (1 - dQ) + dQ),
        2 * P - 4 - (P + 1) * (cK + dK),
        -2 + bJ * (P - (P + 2) * oK),
        -2 + P * (bJ + bQ),
        cK - 2 + bJ * (1 - cK) * (P + 1),
        cQ - 2 + bJ * (1 - cQ) * (P + 1) + bQ * (P + 1),
        -cQ - bQ - bJ + bJ * cQ * (P + 2),
    ], axis=-1)


def _coef_array_skp(X: np.ndarray, P: float) -> np.ndarray:
    b, c, d = X[..., 0], X[..., 1], X[..., 2]
    return np.stack([
        P - 5 - (P + 1) * (d + (1 - d) * c),
        P * b - 2,
        c - 2 + b * (1 - c) * (P + 1),
    ], axis=-1)


# deterministic multi-start points: cube centre plus the first Halton points
def _start_points(k: int, n: int = 8) -> np.ndarray:
    primes = [2, 3, 5, 7, 11, 13, 17]
    pts = np.empty((n, k))
    pts[0] = 0.5
    for i in range(1, n):
        for j in range(k):
            f, r, m = 1.0, 0.0, i
            while m > 0:
                f /= primes[j]
                r += f * (m % primes[j])
                m //= primes[j]
            pts[i, j] = r
    return pts


@dataclass
class ScanItem:
    """One equilibrium (point) or one-parameter family (segment) from the scan."""

    kind: str  # "point", "segment" or "region"
    point: np.ndarray
    end: np.ndarray | None = None  # other end of a segment
    direction: np.ndarray | None = None
    branches: list = field(default_factory=list)
    family: str | None = None

    def distance(self, x: np.ndarray) -> float:
        if self.kind != "segment":
            return float(np.max(np.abs(x - self.point)))
        v = self.end - self.point
        t = float(np.clip(np.dot(x - self.point, v) / np.dot(v, v), 0.0, 1.0))
        return float(np.max(np.abs(x - (self.point + t * v))))


@dataclass
class ScanReport:
    variant: str
    P: float
    items: list
    nonconverged: list  # branch strings where Newton stalled with a residual
    combos_scanned: int
    routed: bool = False  # True when P was a bifurcation value handled in closed form

    def points(self) -> list:
        return [it for it in self.items if it.kind == "point"]

    def segments(self) -> list:
        return [it for it in self.items if it.kind == "segment"]


class _Scanner:
    def __init__(self, variant: str, P: float, tol: float):
        self.variant = variant
        self.P = float(P)
        self.tol = tol
        self.n = 7 if variant == "full" else 3
        self.coef = _coef_array_full if variant == "full" else _coef_array_skp

    def residual(self, X, mask):
        return self.coef(X, self.P) * mask

    def jacobian(self, X, mask):
        # coefficients are affine in each single variable, so a unit
        # difference gives the exact partial derivative
        cols = []
        for j in range(self.n):
            hi, lo = X.copy(), X.copy()
            hi[..., j] = 1.0
            lo[..., j] = 0.0
            cols.append(self.coef(hi, self.P) - self.coef(lo, self.P))
        J = np.stack(cols, axis=-1)
        return J * mask[..., :, None] * mask[..., None, :]

    def valid(self, x, combo) -> bool:
        tol = self.tol
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        k = self.coef(x, self.P)
        for i, br in enumerate(combo):
            if br == "a" and k[i] < -tol:
                return False
            if br == "b" and k[i] > tol:
                return False
            if br == "c" and abs(k[i]) > tol:
                return False
        return True

    def newton(self, X, mask, iters=200):
        """Damped Gauss-Newton on the indifference equalities.

        Rows of ``X`` are independent systems; ``mask`` marks each row's free
        parameters (and therefore its active equations).
        """
        X = X.copy()
        lam = np.ones(len(X))
        r = self.residual(X, mask)
        rn = np.linalg.norm(r, axis=-1)
        for _ in range(iters):
            active = (rn > 1e-13) & (lam >= 1e-12)
            if not active.any():
                break
            idx = np.flatnonzero(active)
            J = self.jacobian(X[idx], mask[idx])
            step = np.einsum("sij,sj->si", np.linalg.pinv(J, rcond=1e-12), r[idx])
            trial = X[idx] - lam[idx, None] * step
            rt = self.residual(trial, mask[idx])
            rtn = np.linalg.norm(rt, axis=-1)
            better = rtn < rn[idx]
            good, bad = idx[better], idx[~better]
            X[good] = trial[better]
            r[good] = rt[better]
            rn[good] = rtn[better]
            lam[good] = np.minimum(1.0, lam[good] * 2)
            lam[bad] *= 0.5
        return X, rn

    def correct(self, x, free, iters=50):
        mask = np.zeros(self.n)
        mask[free] = 1.0
        X, rn = self.newton(x[None, :], mask[None, :], iters)
        return X[0], rn[0]

    def null_direction(self, x, free):
        mask = np.zeros(self.n)
        mask[free] = 1.0
        J = self.jacobian(x[None, :], mask[None, :])[0][np.ix_(free, free)]
        u, s, vt = np.linalg.svd(J)
        smax = s.max() if s.size else 0.0
        rank = int(np.sum(s > 1e-9 * max(1.0, smax)))
        return rank, vt[rank:]

    def trace(self, x, free, combo, v):
        """Follow the solution curve from ``x`` along ``v`` to its last valid point."""
        h = 1.0 / 64
        d = np.zeros(self.n)
        d[free] = v
        cur = x.copy()
        while True:
            y, rn = self.correct(cur + h * d, free)
            if rn <= 1e-12 and self.valid(y, combo):
                step = y - cur
                cur = y
                _, nb = self.null_direction(cur, free)
                if nb.shape[0] == 1:
                    nd = np.zeros(self.n)
                    nd[free] = nb[0]
                    d = nd if np.dot(nd, step) >= 0 else -nd
                continue
            if h < 1e-13:
                return cur
            h /= 2

    def solve_all(self, combos):
        """Run Newton for every combination and start in one batch."""
        starts = {}
        rows, masks = [], []
        for ci, combo in enumerate(combos):
            free = [i for i, br in enumerate(combo) if br == "c"]
            base = np.array([1.0 if br == "a" else 0.0 for br in combo])
            if not free:
                continue
            X = np.tile(base, (8, 1))
            X[:, free] = _start_points(len(free))
            m = np.zeros(self.n)
            m[free] = 1.0
            starts[ci] = (len(rows) * 8, free)
            rows.append(X)
            masks.append(np.tile(m, (8, 1)))
        if rows:
            X, rn = self.newton(np.vstack(rows), np.vstack(masks))
        out = []
        for ci, combo in enumerate(combos):
            if ci in starts:
                off, free = starts[ci]
                out.append((combo, *self.postprocess(combo, free, X[off:off + 8], rn[off:off + 8])))
            else:
                out.append((combo, *self.postprocess(combo, [], None, None)))
        return out

    def postprocess(self, combo, free, X, rn):
        label = "".join(combo)
        found, stalled = [], False
        if not free:
            base = np.array([1.0 if br == "a" else 0.0 for br in combo])
            if self.valid(base, combo):
                found.append(ScanItem("point", base, branches=[label]))
            return found, stalled
        for x, r in zip(X, rn):
            if r > 1e-12:
                stalled = True
                continue
            if not self.valid(x, combo):
                continue
            x = np.clip(x, 0.0, 1.0)
            if any(it.distance(x) <= 1e-9 for it in found):
                continue
            rank, nb = self.null_direction(x, free)
            if nb.shape[0] == 0:
                found.append(ScanItem("point", x, branches=[label]))
            elif nb.shape[0] == 1:
                a = np.clip(self.trace(x, free, combo, nb[0]), 0.0, 1.0)
                b = np.clip(self.trace(x, free, combo, -nb[0]), 0.0, 1.0)
                if np.max(np.abs(a - b)) <= 1e-9:
                    found.append(ScanItem("point", a, branches=[label]))
                else:
                    direction = (b - a) / np.linalg.norm(b - a)
                    found.append(ScanItem("segment", a, end=b, direction=direction, branches=[label]))
            else:
                found.append(ScanItem("region", x, direction=nb, branches=[label]))
        # a start that converged outside the feasible set is not a stall
        if found:
            stalled = False
        return found, stalled


def _scan_chunk(args):
    variant, P, tol, combos = args
    return _Scanner(variant, P, tol).solve_all(combos)


def _merge(items: list) -> list:
    merged: list = []
    # segments first, so points lying on them are absorbed
    for it in sorted(items, key=lambda it: it.kind != "segment"):
        absorbed = False
        for m in merged:
            if it.kind == "segment" and m.kind == "segment":
                if m.distance(it.point) <= 1e-9 and m.distance(it.end) <= 1e-9:
                    absorbed = True
                elif it.distance(m.point) <= 1e-9 and it.distance(m.end) <= 1e-9:
                    m.point, m.end, m.direction = it.point, it.end, it.direction
                    absorbed = True
                elif _collinear_overlap(m, it):
                    absorbed = True
            elif it.kind in ("point", "region") and m.distance(it.point) <= 1e-9:
                absorbed = True
            if absorbed:
                m.branches.extend(b for b in it.branches if b not in m.branches)
                break
        if not absorbed:
            merged.append(it)
    return merged


def _collinear_overlap(m: ScanItem, it: ScanItem) -> bool:
    """Extend ``m`` in place when ``it`` is a collinear, overlapping segment."""
    v = m.end - m.point
    w = it.end - it.point
    cross = np.linalg.norm(v / np.linalg.norm(v) - np.sign(np.dot(v, w)) * w / np.linalg.norm(w))
    if cross > 1e-9:
        return False
    line_dist = lambda x: np.linalg.norm((x - m.point) - np.dot(x - m.point, v) / np.dot(v, v) * v)
    if line_dist(it.point) > 1e-9 or line_dist(it.end) > 1e-9:
        return False
    ts = sorted([0.0, 1.0, np.dot(it.point - m.point, v) / np.dot(v, v),
                 np.dot(it.end - m.point, v) / np.dot(v, v)])
    t_it = sorted([np.dot(it.point - m.point, v) / np.dot(v, v), np.dot(it.end - m.point, v) / np.dot(v, v)])
    if t_it[0] > 1 + 1e-9 or t_it[1] < -1e-9:
        return False
    start, end = m.point + ts[0] * v, m.point + ts[-1] * v
    m.point, m.end = start, end
    m.direction = (end - start) / np.linalg.norm(end - start)
    return True


def _annotate(variant: str, P: float, items: list) -> None:
    if variant == "skp":
        if P <= 5:
            return
        for it in items:
            for i, s in skp_solutions(P):
                if it.kind == "point" and it.distance(np.array(s.as_tuple(), dtype=float)) <= 1e-9:
                    it.family = f"Solution {i}"
                    break
        return
    fams = equilibrium_families_full(P)
    for it in items:
        for fam in fams:
            pts = [it.point] + ([it.end] if it.kind == "segment" else [])
            if all(fam.contains(FullStrategy(*np.clip(p, 0, 1).tolist()), 1e-8) for p in pts):
                it.family = fam.label
                break


def support_enumeration(variant: str, P: Number, tol: float = 1e-9,
                        workers: int | None = None) -> ScanReport:
    """Search every branch combination (3^7 full, 3^3 simplified) for equilibria.

    For each combination the indifferent parameters are solved for by
    multi-start damped Newton, the others are pinned to 0 or 1, and the
    result is kept if it lies in the cube and respects every inequality to
    within ``tol``.  Rank-deficient solutions are traced into segments.
    Pot sizes within 1e-9 of 2 or 5 (full game) have two-dimensional
    families, which are returned from the closed forms instead.
    """
    check_pot(P)
    if variant == "skp":
        _require_skp_pot(P)
    elif variant != "full":
        raise ValueError(f"unknown variant {variant!r}")
    Pf = float(P)
    n = 7 if variant == "full" else 3
    combos = list(itertools.product("abc", repeat=n))
    if variant == "full" and (_near(Pf, 2) or _near(Pf, 5)):
        items = []
        for fam in equilibrium_families_full(P):
            V = [np.array(v.as_tuple(), dtype=float) for v in fam.vertices]
            it = ScanItem("region", V[0], direction=np.array([v - V[0] for v in V[1:]]), family=fam.label)
            items.append(it)
        return ScanReport(variant, Pf, items, [], 0, routed=True)
    if workers and workers > 1:
        chunks = [combos[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_scan_chunk, [(variant, Pf, tol, c) for c in chunks]))
        results = sorted((r for part in parts for r in part), key=lambda r: combos.index(r[0]))
    else:
        results = _scan_chunk((variant, Pf, tol, combos))
    items, stalled = [], []
    for combo, found, st in results:
        items.extend(found)
        if st and not found:
            stalled.append("".join(combo))
    items = _merge(items)
    _annotate(variant, Pf, items)
    return ScanReport(variant, Pf, items, stalled, len(combos))
