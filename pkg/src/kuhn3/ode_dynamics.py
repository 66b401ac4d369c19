"""Continuous-time frequency adjustment for the simplified game.

Each player moves their own frequency in the direction that raises their
expectation, at a rate damped by ``g(x) = x (1 - x)``::

    b' = k3 g(b) ((P-5)/(P+1) - d - c + d c)
    c' = k1 g(c) (b - 2/P)
    d' = k2 g(d) ((c-2)/(P+1) + b (1-c))

The faces of the unit cube are invariant.  Integration uses an embedded
Dormand-Prince 5(4) pair with a PI step-size controller and the standard
continuous extension for dense output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .equilibrium import _pstar_sign, pstar
from .game_core import Number, as_number

_STATE = ("b", "c", "d")


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class CubeEscape(IntegrationError):
    pass


@dataclass(frozen=True)
class Gains:
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0 and self.k3 > 0):
            raise ValueError("gains must be strictly positive")


def _logistic(x):
    return x * (1 - x)


def _linear(k):
    return lambda u: k * u


def _require_pot(P) -> None:
    if not P > 5:
        raise ValueError("the simplified game needs P > 5")


def rhs(state: Sequence, P: Number, k: Gains = Gains(), g: Callable | None = None,
        f: Sequence[Callable] | None = None):
    """Time derivative ``(b', c', d')``.

    ``g`` and ``f = (f1, f2, f3)`` override the damping and response functions;
    by default ``g(x) = x(1-x)`` and ``fi(u) = ki u``.  Works on floats,
    Fractions, or numpy arrays with the state along axis 0.
    """
    b, c, d = state
    g = g or _logistic
    f1, f2, f3 = f or (_linear(k.k1), _linear(k.k2), _linear(k.k3))
    db = g(b) * f3((P - 5) / (P + 1) - d - c + d * c)
    dc = g(c) * f1(b - 2 / P)
    dd = g(d) * f2((c - 2) / (P + 1) + b * (1 - c))
    return (db, dc, dd)


def jacobian(state: Sequence, P: Number, k: Gains = Gains()) -> np.ndarray:
    """Analytic Jacobian of the default right-hand side."""
    b, c, d = (float(x) for x in state)
    P = float(P)
    ub = (P - 5) / (P + 1) - d - c + d * c
    uc = b - 2 / P
    ud = (c - 2) / (P + 1) + b * (1 - c)
    gb, gc, gd = b * (1 - b), c * (1 - c), d * (1 - d)
    return np.array([
        [k.k3 * (1 - 2 * b) * ub, k.k3 * gb * (d - 1), k.k3 * gb * (c - 1)],
        [k.k1 * gc, k.k1 * (1 - 2 * c) * uc, 0.0],
        [k.k2 * gd * (1 - c), k.k2 * gd * (1 / (P + 1) - b), k.k2 * (1 - 2 * d) * ud],
    ])


# --------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension
_D = np.array([-12715105075 / 11282082432, 0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])


@dataclass
class _Step:
    t0: float
    h: float
    y0: np.ndarray
    r: tuple  # dense-output coefficients

    def __call__(self, t: float) -> np.ndarray:
        th = (t - self.t0) / self.h
        r1, r2, r3, r4, r5 = self.r
        th1 = 1 - th
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))


def _dopri_step(fun, t, y, f0, h):
    K = np.empty((7, y.size))
    K[0] = f0
    for i in range(1, 7):
        yi = y + h * (np.asarray(_A[i]) @ K[:i])
        K[i] = fun(t + _C[i] * h, yi)
    y1 = y + h * (_B @ K)
    err = h * (_E @ K)
    return y1, err, K


def _dense(y0, y1, K, h):
    ydiff = y1 - y0
    bspl = h * K[0] - ydiff
    return (y0, ydiff, bspl, ydiff - h * K[6] - bspl, h * (_D @ K))


@dataclass
class Trajectory:
    """Samples of an integrated path; ``E`` holds cumulative expectations if computed."""

    t: np.ndarray
    y: np.ndarray  # shape (n, 3): columns b, c, d
    P: float
    E: np.ndarray | None = None  # shape (n, 3)
    stats: dict = field(default_factory=dict)

    @property
    def b(self):
        return self.y[:, 0]

    @property
    def c(self):
        return self.y[:, 1]

    @property
    def d(self):
        return self.y[:, 2]

    def columns(self) -> dict:
        cols = {"t": self.t, "b": self.b, "c": self.c, "d": self.d}
        if self.E is not None:
            cols.update({"E1": self.E[:, 0], "E2": self.E[:, 1], "E3": self.E[:, 2]})
        return cols


def dopri5(fun, t0: float, y0, t_end: float, rel_tol: float = 1e-6, abs_tol: float = 1e-9,
           t_eval=None, h0: float = 1e-3, max_step: float | None = None,
           fixed_step: float | None = None, project: Callable | None = None):
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end`` (either direction).

    Returns ``(t_eval, Y, stats)`` with the dense-output solution on
    ``t_eval`` (default: the accepted step points).  ``project`` is applied to
    every accepted state and may raise to abort.  With ``fixed_step`` set the
    controller is bypassed (used for order checks).
    """
    y = np.array(y0, dtype=float)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    if span == 0:
        raise ValueError("t_end must differ from t0")
    max_step = span / 100 if max_step is None else max_step
    h = abs(fixed_step) if fixed_step else min(abs(h0), max_step)
    beta = 0.04
    expo = 0.2 - 0.75 * beta
    facold = 1e-4
    safe, fac_min, fac_max = 0.9, 0.2, 10.0

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        out = np.empty((t_eval.size, y.size))
        j = 0
        # grid points at the start
        while j < t_eval.size and (t_eval[j] - t0) * direction <= 0:
            out[j] = y
            j += 1
    else:
        ts, ys = [t0], [y.copy()]

    t = t0
    f0 = np.asarray(fun(t, y), dtype=float)
    n_acc = n_rej = 0
    while (t_end - t) * direction > 0:
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size underflow at t={t}")
        last = (t + direction * h - t_end) * direction >= 0
        hh = (t_end - t) if last else direction * h
        y1, err, K = _dopri_step(fun, t, y, f0, hh)
        if fixed_step:
            ok = True
            err_norm = 0.0
        else:
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y1))
            err_norm = math.sqrt(np.mean((err / scale) ** 2))
            ok = err_norm <= 1.0
        if ok:
            if project is not None:
                y1 = project(y1)
                K[6] = fun(t + hh, y1)
            step = _Step(t, hh, y, _dense(y, y1, K, hh))
            t_new = t + hh
            if t_eval is not None:
                while j < t_eval.size and (t_eval[j] - t_new) * direction <= 0:
                    out[j] = step(t_eval[j])
                    j += 1
            else:
                ts.append(t_new)
                ys.append(y1.copy())
            t, y, f0 = t_new, y1, K[6]
            n_acc += 1
            if not fixed_step:
                fac = err_norm ** expo / facold ** beta if err_norm > 0 else 1 / fac_max
                fac = max(1 / fac_max, min(1 / fac_min, fac / safe))
                facold = max(err_norm, 1e-4)
                h = min(abs(hh) / fac, max_step)
        else:
            n_rej += 1
            fac = max(1 / fac_max, min(1 / fac_min, err_norm ** 0.2 / safe))
            h = abs(hh) / fac
    stats = {"accepted": n_acc, "rejected": n_rej}
    if t_eval is not None:
        if j < t_eval.size:
            out[j:] = y
        return t_eval, out, stats
    return np.array(ts), np.array(ys), stats


def integrate(state0: Sequence, P: Number, k: Gains = Gains(), t_end: float = 100.0,
              rel_tol: float = 1e-8, abs_tol: float = 1e-10, output_grid=None,
              g: Callable | None = None, f: Sequence[Callable] | None = None,
              h0: float = 1e-3, max_step: float | None = None,
              fixed_step: float | None = None) -> Trajectory:
    """Integrate the frequency dynamics from ``state0`` for ``t_end`` time units.

    Negative ``t_end`` integrates backwards.  States overshooting the cube by
    no more than ``abs_tol`` are clipped back; a larger overshoot raises
    :class:`CubeEscape`.  ``output_grid`` may be an array of times or an
    integer number of equally spaced samples (default 1001).
    """
    _require_pot(P)
    P = float(P)
    y0 = np.array([float(x) for x in state0])
    if np.any(y0 < 0) or np.any(y0 > 1):
        raise ValueError("initial state outside the unit cube")
    if t_end == 0:
        raise ValueError("t_end must be non-zero")
    if output_grid is None:
        output_grid = 1001
    if np.isscalar(output_grid):
        grid = np.linspace(0.0, t_end, int(output_grid))
    else:
        grid = np.asarray(output_grid, dtype=float)

    def fun(t, y):
        return np.array(rhs(y, P, k, g, f))

    def project(y):
        lo, hi = y.min(), y.max()
        if lo < -abs_tol or hi > 1 + abs_tol:
            raise CubeEscape(f"state {y} left the unit cube beyond abs_tol={abs_tol}")
        return np.clip(y, 0.0, 1.0)

    t, Y, stats = dopri5(fun, 0.0, y0, float(t_end), rel_tol, abs_tol, grid, h0=h0,
                         max_step=max_step, fixed_step=fixed_step, project=project)
    return Trajectory(t, Y, P, stats=stats)


# --------------------------------------------------------------------------
# fixed points


@dataclass(frozen=True)
class FixedPoint:
    label: str
    P: Number
    coords: tuple  # exact when P is rational

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.coords])


def fixed_points(P: Number) -> list[FixedPoint]:
    """S1 and S2, plus S3 when P > P*."""
    _require_pot(P)
    P = as_number(P)
    pts = [
        FixedPoint("S1", P, (2 / (P + 1), 0 * P, (P - 5) / (P + 1))),
        FixedPoint("S2", P, (2 / P, (P - 5) / (P + 1), 0 * P)),
    ]
    if _pstar_sign(P) > 0:
        pts.append(FixedPoint("S3", P, (2 / P, 2 / (P + 2), (P * P - 5 * P - 12) / (P * (P + 1)))))
    return pts


def fixed_point(P: Number, label: str) -> FixedPoint:
    for fp in fixed_points(P):
        if fp.label == label:
            return fp
    raise ValueError(f"{label} does not exist at P={P}")


@dataclass(frozen=True)
class Classification:
    label: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    structure: str

    @property
    def real_eigenvalues(self) -> np.ndarray:
        return np.sort(self.eigenvalues[np.abs(self.eigenvalues.imag) <= 1e-12].real)

    @property
    def complex_pair(self) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues.imag) > 1e-12]


def classify(point: FixedPoint, P: Number | None = None, k: Gains = Gains(),
             tol: float = 1e-10) -> Classification:
    """Eigenvalues of the Jacobian at a fixed point and a short description."""
    P = point.P if P is None else P
    J = jacobian(point.coords, P, k)
    w, V = np.linalg.eig(J)
    real = [x.real for x in w if abs(x.imag) <= tol]
    cplx = [x for x in w if abs(x.imag) > tol]
    parts = []
    if point.label in ("S1", "S2"):
        # one transverse direction, plus a pair on an invariant plane
        plane = "c=0" if point.label == "S1" else "d=0"
        axis = 1 if point.label == "S1" else 2
        lam = J[axis, axis]
        kind = "stable" if lam < -tol else "unstable" if lam > tol else "neutral"
        pair = [x for x in w if not np.isclose(x, lam, atol=tol)]
        centre = all(abs(x.real) <= tol for x in pair) and len(pair) == 2
        parts.append(f"transverse eigenvalue {lam:.6g} ({kind})")
        parts.append(f"{'centre' if centre else 'non-centre'} pair in plane {plane}")
    else:
        pos = [x for x in real if x > tol]
        neg_pair = [x for x in cplx if x.real < -tol]
        parts.append(f"{len(pos)} unstable real direction(s)")
        if len(neg_pair) == 2:
            parts.append("stable oscillatory plane")
    return Classification(point.label, w, V, "; ".join(parts))


# --------------------------------------------------------------------------
# expectations and invariants along trajectories


def _skp_integrands(Y: np.ndarray, P: float) -> np.ndarray:
    b, c, d = Y[:, 0], Y[:, 1], Y[:, 2]
    e1 = c * (P * b - 2) - (P - 2) * b
    e2 = d * (c - 2 + b * (1 - c) * (P + 1)) + b * (c + 3) - 2
    e3 = b * (P - 5 - (P + 1) * (d + (1 - d) * c)) + 2 * c + (2 - c) * d + 2
    return np.column_stack([e1, e2, e3]) / 24


def cumulative_expectations(trajectory: Trajectory, P: Number | None = None) -> np.ndarray:
    """Running integrals of the instantaneous expectations (trapezoid rule).

    The result is also stored on ``trajectory.E``.
    """
    P = float(trajectory.P if P is None else P)
    F = _skp_integrands(trajectory.y, P)
    dt = np.diff(trajectory.t)[:, None]
    E = np.vstack([np.zeros((1, 3)), np.cumsum(0.5 * dt * (F[1:] + F[:-1]), axis=0)])
    trajectory.E = E
    return E


def plane_invariant(state: Sequence, P: Number, k: Gains = Gains(), plane: str = "c=0") -> float:
    """Conserved quantity of the flow restricted to ``c=0`` or ``d=0``.

    On ``c=0`` the flow is ``b' = k3 g(b) (a - d)``, ``d' = k2 g(d) (b - s)``
    with ``s = 2/(P+1)``, ``a = (P-5)/(P+1)``; the first integral is
    ``H = [-s ln b - (1-s) ln(1-b)]/k3 + [-a ln d - (1-a) ln(1-d)]/k2``.
    The ``d=0`` plane is the same with ``s = 2/P`` and (c, k1) in place of (d, k2).
    """
    b, c, d = (float(x) for x in state)
    P = float(P)
    a = (P - 5) / (P + 1)
    if plane == "c=0":
        s, other, k_other = 2 / (P + 1), d, k.k2
    elif plane == "d=0":
        s, other, k_other = 2 / P, c, k.k1
    else:
        raise ValueError(f"unknown plane {plane!r}")
    if not (0 < b < 1 and 0 < other < 1):
        raise ValueError("invariant is singular on the edges of the plane")
    hb = -s * math.log(b) - (1 - s) * math.log1p(-b)
    ho = -a * math.log(other) - (1 - a) * math.log1p(-other)
    return hb / k.k3 + ho / k_other


def poincare_crossings(trajectory: Trajectory, axis: int = 0, value: float | None = None) -> tuple:
    """Upward crossings of ``y[axis] = value`` (linear interpolation between samples).

    Returns ``(times, states)``.
    """
    x = trajectory.y[:, axis] - value
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    w = -x[idx] / (x[idx + 1] - x[idx])
    times = trajectory.t[idx] + w * (trajectory.t[idx + 1] - trajectory.t[idx])
    states = trajectory.y[idx] + w[:, None] * (trajectory.y[idx + 1] - trajectory.y[idx])
    return times, states


@dataclass(frozen=True)
class CycleInfo:
    period: float
    amplitude: np.ndarray  # peak-to-peak per coordinate over the last cycle
    closure: float  # distance between the last two section crossings
    converged: bool


def detect_cycle(trajectory: Trajectory, centre: Sequence, axis: int = 0,
                 tol: float = 1e-6) -> CycleInfo | None:
    """Period and closure from successive Poincare crossings through ``centre``."""
    times, states = poincare_crossings(trajectory, axis, float(centre[axis]))
    if len(times) < 2:
        return None
    period = float(times[-1] - times[-2])
    closure = float(np.max(np.abs(states[-1] - states[-2])))
    mask = (trajectory.t >= times[-2]) & (trajectory.t <= times[-1])
    seg = trajectory.y[mask]
    amp = seg.max(axis=0) - seg.min(axis=0)
    return CycleInfo(period, amp, closure, closure <= tol)


def stable_manifold_trace(P: Number, k: Gains = Gains(), eps: float = 1e-6,
                          t_back: float = 2500.0, rel_tol: float = 1e-10,
                          abs_tol: float = 1e-12, output_grid=2001,
                          angle: float = 0.0) -> Trajectory:
    """Backward-integrate from S3 displaced within its stable eigenplane.

    The displacement has length ``eps`` along ``cos(angle) Re v + sin(angle) Im v``
    (normalised), where ``v`` is the stable complex eigenvector, so it is
    transverse to the unstable direction.  The returned path lies on the
    surface separating the two attracting invariant planes.
    """
    if eps == 0:
        raise ValueError("eps must be non-zero")
    if _pstar_sign(as_number(P)) <= 0:
        raise ValueError("S3 needs P > P*")
    s3 = fixed_point(P, "S3")
    cl = classify(s3, P, k)
    idx = int(np.argmin(cl.eigenvalues.real))
    v = cl.eigenvectors[:, idx]
    u = math.cos(angle) * np.real(v) + math.sin(angle) * np.imag(v)
    u /= np.linalg.norm(u)
    start = s3.as_array() + eps * u
    return integrate(start, P, k, -abs(t_back), rel_tol, abs_tol, output_grid)


def unstable_direction(P: Number, k: Gains = Gains()) -> tuple[float, np.ndarray]:
    """Positive eigenvalue of S3 and its unit eigenvector."""
    cl = classify(fixed_point(P, "S3"), P, k)
    idx = int(np.argmax(cl.eigenvalues.real))
    v = np.real(cl.eigenvectors[:, idx])
    return float(cl.eigenvalues[idx].real), v / np.linalg.norm(v)
