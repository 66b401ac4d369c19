"""Repeated play of the simplified game with estimator-driven adaptation.

Each round deals one of the twelve hands in which Player 3 holds A or J,
plays it out with the current frequencies ``(b, c, d)``, and lets every
player record what they could see.  Players estimate their opponents'
frequencies from the last ``L_p`` rounds and nudge their own frequency
toward a best response.

Information sets
----------------
A player's view of a round is ``(own card, betting sequence, public
cards)`` where the public cards are those shown at showdown.  Cells
``(B_i, D_j)`` that produce the same view for player ``p`` form one
indistinguishability class; the windows keep counts per class only, and
every estimator is checked at import time to be a combination of whole
classes of its owner.

Random stream
-------------
One ``numpy.random.Generator`` (PCG64 by default) drives a run.  Per round
one uniform picks the deal (``floor(12 u)``) and one further uniform is
drawn at each decision point governed by ``b``, ``c`` or ``d``, in tree
order; the action is aggressive when ``u < p``.
"""

from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numba
import numpy as np

from .game_core import (
    SHOWDOWN_SEATS,
    SIM_DEALS,
    BettingSequence,
    Card,
    Deal,
    SkpStrategy,
    exshowdown_payoffs,
    net_payoffs,
    playout,
    sampling_chooser,
    terminal_histories,
)

__all__ = [
    "AUX_ESTIMATORS", "CALIBRATION_COLUMNS", "ESTIMATOR_NAMES", "RUN_COLUMNS", "CalibrationRow", "Observation",
    "ObservationWindow", "RoundOutcome", "SimConfig", "SimResult", "VisibilityError",
    "WindowIntegrityError", "calibrate_estimators", "deal_sampler", "default_initial_state",
    "estimate", "estimator_limit", "play_round", "public_cards", "run", "run_reference",
    "update_frequencies",
]

N_SEQ = len(BettingSequence)
N_DEALS = len(SIM_DEALS)
N_CELLS = N_SEQ * N_DEALS
PLAYERS = (1, 2, 3)
ESTIMATOR_NAMES = ("b1", "b2", "d3", "c2", "c3")
# extra estimators available to calibration only
AUX_ESTIMATORS = ("c2_printed",)


def cell_index(seq: BettingSequence, deal_index: int) -> int:
    return (seq.value - 1) * N_DEALS + deal_index


def _split(cell: int) -> tuple[BettingSequence, int]:
    return BettingSequence(cell // N_DEALS + 1), cell % N_DEALS


def public_cards(deal: Deal, seq: BettingSequence) -> str:
    """Cards known to everyone after the hand, as in ``AXQ`` (seat order 3, 1, 2)."""
    shown = SHOWDOWN_SEATS[seq]
    return "".join(str(deal.card_of(p)) if p in shown else "X" for p in (3, 1, 2))


def _possible_cells() -> frozenset[int]:
    # any interior strategy reaches every structurally possible history
    probe = SkpStrategy(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2))
    out = set()
    for j, deal in enumerate(SIM_DEALS):
        for seq, _ in terminal_histories(deal, probe):
            out.add(cell_index(seq, j))
    return frozenset(out)


POSSIBLE_CELLS = _possible_cells()


def view_key(player: int, seq: BettingSequence, deal: Deal) -> tuple:
    return (str(deal.card_of(player)), seq.code, public_cards(deal, seq))


def _build_classes():
    keys: list[list[tuple]] = []
    table = np.full((3, N_CELLS), -1, dtype=np.int64)
    for p in PLAYERS:
        seen: dict[tuple, int] = {}
        for cell in sorted(POSSIBLE_CELLS):
            seq, j = _split(cell)
            key = view_key(p, seq, SIM_DEALS[j])
            table[p - 1, cell] = seen.setdefault(key, len(seen))
        keys.append(list(seen))
    return table, keys


CLASS_OF, CLASS_KEYS = _build_classes()
N_CLASSES = max(len(k) for k in CLASS_KEYS)


def indistinguishable(player: int, cell: int) -> frozenset[int]:
    cls = CLASS_OF[player - 1, cell]
    return frozenset(int(c) for c in np.flatnonzero(CLASS_OF[player - 1] == cls))


# --------------------------------------------------------------------------
# estimators, written over cells (B_i, D_j) with 1-based i and j


def _cells(*pairs) -> list[int]:
    return [cell_index(BettingSequence(i), j - 1) for i, j in pairs]


def _weights(*groups) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for w, pairs in groups:
        for c in _cells(*pairs):
            out[c] = out.get(c, 0) + Fraction(w)
    return out


_B_HITS = [(3, 5), (3, 6), (4, 7), (5, 7), (4, 8), (4, 10)]
_B_CHECKS = [(1, j) for j in range(5, 11)]


def _b_def(player):
    return (player, _weights((1, _B_HITS)), _weights((1, _B_HITS), (Fraction(5, 6), _B_CHECKS)))


_D_CALLS = [(4, 1), (4, 3)]
_D_FOLDS = [(2, 1), (2, 2), (2, 3), (2, 4)]
_C2_CALLS = [(3, 3), (3, 4), (3, 9), (5, 7)]

ESTIMATOR_DEFS: dict[str, tuple[int, dict, dict]] = {
    "b1": _b_def(1),
    "b2": _b_def(2),
    "d3": (3, _weights((2, _D_CALLS), (1, [(4, 9)])),
           _weights((1, _D_CALLS + _D_FOLDS + [(2, 9), (4, 9)]))),
    # fold counts for both card groups carry weight 2; with weight 1 on
    # (B4, D7) + (B4, D8) the ratio tends to 4c(1+b)/(4+2b+bc) instead of c
    "c2": (2, _weights((2, _C2_CALLS)),
           _weights((1, _C2_CALLS), (2, [(2, 2), (2, 4), (4, 7), (4, 8)]))),
    "c3": (3, _weights((2, [(3, 3), (3, 4)]), (Fraction(3, 2), [(3, 9), (5, 7)])),
           _weights((1, [(3, 3), (3, 4), (3, 9), (5, 7)] + _D_FOLDS + _D_CALLS
                     + [(2, 9), (4, 7), (4, 8), (4, 9)]))),
    "c2_printed": (2, _weights((2, _C2_CALLS)),
                   _weights((1, _C2_CALLS), (2, [(2, 2), (2, 4)]), (1, [(4, 7), (4, 8)]))),
}


class VisibilityError(ValueError):
    pass


def _class_weights(player: int, cell_weights: Mapping[int, Fraction]) -> dict[int, Fraction]:
    """Translate cell weights to class weights, refusing anything the player cannot see."""
    out: dict[int, Fraction] = {}
    for cell, w in cell_weights.items():
        if cell not in POSSIBLE_CELLS:
            raise VisibilityError(f"cell {_split(cell)} never occurs")
        for other in indistinguishable(player, cell):
            if cell_weights.get(other, 0) != w:
                seq, j = _split(other)
                raise VisibilityError(
                    f"player {player} cannot separate {_split(cell)} from ({seq.code}, {SIM_DEALS[j]})")
        out[int(CLASS_OF[player - 1, cell])] = w
    return out


_ALL_ESTIMATORS = ESTIMATOR_NAMES + AUX_ESTIMATORS


def _compile_estimators():
    players = np.zeros(len(_ALL_ESTIMATORS), dtype=np.int64)
    num = np.zeros((len(_ALL_ESTIMATORS), N_CLASSES), dtype=np.int64)
    den = np.zeros_like(num)
    class_w = {}
    for e, name in enumerate(_ALL_ESTIMATORS):
        p, nw, dw = ESTIMATOR_DEFS[name]
        cn, cd = _class_weights(p, nw), _class_weights(p, dw)
        scale = math.lcm(*(w.denominator for w in (*cn.values(), *cd.values())))
        players[e] = p - 1
        for cls, w in cn.items():
            num[e, cls] = int(w * scale)
        for cls, w in cd.items():
            den[e, cls] = int(w * scale)
        class_w[name] = (p, cn, cd)
    return players, num, den, class_w


EST_PLAYER, EST_NUM, EST_DEN, _CLASS_WEIGHTS = _compile_estimators()


# --------------------------------------------------------------------------
# single rounds


def deal_sampler(rng: np.random.Generator) -> Deal:
    return SIM_DEALS[int(12 * rng.random())]


@dataclass(frozen=True)
class Observation:
    player: int
    round_index: int
    sequence: BettingSequence
    own_card: Card
    revealed: str

    @property
    def key(self) -> tuple:
        return (str(self.own_card), self.sequence.code, self.revealed)


@dataclass(frozen=True)
class RoundOutcome:
    deal: Deal
    sequence: BettingSequence
    money: tuple  # (P1, P2, P3)
    exshowdown: tuple
    observations: tuple


def play_round(deal: Deal, frequencies: Sequence[float], rng: np.random.Generator,
               P: float = 9.0, round_index: int = 0) -> RoundOutcome:
    strategy = SkpStrategy(*(float(x) for x in frequencies))
    hand = playout(deal, strategy, P, sampling_chooser(rng))
    seq = hand.sequence
    revealed = public_cards(deal, seq)
    obs = tuple(Observation(p, round_index, seq, deal.card_of(p), revealed) for p in PLAYERS)
    return RoundOutcome(deal, seq, hand.nets, exshowdown_payoffs(deal, seq, P), obs)


class ObservationWindow:
    """The last ``L`` views of one player, with counts per view."""

    def __init__(self, player: int, L: int):
        if L < 1:
            raise ValueError("window length must be positive")
        self.player = player
        self.L = L
        self._buf: deque[Observation] = deque()
        self._counts: Counter = Counter()

    def push(self, obs: Observation) -> None:
        if obs.player != self.player:
            raise ValueError("observation belongs to another player")
        self._buf.append(obs)
        self._counts[obs.key] += 1
        if len(self._buf) > self.L:
            old = self._buf.popleft()
            self._counts[old.key] -= 1
            if not self._counts[old.key]:
                del self._counts[old.key]

    def __len__(self) -> int:
        return len(self._buf)

    @property
    def counts(self) -> dict:
        return dict(self._counts)

    def recount(self) -> dict:
        return dict(Counter(o.key for o in self._buf))

    def class_count(self, cls: int) -> int:
        return self._counts.get(CLASS_KEYS[self.player - 1][cls], 0)


def estimate(window: ObservationWindow, which: str) -> float | None:
    """Value of estimator ``which`` on ``window``; ``None`` when its denominator is 0."""
    p, cn, cd = _CLASS_WEIGHTS[which]
    if window.player != p:
        raise ValueError(f"estimator {which} belongs to player {p}")
    num = sum(w * window.class_count(c) for c, w in cn.items())
    den = sum(w * window.class_count(c) for c, w in cd.items())
    if den == 0:
        return None
    return float(num / den)


def update_frequencies(current: Sequence[float], estimates: Mapping[str, float | None],
                       k: Sequence[float], P: float) -> tuple[float, float, float]:
    """One step of the clamped difference update; ``k = (k1, k2, k3)``.

    A frequency whose inputs are unavailable is held.
    """
    b, c, d = current
    k1, k2, k3 = k
    e = estimates
    if e.get("d3") is not None and e.get("c3") is not None:
        dd, cc = e["d3"], e["c3"]
        b = min(1.0, max(0.0, b + k3 * ((P - 5) / (P + 1) - dd - cc + dd * cc)))
    if e.get("b1") is not None:
        c = min(1.0, max(0.0, c + k1 * (e["b1"] - 2 / P)))
    if e.get("c2") is not None and e.get("b2") is not None:
        cc, bb = e["c2"], e["b2"]
        d = min(1.0, max(0.0, d + k2 * ((cc - 2) / (P + 1) + bb * (1 - cc))))
    return (b, c, d)


# --------------------------------------------------------------------------
# configuration and results


@dataclass
class SimConfig:
    P: float = 9.0
    k1: float = 0.001
    k2: float = 0.001
    k3: float = 0.001
    L1: int = 6
    L2: int = 6
    L3: int = 6
    rounds: int = 100_000
    seed: int = 0
    init_b: float | None = None
    init_c: float | None = None
    init_d: float | None = None
    record_every: int = 1
    update_mode: str = "adaptive"  # or "pinned"

    def __post_init__(self):
        if not self.P > 5:
            raise ValueError("P must exceed 5")
        for name in ("L1", "L2", "L3", "rounds", "record_every"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
            setattr(self, name, int(v))
        for name in ("k1", "k2", "k3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.update_mode not in ("adaptive", "pinned"):
            raise ValueError("update_mode must be 'adaptive' or 'pinned'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        default = default_initial_state(self.P)
        for i, name in enumerate(("init_b", "init_c", "init_d")):
            if getattr(self, name) is None:
                setattr(self, name, default[i])
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def k(self) -> tuple:
        return (self.k1, self.k2, self.k3)

    @property
    def L(self) -> tuple:
        return (self.L1, self.L2, self.L3)

    @property
    def init(self) -> tuple:
        return (self.init_b, self.init_c, self.init_d)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        return asdict(self)


def default_initial_state(P: float) -> tuple[float, float, float]:
    """S3 shifted by 0.01 on every coordinate (S1 + 0.01 below P*), clipped to the cube."""
    P = float(P)
    if P * P - 5 * P - 12 > 0:
        base = (2 / P, 2 / (P + 2), (P * P - 5 * P - 12) / (P * (P + 1)))
    else:
        base = (2 / (P + 1), 0.0, (P - 5) / (P + 1))
    return tuple(min(1.0, max(0.0, x + 0.01)) for x in base)


RUN_COLUMNS = ("round", "b", "c", "d", "est_b1", "est_b2", "est_c2", "est_c3", "est_d3",
               "stack1", "stack2", "stack3", "mean_ex1", "mean_ex2", "mean_ex3")


@dataclass
class SimResult:
    config: SimConfig
    round: np.ndarray  # 1-based index of the recorded rounds
    freqs: np.ndarray  # (n, 3) frequencies used in the round
    estimates: np.ndarray  # (n, 5) in ESTIMATOR_NAMES order, NaN when unavailable
    stacks: np.ndarray  # (n, 3) after the round
    mean_ex: np.ndarray  # (n, 3) running mean ex-showdown payoff
    final_freqs: np.ndarray = field(default_factory=lambda: np.zeros(3))
    deal_counts: np.ndarray = field(default_factory=lambda: np.zeros(N_DEALS, dtype=np.int64))

    def columns(self) -> dict:
        est = {n: self.estimates[:, i] for i, n in enumerate(ESTIMATOR_NAMES)}
        return {
            "round": self.round,
            "b": self.freqs[:, 0], "c": self.freqs[:, 1], "d": self.freqs[:, 2],
            "est_b1": est["b1"], "est_b2": est["b2"], "est_c2": est["c2"],
            "est_c3": est["c3"], "est_d3": est["d3"],
            "stack1": self.stacks[:, 0], "stack2": self.stacks[:, 1], "stack3": self.stacks[:, 2],
            "mean_ex1": self.mean_ex[:, 0], "mean_ex2": self.mean_ex[:, 1],
            "mean_ex3": self.mean_ex[:, 2],
        }

    @property
    def final_mean_ex(self) -> np.ndarray:
        return self.mean_ex[-1]

    def tail_distance(self, target: Sequence[float], rounds: int) -> float:
        """Mean Euclidean distance of the recorded frequencies to ``target`` over the last ``rounds``."""
        mask = self.round > self.round[-1] - rounds
        return float(np.mean(np.linalg.norm(self.freqs[mask] - np.asarray(target), axis=1)))


def _cell_tables(P: float):
    money = np.zeros((N_CELLS, 3))
    ex = np.zeros((N_CELLS, 3))
    for cell in POSSIBLE_CELLS:
        seq, j = _split(cell)
        money[cell] = net_payoffs(SIM_DEALS[j], seq, float(P))
        ex[cell] = exshowdown_payoffs(SIM_DEALS[j], seq, float(P))
    return money, ex


def _deal_cards() -> np.ndarray:
    # columns: Player 3, Player 1, Player 2 ranks (J=0 .. A=3)
    return np.array([[int(c) for c in d] for d in SIM_DEALS], dtype=np.int64)


_CARDS = _deal_cards()
_J, _Q, _K, _A = int(Card.J), int(Card.Q), int(Card.K), int(Card.A)


@numba.njit(cache=True)
def _play(cards, deal, b, c, d, rng):
    """Sequence index (0-based) for one hand of the simplified game."""
    c3, c1, c2 = cards[deal, 0], cards[deal, 1], cards[deal, 2]
    if c3 == _A:
        bet = True
    elif c3 == _J:
        bet = rng.random() < b
    else:
        bet = False
    if not bet:
        return 0
    if c1 == _A:
        call = True
    elif c1 == _K:
        call = rng.random() < c
    else:
        call = False
    if call:
        # overcall only with A
        return 4 if c2 == _A else 2
    if c2 == _A or c2 == _K:
        return 3
    if c2 == _Q:
        return 3 if rng.random() < d else 1
    return 1


@numba.njit(cache=True)
def _estimate_row(counts, est_player, est_num, est_den, out):
    for e in range(est_player.size):
        p = est_player[e]
        num = 0
        den = 0
        for cls in range(counts.shape[1]):
            num += est_num[e, cls] * counts[p, cls]
            den += est_den[e, cls] * counts[p, cls]
        out[e] = num / den if den > 0 else np.nan


@numba.njit(cache=True)
def _run_kernel(rng, P, k, L, rounds, init, adaptive, record_every, debug,
                cards, class_of, est_player, est_num, est_den, money, ex):
    n_rec = (rounds + record_every - 1) // record_every
    rec_round = np.empty(n_rec, dtype=np.int64)
    rec_freq = np.empty((n_rec, 3))
    rec_est = np.empty((n_rec, est_player.size))
    rec_stack = np.empty((n_rec, 3))
    rec_mean = np.empty((n_rec, 3))
    deal_counts = np.zeros(cards.shape[0], dtype=np.int64)

    Lmax = max(L[0], max(L[1], L[2]))
    ring = np.zeros(Lmax, dtype=np.int64)
    counts = np.zeros((3, est_num.shape[1]), dtype=np.int64)
    est = np.empty(est_player.size)
    stack = np.zeros(3)
    ex_sum = np.zeros(3)
    b, c, d = init[0], init[1], init[2]
    a_b = (P - 5) / (P + 1)
    r = 0
    ndeals = cards.shape[0]
    for i in range(rounds):
        deal = int(ndeals * rng.random())
        deal_counts[deal] += 1
        seq = _play(cards, deal, b, c, d, rng)
        cell = seq * ndeals + deal
        for p in range(3):
            stack[p] += money[cell, p]
            ex_sum[p] += ex[cell, p]
        # window update: oldest entry drops once the window is full
        for p in range(3):
            counts[p, class_of[p, cell]] += 1
            if i >= L[p]:
                old = ring[(i - L[p]) % Lmax]
                counts[p, class_of[p, old]] -= 1
        ring[i % Lmax] = cell
        if debug:
            for p in range(3):
                chk = np.zeros(counts.shape[1], dtype=np.int64)
                for t in range(max(0, i + 1 - L[p]), i + 1):
                    chk[class_of[p, ring[t % Lmax]]] += 1
                for q in range(counts.shape[1]):
                    if chk[q] != counts[p, q]:
                        return -1 - i, rec_round, rec_freq, rec_est, rec_stack, rec_mean, deal_counts, b, c, d
        _estimate_row(counts, est_player, est_num, est_den, est)
        if (i + 1) % record_every == 0 or i + 1 == rounds:
            if r < n_rec:
                rec_round[r] = i + 1
                rec_freq[r, 0] = b
                rec_freq[r, 1] = c
                rec_freq[r, 2] = d
                for e in range(est.size):
                    rec_est[r, e] = est[e]
                for p in range(3):
                    rec_stack[r, p] = stack[p]
                    rec_mean[r, p] = ex_sum[p] / (i + 1)
                r += 1
        if adaptive:
            # est order: b1, b2, d3, c2, c3
            eb1, eb2, ed, ec2, ec3 = est[0], est[1], est[2], est[3], est[4]
            nb, nc, nd = b, c, d
            if not (np.isnan(ed) or np.isnan(ec3)):
                nb = min(1.0, max(0.0, b + k[2] * (a_b - ed - ec3 + ed * ec3)))
            if not np.isnan(eb1):
                nc = min(1.0, max(0.0, c + k[0] * (eb1 - 2 / P)))
            if not (np.isnan(ec2) or np.isnan(eb2)):
                nd = min(1.0, max(0.0, d + k[1] * ((ec2 - 2) / (P + 1) + eb2 * (1 - ec2))))
            b, c, d = nb, nc, nd
    return r, rec_round, rec_freq, rec_est, rec_stack, rec_mean, deal_counts, b, c, d


def _run_estimators():
    n = len(ESTIMATOR_NAMES)
    return EST_PLAYER[:n], EST_NUM[:n], EST_DEN[:n]


class WindowIntegrityError(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def run(config: SimConfig, debug: bool = False, jit: bool = True) -> SimResult:
    """Play ``config.rounds`` rounds; deterministic given the config.

    ``debug`` recounts every window from scratch after each round.
    ``jit=False`` runs the same kernel as plain Python (slow; for checks).
    """
    money, ex = _cell_tables(config.P)
    kernel = _run_kernel if jit else _run_kernel.py_func
    out = kernel(make_rng(config.seed), float(config.P), np.array(config.k, dtype=float),
                 np.array(config.L, dtype=np.int64), config.rounds,
                 np.array(config.init, dtype=float), config.update_mode == "adaptive",
                 config.record_every, debug, _CARDS, CLASS_OF, *_run_estimators(), money, ex)
    r, rr, rf, re, rs, rm, dc, b, c, d = out
    if r < 0:
        raise WindowIntegrityError(f"window counts diverged from recount at round {-r}")
    return SimResult(config, rr[:r], rf[:r], re[:r], rs[:r], rm[:r], np.array([b, c, d]), dc)


def run_reference(config: SimConfig) -> SimResult:
    """Straightforward Python version built on :func:`play_round` and :class:`ObservationWindow`.

    Consumes the random stream in the same order as :func:`run`, so both give
    identical results for the same config.
    """
    rng = make_rng(config.seed)
    P = float(config.P)
    windows = [ObservationWindow(p, L) for p, L in zip(PLAYERS, config.L)]
    freqs = config.init
    stack = np.zeros(3)
    ex_sum = np.zeros(3)
    rows = []
    deal_counts = np.zeros(N_DEALS, dtype=np.int64)
    for i in range(config.rounds):
        deal = deal_sampler(rng)
        deal_counts[SIM_DEALS.index(deal)] += 1
        res = play_round(deal, freqs, rng, P, i)
        stack += res.money
        ex_sum += res.exshowdown
        for w, o in zip(windows, res.observations):
            w.push(o)
        est = {name: estimate(windows[ESTIMATOR_DEFS[name][0] - 1], name) for name in ESTIMATOR_NAMES}
        if (i + 1) % config.record_every == 0 or i + 1 == config.rounds:
            rows.append((i + 1, freqs, [np.nan if est[n] is None else est[n] for n in ESTIMATOR_NAMES],
                         stack.copy(), ex_sum / (i + 1)))
        if config.update_mode == "adaptive":
            freqs = update_frequencies(freqs, est, (config.k1, config.k2, config.k3), P)
    return SimResult(
        config,
        np.array([r[0] for r in rows]),
        np.array([r[1] for r in rows], dtype=float),
        np.array([r[2] for r in rows], dtype=float),
        np.array([r[3] for r in rows]),
        np.array([r[4] for r in rows]),
        np.array(freqs, dtype=float),
        deal_counts,
    )


# --------------------------------------------------------------------------
# estimator calibration


@numba.njit(cache=True)
def _sample_cells(rng, cards, b, c, d, n):
    out = np.empty(n, dtype=np.int64)
    ndeals = cards.shape[0]
    for i in range(n):
        deal = int(ndeals * rng.random())
        out[i] = _play(cards, deal, b, c, d, rng) * ndeals + deal
    return out


@numba.njit(cache=True)
def _window_stats(cells, class_of, est_player, est_num, est_den, L, warmup):
    ne = est_player.size
    counts = np.zeros((3, est_num.shape[1]), dtype=np.int64)
    est = np.empty(ne)
    s1 = np.zeros(ne)
    s2 = np.zeros(ne)
    n = np.zeros(ne, dtype=np.int64)
    # shifted sums keep the variance numerically stable
    shift = np.full(ne, np.nan)
    for i in range(cells.size):
        cell = cells[i]
        for p in range(3):
            counts[p, class_of[p, cell]] += 1
            if i >= L:
                counts[p, class_of[p, cells[i - L]]] -= 1
        if i < warmup:
            continue
        _estimate_row(counts, est_player, est_num, est_den, est)
        for e in range(ne):
            v = est[e]
            if np.isnan(v):
                continue
            if np.isnan(shift[e]):
                shift[e] = v
            x = v - shift[e]
            s1[e] += x
            s2[e] += x * x
            n[e] += 1
    mean = np.empty(ne)
    std = np.empty(ne)
    for e in range(ne):
        if n[e] == 0:
            mean[e] = np.nan
            std[e] = np.nan
            continue
        m = s1[e] / n[e]
        mean[e] = m + shift[e]
        var = s2[e] / n[e] - m * m
        std[e] = math.sqrt(var * n[e] / (n[e] - 1)) if n[e] > 1 and var > 0 else 0.0
    return mean, std, n


@dataclass(frozen=True)
class CalibrationRow:
    L: int
    estimator: str
    mean: float
    std: float
    samples: int


CALIBRATION_COLUMNS = ("L", "estimator", "mean", "std", "samples")


def calibrate_estimators(P: float, fixed_frequencies: Sequence[float], L_values: Iterable[int],
                         warmup: int | None = None, rounds: int = 1_000_000,
                         seed: int = 0) -> list[CalibrationRow]:
    """Mean and standard deviation of every estimator at fixed frequencies.

    One stream of ``warmup + rounds`` hands is played; for each ``L`` the
    estimators are evaluated on the sliding window after every round past
    ``warmup`` (default: the largest L).
    """
    L_values = [int(x) for x in L_values]
    if not L_values or min(L_values) < 1:
        raise ValueError("L values must be positive")
    warmup = max(L_values) if warmup is None else int(warmup)
    if warmup < max(L_values):
        raise ValueError("warmup must cover the largest window")
    b, c, d = (float(x) for x in fixed_frequencies)
    cells = _sample_cells(make_rng(seed), _CARDS, b, c, d, warmup + rounds)
    rows = []
    for L in L_values:
        mean, std, n = _window_stats(cells, CLASS_OF, EST_PLAYER, EST_NUM, EST_DEN, L, warmup)
        for e, name in enumerate(_ALL_ESTIMATORS):
            rows.append(CalibrationRow(L, name, float(mean[e]), float(std[e]), int(n[e])))
    return rows


def estimator_limit(which: str, frequencies: Sequence) -> Fraction | float:
    """Ratio of expected numerator to expected denominator for an unbounded window."""
    probe = SkpStrategy(*frequencies)
    p, nw, dw = ESTIMATOR_DEFS[which]
    prob = {}
    for j, deal in enumerate(SIM_DEALS):
        for seq, pr in terminal_histories(deal, probe):
            prob[cell_index(seq, j)] = pr
    num = sum(w * prob.get(c, 0) for c, w in nw.items())
    den = sum(w * prob.get(c, 0) for c, w in dw.items())
    return num / den
