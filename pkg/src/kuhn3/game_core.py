"""Deals, the one-third-street betting tree, payoffs and ex-showdown expectations.

Player 3 acts first (check or bet one unit); Player 1 then calls or folds and
Player 2 calls, folds or overcalls.  Every player antes ``P/3`` into a pot of
``P``.  The rational-play rules (always bet/call with A, always fold J to a
bet, never overcall with Q, never bet K) are built into the tree rather than
exposed as strategy parameters.

All evaluators work on plain Python numbers.  When every input is an ``int``
or :class:`fractions.Fraction` the arithmetic stays exact; any ``float``
switches the whole computation to floating point.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterator, NamedTuple, Sequence, Union

Number = Union[int, float, Fraction]


class Card(enum.IntEnum):
    J = 0
    Q = 1
    K = 2
    A = 3

    def __str__(self) -> str:
        return self.name


class Deal(NamedTuple):
    """Cards in seat order (Player 3, Player 1, Player 2), e.g. ``AJQ``."""

    p3: Card
    p1: Card
    p2: Card

    @classmethod
    def parse(cls, text: str) -> "Deal":
        if len(text) != 3:
            raise ValueError(f"deal must have three cards, got {text!r}")
        cards = tuple(Card[ch] for ch in text.upper())
        if len(set(cards)) != 3:
            raise ValueError(f"cards in a deal must be distinct: {text!r}")
        return cls(*cards)

    def card_of(self, player: int) -> Card:
        return (self.p1, self.p2, self.p3)[player - 1]

    def best_player(self) -> int:
        return max((1, 2, 3), key=self.card_of)

    def __str__(self) -> str:
        return f"{self.p3}{self.p1}{self.p2}"


class BettingSequence(enum.Enum):
    """Terminal histories; values are the 1-based labels B_1..B_5."""

    K = 1
    BFF = 2
    BCF = 3
    BFC = 4
    BCC = 5

    @property
    def code(self) -> str:
        return self.name.lower()

    @classmethod
    def from_code(cls, code: str) -> "BettingSequence":
        return cls[code.upper()]

    def __str__(self) -> str:
        return self.code


# Seats that reach showdown for each terminal history (empty: Player 3 takes the pot).
SHOWDOWN_SEATS = {
    BettingSequence.K: (1, 2, 3),
    BettingSequence.BFF: (),
    BettingSequence.BCF: (1, 3),
    BettingSequence.BFC: (2, 3),
    BettingSequence.BCC: (1, 2, 3),
}

# Who put a bet into the pot.
_BETTORS = {
    BettingSequence.K: (),
    BettingSequence.BFF: (3,),
    BettingSequence.BCF: (3, 1),
    BettingSequence.BFC: (3, 2),
    BettingSequence.BCC: (3, 1, 2),
}

MEANINGFUL_DEALS = tuple(
    Deal.parse(s) for s in ("AJQ", "AQJ", "AKQ", "AKJ", "JAK", "JAQ", "JKA", "JQA", "JKQ", "JQK")
)
# Player 3 holds A, no decision is ever made, but the hands still count.
DECISION_FREE_DEALS = (Deal.parse("AJK"), Deal.parse("AQK"))
SIM_DEALS = MEANINGFUL_DEALS + DECISION_FREE_DEALS


def enumerate_deals(variant: str = "full24") -> list[Deal]:
    """List deals for ``full24`` (all 24), ``sim12`` or ``meaningful10``.

    ``sim12`` is ordered D_1..D_10 followed by AJK and AQK, so a deal's index
    in that list is its column in the observation table.
    """
    if variant == "full24":
        return [Deal(*p) for p in itertools.permutations(Card, 3)]
    if variant == "sim12":
        return list(SIM_DEALS)
    if variant == "meaningful10":
        return list(MEANINGFUL_DEALS)
    raise ValueError(f"unknown deal variant {variant!r}")


def _check_unit(name: str, value: Number) -> None:
    if not 0 <= value <= 1:
        raise ValueError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class FullStrategy:
    b_j: Number = 0
    b_q: Number = 0
    c_q: Number = 0
    c_k: Number = 0
    d_q: Number = 0
    d_k: Number = 0
    o_k: Number = 0

    def __post_init__(self):
        for f in fields(self):
            _check_unit(f.name, getattr(self, f.name))

    def as_tuple(self) -> tuple:
        return astuple(self)

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class SkpStrategy:
    """The simplified game: Player 3 bluffs J at ``b_j``, Player 1 calls K at
    ``c_k``, Player 2 calls Q at ``d_q``."""

    b_j: Number = 0
    c_k: Number = 0
    d_q: Number = 0

    def __post_init__(self):
        for f in fields(self):
            _check_unit(f.name, getattr(self, f.name))

    def as_tuple(self) -> tuple:
        return astuple(self)

    def embed(self) -> FullStrategy:
        return FullStrategy(b_j=self.b_j, b_q=0, c_q=0, c_k=self.c_k, d_q=self.d_q, d_k=1, o_k=0)

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


class ExpectationTriple(NamedTuple):
    e1: Number
    e2: Number
    e3: Number

    def scaled(self, factor: Number) -> "ExpectationTriple":
        return ExpectationTriple(self.e1 * factor, self.e2 * factor, self.e3 * factor)


def as_number(x) -> Number:
    """Ints become Fractions so that ``P / 3`` stays exact."""
    if isinstance(x, bool):
        raise TypeError("boolean is not a number here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    return float(x)


def _coerce(values: Sequence) -> list[Number]:
    nums = [as_number(v) for v in values]
    if any(isinstance(v, float) for v in nums):
        return [float(v) for v in nums]
    return nums


def check_pot(P: Number) -> None:
    if not P > 0:
        raise ValueError("P must be positive")


# --------------------------------------------------------------------------
# the betting tree


class Decision(NamedTuple):
    node: str  # "bet", "call", "call_after_fold", "overcall"
    player: int
    card: Card
    prob: Number  # probability of the aggressive action (bet / call)


class RationalPlayError(ValueError):
    pass


# (node, card) -> forced aggressive action, from the rational-play rules
_FORCED = {
    ("bet", Card.A): True,
    ("bet", Card.K): False,
    ("call", Card.A): True,
    ("call", Card.J): False,
    ("call_after_fold", Card.A): True,
    ("call_after_fold", Card.J): False,
    ("overcall", Card.A): True,
    ("overcall", Card.J): False,
    ("overcall", Card.Q): False,
}

# extra rules of the simplified game (strategy parameters pinned by the variant)
_FORCED_SKP = {
    ("bet", Card.Q): False,
    ("call", Card.Q): False,
    ("call_after_fold", Card.K): True,
    ("overcall", Card.K): False,
}

_PARAM = {
    ("bet", Card.J): "b_j",
    ("bet", Card.Q): "b_q",
    ("call", Card.Q): "c_q",
    ("call", Card.K): "c_k",
    ("call_after_fold", Card.Q): "d_q",
    ("call_after_fold", Card.K): "d_k",
    ("overcall", Card.K): "o_k",
}

_NODE_PLAYER = {"bet": 3, "call": 1, "call_after_fold": 2, "overcall": 2}


def _forced_action(node: str, card: Card, skp: bool):
    if (node, card) in _FORCED:
        return _FORCED[(node, card)]
    if skp and (node, card) in _FORCED_SKP:
        return _FORCED_SKP[(node, card)]
    return None


def _action_prob(node: str, card: Card, strategy) -> Number:
    skp = isinstance(strategy, SkpStrategy)
    forced = _forced_action(node, card, skp)
    if forced is not None:
        return 1 if forced else 0
    return getattr(strategy, _PARAM[(node, card)])


Chooser = Callable[[Decision], bool]


class ForcedPolicy:
    """Deterministic chooser from a ``{(node, card): aggressive}`` table.

    Entries contradicting the rational-play rules are rejected up front.
    Decisions missing from the table raise ``KeyError`` when reached.
    """

    def __init__(self, actions: dict):
        for (node, card), act in actions.items():
            if node not in _NODE_PLAYER:
                raise ValueError(f"unknown decision node {node!r}")
            forced = _FORCED.get((node, Card(card)))
            if forced is not None and bool(act) != forced:
                raise RationalPlayError(
                    f"{node} with {Card(card).name} must be {'aggressive' if forced else 'passive'}"
                )
        self.actions = {(node, Card(card)): bool(a) for (node, card), a in actions.items()}

    def __call__(self, decision: Decision) -> bool:
        return self.actions[(decision.node, decision.card)]


def sampling_chooser(rng) -> Chooser:
    """Chooser drawing one uniform from ``rng.random()`` per decision."""

    def choose(decision: Decision) -> bool:
        return rng.random() < decision.prob

    return choose


def _walk(deal: Deal, strategy, chooser: Chooser) -> BettingSequence:
    skp = isinstance(strategy, SkpStrategy)

    def act(node: str) -> bool:
        player = _NODE_PLAYER[node]
        card = deal.card_of(player)
        forced = _forced_action(node, card, skp)
        if forced is not None:
            return forced
        return bool(chooser(Decision(node, player, card, _action_prob(node, card, strategy))))

    if not act("bet"):
        return BettingSequence.K
    if act("call"):
        return BettingSequence.BCC if act("overcall") else BettingSequence.BCF
    return BettingSequence.BFC if act("call_after_fold") else BettingSequence.BFF


def net_payoffs(deal: Deal, sequence: BettingSequence, P: Number) -> tuple[Number, Number, Number]:
    """Money change for (Player 1, Player 2, Player 3) including antes."""
    P = as_number(P)
    ante = P / 3
    seats = SHOWDOWN_SEATS[sequence]
    winner = max(seats, key=deal.card_of) if seats else 3
    bets = _BETTORS[sequence]
    nets = []
    for p in (1, 2, 3):
        v = -ante - (1 if p in bets else 0)
        if p == winner:
            v += P + len(bets)
        nets.append(v)
    return tuple(nets)


def baseline_payoffs(deal: Deal, P: Number) -> tuple[Number, Number, Number]:
    """Nets if nobody bets and the best card takes the pot."""
    return net_payoffs(deal, BettingSequence.K, P)


def exshowdown_payoffs(deal: Deal, sequence: BettingSequence, P: Number):
    actual = net_payoffs(deal, sequence, P)
    base = baseline_payoffs(deal, P)
    return tuple(a - b for a, b in zip(actual, base))


class Hand(NamedTuple):
    sequence: BettingSequence
    nets: tuple


def playout(deal: Deal, strategy, P: Number, chooser: Chooser) -> Hand:
    """Play one hand.

    ``chooser`` is consulted only where a strategy parameter governs the
    action; the rational-play rules (and, for :class:`SkpStrategy`, the
    simplified-game restrictions) are applied without asking it.
    """
    check_pot(P)
    seq = _walk(deal, strategy, chooser)
    return Hand(seq, net_payoffs(deal, seq, P))


def terminal_histories(deal: Deal, strategy) -> Iterator[tuple[BettingSequence, Number]]:
    """Yield ``(sequence, probability)`` for every reachable terminal history."""
    nodes = ("bet", "call", "overcall", "call_after_fold")
    probs = {n: _action_prob(n, deal.card_of(_NODE_PLAYER[n]), strategy) for n in nodes}
    for seq in BettingSequence:
        p = 1
        for node, aggressive in _path_nodes(seq):
            q = probs[node]
            p = p * (q if aggressive else 1 - q)
        if p != 0:
            yield seq, p


def _path_nodes(seq: BettingSequence):
    return {
        BettingSequence.K: [("bet", False)],
        BettingSequence.BFF: [("bet", True), ("call", False), ("call_after_fold", False)],
        BettingSequence.BFC: [("bet", True), ("call", False), ("call_after_fold", True)],
        BettingSequence.BCF: [("bet", True), ("call", True), ("overcall", False)],
        BettingSequence.BCC: [("bet", True), ("call", True), ("overcall", True)],
    }[seq]


# --------------------------------------------------------------------------
# expectations


def _normalise(strategy, P):
    vals = _coerce(list(strategy.as_tuple()) + [P])
    return type(strategy)(*vals[:-1]), vals[-1]


def exshowdown_by_deal(variant: str, strategy, P: Number) -> dict[Deal, tuple]:
    """Probability-weighted ex-showdown value of each of the 24 deals."""
    check_pot(P)
    strategy = _as_variant(variant, strategy)
    strategy, P = _normalise(strategy, P)
    out = {}
    for deal in enumerate_deals("full24"):
        acc = [0, 0, 0]
        for seq, prob in terminal_histories(deal, strategy):
            for i, v in enumerate(exshowdown_payoffs(deal, seq, P)):
                acc[i] += prob * v
        out[deal] = tuple(acc)
    return out


def exshowdown_oracle(variant: str, strategy, P: Number) -> ExpectationTriple:
    """Brute-force ex-showdown expectation by walking all 24 deals."""
    per_deal = exshowdown_by_deal(variant, strategy, P)
    totals = [sum(v[i] for v in per_deal.values()) for i in range(3)]
    return ExpectationTriple(*(t / 24 for t in totals))


def _as_variant(variant: str, strategy):
    if variant == "skp":
        if not isinstance(strategy, SkpStrategy):
            raise TypeError("skp variant needs an SkpStrategy")
        return strategy
    if variant == "full":
        return strategy.embed() if isinstance(strategy, SkpStrategy) else strategy
    raise ValueError(f"unknown variant {variant!r}")


def expectation_full(strategy: FullStrategy, P: Number) -> ExpectationTriple:
    check_pot(P)
    s, P = _normalise(strategy, P)
    bJ, bQ, cQ, cK, dQ, dK, oK = s.as_tuple()
    e1 = (
        cQ * (-2 + bJ * (P - (P + 2) * oK))
        + cK * (-2 + P * (bJ + bQ))
        + (2 - P + oK) * (bJ + bQ)
    )
    e2 = (
        dQ * (cK - 2 + bJ * (1 - cK) * (P + 1))
        + dK * (cQ - 2 + bJ * (1 - cQ) * (P + 1) + bQ * (P + 1))
        + oK * (-cQ - bQ + bJ * ((P + 2) * cQ - 1))
        + bJ * (2 - P + cQ + cK)
        + bQ * (2 - P + cK)
    )
    e3 = (
        bJ * (2 * P - 4 - (P + 1) * (cQ * (1 - dK) + dK + cK * (1 - dQ) + dQ))
        + bQ * (2 * P - 4 - (P + 1) * (cK + dK))
        + 2 * (cQ + cK)
        + (2 - cK) * dQ
        + (2 - cQ) * dK
        + cQ * oK
    )
    return ExpectationTriple(e1 / 24, e2 / 24, e3 / 24)


def expectation_skp(strategy: SkpStrategy, P: Number) -> ExpectationTriple:
    check_pot(P)
    s, P = _normalise(strategy, P)
    b, c, d = s.as_tuple()
    e1 = c * (P * b - 2) - (P - 2) * b
    e2 = d * (c - 2 + b * (1 - c) * (P + 1)) + b * (c + 3) - 2
    e3 = b * (P - 5 - (P + 1) * (d + (1 - d) * c)) + 2 * c + (2 - c) * d + 2
    return ExpectationTriple(e1 / 24, e2 / 24, e3 / 24)


def expectation(variant: str, strategy, P: Number) -> ExpectationTriple:
    if variant == "skp":
        return expectation_skp(strategy, P)
    return expectation_full(_as_variant("full", strategy), P)
