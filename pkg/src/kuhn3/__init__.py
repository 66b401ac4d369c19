"""Three-player one-third-street Kuhn poker: payoffs, equilibria and adaptive play."""

from .game_core import (
    BettingSequence,
    Card,
    Deal,
    ExpectationTriple,
    FullStrategy,
    SkpStrategy,
    enumerate_deals,
    expectation_full,
    expectation_skp,
    exshowdown_oracle,
    playout,
)
from .equilibrium import (
    check_equilibrium,
    equilibrium_families_full,
    maxmin_restricted,
    pstar,
    skp_solutions,
    support_enumeration,
)

__version__ = "0.1.0"

__all__ = [
    "BettingSequence",
    "Card",
    "Deal",
    "ExpectationTriple",
    "FullStrategy",
    "SkpStrategy",
    "check_equilibrium",
    "enumerate_deals",
    "equilibrium_families_full",
    "expectation_full",
    "expectation_skp",
    "exshowdown_oracle",
    "maxmin_restricted",
    "playout",
    "pstar",
    "skp_solutions",
    "support_enumeration",
]
