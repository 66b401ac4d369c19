"""Deals, the betting tree, payoffs and the expectation formulas."""

import itertools
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kuhn3.game_core import (
    DECISION_FREE_DEALS,
    BettingSequence,
    Card,
    Deal,
    ExpectationTriple,
    ForcedPolicy,
    FullStrategy,
    RationalPlayError,
    SkpStrategy,
    enumerate_deals,
    exshowdown_by_deal,
    exshowdown_oracle,
    exshowdown_payoffs,
    expectation_full,
    expectation_skp,
    net_payoffs,
    playout,
    sampling_chooser,
    terminal_histories,
)
from kuhn3.game_core import _PARAM

B = BettingSequence
unit = st.fractions(min_value=0, max_value=1, max_denominator=50)
pots = st.fractions(min_value=F(1, 10), max_value=12, max_denominator=30)


class TestDeals:
    def test_card_order(self):
        assert Card.A > Card.K > Card.Q > Card.J
        assert len(set(Card)) == 4

    def test_full24(self):
        deals = enumerate_deals("full24")
        assert len(deals) == 24 == len(set(deals))
        assert all(len(set(d)) == 3 for d in deals)

    def test_sim12(self):
        deals = enumerate_deals("sim12")
        assert len(deals) == 12
        assert all(d.p3 in (Card.A, Card.J) for d in deals)
        assert set(DECISION_FREE_DEALS) <= set(deals)

    def test_meaningful10_order(self):
        names = [str(d) for d in enumerate_deals("meaningful10")]
        assert names == ["AJQ", "AQJ", "AKQ", "AKJ", "JAK", "JAQ", "JKA", "JQA", "JKQ", "JQK"]

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            enumerate_deals("sim13")

    def test_parse_roundtrip(self):
        for d in enumerate_deals():
            assert Deal.parse(str(d)) == d


class TestStrategies:
    def test_range_checked(self):
        with pytest.raises(ValueError):
            SkpStrategy(1.2, 0, 0)
        with pytest.raises(ValueError):
            FullStrategy(0, 0, 0, 0, 0, 0, -0.1)

    def test_embedding(self):
        s = SkpStrategy(F(1, 3), F(1, 4), F(1, 5)).embed()
        assert s.as_tuple() == (F(1, 3), 0, 0, F(1, 4), F(1, 5), 1, 0)


class TestPlayout:
    any_full = FullStrategy(F(1, 2), F(1, 3), F(1, 4), F(1, 5), F(1, 6), F(1, 7), F(1, 8))

    def test_ajk_is_forced(self):
        # never consults the chooser
        def boom(decision):
            raise AssertionError("no decision expected")

        P = F(9)
        hand = playout(Deal.parse("AJK"), SkpStrategy(F(1, 2), F(1, 2), F(1, 2)), P, boom)
        assert hand.sequence is B.BFC
        assert hand.nets == (-P / 3, -P / 3 - 1, 2 * P / 3 + 1)

    def test_jqk_check(self):
        P = F(6)
        s = FullStrategy(0, 0, 0, 0, 0, 0, 0)
        hand = playout(Deal.parse("JQK"), s, P, ForcedPolicy({("bet", Card.J): False}))
        assert hand.sequence is B.K
        assert hand.nets == (-P / 3, 2 * P / 3, -P / 3)

    def test_jka_overcall_with_ace(self):
        P = F(9)
        pol = ForcedPolicy({("bet", Card.J): True, ("call", Card.K): True})
        hand = playout(Deal.parse("JKA"), self.any_full, P, pol)
        assert hand.sequence is B.BCC
        assert hand.nets[1] == -P / 3 - 1 + P + 3

    def test_forced_policy_rejects_irrational(self):
        with pytest.raises(RationalPlayError):
            ForcedPolicy({("call", Card.J): True})
        with pytest.raises(RationalPlayError):
            ForcedPolicy({("bet", Card.K): True})
        with pytest.raises(RationalPlayError):
            ForcedPolicy({("overcall", Card.Q): True})
        with pytest.raises(RationalPlayError):
            ForcedPolicy({("call_after_fold", Card.A): False})

    def test_chooser_only_at_parameter_nodes(self):
        seen = []

        def record(decision):
            seen.append((decision.node, decision.card))
            return True

        for deal in enumerate_deals():
            playout(deal, self.any_full, F(9), record)
        params = {("bet", Card.J), ("bet", Card.Q), ("call", Card.Q), ("call", Card.K),
                  ("call_after_fold", Card.Q), ("call_after_fold", Card.K), ("overcall", Card.K)}
        assert set(seen) <= params

    def test_sampled_frequencies_match_tree(self):
        rng = np.random.default_rng(11)
        s = FullStrategy(*(F(x, 10) for x in (3, 6, 2, 5, 4, 7, 1)))
        deal = Deal.parse("JKQ")
        probs = dict(terminal_histories(deal, s))
        n = 40_000
        counts = {seq: 0 for seq in B}
        chooser = sampling_chooser(rng)
        for _ in range(n):
            counts[playout(deal, s, F(9), chooser).sequence] += 1
        for seq in B:
            p = float(probs.get(seq, 0))
            assert abs(counts[seq] / n - p) <= 4 * np.sqrt(p * (1 - p) / n) + 1e-12

    def test_probability_weighted_playouts_match_oracle(self):
        # every deterministic policy over the parameter nodes, weighted by its probability
        s = FullStrategy(*(F(x, 11) for x in (3, 6, 2, 5, 4, 7, 1)))
        P = F(7, 2)
        per_deal = exshowdown_by_deal("full", s, P)
        seats = {"bet": 0, "call": 1, "call_after_fold": 2, "overcall": 2}
        for deal in enumerate_deals():
            nodes = [(n, deal[i]) for n, i in seats.items() if (n, deal[i]) in _PARAM]
            acc = [0, 0, 0]
            for acts in itertools.product((True, False), repeat=len(nodes)):
                w = 1
                for (node, card), a in zip(nodes, acts):
                    p = getattr(s, _PARAM[(node, card)])
                    w *= p if a else 1 - p
                hand = playout(deal, s, P, ForcedPolicy(dict(zip(nodes, acts))))
                base = net_payoffs(deal, B.K, P)
                for i in range(3):
                    acc[i] += w * (hand.nets[i] - base[i])
            assert tuple(acc) == per_deal[deal]


class TestPayoffs:
    @given(pots)
    def test_nets_zero_sum(self, P):
        for deal, seq in itertools.product(enumerate_deals(), B):
            assert sum(net_payoffs(deal, seq, P)) == 0
            assert sum(exshowdown_payoffs(deal, seq, P)) == 0

    def test_baseline_is_zero_for_check(self):
        for deal in enumerate_deals():
            assert exshowdown_payoffs(deal, B.K, F(5)) == (0, 0, 0)


class TestExpectations:
    def test_skp_bluff_always(self):
        e = exshowdown_oracle("skp", SkpStrategy(1, 0, 0), 9)
        assert e == (F(-7, 24), F(1, 24), F(6, 24))
        assert expectation_skp(SkpStrategy(1, 0, 0), 9) == e

    def test_skp_zero_strategy(self):
        e = expectation_skp(SkpStrategy(0, 0, 0), 9)
        assert e == (0, F(-1, 12), F(1, 12))
        assert exshowdown_oracle("skp", SkpStrategy(0, 0, 0), 9) == e

    def test_full_zero_strategy(self):
        assert exshowdown_oracle("full", FullStrategy(0, 0, 0, 0, 0, 0, 0), 9) == (0, 0, 0)

    def test_p5_family(self):
        s = FullStrategy(F(2, 5), 0, 0, 0, 0, 1, 0)
        e = expectation_full(s, 5)
        assert e.e1 == F(-1, 20)
        assert e.e3 == F(1, 12)

    def test_p5_transfer_by_calling(self):
        # Player 2 pinned to d_Q=0, d_K=1, o_K=0 and Player 3 bluffing 2/5 in total
        rnd = random.Random(1)
        for _ in range(20):
            bj, cq, ck = F(rnd.randint(0, 8), 20), F(rnd.randint(0, 10), 10), F(rnd.randint(0, 10), 10)
            e = expectation_full(FullStrategy(bj, F(2, 5) - bj, cq, ck, 0, 1, 0), 5)
            assert e.e1 == F(5, 24) * cq * (bj - F(2, 5)) - F(1, 20)
            assert e.e2 == -F(5, 24) * cq * (bj - F(1, 5)) - F(1, 30) + ck / 60
            assert e.e3 == F(1, 12) - ck / 60 + cq / 24

    def test_p3_equilibrium(self):
        s = FullStrategy(F(1, 4), F(1, 4), 0, 0, 0, F(1, 2), 0)
        assert expectation_full(s, 3) == (F(-1, 48), F(-1, 48), F(1, 24))
        assert exshowdown_oracle("full", s, 3) == (F(-1, 48), F(-1, 48), F(1, 24))

    def test_solution_values_at_9(self):
        assert expectation_skp(SkpStrategy(F(2, 9), F(4, 10), 0), 9) == (F(-7, 108), F(-7, 135), F(7, 60))
        assert expectation_skp(SkpStrategy(F(1, 5), 0, F(2, 5)), 9) == (F(-7, 120), F(-7, 120), F(7, 60))

    def test_exact_type(self):
        e = expectation_full(FullStrategy(F(1, 3), 0, 0, 0, 0, 1, 0), 7)
        assert all(isinstance(x, F) for x in e)

    def test_float_mode(self):
        e = expectation_full(FullStrategy(0.3, 0.1, 0.2, 0.4, 0.5, 0.6, 0.7), 6.5)
        assert all(isinstance(x, float) for x in e)
        assert abs(sum(e)) <= 1e-12

    def test_bad_pot(self):
        with pytest.raises(ValueError, match="P must be positive"):
            expectation_skp(SkpStrategy(0, 0, 0), 0)

    @settings(max_examples=60, deadline=None)
    @given(st.tuples(*[unit] * 7), pots)
    def test_full_matches_oracle(self, vals, P):
        s = FullStrategy(*vals)
        assert expectation_full(s, P) == exshowdown_oracle("full", s, P)

    @settings(max_examples=60, deadline=None)
    @given(st.tuples(*[unit] * 3), pots)
    def test_skp_matches_oracle_and_embedding(self, vals, P):
        s = SkpStrategy(*vals)
        e = expectation_skp(s, P)
        assert e == exshowdown_oracle("skp", s, P)
        assert e == expectation_full(s.embed(), P)
        assert sum(e) == 0

    @settings(max_examples=30, deadline=None)
    @given(st.tuples(*[unit] * 7), pots)
    def test_own_parameters_enter_affinely(self, vals, P):
        # E_p restricted to one own-parameter axis is a straight line
        owners = {"c_q": 0, "c_k": 0, "d_q": 1, "d_k": 1, "o_k": 1, "b_j": 2, "b_q": 2}
        names = FullStrategy.names()
        for name, player in owners.items():
            i = names.index(name)

            def E(x):
                v = list(vals)
                v[i] = x
                return expectation_full(FullStrategy(*v), P)[player]

            e0, e1 = E(F(0)), E(F(1))
            assert E(F(1, 2)) - (e0 + e1) / 2 == 0
            assert E(F(1, 3)) - (2 * e0 + e1) / 3 == 0


def test_random_rational_samples_exact():
    rnd = random.Random(5)
    for _ in range(200):
        vals = [F(rnd.randint(0, 20), 20) for _ in range(7)]
        P = F(rnd.randint(1, 120), 10)
        e = expectation_full(FullStrategy(*vals), P)
        assert e == exshowdown_oracle("full", FullStrategy(*vals), P)
        assert isinstance(e, ExpectationTriple)
