"""Frequency-adjustment flow: right-hand side, integrator, fixed points, invariants."""

import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kuhn3.equilibrium import pstar, skp_equilibrium_expectations
from kuhn3.ode_dynamics import (
    CubeEscape,
    Gains,
    StepSizeUnderflow,
    classify,
    cumulative_expectations,
    detect_cycle,
    dopri5,
    fixed_point,
    fixed_points,
    integrate,
    plane_invariant,
    rhs,
    stable_manifold_trace,
    unstable_direction,
)
from kuhn3.ode_dynamics import Trajectory


class TestRhs:
    def test_hand_value(self):
        assert np.allclose(rhs((0.5, 0.5, 0.5), 9), (-0.0875, 0.25 * (0.5 - 2 / 9), 0.025), atol=1e-15)
        assert rhs((0.5, 0.5, 0.5), 9)[1] == pytest.approx(0.0694444444444, abs=1e-12)

    def test_s1_at_9(self):
        assert rhs((F(1, 5), F(0), F(2, 5)), F(9)) == (0, 0, 0)

    @pytest.mark.parametrize("P", [F(6), F(7), F(9), F(12), F(50)], ids=str)
    def test_fixed_point_residuals_exact(self, P):
        for fp in fixed_points(P):
            assert rhs(fp.coords, P) == (0, 0, 0)

    def test_boundary_planes_have_zero_normal_speed(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            s = rng.random(3)
            for i in range(3):
                for edge in (0.0, 1.0):
                    t = s.copy()
                    t[i] = edge
                    assert rhs(t, 9)[i] == 0

    def test_gains_scale_components(self):
        s = (0.3, 0.6, 0.1)
        base = rhs(s, 9)
        got = rhs(s, 9, Gains(2, 3, 5))
        assert np.allclose(got, (5 * base[0], 2 * base[1], 3 * base[2]))

    def test_general_hook(self):
        s = (0.3, 0.6, 0.1)
        cube = rhs(s, 9, g=lambda x: x * (1 - x), f=(lambda u: u ** 3,) * 3)
        lin = rhs(s, 9)
        g = [x * (1 - x) for x in s]
        for i in range(3):
            u = lin[i] / g[i]
            assert cube[i] == pytest.approx(g[i] * u ** 3)

    def test_gains_must_be_positive(self):
        with pytest.raises(ValueError):
            Gains(1, 0, 1)


class TestFixedPoints:
    def test_s3_at_9(self):
        assert fixed_point(F(9), "S3").coords == (F(2, 9), F(2, 11), F(4, 15))

    def test_s3_absent_below_pstar(self):
        assert [fp.label for fp in fixed_points(F(6))] == ["S1", "S2"]
        assert [fp.label for fp in fixed_points(pstar())] == ["S1", "S2"]
        with pytest.raises(ValueError):
            fixed_point(F(6), "S3")

    def test_requires_large_pot(self):
        with pytest.raises(ValueError):
            fixed_points(5)

    def test_s1_eigenvalues_at_9(self):
        cl = classify(fixed_point(9, "S1"))
        assert cl.real_eigenvalues == pytest.approx([-1 / 45], abs=1e-12)
        pair = cl.complex_pair
        assert np.allclose(pair.real, 0, atol=1e-12)
        assert np.sort(pair.imag) == pytest.approx([-math.sqrt(0.0384), math.sqrt(0.0384)], abs=1e-12)
        assert "stable" in cl.structure and "centre pair in plane c=0" in cl.structure

    @pytest.mark.parametrize("P", [6, 6.5, 7, 9, 12])
    def test_structure_over_pots(self, P):
        s1 = classify(fixed_point(P, "S1"))
        assert "(stable)" in s1.structure and "centre pair" in s1.structure
        s2 = classify(fixed_point(P, "S2"))
        assert "centre pair in plane d=0" in s2.structure
        lam = s2.real_eigenvalues
        assert len(lam) == 1
        assert (lam[0] < 0) == (P > pstar())
        if P > pstar():
            s3 = classify(fixed_point(P, "S3"))
            assert (s3.real_eigenvalues > 0).sum() == 1
            assert len(s3.complex_pair) == 2 and np.all(s3.complex_pair.real < 0)
            assert s3.structure == "1 unstable real direction(s); stable oscillatory plane"

    def test_s2_unstable_at_6(self):
        cl = classify(fixed_point(6, "S2"))
        assert cl.real_eigenvalues[0] > 0
        assert "(unstable)" in cl.structure


class TestIntegrate:
    def test_transverse_decay(self):
        s1 = fixed_point(9, "S1").as_array()
        tr = integrate(s1 + [0, 1e-3, 0], 9, t_end=500, output_grid=501)
        c = tr.c
        assert np.all(np.diff(c) < 0)
        # log-slope of c approaches the transverse eigenvalue -1/45
        slope = np.polyfit(tr.t[100:], np.log(c[100:]), 1)[0]
        assert slope == pytest.approx(-1 / 45, rel=0.02)

    def test_closed_orbit_in_plane(self):
        s1 = fixed_point(9, "S1").as_array()
        start = s1 + [0, 0, 0.1]
        tr = integrate(start, 9, t_end=200, rel_tol=1e-10, abs_tol=1e-12, output_grid=40001)
        assert np.all(tr.c == 0)
        cyc = detect_cycle(tr, s1, axis=0)
        assert cyc is not None and cyc.converged
        assert cyc.closure <= 1e-6
        assert cyc.period == pytest.approx(2 * math.pi / math.sqrt(0.0384), rel=0.1)

    def test_backward(self):
        s3 = fixed_point(9, "S3").as_array()
        tr = integrate(s3 + 1e-4, 9, t_end=-100)
        assert tr.t[-1] == -100
        assert np.all(np.diff(tr.t) < 0)
        assert np.linalg.norm(tr.y[-1] - s3) > 1e-4

    @pytest.mark.parametrize("P", [7, 9, 12])
    def test_cube_forward_invariance(self, P):
        rng = np.random.default_rng(P)
        for _ in range(100):
            tr = integrate(rng.random(3), P, t_end=1000, rel_tol=1e-6, abs_tol=1e-9, output_grid=201)
            assert tr.y.min() >= -1e-6 and tr.y.max() <= 1 + 1e-6

    def test_boundary_planes_invariant(self):
        rng = np.random.default_rng(8)
        for i in range(3):
            for edge in (0.0, 1.0):
                s = rng.uniform(0.05, 0.95, 3)
                s[i] = edge
                tr = integrate(s, 9, t_end=300, output_grid=301)
                assert np.max(np.abs(tr.y[:, i] - edge)) <= 1e-10

    def test_matches_scipy(self):
        y0 = [0.3, 0.3, 0.3]
        grid = np.linspace(0, 100, 101)
        ours = integrate(y0, 9, t_end=100, rel_tol=1e-10, abs_tol=1e-12, output_grid=grid)
        ref = solve_ivp(lambda t, y: rhs(y, 9.0), (0, 100), y0, method="DOP853",
                        rtol=1e-12, atol=1e-14, t_eval=grid)
        assert np.max(np.abs(ours.y - ref.y.T)) <= 1e-7

    def test_order_at_least_four(self):
        y0 = [0.3, 0.4, 0.2]
        ref = integrate(y0, 9, t_end=20, rel_tol=1e-13, abs_tol=1e-15, output_grid=2).y[-1]
        errs = [np.linalg.norm(integrate(y0, 9, t_end=20, fixed_step=h, output_grid=2).y[-1] - ref)
                for h in (2.0, 1.0, 0.5)]
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 4

    def test_tolerance_refinement(self):
        y0 = [0.3, 0.4, 0.2]
        ref = integrate(y0, 9, t_end=50, rel_tol=1e-13, abs_tol=1e-15, output_grid=2).y[-1]
        errs = [np.linalg.norm(integrate(y0, 9, t_end=50, rel_tol=r, abs_tol=r * 1e-3,
                                         output_grid=2).y[-1] - ref)
                for r in (1e-5, 1e-7, 1e-9)]
        assert errs[0] > errs[1] > errs[2]

    def test_input_validation(self):
        with pytest.raises(ValueError):
            integrate([0.5, 0.5, 1.5], 9)
        with pytest.raises(ValueError):
            integrate([0.5, 0.5, 0.5], 9, t_end=0)
        with pytest.raises(ValueError):
            integrate([0.5, 0.5, 0.5], 4)

    def test_cube_escape(self):
        # undamped response pushes straight through the face b = 0
        with pytest.raises(CubeEscape):
            integrate([0.01, 0.5, 0.9], 9, g=lambda x: 1.0, t_end=10)

    def test_step_size_underflow(self):
        with pytest.raises(StepSizeUnderflow):
            dopri5(lambda t, y: y ** 2, 0.0, [1.0], 2.0, max_step=0.1)


class TestInvariant:
    def test_conserved_on_orbit(self):
        s1 = fixed_point(9, "S1").as_array()
        tr = integrate(s1 + [0.05, 0, 0.1], 9, t_end=1000, rel_tol=1e-9, abs_tol=1e-12,
                       output_grid=1001)
        H = [plane_invariant(y, 9) for y in tr.y]
        assert max(H) - min(H) <= 1e-6

    def test_conserved_in_d_plane(self):
        s2 = fixed_point(9, "S2").as_array()
        k = Gains(1.5, 1, 0.7)
        tr = integrate(s2 + [0.05, 0.1, 0], 9, k, t_end=1000, rel_tol=1e-9, abs_tol=1e-12,
                       output_grid=501)
        H = [plane_invariant(y, 9, k, "d=0") for y in tr.y]
        assert max(H) - min(H) <= 1e-6

    def test_minimum_at_s1(self):
        s1 = fixed_point(9, "S1").as_array()
        h0 = plane_invariant(s1, 9)
        for db, dd in [(1e-4, 0), (-1e-4, 0), (0, 1e-4), (0, -1e-4), (1e-3, -1e-3)]:
            assert plane_invariant(s1 + [db, 0, dd], 9) > h0
        grid = np.linspace(0.01, 0.99, 25)
        assert min(plane_invariant((b, 0, d), 9) for b in grid for d in grid) >= h0

    def test_diverges_at_edge(self):
        vals = [plane_invariant((10.0 ** -e, 0, 0.4), 9) for e in (2, 4, 8, 16)]
        assert all(np.diff(vals) > 0) and vals[-1] > 5
        with pytest.raises(ValueError):
            plane_invariant((0.0, 0, 0.4), 9)
        with pytest.raises(ValueError):
            plane_invariant((0.2, 0, 0.4), 9, plane="b=0")


class TestCumulativeExpectations:
    def test_constant_s2(self):
        s2 = fixed_point(9, "S2").as_array()
        t = np.linspace(0, 100, 101)
        tr = Trajectory(t, np.tile(s2, (101, 1)), 9.0)
        E = cumulative_expectations(tr)
        assert E[-1, 0] == pytest.approx(-700 / 108, abs=1e-12)
        slope = [float(x) for x in skp_equilibrium_expectations(F(9), 2)]
        assert np.allclose(E[-1], np.array(slope) * 100, atol=1e-12)
        assert tr.E is E

    def test_zero_sum(self):
        tr = integrate([0.3, 0.3, 0.3], 9, t_end=200)
        E = cumulative_expectations(tr)
        assert np.max(np.abs(E.sum(axis=1))) <= 1e-12

    def test_cycle_trend_near_fixed_point_value(self):
        s1 = fixed_point(9, "S1").as_array()
        tr = integrate(s1 + [0, 0, 0.03], 9, t_end=3200, rel_tol=1e-9, abs_tol=1e-12,
                       output_grid=32001)
        E = cumulative_expectations(tr)
        target = [float(x) for x in skp_equilibrium_expectations(F(9), 1)]
        for p in range(3):
            slope = np.polyfit(tr.t, E[:, p], 1)[0]
            assert slope == pytest.approx(target[p], rel=0.05)

    def test_columns(self):
        tr = integrate([0.3, 0.3, 0.3], 9, t_end=10, output_grid=11)
        assert list(tr.columns()) == ["t", "b", "c", "d"]
        cumulative_expectations(tr)
        assert list(tr.columns()) == ["t", "b", "c", "d", "E1", "E2", "E3"]


class TestManifold:
    def test_rejects_zero_eps(self):
        with pytest.raises(ValueError):
            stable_manifold_trace(9, eps=0)

    def test_requires_s3(self):
        with pytest.raises(ValueError):
            stable_manifold_trace(6)

    def test_unstable_rate(self):
        lam, v = unstable_direction(9)
        s3 = fixed_point(9, "S3").as_array()
        tr = integrate(s3 + 1e-7 * v, 9, t_end=300, rel_tol=1e-12, abs_tol=1e-15, output_grid=301)
        dist = np.linalg.norm(tr.y - s3, axis=1)
        slope = np.polyfit(tr.t[50:], np.log(dist[50:]), 1)[0]
        assert slope == pytest.approx(lam, rel=0.2)

    def test_separates_basins(self):
        m = stable_manifold_trace(9)
        s3 = fixed_point(9, "S3").as_array()
        assert np.linalg.norm(m.y[-1] - s3) > 0.05
        _, v = unstable_direction(9)
        start = m.y[-300]
        plus = integrate(np.clip(start + 1e-3 * v, 0, 1), 9, t_end=3000, output_grid=3001)
        minus = integrate(np.clip(start - 1e-3 * v, 0, 1), 9, t_end=3000, output_grid=3001)
        # one side falls onto the c = 0 plane (cycles round S1), the other onto d = 0 (S2)
        ends = {"+": plus.y[-500:].mean(axis=0), "-": minus.y[-500:].mean(axis=0)}
        assert min(ends["+"][1], ends["-"][1]) < 0.01
        assert min(ends["+"][2], ends["-"][2]) < 0.01
        assert (ends["+"][1] < 0.01) != (ends["-"][1] < 0.01)
