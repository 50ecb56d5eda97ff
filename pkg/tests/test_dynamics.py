import math

import numpy as np
import pytest

from qrsin import dynamics as dyn
from qrsin.core import Itinerary, OrbitStatus, SeededSampler, TrayIndex
from qrsin.core import random_admissible_itinerary
from qrsin.dynamics import OrderRelation
from qrsin.errors import NoConvergenceError, WrongHalfSpaceError


def pt(*c):
    return np.array(c, dtype=float)


CONST2 = Itinerary.constant(2)
PERIOD2 = Itinerary(2, (), (TrayIndex((1,), 1), TrayIndex((1,), -1)))


class TestIterate:
    def test_fixed_point_bounded(self, params_fixed):
        orbit = dyn.iterate(pt(0, 0), 10, params_fixed)
        assert orbit.status is OrbitStatus.BOUNDED
        assert len(orbit) == 11
        np.testing.assert_array_equal(orbit.points, np.zeros((11, 2)))

    def test_axis_escape(self, params_fixed):
        orbit = dyn.iterate(pt(0, 3), 5, params_fixed)
        assert orbit.status is OrbitStatus.ESCAPED
        assert orbit.escape_step is not None and orbit.escape_step <= 5
        assert orbit.heights[orbit.escape_step] >= 300.0

    def test_zero_steps_undecided(self, params_fixed):
        orbit = dyn.iterate(pt(0.4, 0.2), 0, params_fixed)
        assert orbit.status is OrbitStatus.UNDECIDED
        assert len(orbit) == 1

    def test_trays_follow_points(self, params_fixed):
        from qrsin.basemap import tray_of
        orbit = dyn.iterate(pt(0.3, 1.1), 6, params_fixed)
        for p, t in zip(orbit.points, orbit.trays):
            assert tray_of(p) == t

    def test_cap_validation(self, params_fixed):
        with pytest.raises(ValueError):
            dyn.iterate(pt(0, 0), 3, params_fixed, height_cap=1.0)


class TestItineraryOf:
    def test_fixed_point(self, params_fixed):
        sym = dyn.itinerary_of(pt(0, 0), 4, params_fixed)
        assert sym.symbols == (TrayIndex((0,), 1),) * 4
        assert not sym.truncated

    def test_truncation_on_escape(self, params_fixed):
        sym = dyn.itinerary_of(pt(0, 3), 9, params_fixed)
        assert sym.truncated
        assert 0 < len(sym.symbols) < 9
        assert all(s.lateral == (0,) for s in sym.symbols)

    def test_zero_length(self, params_fixed):
        assert dyn.itinerary_of(pt(0, 0), 0, params_fixed).symbols == ()

    def test_parity_rule_along_orbit(self, params_fixed):
        from qrsin.core import admissible_successor
        s = SeededSampler(21)
        for _ in range(40):
            x = s.point_in_box([-3, -2], [3, 2])
            sym = dyn.itinerary_of(x, 6, params_fixed)
            fx = x.copy()
            ok = []
            for a, b in zip(sym.symbols, sym.symbols[1:]):
                ok.append(admissible_successor(a, b))
            # exact zeros of f(x)_d could break the rule; none expected here
            assert all(ok)


class TestPullback:
    def test_single_branch_example(self, params_fixed):
        lam = params_fixed.lam
        res = dyn.pullback(CONST2, 1, pt(0, lam * math.e), params_fixed)
        np.testing.assert_allclose(res, pt(0, 2), atol=1e-12)

    def test_axis_invariance(self, params_fixed):
        res = dyn.pullback(CONST2, 7, pt(0, 2.5), params_fixed)
        assert abs(res[0]) <= 1e-14
        assert res[-1] >= 0.0

    def test_wrong_half_space_reports_step(self, params_fixed):
        # symbol 1 of PERIOD2 has even sigma, so the depth-2 target must lie
        # in the upper half-space; a negative height fails at chain step 1
        with pytest.raises(WrongHalfSpaceError) as exc:
            dyn.pullback(PERIOD2, 2, pt(0.3, -5.0), params_fixed)
        assert exc.value.step == 1

    def test_contraction_between_depths(self, params_fixed):
        target = pt(0.4, 1.3)
        prev = None
        gaps = []
        for k in range(1, 12):
            cur = dyn.pullback(CONST2, k, target, params_fixed)
            if prev is not None:
                gaps.append(np.linalg.norm(cur - prev))
            prev = cur
        gaps = np.array(gaps)
        rate = (gaps[-1] / gaps[2]) ** (1.0 / (len(gaps) - 3))
        assert rate <= 1.0 / params_fixed.alpha_hat + 0.1

    def test_levels_in_their_trays(self, params_fixed):
        s = SeededSampler(22)
        itin = random_admissible_itinerary(2, s, n_cycle=3, lateral_range=(-2, 2))
        target = dyn._anchor(itin, 8, t=0.9)
        levels = dyn.pullback_levels(itin, 8, target, params_fixed)
        for j in range(8):
            sym = itin.symbol(j)
            x = levels[j]
            assert np.max(np.abs(x[:-1] - 2.0 * np.asarray(sym.lateral))) <= 1.0 + 1e-12
            assert sym.sign * x[-1] >= -1e-12


class TestEndpoint:
    def test_constant_is_origin(self, params_fixed):
        est = dyn.endpoint(CONST2, 1e-8, 40, params_fixed)
        assert np.linalg.norm(est.point) <= 1e-8
        assert est.residual <= 1e-8

    def test_large_tol_depth_one(self, params_fixed):
        est = dyn.endpoint(PERIOD2, 10.0, 40, params_fixed)
        assert est.depth == 1

    def test_ratio_decay(self, params_fixed):
        _, incs = dyn.anchor_pullbacks(PERIOD2, 40, params_fixed)
        live = incs[5:]
        rate = (live[-1] / live[0]) ** (1.0 / (len(live) - 1))
        assert rate <= 1.0 / params_fixed.alpha_hat + 0.1

    def test_no_convergence_raises(self, params_fixed):
        with pytest.raises(NoConvergenceError) as exc:
            dyn.endpoint(PERIOD2, 1e-300, 10, params_fixed)
        assert exc.value.residual > 0


class TestHairTrace:
    def test_axis_hair_on_axis(self, params_fixed):
        trace = dyn.hair_trace(CONST2, 8, 3.0, 40, params_fixed)
        assert np.max(np.abs(trace.points[:, 0])) <= 1e-8

    def test_ordering_and_head(self, params_fixed):
        trace = dyn.hair_trace(PERIOD2, 6, 2.0, 2, params_fixed)
        assert trace.t[0] == 0.0 and trace.t[-1] == 2.0
        gap = np.linalg.norm(trace.points[0] - trace.endpoint_estimate)
        assert gap <= 2.0 * trace.residual + 2.0 * trace.endpoint_residual

    def test_injective_at_resolution(self, params_fixed):
        trace = dyn.hair_trace(PERIOD2, 6, 2.0, 60, params_fixed)
        diffs = np.linalg.norm(np.diff(trace.points, axis=0), axis=1)
        assert np.all(diffs > 1e-12)

    def test_depth_refinement_contraction(self, params_fixed):
        t5 = dyn.hair_trace(PERIOD2, 5, 2.0, 9, params_fixed)
        t6 = dyn.hair_trace(PERIOD2, 6, 2.0, 9, params_fixed)
        move = np.max(np.linalg.norm(t6.points - t5.points, axis=1))
        assert move <= t5.c_bound * params_fixed.alpha_hat ** (-5) * 1.5 + 1e-9

    def test_samples_in_first_tray(self, params_fixed):
        s = SeededSampler(23)
        itin = random_admissible_itinerary(2, s, n_cycle=2, lateral_range=(-3, 3))
        trace = dyn.hair_trace(itin, 6, 2.5, 25, params_fixed)
        sym = itin.symbol(0)
        lat = np.asarray(sym.lateral, dtype=float)
        assert np.all(np.abs(trace.points[:, :-1] - 2 * lat) <= 1.0 + 1e-9)
        assert np.all(sym.sign * trace.points[:, -1] >= -1e-9)

    def test_residual_bound_formula(self, params_fixed):
        trace = dyn.hair_trace(PERIOD2, 7, 2.0, 5, params_fixed)
        assert trace.residual <= trace.c_bound * params_fixed.alpha_hat ** (-7) + 1e-15


class TestOrderCompare:
    def test_axis_example(self, params_fixed):
        res = dyn.order_compare(pt(0, 1), pt(0, 3), params_fixed, 20)
        assert res.relation is OrderRelation.LESS
        assert res.persistence_ok

    def test_antisymmetry(self, params_fixed):
        res = dyn.order_compare(pt(0, 3), pt(0, 1), params_fixed, 20)
        assert res.relation is OrderRelation.GREATER

    def test_equal_points_incomparable(self, params_fixed):
        res = dyn.order_compare(pt(0, 1), pt(0, 1), params_fixed, 20)
        assert res.relation is OrderRelation.INCOMPARABLE
        assert res.step is None


class TestInOmega:
    def test_axis_tall_point(self, params_fixed):
        assert dyn.in_omega(pt(0, params_fixed.m_hat + 1), params_fixed)

    def test_lateral_bound(self, params_fixed):
        h = params_fixed.m_hat + 1
        wide = math.exp(math.sqrt(math.log(h))) + 1
        assert not dyn.in_omega(pt(wide, h), params_fixed)

    def test_short_point(self, params_fixed):
        assert not dyn.in_omega(pt(0, params_fixed.m_hat - 0.5), params_fixed)

    def test_batch(self, params_fixed):
        flags = dyn.in_omega(
            np.array([[0.0, params_fixed.m_hat + 2], [0.0, 1.0]]), params_fixed)
        assert flags.tolist() == [True, False]


class TestBoundaryCollision:
    def test_wall_seed_stays_flat(self, params_fixed):
        # shared boundary of two trays: the orbit's last coordinate vanishes
        # from the next step on
        for seed_pt in (pt(1.0, 0.7), pt(0.4, 0.0), pt(-3.0, 1.9)):
            cur = seed_pt
            for k in range(6):
                cur = np.asarray(
                    __import__("qrsin.basemap", fromlist=["map_f"]).map_f(
                        cur, params_fixed))
                assert abs(cur[-1]) <= 1e-9


class TestGrowthLemma:
    def test_conclusion_holds_at_m_hat(self, params_fixed):
        from qrsin.analysis import growth_violations, sample_orbit_pairs
        pairs = sample_orbit_pairs(params_fixed, 300, 4, SeededSampler(31))
        count, _ = growth_violations(pairs, params_fixed.m_hat, params_fixed.lam)
        assert count == 0

    def test_violations_exist_at_zero(self, params_fixed):
        from qrsin.analysis import growth_violations, sample_orbit_pairs
        pairs = sample_orbit_pairs(params_fixed, 300, 4, SeededSampler(31))
        count, example = growth_violations(pairs, 0.0, params_fixed.lam)
        assert count > 0 and example is not None


class TestCsv:
    def test_orbit_csv_format(self, params_fixed, tmp_path):
        orbit = dyn.iterate(pt(0, 0), 3, params_fixed)
        path = tmp_path / "orbit.csv"
        dyn.orbit_to_csv(orbit, params_fixed, path, seed=7)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == f"# dim=2 lambda={params_fixed.lam!r} depth=3"
        assert lines[1].startswith("# seed=7 version=")
        assert lines[2] == "0,0.0,0.0"
        assert len(lines) == 2 + 4

    def test_hair_csv_format(self, params_fixed, tmp_path):
        trace = dyn.hair_trace(CONST2, 4, 1.0, 5, params_fixed)
        path = tmp_path / "hair.csv"
        dyn.hair_to_csv(trace, params_fixed, path, seed=3)
        lines = path.read_text().strip().split("\n")
        assert lines[0].startswith("# dim=2 lambda=")
        first = lines[2].split(",")
        assert float(first[0]) == 0.0
        assert len(first) == 3
