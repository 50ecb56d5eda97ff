import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrsin import basemap as bm
from qrsin.core import SeededSampler, TrayIndex
from qrsin.errors import DomainError, HeightOverflowError, WrongHalfSpaceError

E = math.e


def pt(*c):
    return np.array(c, dtype=float)


class TestChain:
    def test_h1_shift(self):
        np.testing.assert_allclose(bm.h1(pt(0, 0, 1)), pt(0, 0, 0))
        np.testing.assert_allclose(bm.h1(pt(0.5, 0)), pt(0.5, -1))

    def test_h1_inverse_exact(self):
        pts = SeededSampler(3).points_in_box(1000, [-1, -1, 0], [1, 1, 1])
        np.testing.assert_array_equal(bm.h1_inv(bm.h1(pts)), pts)

    def test_h1_domain(self):
        with pytest.raises(DomainError):
            bm.h1(pt(1.5, 0.5))

    def test_h2_axis_fixed(self):
        np.testing.assert_allclose(bm.h2(pt(0, 0, -1)), pt(0, 0, -1))

    def test_h2_corner(self):
        np.testing.assert_allclose(bm.h2(pt(1, -1)), pt(1 / np.sqrt(2), -1 / np.sqrt(2)))

    def test_h2_origin(self):
        np.testing.assert_array_equal(bm.h2(pt(0, 0)), pt(0, 0))

    def test_h2_norm_identity(self):
        pts = SeededSampler(5).points_in_box(500, [-1, -1, -1], [1, 1, 0])
        img = bm.h2(pts)
        np.testing.assert_allclose(np.linalg.norm(img, axis=1),
                                   np.max(np.abs(pts), axis=1), atol=1e-14)

    def test_h2_roundtrip(self):
        pts = SeededSampler(6).points_in_box(2000, [-1, -1], [1, 0])
        back = bm.h2_inv(bm.h2(pts))
        assert np.max(np.linalg.norm(back - pts, axis=1)) <= 1e-12

    def test_h3_poles(self):
        np.testing.assert_allclose(bm.h3(pt(0, 0, 0)), pt(0, 0, 1))
        np.testing.assert_allclose(bm.h3(pt(0, 0, -1)), pt(0, 0, 0))
        np.testing.assert_allclose(bm.h3(pt(1, 0)), pt(1, 0))

    def test_h3_maps_disk_to_hemisphere(self):
        s = SeededSampler(7)
        flat = s.points_in_box(500, [-0.7, -0.7, 0], [0.7, 0.7, 0])
        img = bm.h3(flat)
        np.testing.assert_allclose(np.linalg.norm(img, axis=1), 1.0, atol=1e-12)
        assert np.all(img[:, -1] >= -1e-15)

    def test_h3_roundtrip(self):
        s = SeededSampler(8)
        pts = s.points_in_box(3000, [-1, -1, -1], [1, 1, 0])
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
        back = bm.h3_inv(bm.h3(pts))
        assert np.max(np.linalg.norm(back - pts, axis=1)) <= 1e-10


class TestBaseF:
    def test_north_pole_fixed(self):
        np.testing.assert_allclose(bm.base_F(pt(0, 0, 1)), pt(0, 0, 1))

    def test_exponential_ray(self):
        np.testing.assert_allclose(bm.base_F(pt(0, 2)), pt(0, E), rtol=1e-15)

    def test_origin_fixed_via_chain(self):
        # oracle: compose the three explicit chain maps
        via_chain = bm.h3(bm.h2(bm.h1(pt(0.0, 0.0))))
        np.testing.assert_allclose(bm.base_F(pt(0.0, 0.0)), via_chain, atol=1e-15)
        np.testing.assert_allclose(via_chain, pt(0, 0), atol=1e-15)

    def test_matches_chain_below_seam(self):
        s = SeededSampler(9)
        pts = s.points_in_box(2000, [-1, 0], [1, 1])
        chain = bm.h3(bm.h2(bm.h1(pts)))
        np.testing.assert_allclose(bm.base_F(pts), chain, atol=1e-14)

    def test_norm_above_seam(self):
        s = SeededSampler(10)
        pts = s.points_in_box(1000, [-1, 1], [1, 6])
        norms = np.linalg.norm(bm.base_F(pts), axis=1)
        np.testing.assert_allclose(norms, np.exp(pts[:, -1] - 1.0), rtol=1e-12)

    def test_continuous_at_seam(self):
        for lat in (-0.9, -0.3, 0.4, 0.8):
            below = bm.base_F(pt(lat, 1.0 - 1e-9))
            above = bm.base_F(pt(lat, 1.0 + 1e-9))
            assert np.linalg.norm(above - below) <= 1e-7

    def test_inverse_roundtrip(self):
        s = SeededSampler(11)
        pts = s.points_in_box(5000, [-1, -1, 0], [1, 1, 4])
        back = bm.base_F_inv(bm.base_F(pts))
        assert np.max(np.linalg.norm(back - pts, axis=1)) <= 1e-9

    def test_inverse_rejects_lower_half(self):
        with pytest.raises(DomainError):
            bm.base_F_inv(pt(0.3, -0.5))


class TestFold:
    def test_fold_example(self):
        res = bm.fold(pt(2.5, -0.3))
        assert res.tray == TrayIndex((1,), -1)
        np.testing.assert_allclose(res.folded, pt(-0.5, 0.3))

    def test_origin_tie_break(self):
        res = bm.fold(pt(0, 0))
        assert res.tray == TrayIndex((0,), 1)
        np.testing.assert_array_equal(res.folded, pt(0, 0))

    def test_boundary_joins_upper_tray(self):
        assert bm.tray_of(pt(1.0, 0.0)) == TrayIndex((1,), 1)
        assert bm.tray_of(pt(0.5, 0.2)) == TrayIndex((0,), 1)

    def test_tray_of_d3(self):
        assert bm.tray_of(pt(-2.2, 3.9, -5)) == TrayIndex((-1, 2), -1)

    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=4))
    @settings(max_examples=300, deadline=None)
    def test_unfold_fold_exact(self, coords):
        x = np.asarray(coords)
        res = bm.fold(x)
        np.testing.assert_array_equal(bm.unfold(res.folded, res.tray), x)

    def test_fold_in_fundamental_beam(self):
        pts = SeededSampler(12).points_in_box(10 ** 4, [-9, -9], [9, 9])
        folded, _, _, _ = bm.fold_batch(pts)
        assert np.all(np.abs(folded[:, :-1]) <= 1.0)
        assert np.all(folded[:, -1] >= 0.0)

    def test_shared_wall_consistent(self):
        # a wall point folds to the same image point under either label
        x = pt(3.0, 0.7)  # wall between lateral cells 1 and 2
        left = bm.unfold(bm.fold(x).folded, TrayIndex((1,), 1))
        right = bm.unfold(bm.fold(x).folded, TrayIndex((2,), 1))
        assert abs(left[-1] - right[-1]) == 0.0


class TestMapF:
    def test_origin_fixed(self, params_fixed):
        np.testing.assert_array_equal(bm.map_f(pt(0, 0), params_fixed), pt(0, 0))

    def test_axis_examples(self, params_fixed):
        lam = params_fixed.lam
        np.testing.assert_allclose(bm.map_f(pt(0, 2), params_fixed),
                                   pt(0, lam * E), rtol=1e-15)
        np.testing.assert_allclose(bm.map_f(pt(0, -2), params_fixed),
                                   pt(0, -lam * E), rtol=1e-15)

    def test_norm_identity(self, params_fixed):
        s = SeededSampler(13)
        pts = s.points_in_box(10 ** 4, [-5, -60], [5, 60])
        pts = pts[np.abs(pts[:, -1]) >= 1.0]
        fx = bm.map_f(pts, params_fixed)
        target = params_fixed.lam * np.exp(np.abs(pts[:, -1]) - 1.0)
        rel = np.abs(np.linalg.norm(fx, axis=1) / target - 1.0)
        assert rel.max() <= 1e-9

    def test_overflow_signalled(self, params_fixed):
        with pytest.raises(HeightOverflowError):
            bm.map_f(pt(0, 750), params_fixed)

    def test_half_space_parity(self, params_fixed):
        s = SeededSampler(14)
        pts = s.points_in_box(10 ** 4, [-4, -3], [4, 3])
        fx = bm.map_f(pts, params_fixed)
        _, _, _, parity = bm.fold_batch(pts)
        keep = np.abs(fx[:, -1]) >= 1e-12
        assert np.all((fx[keep, -1] > 0) == (parity[keep] == 0))


class TestLambdaBranch:
    def test_axis_roundtrip(self, params_fixed):
        lam = params_fixed.lam
        tray = TrayIndex((0,), 1)
        np.testing.assert_allclose(
            bm.lambda_branch(tray, pt(0, lam * E), params_fixed), pt(0, 2),
            atol=1e-12)
        np.testing.assert_allclose(
            bm.lambda_branch(tray, pt(0, lam), params_fixed), pt(0, 1),
            atol=1e-12)

    def test_wrong_half_space(self, params_fixed):
        with pytest.raises(WrongHalfSpaceError):
            bm.lambda_branch(TrayIndex((0,), 1), pt(0.5, -1.0), params_fixed)
        with pytest.raises(WrongHalfSpaceError):
            bm.lambda_branch(TrayIndex((1,), 1), pt(0.5, 1.0), params_fixed)

    def test_branch_image_in_tray(self, params_fixed):
        s = SeededSampler(15)
        tray = TrayIndex((2,), -1)
        ys = s.points_in_box(500, [-30, -30], [30, 0])
        xs = bm.lambda_branch(tray, ys, params_fixed)
        assert np.all(np.abs(xs[:, 0] - 4.0) <= 1.0 + 1e-12)
        assert np.all(xs[:, -1] <= 1e-12)

    def test_roundtrip_random(self, params_fixed):
        s = SeededSampler(16)
        pts = s.points_in_box(2000, [-3, -4], [3, 4])
        pts = pts[bm.tray_boundary_distance(pts) >= 1e-6]
        fx = bm.map_f(pts, params_fixed)
        for x, y in zip(pts[:300], fx[:300]):
            back = bm.lambda_branch(bm.tray_of(x), y, params_fixed)
            assert np.linalg.norm(back - x) <= 1e-8


class TestDerivativeScaling:
    def test_factor_e_between_heights(self, params_fixed):
        from qrsin.analysis import jacobian_fd
        j1 = jacobian_fd(pt(0, 1.5), 1e-5, params_fixed).matrix
        j2 = jacobian_fd(pt(0, 2.5), 1e-5, params_fixed).matrix
        rel = np.max(np.abs(j2 - E * j1)) / np.max(np.abs(E * j1))
        assert rel <= 1e-5
