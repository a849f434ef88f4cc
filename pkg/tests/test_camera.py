import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from physdepth.camera import (
    Extrinsics,
    Intrinsics,
    euler_from_rotation,
    pixel_ray,
    project,
    rescale_intrinsics,
    rotate_ray,
    rotation_from_euler,
    unproject,
)
from physdepth.exceptions import BehindCamera, InvalidDepth, InvalidInput

angles = st.floats(-math.pi, math.pi, allow_nan=False)


class TestPixelRay:
    def test_principal_point_is_optical_axis(self, simple_intr):
        np.testing.assert_array_equal(pixel_ray(simple_intr, 600, 180), [0.0, 0.0, 1.0])

    def test_45_degrees(self, simple_intr):
        r = pixel_ray(simple_intr, 1300, 180)
        np.testing.assert_allclose(r, [1 / math.sqrt(2), 0, 1 / math.sqrt(2)], atol=1e-15)

    def test_matches_scalar_evaluation(self):
        intr = Intrinsics(721.5, 721.5, 609.6, 172.9, 1242, 375)
        # frozen from a direct scalar evaluation of [u, v, f] / norm
        expected = [0.25153675246125284, 0.1679113510389981, 0.953171044647027]
        np.testing.assert_allclose(pixel_ray(intr, 800, 300), expected, rtol=0, atol=1e-12)

    def test_mean_focal_by_default(self):
        intr = Intrinsics(600.0, 800.0, 100.0, 100.0, 200, 200)
        r = pixel_ray(intr, 200.0, 100.0)
        np.testing.assert_allclose(r, np.array([100.0, 0.0, 700.0]) / math.hypot(100, 700))
        r2 = pixel_ray(intr, 200.0, 100.0, per_axis=True)
        np.testing.assert_allclose(r2, np.array([1 / 6, 0.0, 1.0]) / math.hypot(1 / 6, 1))

    def test_non_finite_rejected(self, simple_intr):
        with pytest.raises(InvalidInput):
            pixel_ray(simple_intr, np.nan, 3.0)

    @given(st.floats(0, 1199.99), st.floats(0, 359.99))
    def test_unit_norm(self, u, v):
        intr = Intrinsics(700.0, 700.0, 600.0, 180.0, 1200, 360)
        assert abs(np.linalg.norm(pixel_ray(intr, u, v)) - 1.0) < 1e-12


class TestRescale:
    def test_identity(self, kitti_intr):
        assert rescale_intrinsics(kitti_intr, 1242, 375) == kitti_intr

    def test_half_width(self):
        intr = Intrinsics(700.0, 700.0, 600.0, 180.0, 1200, 360)
        r = rescale_intrinsics(intr, 600, 360)
        assert (r.fx, r.ox, r.fy, r.oy) == (350.0, 300.0, 700.0, 180.0)

    def test_kitti_anisotropic(self, kitti_intr):
        r = rescale_intrinsics(kitti_intr, 1024, 320)
        # frozen from direct ratio arithmetic (S_w = 1024/1242, S_h = 320/375)
        assert r.fx == pytest.approx(594.8909861513687, rel=1e-15)
        assert r.fy == pytest.approx(615.7121706666667, rel=1e-15)
        assert r.ox == pytest.approx(502.56740998389694, rel=1e-15)
        assert r.oy == pytest.approx(147.50208000000003, rel=1e-15)
        assert (r.width, r.height) == (1024, 320)

    def test_bad_size(self, kitti_intr):
        with pytest.raises(InvalidInput):
            rescale_intrinsics(kitti_intr, 0, 10)

    @pytest.mark.parametrize("a,b", [(2, 2), (2, 4), (4, 2), (8, 2)])
    def test_multiplicative_power_of_two(self, a, b):
        intr = Intrinsics(512.0, 384.0, 256.0, 128.0, 1024, 512)
        step = rescale_intrinsics(rescale_intrinsics(intr, 1024 // a, 512 // a), 1024 // (a * b), 512 // (a * b))
        direct = rescale_intrinsics(intr, 1024 // (a * b), 512 // (a * b))
        assert step == direct

    @given(st.floats(0, 1241), st.floats(0, 374), st.integers(100, 2000), st.integers(50, 800))
    def test_ray_invariant_under_isotropic_rescale(self, u, v, new_w, new_h):
        intr = Intrinsics(721.5377, 721.5377, 609.5593, 172.854, 1242, 375)
        r = rescale_intrinsics(intr, new_w, round(new_w * 375 / 1242) or 1)
        sw, sh = r.width / intr.width, r.height / intr.height
        a = pixel_ray(intr, u, v, per_axis=True)
        b = pixel_ray(r, u * sw, v * sh, per_axis=True)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_ray_invariant_mean_focal_when_uniform(self, kitti_intr):
        r = rescale_intrinsics(kitti_intr, 621, 375 / 2)
        a = pixel_ray(kitti_intr, 800.0, 300.0)
        b = pixel_ray(r, 400.0, 150.0)
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestRotation:
    def test_zero_is_identity(self):
        np.testing.assert_array_equal(rotation_from_euler(Extrinsics(1.0)), np.eye(3))

    def test_yaw_quarter_turn(self):
        R = rotation_from_euler(Extrinsics(1.0, yaw=math.pi / 2))
        np.testing.assert_allclose(R, [[0, 1, 0], [-1, 0, 0], [0, 0, 1]], atol=1e-15)

    def test_composition_order(self):
        R = rotation_from_euler(Extrinsics(1.0, roll=0.02, pitch=-0.05, yaw=0.1))
        # frozen from an explicit scalar triple product R_yaw * R_pitch * R_roll
        expected = [
            [0.9937606691655043, 0.09881892730166618, 0.05171607126104218],
            [-0.09970865087213879, 0.9949049562501768, 0.01491016331539375],
            [-0.04997916927067833, -0.019973673567518554, 0.9985505170011335],
        ]
        np.testing.assert_allclose(R, expected, rtol=0, atol=1e-12)

    def test_positive_roll_tilts_axis_down(self):
        R = rotation_from_euler(Extrinsics(1.0, roll=0.1))
        assert (R @ [0, 0, 1])[1] > 0

    @given(angles, angles, angles)
    def test_orthonormal(self, r, p, y):
        R = rotation_from_euler(Extrinsics(1.0, r, p, y))
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(R) - 1) < 1e-12

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
    def test_euler_round_trip(self, r, p, y):
        R = rotation_from_euler(Extrinsics(1.0, r, p, y))
        np.testing.assert_allclose(euler_from_rotation(R), (r, p, y), atol=1e-9)


class TestRotateRay:
    def test_identity(self):
        r = np.array([0.6, 0.0, 0.8])
        np.testing.assert_array_equal(rotate_ray(np.eye(3), r), r)

    def test_half_turn(self):
        R = rotation_from_euler(Extrinsics(1.0, yaw=math.pi))
        np.testing.assert_allclose(rotate_ray(R, [1.0, 0, 0]), [-1, 0, 0], atol=1e-15)

    def test_matches_matvec(self, rng):
        for _ in range(20):
            ext = Extrinsics(1.0, *rng.uniform(-math.pi, math.pi, 3))
            R = rotation_from_euler(ext)
            r = rng.normal(size=3)
            r /= np.linalg.norm(r)
            expected = [sum(R[i][k] * r[k] for k in range(3)) for i in range(3)]
            out = rotate_ray(R, r)
            np.testing.assert_allclose(out, expected, atol=1e-15)
            assert abs(np.linalg.norm(out) - 1) < 1e-12


class TestProjectUnproject:
    def test_on_axis(self, simple_intr):
        assert project(simple_intr, [0, 0, 5]) == (600.0, 180.0)

    def test_hand_evaluation(self, simple_intr):
        u, v = project(simple_intr, [2.0, 1.5, 10.0])
        assert (u, v) == pytest.approx((740.0, 285.0), abs=1e-12)

    def test_behind_camera(self, simple_intr):
        with pytest.raises(BehindCamera):
            project(simple_intr, [0, 0, 0.0])
        with pytest.raises(BehindCamera):
            project(simple_intr, [[0, 0, 1.0], [1, 1, -2.0]])

    def test_unproject_principal_point(self, simple_intr):
        np.testing.assert_array_equal(unproject(simple_intr, 600, 180, 7.0), [0, 0, 7.0])

    def test_unproject_kitti(self, kitti_intr):
        # frozen from the closed-form inverse of upper-triangular K
        p = unproject(kitti_intr, 800, 300, 12.0)
        np.testing.assert_allclose(p, [3.167247394003113, 2.1145838949233005, 12.0], rtol=1e-14)

    def test_invalid_depth(self, simple_intr):
        with pytest.raises(InvalidDepth):
            unproject(simple_intr, 1, 1, 0.0)
        with pytest.raises(InvalidDepth):
            unproject(simple_intr, 1, 1, -3.0)

    @given(st.floats(0, 1241.99), st.floats(0, 374.99), st.floats(0.01, 1000))
    def test_round_trip(self, u, v, d):
        intr = Intrinsics(721.5377, 721.5377, 609.5593, 172.854, 1242, 375)
        pu, pv = project(intr, unproject(intr, u, v, d))
        assert abs(pu - u) < 1e-9 and abs(pv - v) < 1e-9
        assert unproject(intr, u, v, d)[2] == d


class TestValidation:
    @pytest.mark.parametrize("kw", [
        dict(fx=0.0), dict(fy=-1.0), dict(ox=1200.0), dict(oy=-0.1), dict(width=0),
    ])
    def test_intrinsics(self, kw):
        base = dict(fx=700.0, fy=700.0, ox=600.0, oy=180.0, width=1200, height=360)
        base.update(kw)
        with pytest.raises(InvalidInput):
            Intrinsics(**base)

    def test_extrinsics(self):
        with pytest.raises(InvalidInput):
            Extrinsics(0.0)
        with pytest.raises(InvalidInput):
            Extrinsics(1.0, roll=math.inf)

    @settings(max_examples=30)
    @given(st.integers(0, 1000))
    def test_thread_safety_is_purity(self, seed):
        intr = Intrinsics(700.0, 700.0, 600.0, 180.0, 1200, 360)
        a = pixel_ray(intr, seed % 1200, seed % 360)
        b = pixel_ray(intr, seed % 1200, seed % 360)
        assert a.tobytes() == b.tobytes()
