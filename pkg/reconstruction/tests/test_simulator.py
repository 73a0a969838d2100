import math

import numpy as np
from django.test import SimpleTestCase

from reconstruction.fusion import NO_HIT
from reconstruction.geometry import Pose, SonarIntrinsics, camera_from_sonar_extrinsic, compose
from reconstruction.simulator import (
    BACKGROUND_COLOR,
    Box,
    CylinderShell,
    Plane,
    Scene,
    SonarNoiseModel,
    Sphere,
    TankLayout,
    look_at,
    render_optical,
    render_sonar,
    sphere_trace,
    surface_voxels,
    tank_scene,
)
from reconstruction.tests.factories import small_camera, small_sonar

# Вузька апертура, щоб відлуння від площини займало 1-2 range bins
NARROW = SonarIntrinsics(n_beams=65, n_range_bins=398, hfov=math.radians(130.0), vfov=math.radians(6.0), max_range=2.0)


def facing_plane(distance=1.0):
    """Площина x = distance з нормаллю до сенсора"""
    return Plane(pose=Pose.from_euler(pitch=-math.pi / 2, translation=(distance, 0.0, 0.0)), reflectivity=1.0)


class PrimitiveTests(SimpleTestCase):
    def test_signed_distances(self):
        sphere = Sphere(radius=0.5)
        self.assertAlmostEqual(float(sphere.distance(np.array([2.0, 0.0, 0.0]))), 1.5)
        box = Box(size=(1.0, 2.0, 4.0))
        self.assertAlmostEqual(float(box.distance(np.array([0.0, 0.0, 0.0]))), -0.5)
        self.assertAlmostEqual(float(box.distance(np.array([1.5, 0.0, 0.0]))), 1.0)
        shell = CylinderShell(inner_radius=1.0, thickness=0.1, height=1.0)
        self.assertAlmostEqual(float(shell.distance(np.array([0.5, 0.0, 0.5]))), 0.5)

    def test_plane_faces_sensor(self):
        plane = facing_plane(1.0)
        self.assertAlmostEqual(float(plane.distance(np.zeros(3))), 1.0)

    def test_reflectivity_validation(self):
        with self.assertRaises(ValueError):
            Sphere(reflectivity=1.5)

    def test_sphere_trace(self):
        scene = Scene((Sphere(pose=Pose(translation=(2.0, 0.0, 0.0)), radius=0.5),))
        t_hit, ids = sphere_trace(scene, np.zeros(3), np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), 5.0)
        self.assertAlmostEqual(t_hit[0], 1.5, delta=1e-3)
        self.assertTrue(np.isinf(t_hit[1]))
        self.assertEqual(list(ids), [0, -1])


class SonarRenderTests(SimpleTestCase):
    def test_empty_scene_without_noise(self):
        frame = render_sonar(Scene(()), Pose.identity(), small_sonar())
        self.assertEqual(int(frame.data.sum()), 0)

    def test_plane_at_one_meter(self):
        frame = render_sonar(Scene((facing_plane(1.0),)), Pose.identity(), NARROW, elevation_samples=9)
        expected_bin = int(NARROW.range_bin_of(1.0 + 1e-9))
        for beam in (31, 32, 33):
            column = frame.data[:, beam]
            returns = np.flatnonzero(column)
            self.assertGreater(len(returns), 0)
            self.assertTrue(np.all(np.abs(returns - expected_bin) <= 2), returns)

    def test_ringing_spreads_to_adjacent_bins(self):
        scene = Scene((facing_plane(1.0),))
        clean = render_sonar(scene, Pose.identity(), NARROW, elevation_samples=1)
        rung = render_sonar(scene, Pose.identity(), NARROW, SonarNoiseModel(ring_gain=0.5, ring_bins=2), elevation_samples=1)
        column = clean.data[:, 32]
        peak = int(np.argmax(column))
        self.assertEqual(int(column[peak + 1]), 0)
        self.assertGreater(int(rung.data[peak + 1, 32]), 0)
        self.assertGreater(int(rung.data[peak - 1, 32]), 0)
        self.assertEqual(int(rung.data[peak, 32]), int(column[peak]))

    def test_deterministic(self):
        scene = tank_scene()
        pose = look_at((-0.5, 0.0, 1.0), (0.3, 0.0, 0.1))
        noise = SonarNoiseModel(background_mean=6, background_sigma=3, ring_gain=0.3, speckle_sigma=20, dropout_prob=0.02)
        intr = small_sonar()
        a = render_sonar(scene, pose, intr, noise, 8, rng=np.random.default_rng(5))
        b = render_sonar(scene, pose, intr, noise, 8, rng=np.random.default_rng(5))
        c = render_sonar(scene, pose, intr, noise, 8, rng=np.random.default_rng(6))
        np.testing.assert_array_equal(a.data, b.data)
        self.assertFalse(np.array_equal(a.data, c.data))
        np.testing.assert_array_equal(
            render_sonar(scene, pose, intr, elevation_samples=8).data,
            render_sonar(scene, pose, intr, elevation_samples=8).data,
        )

    def test_more_elevation_samples_never_lose_returns(self):
        scene = tank_scene()
        pose = look_at((-0.5, 0.1, 1.0), (0.4, 0.0, 0.0))
        coarse = render_sonar(scene, pose, small_sonar(), elevation_samples=5)
        fine = render_sonar(scene, pose, small_sonar(), elevation_samples=9)
        self.assertTrue(np.all(fine.data[coarse.data > 0] > 0))
        self.assertGreaterEqual(np.count_nonzero(fine.data), np.count_nonzero(coarse.data))

    def test_sonar_and_optical_agree_on_boresight(self):
        scene = Scene((facing_plane(1.2),))
        sonar_pose = Pose.identity()
        camera_pose = compose(sonar_pose, camera_from_sonar_extrinsic((0.0, 0.0, 0.0), 0.0))
        camera = small_camera()
        _, _, depth = render_optical(scene, camera, camera_pose)
        frame = render_sonar(scene, sonar_pose, NARROW, elevation_samples=9)
        center_beam = NARROW.n_beams // 2
        nearest = int(np.flatnonzero(frame.data[:, center_beam])[0])
        self.assertAlmostEqual(float(NARROW.bin_center_range(nearest)), depth.depths[60, 80], delta=NARROW.range_resolution)

    def test_noise_validation(self):
        with self.assertRaises(ValueError):
            SonarNoiseModel(dropout_prob=2.0)
        with self.assertRaises(ValueError):
            SonarNoiseModel(background_sigma=-1.0)


class OpticalRenderTests(SimpleTestCase):
    def test_empty_scene(self):
        camera = small_camera()
        frame, mask, depth = render_optical(Scene(()), camera, Pose.identity())
        self.assertTrue(np.all(frame.pixels == np.array(BACKGROUND_COLOR, dtype=np.uint8)))
        self.assertEqual(mask.count, 0)
        self.assertTrue(np.all(depth.depths == NO_HIT))

    def test_sphere_silhouette_radius(self):
        camera = small_camera(fx=200.0, fy=200.0)
        radius, distance = 0.2, 1.0
        scene = Scene((Sphere(pose=Pose(translation=(0.0, 0.0, distance)), radius=radius),))
        _, mask, _ = render_optical(scene, camera, Pose.identity())
        expected = camera.fx * radius / math.sqrt(distance ** 2 - radius ** 2)
        self.assertAlmostEqual(math.sqrt(mask.count / math.pi), expected, delta=1.0)

    def test_depth_of_facing_plane(self):
        camera = small_camera()
        plane = Plane(pose=Pose.from_euler(roll=math.pi, translation=(0.0, 0.0, 0.8)))
        _, mask, depth = render_optical(Scene((plane,)), camera, Pose.identity())
        self.assertAlmostEqual(depth.depths[60, 80], 0.8, delta=1e-3)
        self.assertEqual(mask.count, 160 * 120)


class TankTests(SimpleTestCase):
    def test_layout(self):
        scene = tank_scene()
        names = [p.name for p in scene.primitives]
        self.assertEqual(names, ["tank_wall", "floor", "box"])
        layout = TankLayout()
        box = scene.primitives[2]
        np.testing.assert_allclose(box.pose.translation, (0.3, 0.0, layout.box_size / 2))
        self.assertAlmostEqual(float(box.distance(box.pose.translation)), -layout.box_size / 2)

    def test_look_at(self):
        pose = look_at((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
        forward = pose.rotation[:, 0]
        np.testing.assert_allclose(forward, np.array([1.0, 0.0, -1.0]) / math.sqrt(2), atol=1e-12)
        with self.assertRaises(ValueError):
            look_at((0.0, 0.0, 1.0), (0.0, 0.0, 0.0))

    def test_surface_voxels(self):
        scene = Scene((Sphere(radius=0.3),))
        voxels = surface_voxels(scene, (-0.5, -0.5, -0.5), (20, 20, 20), 0.05)
        centers = -0.5 + (voxels + 0.5) * 0.05
        radii = np.linalg.norm(centers, axis=1)
        self.assertGreater(len(voxels), 0)
        self.assertTrue(np.all(np.abs(radii - 0.3) <= 0.05 * math.sqrt(3) / 2 + 1e-12))
