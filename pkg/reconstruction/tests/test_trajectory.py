import math

import numpy as np
from django.test import SimpleTestCase

from reconstruction.services.dataset_service import default_sweep
from reconstruction.tests.factories import FULL_SONAR
from reconstruction.trajectory import SweepParams, sensor_pose, sweep_angles, sweep_trajectory, frustum_coverage


class SweepTests(SimpleTestCase):
    def test_counting_example(self):
        params = SweepParams(
            yaw_min=0.0, yaw_max=math.radians(20.0), pitch_levels=(math.radians(30.0),),
            angular_step=math.radians(20.0),
        )
        trajectory = sweep_trajectory(params)
        self.assertEqual(len(trajectory), 4)
        angles = sweep_angles(params)
        self.assertEqual([round(math.degrees(a[0])) for a in angles], [0, 20, 20, 0])
        self.assertEqual([round(math.degrees(a[2])) for a in angles], [45, 45, -45, -45])

    def test_default_sweep_structure(self):
        params = default_sweep()
        self.assertEqual(params.yaw_count, 48)
        angles = sweep_angles(params)
        self.assertEqual(len(angles), 6 * 48)
        passes = [angles[k * 48:(k + 1) * 48] for k in range(6)]
        for k, sweep in enumerate(passes):
            yaws = [a[0] for a in sweep]
            direction = np.sign(np.diff(yaws))
            self.assertTrue(np.all(direction == (1 if k % 2 == 0 else -1)))
            self.assertEqual(len({a[1] for a in sweep}), 1)
            self.assertEqual(len({a[2] for a in sweep}), 1)
        self.assertEqual([round(math.degrees(p[0][1])) for p in passes], [45, 45, 30, 30, 15, 15])
        self.assertEqual([round(math.degrees(p[0][2])) for p in passes], [45, -45, 45, -45, 45, -45])

    def test_motion_gate_and_timestamps(self):
        params = default_sweep()
        trajectory = sweep_trajectory(params)
        timestamps = [t for t, _ in trajectory]
        np.testing.assert_allclose(np.diff(timestamps), 1.0 / params.rate)
        for (_, previous), (_, current) in zip(trajectory, trajectory[1:]):
            self.assertGreater(current.distance_to(previous), params.gate)

    def test_pose_inside_tank(self):
        for _, pose in sweep_trajectory(default_sweep()):
            self.assertLess(np.hypot(*pose.translation[:2]), 1.05)
            self.assertGreater(pose.translation[2], 0.0)

    def test_pitch_tilts_boresight_down(self):
        pose = sensor_pose(SweepParams(), 0.0, math.radians(30.0), 0.0)
        boresight = pose.rotation[:, 0]
        self.assertAlmostEqual(boresight[2], -math.sin(math.radians(30.0)))

    def test_stationary_sensor_is_rejected(self):
        params = SweepParams(arm_radius=0.0, mount_offset=(0.0, 0.0, 0.0))
        with self.assertRaises(ValueError):
            sweep_trajectory(params)

    def test_invalid_parameters(self):
        with self.assertRaises(ValueError):
            SweepParams(yaw_min=1.0, yaw_max=0.0)
        with self.assertRaises(ValueError):
            SweepParams(pitch_levels=())

    def test_coverage_of_target_region(self):
        params = default_sweep()
        trajectory = sweep_trajectory(params)
        rng = np.random.default_rng(50)
        radius = params.arm_radius
        local = rng.uniform(
            [radius + 0.8, -0.3, -0.7],
            [radius + 1.4, 0.3, -0.3],
            size=(2000, 3),
        )
        points = params.base.transform_points(local)
        self.assertGreaterEqual(frustum_coverage(trajectory, FULL_SONAR, points), 0.95)
