import numpy as np
from django.test import SimpleTestCase

from reconstruction.carving import VoxelGrid
from reconstruction.fusion import (
    NO_HIT,
    ColoredPointCloud,
    DepthImage,
    DepthRenderer,
    Mask,
    MaskParams,
    OpticalFrame,
    depth_validity_mask,
    foreground_mask,
    fuse_frame,
    project_pixels,
    render_depth,
)
from reconstruction.geometry import Pose
from reconstruction.meshing import TriangleMesh, marching_cubes
from reconstruction.simulator import Box, Scene, render_labels, render_optical
from reconstruction.tests.factories import small_camera
from reconstruction.utils.metrics import distance_to_mesh


# Камера з дрібнішими пікселями для перевірок точності глибини
WIDE_CAMERA = small_camera(fx=300.0, fy=300.0, cx=160.0, cy=120.0, width=320, height=240)


def unit_quad(depth=1.0):
    vertices = [[-0.5, -0.5, depth], [0.5, -0.5, depth], [0.5, 0.5, depth], [-0.5, 0.5, depth]]
    return TriangleMesh(vertices, [[0, 1, 2], [0, 2, 3]])


def sphere_mesh(radius=0.2, voxel_size=0.02, center=(0.0, 0.0, 1.0)):
    cells = int(np.ceil(radius / voxel_size)) + 3
    origin = np.asarray(center) - cells * voxel_size
    grid = VoxelGrid(origin, (2 * cells,) * 3, voxel_size)
    centers = origin + (np.indices(grid.dims).transpose(1, 2, 3, 0) + 0.5) * voxel_size
    grid.occupied[...] = np.linalg.norm(centers - center, axis=-1) <= radius
    return marching_cubes(grid.snapshot())


def solid_frame(camera, color, pose=None):
    pixels = np.empty(camera.shape + (3,), dtype=np.uint8)
    pixels[...] = color
    return OpticalFrame(pixels, camera, pose or Pose.identity())


class DepthRenderTests(SimpleTestCase):
    def test_quad_at_one_meter(self):
        camera = small_camera()
        depth = render_depth(unit_quad(), camera, Pose.identity())
        self.assertAlmostEqual(depth.depths[60, 80], 1.0, places=5)
        # Квадрат 1 x 1 м на відстані 1 м займає ~120 x 120 пікселів
        self.assertEqual(depth.depths[60, 5], NO_HIT)

    def test_empty_mesh(self):
        camera = small_camera()
        depth = render_depth(TriangleMesh.empty(), camera, Pose.identity())
        self.assertTrue(np.all(depth.depths == NO_HIT))
        self.assertEqual(depth_validity_mask(depth).count, 0)

    def test_visible_vertices_match_rendered_depth(self):
        camera = WIDE_CAMERA
        mesh = sphere_mesh()
        depth = render_depth(mesh, camera, Pose.identity())
        view = -mesh.vertices / np.linalg.norm(mesh.vertices, axis=1, keepdims=True)
        front = np.einsum("ij,ij->i", mesh.normals, view) > 0.5
        uv = np.rint(camera.project(mesh.vertices[front])).astype(int)
        rendered = depth.depths[uv[:, 1], uv[:, 0]]
        self.assertTrue(np.all(rendered != NO_HIT))
        self.assertLessEqual(np.abs(rendered - mesh.vertices[front][:, 2]).max(), 0.02)

    def test_renderer_is_reusable(self):
        camera = small_camera()
        renderer = DepthRenderer(unit_quad())
        first = renderer.render(camera, Pose.identity())
        second = renderer.render(camera, Pose(translation=(0.0, 0.0, -1.0)))
        self.assertAlmostEqual(second.depths[60, 80], 2.0, places=5)
        self.assertAlmostEqual(first.depths[60, 80], 1.0, places=5)


class MaskTests(SimpleTestCase):
    def test_uniform_background_gives_empty_mask(self):
        frame = solid_frame(small_camera(), (20, 40, 90))
        self.assertEqual(foreground_mask(frame).count, 0)

    def test_box_mask_matches_labels(self):
        camera = small_camera()
        scene = Scene((Box(pose=Pose(translation=(0.0, 0.0, 1.0)), size=(0.3, 0.3, 0.3), color=(200, 40, 40)),))
        frame, _, _ = render_optical(scene, camera, Pose.identity())
        truth = Mask(render_labels(scene, camera, Pose.identity()) == 0)
        self.assertGreaterEqual(foreground_mask(frame).iou(truth), 0.95)

    def test_swapping_colors_complements_mask(self):
        camera = small_camera()
        a, b = np.array([200, 40, 40]), np.array([20, 40, 90])
        region = np.zeros(camera.shape, dtype=bool)
        region[30:70, 50:110] = True
        pixels = np.where(region[..., None], a, b).astype(np.uint8)
        swapped = np.where(region[..., None], b, a).astype(np.uint8)
        params = MaskParams(background_color=tuple(b))
        mask = foreground_mask(OpticalFrame(pixels, camera, Pose.identity()), params)
        complement = foreground_mask(OpticalFrame(swapped, camera, Pose.identity()), params)
        np.testing.assert_array_equal(mask.data, region)
        np.testing.assert_array_equal(complement.data, ~region)

    def test_none_and_external_strategies(self):
        camera = small_camera()
        frame = solid_frame(camera, (0, 0, 0))
        self.assertEqual(foreground_mask(frame, MaskParams(strategy="none")).count, 160 * 120)
        external = Mask(np.eye(120, 160, dtype=bool))
        self.assertIs(foreground_mask(frame, MaskParams(strategy="external"), external), external)
        with self.assertRaises(ValueError):
            foreground_mask(frame, MaskParams(strategy="external"))
        with self.assertRaises(ValueError):
            MaskParams(strategy="magic")

    def test_depth_validity(self):
        camera = small_camera()
        depths = np.full(camera.shape, NO_HIT)
        self.assertEqual(depth_validity_mask(DepthImage(depths, camera)).count, 0)
        depths[:10] = 1.5
        self.assertEqual(depth_validity_mask(DepthImage(depths, camera)).count, 10 * 160)
        self.assertEqual(depth_validity_mask(DepthImage(np.ones(camera.shape), camera)).count, 160 * 120)


class ProjectionTests(SimpleTestCase):
    def test_empty_mask(self):
        camera = small_camera()
        frame = solid_frame(camera, (10, 10, 10))
        cloud = project_pixels(frame, DepthImage(np.ones(camera.shape), camera), Mask(np.zeros(camera.shape)))
        self.assertEqual(len(cloud), 0)

    def test_principal_pixel(self):
        camera = small_camera()
        frame = solid_frame(camera, (1, 2, 3))
        mask = np.zeros(camera.shape, dtype=bool)
        mask[60, 80] = True
        cloud = project_pixels(frame, DepthImage(np.full(camera.shape, 0.75), camera), Mask(mask))
        np.testing.assert_allclose(cloud.points, [[0.0, 0.0, 0.75]])
        np.testing.assert_array_equal(cloud.colors, [[1, 2, 3]])

    def test_reprojection_and_surface_distance(self):
        camera = small_camera()
        mesh = sphere_mesh()
        pose = Pose.from_euler(yaw=0.1, translation=(0.05, -0.02, 0.0))
        frame = solid_frame(camera, (255, 255, 255), pose)
        renderer = DepthRenderer(mesh)
        depth = renderer.render(camera, pose)
        mask = depth_validity_mask(depth)
        cloud = project_pixels(frame, depth, mask)
        self.assertEqual(len(cloud), mask.count)

        local = pose.inverse().transform_points(cloud.points)
        v, u = np.nonzero(mask.data)
        uv = camera.project(local)
        self.assertLessEqual(np.abs(uv - np.stack([u, v], axis=-1)).max(), 0.5)
        distances = distance_to_mesh(cloud.points, mesh)
        self.assertGreaterEqual(np.mean(distances <= 0.02), 0.99)

    def test_mask_intersection_commutes(self):
        camera = small_camera()
        rng = np.random.default_rng(40)
        frame = solid_frame(camera, (9, 9, 9))
        depth = DepthImage(rng.uniform(0.5, 2.0, size=camera.shape), camera)
        a, b = Mask(rng.random(camera.shape) < 0.5), Mask(rng.random(camera.shape) < 0.5)
        np.testing.assert_array_equal(project_pixels(frame, depth, a & b).points, project_pixels(frame, depth, b & a).points)

    def test_fuse_frame_respects_masks(self):
        camera = small_camera()
        scene = Scene((Box(pose=Pose(translation=(0.0, 0.0, 1.0)), size=(0.3, 0.3, 0.3), color=(200, 40, 40)),))
        frame, truth_mask, _ = render_optical(scene, camera, Pose.identity())
        cloud = fuse_frame(frame, DepthRenderer(unit_quad(1.2)), MaskParams())
        self.assertGreater(len(cloud), 0)
        self.assertLessEqual(len(cloud), truth_mask.count)
        np.testing.assert_allclose(cloud.points[:, 2], 1.2, atol=1e-5)


class PointCloudTests(SimpleTestCase):
    def test_concatenate(self):
        a = ColoredPointCloud(np.zeros((2, 3)), np.zeros((2, 3)))
        b = ColoredPointCloud(np.ones((3, 3)), np.ones((3, 3)))
        self.assertEqual(len(ColoredPointCloud.concatenate([a, b])), 5)
        self.assertEqual(len(ColoredPointCloud.concatenate([])), 0)

    def test_rejects_mismatched_colors(self):
        with self.assertRaises(ValueError):
            ColoredPointCloud(np.zeros((2, 3)), np.zeros((3, 3)))
