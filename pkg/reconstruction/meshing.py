"""
Побудова сітки трикутників з карти зайнятості (marching cubes) та Лапласове згладжування.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import open3d as o3d
from scipy import sparse
from skimage import measure

logger = logging.getLogger(__name__)

DEFAULT_ISO = 0.5
DEFAULT_SMOOTHING_ITERATIONS = 3
DEFAULT_SMOOTHING_LAMBDA = 0.5


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Вершини у світовій системі (м), трикутники проти годинникової стрілки при погляді ззовні"""
    vertices: np.ndarray
    triangles: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("Індекси трикутників виходять за межі масиву вершин")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        if self.normals is not None:
            object.__setattr__(self, "normals", np.asarray(self.normals, dtype=np.float64).reshape(-1, 3))

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def is_empty(self):
        return len(self.triangles) == 0

    def edges(self):
        """Унікальні неорієнтовані ребра та кількість трикутників, що їх містять"""
        if self.is_empty:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
        pairs = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0, return_counts=True)

    def euler_characteristic(self):
        edges, _ = self.edges()
        used = np.unique(self.triangles)
        return len(used) - len(edges) + len(self.triangles)

    def is_watertight(self):
        if self.is_empty:
            return False
        _, counts = self.edges()
        return bool(np.all(counts == 2))

    def face_areas(self):
        v = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)

    def signed_volume(self):
        v = self.vertices[self.triangles]
        return float(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0)

    def with_vertices(self, vertices):
        mesh = TriangleMesh(vertices, self.triangles)
        return mesh.with_normals()

    def with_normals(self):
        return TriangleMesh(self.vertices, self.triangles, compute_vertex_normals(self.vertices, self.triangles))


def compute_vertex_normals(vertices, triangles):
    """Нормалі вершин як нормовані суми нормалей суміжних граней (зважені площею)"""
    normals = np.zeros_like(vertices)
    if len(triangles) == 0:
        return normals
    v = vertices[triangles]
    face_normals = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    for corner in range(3):
        np.add.at(normals, triangles[:, corner], face_normals)
    length = np.linalg.norm(normals, axis=1, keepdims=True)
    return np.divide(normals, length, out=np.zeros_like(normals), where=length > 0)


def _clean(vertices, triangles, min_area):
    """Видаляє вироджені трикутники та вершини без трикутників"""
    if len(triangles):
        v = vertices[triangles]
        areas = 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
        distinct = (
            (triangles[:, 0] != triangles[:, 1])
            & (triangles[:, 1] != triangles[:, 2])
            & (triangles[:, 0] != triangles[:, 2])
        )
        triangles = triangles[(areas > min_area) & distinct]
    used, remap = np.unique(triangles, return_inverse=True)
    return vertices[used], remap.reshape(-1, 3)


def marching_cubes(snapshot, iso=DEFAULT_ISO):
    """
    Ізоповерхня бінарного поля зайнятості, дискретизованого в центрах вокселів.
    Поле доповнюється шаром нулів, тому поверхня завжди замкнена.
    """
    occupied = np.asarray(snapshot.occupied, dtype=bool)
    if min(occupied.shape) < 1:
        raise ValueError(f"Вироджена сітка: {occupied.shape}")
    if not occupied.any():
        return TriangleMesh.empty()

    voxel_size = snapshot.voxel_size
    field = np.pad(occupied.astype(np.float32), 1, constant_values=0.0)
    vertices, triangles, _, _ = measure.marching_cubes(
        field,
        level=iso,
        spacing=(voxel_size, voxel_size, voxel_size),
        method="lewiner",
        allow_degenerate=False,
    )
    # Індекс доповненого поля i відповідає центру вокселя i - 1
    vertices = np.asarray(snapshot.origin) + vertices.astype(np.float64) - 0.5 * voxel_size
    vertices, triangles = _clean(vertices, triangles.astype(np.int64), 1e-12 * voxel_size ** 2)

    mesh = TriangleMesh(vertices, triangles)
    if mesh.signed_volume() < 0:
        mesh = TriangleMesh(vertices, triangles[:, ::-1])
    logger.debug(f"Marching cubes: {len(mesh.vertices):,} вершин, {len(mesh.triangles):,} трикутників")
    return mesh.with_normals()


def _adjacency(mesh):
    n = len(mesh.vertices)
    edges, _ = mesh.edges()
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.ones(len(rows), dtype=np.float64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def smooth(mesh, iterations=DEFAULT_SMOOTHING_ITERATIONS, lam=DEFAULT_SMOOTHING_LAMBDA):
    """
    Рівномірне Лапласове згладжування: v <- v + lam * (середнє 1-кільця - v).
    Топологія не змінюється.

    Open3D filter_smooth_simple дає (v + сума сусідів) / (deg + 1), тобто крок
    deg / (deg + 1) до середнього 1-кільця; крок масштабується до lam.
    """
    if iterations < 0:
        raise ValueError(f"Кількість ітерацій не може бути від'ємною: {iterations}")
    if iterations == 0 or mesh.is_empty:
        return mesh
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda має бути в межах (0, 1), отримано {lam}")

    edges, _ = mesh.edges()
    degree = np.bincount(edges.ravel(), minlength=len(mesh.vertices)).astype(np.float64)
    scale = np.zeros_like(degree)
    has_neighbours = degree > 0
    scale[has_neighbours] = lam * (degree[has_neighbours] + 1.0) / degree[has_neighbours]

    o3d_mesh = o3d.geometry.TriangleMesh()
    o3d_mesh.vertices = o3d.utility.Vector3dVector(mesh.vertices)
    o3d_mesh.triangles = o3d.utility.Vector3iVector(mesh.triangles.astype(np.int32))
    vertices = mesh.vertices.copy()
    for _ in range(iterations):
        averaged = np.asarray(o3d_mesh.filter_smooth_simple(number_of_iterations=1).vertices)
        vertices = vertices + scale[:, None] * (averaged - vertices)
        o3d_mesh.vertices = o3d.utility.Vector3dVector(vertices)
    return mesh.with_vertices(vertices)


def umbrella_curvature(mesh):
    """
    Дискретна оцінка середньої кривини у вершинах: довжина вектора рівномірного
    Лапласіана, нормована на середній квадрат довжини ребер 1-кільця.
    """
    adjacency = _adjacency(mesh)
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    valid = degree > 0
    laplacian = np.zeros_like(mesh.vertices)
    laplacian[valid] = (adjacency @ mesh.vertices)[valid] / degree[valid, None] - mesh.vertices[valid]

    edges, _ = mesh.edges()
    squared = np.sum((mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]]) ** 2, axis=1)
    ring = np.zeros(len(mesh.vertices))
    np.add.at(ring, edges[:, 0], squared)
    np.add.at(ring, edges[:, 1], squared)
    ring[valid] /= degree[valid]
    curvature = np.zeros(len(mesh.vertices))
    positive = valid & (ring > 0)
    curvature[positive] = 2.0 * np.linalg.norm(laplacian[positive], axis=1) / ring[positive]
    return curvature[valid]


def build_mesh(snapshot, iso=DEFAULT_ISO, iterations=DEFAULT_SMOOTHING_ITERATIONS, lam=DEFAULT_SMOOTHING_LAMBDA):
    """Marching cubes + згладжування одним викликом"""
    return smooth(marching_cubes(snapshot, iso), iterations, lam)
