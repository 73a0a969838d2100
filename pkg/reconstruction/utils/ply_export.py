"""
Експорт та імпорт PLY (Open3D): хмари точок з кольорами, сітки трикутників, центри зайнятих вокселів
"""
import logging
from pathlib import Path

import numpy as np
import open3d as o3d

from reconstruction.exceptions import InputError
from reconstruction.meshing import TriangleMesh

logger = logging.getLogger(__name__)


def _prepare(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_point_cloud(path, points, colors=None, ascii=False):
    """Хмара точок у PLY; кольори RGB 8 біт на канал"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        logger.warning(f"Хмара точок порожня - файл {path} не записано")
        return None
    path = _prepare(path)
    cloud = o3d.geometry.PointCloud()
    cloud.points = o3d.utility.Vector3dVector(points)
    if colors is not None and len(colors):
        cloud.colors = o3d.utility.Vector3dVector(np.asarray(colors, dtype=np.float64).reshape(-1, 3) / 255.0)
    if not o3d.io.write_point_cloud(str(path), cloud, write_ascii=ascii):
        raise OSError(f"Не вдалося записати хмару точок {path}")
    logger.info(f"Записано {len(cloud.points):,} точок у {path}")
    return path


def write_colored_cloud(path, cloud, ascii=False):
    return write_point_cloud(path, cloud.points, cloud.colors, ascii=ascii)


def write_occupied_voxels(path, snapshot, ascii=False):
    """Центри зайнятих вокселів знімка сітки"""
    return write_point_cloud(path, snapshot.occupied_centers(), ascii=ascii)


def write_mesh(path, mesh, ascii=False):
    """Сітка трикутників у PLY (вершини в метрах, обхід проти годинникової стрілки ззовні)"""
    if mesh.is_empty:
        logger.warning(f"Сітка порожня - файл {path} не записано")
        return None
    path = _prepare(path)
    o3d_mesh = o3d.geometry.TriangleMesh()
    o3d_mesh.vertices = o3d.utility.Vector3dVector(mesh.vertices)
    o3d_mesh.triangles = o3d.utility.Vector3iVector(mesh.triangles.astype(np.int32))
    if mesh.normals is not None:
        o3d_mesh.vertex_normals = o3d.utility.Vector3dVector(mesh.normals)
    if not o3d.io.write_triangle_mesh(
        str(path), o3d_mesh, write_ascii=ascii, write_vertex_normals=mesh.normals is not None
    ):
        raise OSError(f"Не вдалося записати сітку {path}")
    logger.info(f"Записано сітку: {len(mesh.vertices):,} вершин, {len(mesh.triangles):,} трикутників у {path}")
    return path


def read_point_cloud(path):
    """Повертає (точки N x 3, кольори N x 3 uint8 або None)"""
    if not Path(path).exists():
        raise InputError(f"Файл хмари точок не знайдено: {path}")
    cloud = o3d.io.read_point_cloud(str(path))
    points = np.asarray(cloud.points)
    colors = np.rint(np.asarray(cloud.colors) * 255.0).astype(np.uint8) if cloud.has_colors() else None
    return points, colors


def read_mesh(path):
    if not Path(path).exists():
        raise InputError(f"Файл сітки не знайдено: {path}")
    o3d_mesh = o3d.io.read_triangle_mesh(str(path))
    normals = np.asarray(o3d_mesh.vertex_normals) if o3d_mesh.has_vertex_normals() else None
    return TriangleMesh(np.asarray(o3d_mesh.vertices), np.asarray(o3d_mesh.triangles), normals)
