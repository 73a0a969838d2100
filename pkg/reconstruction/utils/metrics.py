"""
Метрики якості реконструкції: відстань Хаусдорфа між наборами вокселів,
відстань точок до сітки, розміри об'єктів.
"""
import numpy as np
import open3d as o3d
from scipy.spatial import cKDTree


def directed_distances(source, target):
    """Відстань від кожної точки source до найближчої точки target"""
    source = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if len(source) == 0:
        return np.zeros(0)
    if len(target) == 0:
        return np.full(len(source), np.inf)
    distances, _ = cKDTree(target).query(source)
    return distances


def hausdorff_distance(a, b):
    """Симетрична відстань Хаусдорфа; для індексів вокселів - у вокселях"""
    if len(a) == 0 and len(b) == 0:
        return 0.0
    forward = directed_distances(a, b)
    backward = directed_distances(b, a)
    return float(max(forward.max(initial=0.0), backward.max(initial=0.0)))


def distance_to_mesh(points, mesh):
    """Беззнакова відстань від точок до поверхні сітки (Open3D)"""
    points = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    if mesh.is_empty:
        return np.full(len(points), np.inf)
    scene = o3d.t.geometry.RaycastingScene()
    scene.add_triangles(
        o3d.core.Tensor(mesh.vertices.astype(np.float32)),
        o3d.core.Tensor(mesh.triangles.astype(np.uint32)),
    )
    return scene.compute_distance(o3d.core.Tensor(points)).numpy().astype(np.float64)


def axis_extent(points):
    """Розміри осьового габариту набору точок"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        return np.zeros(3)
    return points.max(axis=0) - points.min(axis=0)


def fit_circle(xy):
    """Алгебраїчна апроксимація кола (Kåsa): повертає (центр, радіус)"""
    xy = np.asarray(xy, dtype=np.float64)
    design = np.column_stack([xy[:, 0], xy[:, 1], np.ones(len(xy))])
    rhs = (xy ** 2).sum(axis=1)
    (a, b, c), *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = np.array([a / 2.0, b / 2.0])
    return center, float(np.sqrt(c + center @ center))
