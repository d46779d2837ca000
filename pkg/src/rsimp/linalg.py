"""Small dense linear algebra: 3x3 symmetric eigensolver, quadric minimization
and plane geometry."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import NumericError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50
SINGULAR_RCOND = 1e-8

_PAIRS = ((0, 1), (0, 2), (1, 2))


class EigenDecomposition(NamedTuple):
    values: np.ndarray   # (3,), descending
    vectors: np.ndarray  # (3, 3), column i pairs with values[i]


class Plane(NamedTuple):
    """Plane ``normal . x + offset = 0`` with a unit normal."""
    normal: np.ndarray
    offset: float

    @classmethod
    def through(cls, point, normal):
        n = np.asarray(normal, dtype=np.float64)
        n = n / np.linalg.norm(n)
        return cls(n, -float(n @ np.asarray(point, dtype=np.float64)))

    def signed_distance(self, points):
        return np.asarray(points) @ self.normal + self.offset


def sym3(xx, yy, zz, xy, xz, yz) -> np.ndarray:
    """Symmetric 3x3 matrix from its six unique coefficients."""
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]], dtype=np.float64)


def jacobi_eigen(matrix) -> EigenDecomposition:
    """Eigen-decompose a symmetric 3x3 matrix with cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops to
    ``JACOBI_TOL * ||A||`` or after ``JACOBI_MAX_SWEEPS`` sweeps. Eigenvalues
    come back in descending order; each eigenvector has its largest-magnitude
    component made positive so results are reproducible.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    m = 0.5 * (m + m.T)
    a = m.tolist()
    v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    norm = math.sqrt(sum(x * x for row in a for x in row))

    if norm > 0.0:
        for _ in range(JACOBI_MAX_SWEEPS):
            off = math.sqrt(2.0 * (a[0][1] ** 2 + a[0][2] ** 2 + a[1][2] ** 2))
            if off <= JACOBI_TOL * norm:
                break
            for p, q in _PAIRS:
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                r = 3 - p - q
                arp, arq = a[r][p], a[r][q]
                a[p][p] -= t * apq
                a[q][q] += t * apq
                a[p][q] = a[q][p] = 0.0
                a[r][p] = a[p][r] = c * arp - s * arq
                a[r][q] = a[q][r] = s * arp + c * arq
                for k in range(3):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq

    values = np.array([a[0][0], a[1][1], a[2][2]])
    vectors = np.array(v)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for i in range(3):
        col = vectors[:, i]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, i] = -col
    return EigenDecomposition(values, vectors)


def quadric_value(A, B, c, v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(v @ A @ v + 2.0 * (B @ v) + c)


def solve_min_quadric(A, B, fallback) -> tuple[np.ndarray, bool]:
    """Minimize ``v^T A v + 2 B^T v + c``.

    Returns ``(point, used_fallback)``. When the smallest eigenvalue of ``A``
    is below ``SINGULAR_RCOND`` times the largest the minimizer is not unique
    and ``fallback`` is returned instead.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    values, vectors = jacobi_eigen(A)
    if not values[0] > 0.0 or values[2] < SINGULAR_RCOND * values[0]:
        return np.array(fallback, dtype=np.float64), True

    def apply_inverse(x):
        return vectors @ ((vectors.T @ x) / values)

    v = -apply_inverse(B)
    # one step of iterative refinement
    v -= apply_inverse(A @ v + B)
    return v, False


def project_onto_plane(v, plane_normal) -> np.ndarray:
    """Component of ``v`` orthogonal to the unit ``plane_normal``."""
    v = np.asarray(v, dtype=np.float64)
    n = np.asarray(plane_normal, dtype=np.float64)
    return v - (v @ n) * n


def angle_between(u, v) -> float:
    """Angle in degrees between two non-zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise NumericError("angle with a zero vector is undefined")
    cos = float(u @ v) / (nu * nv)
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))
