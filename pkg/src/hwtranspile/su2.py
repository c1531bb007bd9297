"""Small single-qubit helpers shared by the two lowering targets."""

from __future__ import annotations

import cmath
import math

import numpy as np

from .ir import rz_matrix


def to_su2(u: np.ndarray) -> np.ndarray:
    det = np.linalg.det(u)
    return u / cmath.sqrt(det)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def outer_z_phases(u: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> tuple[float, float]:
    """Find ``(before, after)`` with ``Rz(after) @ v @ Rz(before) ~ u``.

    ``u`` and ``v`` must have matching entry magnitudes.  When one of the
    products is unconstrained (diagonal or anti-diagonal matrices) the free
    angle is put entirely into ``after``.
    """
    diag = abs(u[0, 0]) > tol and abs(v[0, 0]) > tol
    off = abs(u[1, 0]) > tol and abs(v[1, 0]) > tol
    s = d = 0.0
    if diag:
        s = cmath.phase(u[1, 1] / v[1, 1]) - cmath.phase(u[0, 0] / v[0, 0])
    if off:
        d = cmath.phase(u[1, 0] / v[1, 0]) - cmath.phase(u[0, 1] / v[0, 1])
    if diag and off:
        before, after = (s - d) / 2, (s + d) / 2
        # s and d are only known mod 2*pi; the half-angles may need a pi shift
        if not _same_up_to_phase(sandwich(before, v, after), u, tol):
            before, after = before + math.pi, after + math.pi
        return before, after
    if diag:
        return 0.0, s
    return 0.0, d


def _same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    ph = a[idx] / b[idx]
    ph /= abs(ph)
    return bool(np.max(np.abs(a - ph * b)) <= max(tol, 1e-7))


def sandwich(before: float, v: np.ndarray, after: float) -> np.ndarray:
    return rz_matrix(after) @ v @ rz_matrix(before)


def rotation_angle_from_x(u: np.ndarray) -> float:
    """Polar angle in [0, pi] of the Bloch rotation, i.e. 2*acos(|u00|) for SU(2)."""
    c = min(1.0, abs(to_su2(u)[0, 0]))
    return 2 * math.acos(c)
