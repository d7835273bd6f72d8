"""Symmetric 3x3 tensor algebra for Reynolds stresses.

Stresses are specific (per unit density). The anisotropy of a stress ``R``
with kinetic energy ``k`` is ``b = R / (2k) - I/3`` and the stress is
recovered as ``R = 2k (V diag(lam) V^T + I/3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateTke,
    InvalidBarycentric,
    NoConvergence,
    NonRealizableEigenvalues,
)

K_FLOOR = 1e-12
TOL_PSD = 1e-10

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 50
DEGENERATE_GAP = 1e-12

_COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")
_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class SymTensor3:
    """Symmetric 3x3 tensor stored as its six independent components."""

    xx: float = 0.0
    yy: float = 0.0
    zz: float = 0.0
    xy: float = 0.0
    xz: float = 0.0
    yz: float = 0.0

    def __post_init__(self):
        for name in _COMPONENTS:
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def diag(cls, a, b, c):
        return cls(float(a), float(b), float(c))

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        # average the off-diagonal pairs so slightly asymmetric round-off is absorbed
        return cls(
            float(m[0, 0]),
            float(m[1, 1]),
            float(m[2, 2]),
            float(0.5 * (m[0, 1] + m[1, 0])),
            float(0.5 * (m[0, 2] + m[2, 0])),
            float(0.5 * (m[1, 2] + m[2, 1])),
        )

    @classmethod
    def from_array(cls, values):
        values = [float(v) for v in values]
        if len(values) != 6:
            raise ValueError("expected 6 components (xx, yy, zz, xy, xz, yz)")
        return cls(*values)

    def matrix(self):
        return np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )

    def as_array(self):
        """Components in (xx, yy, zz, xy, xz, yz) order."""
        return np.array([self.xx, self.yy, self.zz, self.xy, self.xz, self.yz])

    def as_dict(self):
        return {name: getattr(self, name) for name in _COMPONENTS}

    def trace(self):
        return self.xx + self.yy + self.zz

    def scaled(self, factor):
        f = float(factor)
        return SymTensor3(*(f * v for v in self.as_array()))

    def max_abs_diff(self, other):
        return float(np.max(np.abs(self.as_array() - other.as_array())))


# Anisotropy tensors are plain symmetric tensors with zero trace.
AnisotropyTensor = SymTensor3


@dataclass(frozen=True)
class EigenDecomp:
    """Descending eigenvalues and a right-handed orthonormal frame (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(3)
        vec = np.array(self.eigenvectors, dtype=float).reshape(3, 3)
        lam.setflags(write=False)
        vec.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    def matrix(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


class BarycentricPoint(NamedTuple):
    """Weights of the one-, two- and three-component limiting states."""

    c1: float
    c2: float
    c3: float


def tke(r: SymTensor3) -> float:
    return 0.5 * (r.xx + r.yy + r.zz)


def anisotropy(r: SymTensor3) -> SymTensor3:
    k = tke(r)
    if not k > K_FLOOR:
        raise DegenerateTke(f"turbulent kinetic energy {k!r} is below the floor {K_FLOOR}")
    inv = 1.0 / (2.0 * k)
    third = 1.0 / 3.0
    return SymTensor3(
        r.xx * inv - third,
        r.yy * inv - third,
        r.zz * inv - third,
        r.xy * inv,
        r.xz * inv,
        r.yz * inv,
    )


def _jacobi(a):
    """Cyclic Jacobi sweeps on a symmetric 3x3 array. Returns (diag, V)."""
    a = a.copy()
    v = np.eye(3)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(2.0 * (a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2))
        if off < JACOBI_TOL:
            return np.diag(a).copy(), v
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            diff = a[q, q] - a[p, p]
            if abs(apq) < 1e-150 * abs(diff):
                t = apq / diff  # small-angle limit; theta**2 would overflow
            else:
                theta = diff / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a[p, q] = a[q, p] = 0.0
            v = v @ rot
    raise NoConvergence(f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def _canonical_sign(col):
    i = int(np.argmax(np.abs(col)))
    return -col if col[i] < 0.0 else col


def eig_sym3(a: SymTensor3) -> EigenDecomp:
    """Eigendecomposition of a symmetric 3x3 tensor by cyclic Jacobi rotations.

    Eigenvalues come back in descending order. Each eigenvector is signed so
    its largest-magnitude component is positive; eigenvalues closer than
    ``DEGENERATE_GAP`` are ordered by descending lexicographic comparison of
    their vectors, and the last column is flipped if needed to make the frame
    right-handed.
    """
    m = a.matrix()
    if not np.all(np.isfinite(m)):
        raise NoConvergence("eigensolver input contains non-finite components")
    lam, v = _jacobi(m)
    cols = [_canonical_sign(v[:, i]) for i in range(3)]

    # descending eigenvalues; runs of near-equal values are reordered by
    # their vectors so the frame does not depend on Jacobi round-off
    order = sorted(range(3), key=lambda i: -lam[i])
    clusters = [[order[0]]]
    for i in order[1:]:
        if lam[clusters[-1][-1]] - lam[i] < DEGENERATE_GAP:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    order = [i for c in clusters for i in sorted(c, key=lambda i: tuple(cols[i]), reverse=True)]
    vecs = np.column_stack([cols[i] for i in order])
    if np.linalg.det(vecs) < 0.0:
        vecs[:, 2] = -vecs[:, 2]
    return EigenDecomp(np.sort(lam)[::-1], vecs)


def reconstruct(k: float, d: EigenDecomp, tol: float = TOL_PSD) -> SymTensor3:
    """Stress with kinetic energy ``k`` and anisotropy eigenstructure ``d``."""
    if k < 0.0:
        raise ValueError(f"kinetic energy must be non-negative, got {k!r}")
    lam = d.eigenvalues
    if np.any(lam < -1.0 / 3.0 - tol) or np.any(lam > 2.0 / 3.0 + tol):
        raise NonRealizableEigenvalues(f"anisotropy eigenvalues {lam.tolist()} are not realizable")
    m = 2.0 * k * (d.matrix() + np.eye(3) / 3.0)
    return SymTensor3.from_matrix(m)


def barycentric(lam) -> BarycentricPoint:
    l1, l2, l3 = (float(x) for x in lam)
    return BarycentricPoint(l1 - l2, 2.0 * (l2 - l3), 3.0 * l3 + 1.0)


def from_barycentric(p, tol: float = 1e-9) -> np.ndarray:
    c1, c2, c3 = (float(x) for x in p)
    if min(c1, c2, c3) < -tol or abs(c1 + c2 + c3 - 1.0) > tol:
        raise InvalidBarycentric(f"invalid barycentric weights ({c1}, {c2}, {c3})")
    l3 = (c3 - 1.0) / 3.0
    l2 = l3 + 0.5 * c2
    l1 = l2 + c1
    return np.array([l1, l2, l3])


def min_eigenvalue(r: SymTensor3) -> float:
    return float(eig_sym3(r).eigenvalues[2])


def is_realizable(r: SymTensor3, tol: float = TOL_PSD) -> bool:
    return min_eigenvalue(r) >= -tol
