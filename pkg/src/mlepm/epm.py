"""Eigenspace perturbation of Reynolds stresses.

Shape is perturbed by moving the anisotropy eigenvalues toward one of the
three limiting states inside the barycentric triangle, alignment by swapping
the extreme eigenvectors, and size by scaling the kinetic energy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptySpecList, InvalidDelta
from .tensor import (
    EigenDecomp,
    SymTensor3,
    anisotropy,
    barycentric,
    eig_sym3,
    from_barycentric,
    reconstruct,
    tke,
)


class Target(enum.Enum):
    ONE_COMPONENT = "1c"
    TWO_COMPONENT = "2c"
    THREE_COMPONENT = "3c"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown limiting state {text!r}; expected 1c, 2c or 3c") from None


class EigenvectorMode(enum.Enum):
    KEEP = "keep"
    SWAP_EXTREMES = "swap"


CORNER_EIGENVALUES = {
    Target.ONE_COMPONENT: (2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0),
    Target.TWO_COMPONENT: (1.0 / 6.0, 1.0 / 6.0, -1.0 / 3.0),
    Target.THREE_COMPONENT: (0.0, 0.0, 0.0),
}
CORNER_BARYCENTRIC = {
    Target.ONE_COMPONENT: (1.0, 0.0, 0.0),
    Target.TWO_COMPONENT: (0.0, 1.0, 0.0),
    Target.THREE_COMPONENT: (0.0, 0.0, 1.0),
}
ALL_TARGETS = tuple(Target)


@dataclass(frozen=True)
class PerturbationSpec:
    target: Target
    delta_b: float = 1.0
    amplitude_factor: float = 1.0
    eigenvector_mode: EigenvectorMode = EigenvectorMode.KEEP

    def __post_init__(self):
        _check_delta(self.delta_b)
        if not self.amplitude_factor > 0.0:
            raise ValueError(f"amplitude_factor must be positive, got {self.amplitude_factor!r}")


@dataclass(frozen=True)
class Envelope:
    lower: SymTensor3
    upper: SymTensor3
    member_count: int

    def width(self):
        return self.upper.as_array() - self.lower.as_array()

    def contains(self, r: SymTensor3, tol=0.0):
        x = r.as_array()
        return bool(
            np.all(x >= self.lower.as_array() - tol) and np.all(x <= self.upper.as_array() + tol)
        )


def baseline_specs(delta_b=1.0):
    """Uncalibrated EPM: every limiting state at full magnitude, shape only."""
    return [PerturbationSpec(t, delta_b) for t in ALL_TARGETS]


def _check_delta(delta_b):
    if not 0.0 <= delta_b <= 1.0:
        raise InvalidDelta(f"delta_b must lie in [0, 1], got {delta_b!r}")


def perturb_eigenvalues(lam, target: Target, delta_b: float) -> np.ndarray:
    _check_delta(delta_b)
    lam = np.asarray(lam, dtype=float)
    if delta_b == 0.0:
        return lam.copy()
    if delta_b == 1.0:
        return np.array(CORNER_EIGENVALUES[target])
    p = np.array(barycentric(lam))
    corner = np.array(CORNER_BARYCENTRIC[target])
    return from_barycentric(p + delta_b * (corner - p))


def perturb_eigenvectors(v, mode: EigenvectorMode) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if mode is EigenvectorMode.KEEP:
        return v.copy()
    # (v1, v2, v3) -> (v3, v2, -v1) keeps det = +1
    return np.column_stack([v[:, 2], v[:, 1], -v[:, 0]])


def perturb(r, target, delta_b, factor=1.0, mode=EigenvectorMode.KEEP) -> SymTensor3:
    """Perturbed stress without spec validation; ``factor`` may be zero."""
    _check_delta(delta_b)
    if factor < 0.0:
        raise ValueError(f"amplitude factor must be non-negative, got {factor!r}")
    if delta_b == 0.0 and mode is EigenvectorMode.KEEP:
        # unchanged shape and frame: only the energy scales
        anisotropy(r)
        return r if factor == 1.0 else r.scaled(factor)
    d = eig_sym3(anisotropy(r))
    lam = perturb_eigenvalues(d.eigenvalues, target, delta_b)
    vec = perturb_eigenvectors(d.eigenvectors, mode)
    return reconstruct(factor * tke(r), EigenDecomp(lam, vec))


def apply_perturbation(r: SymTensor3, spec: PerturbationSpec) -> SymTensor3:
    return perturb(r, spec.target, spec.delta_b, spec.amplitude_factor, spec.eigenvector_mode)


def _bounds(members):
    stack = np.array([m.as_array() for m in members])
    return Envelope(
        SymTensor3.from_array(stack.min(axis=0)),
        SymTensor3.from_array(stack.max(axis=0)),
        len(members),
    )


def envelope_members(r: SymTensor3, specs) -> list:
    specs = list(specs)
    if not specs:
        raise EmptySpecList("at least one perturbation spec is required")
    return [r] + [apply_perturbation(r, s) for s in specs]


def envelope(r: SymTensor3, specs) -> Envelope:
    """Componentwise bounds over the baseline and its perturbed members."""
    return _bounds(envelope_members(r, specs))


def bounds_of(members) -> Envelope:
    return _bounds(list(members))
