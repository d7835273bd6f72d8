"""Eigenspace perturbation of Reynolds stresses with a learned kinetic-energy correction."""

from .epm import Envelope, EigenvectorMode, PerturbationSpec, Target, apply_perturbation, baseline_specs, envelope
from .tensor import (
    BarycentricPoint,
    EigenDecomp,
    SymTensor3,
    anisotropy,
    barycentric,
    eig_sym3,
    from_barycentric,
    is_realizable,
    reconstruct,
    tke,
)

__version__ = "0.1.0"

__all__ = [
    "BarycentricPoint",
    "EigenDecomp",
    "EigenvectorMode",
    "Envelope",
    "PerturbationSpec",
    "SymTensor3",
    "Target",
    "anisotropy",
    "apply_perturbation",
    "barycentric",
    "baseline_specs",
    "eig_sym3",
    "envelope",
    "from_barycentric",
    "is_realizable",
    "reconstruct",
    "tke",
]
