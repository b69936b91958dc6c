"""Exact oscillator Lax matrices, transfer matrices and Q-operators for rational spin chains of types A/B/C/D."""

from .coeff import FloatScalar, LaurentScalar, Poly, TauPoint, mpq
from .lax import LaxMatrix, RMatrix, construct_lax
from .oscillator import NormalPoly, OscSpace, TwistWeights, fock_trace
from .report import Report
from .transfer import (
    TensorOperator,
    TwistSpec,
    bgg_identity_check,
    build_finite_module,
    factorisation_identity_check,
    q_operator,
    transfer_finite,
    transfer_plus,
)
from .weyl import AlgebraType, Case, enumerate_cosets, weyl_character

__all__ = [
    "AlgebraType",
    "Case",
    "FloatScalar",
    "LaurentScalar",
    "LaxMatrix",
    "NormalPoly",
    "OscSpace",
    "Poly",
    "RMatrix",
    "Report",
    "TauPoint",
    "TensorOperator",
    "TwistSpec",
    "TwistWeights",
    "bgg_identity_check",
    "build_finite_module",
    "construct_lax",
    "enumerate_cosets",
    "factorisation_identity_check",
    "fock_trace",
    "mpq",
    "q_operator",
    "transfer_finite",
    "transfer_plus",
    "weyl_character",
]
