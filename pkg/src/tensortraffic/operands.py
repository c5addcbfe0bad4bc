"""Tensor operands and state descriptions on tensor matrix spaces.

An operand is an element of the K-fold tensor power of N x N matrices,
stored either factored (a weighted sum of elementary tensor products, which
covers the plain single-product case) or dense. Dense storage is guarded
since it scales as N^(2K).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .partitions import SetPartition

DENSE_GUARD_BITS = 16  # K * log2(N) <= 16 for dense storage


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


class TensorOperand:
    """Weighted sum of factored tensors, or a dense matrix on (C^N)^{tensor K}."""

    __slots__ = ("n", "legs", "terms", "dense")

    def __init__(self, n, legs, terms=None, dense=None):
        if n < 1 or legs < 0:
            raise InvalidArgumentError("need N >= 1 and legs >= 0")
        self.n = int(n)
        self.legs = int(legs)
        self.terms = None
        self.dense = None
        if (terms is None) == (dense is None):
            raise InvalidArgumentError("exactly one of terms/dense required")
        if terms is not None:
            frozen = []
            for weight, factors in terms:
                factors = tuple(_freeze(f) for f in factors)
                if len(factors) != legs:
                    raise InvalidArgumentError(
                        f"term has {len(factors)} factors, expected {legs}")
                for f in factors:
                    if f.shape != (n, n):
                        raise InvalidArgumentError(
                            f"factor shape {f.shape} != ({n},{n})")
                frozen.append((complex(weight), factors))
            self.terms = tuple(frozen)
        else:
            if legs * math.log2(n) > DENSE_GUARD_BITS and n > 1:
                raise InvalidArgumentError(
                    f"dense storage guard: K*log2(N) = {legs * math.log2(n):.1f} > "
                    f"{DENSE_GUARD_BITS}")
            dense = _freeze(dense)
            if dense.shape != (n ** legs, n ** legs):
                raise InvalidArgumentError(
                    f"dense shape {dense.shape} != ({n ** legs},{n ** legs})")
            self.dense = dense

    @classmethod
    def factored(cls, factors, weight=1.0) -> "TensorOperand":
        factors = [np.asarray(f) for f in factors]
        if not factors:
            raise InvalidArgumentError("need at least one factor")
        n = factors[0].shape[0]
        return cls(n, len(factors), terms=[(weight, factors)])

    @classmethod
    def sum_of_factored(cls, n, legs, terms) -> "TensorOperand":
        return cls(n, legs, terms=terms)

    @classmethod
    def scalar(cls, n, weight=1.0) -> "TensorOperand":
        """Zero-leg operand (a bare weight); pairs with edgeless graphs."""
        return cls(n, 0, terms=[(weight, ())])

    @classmethod
    def from_dense(cls, dense, legs, n) -> "TensorOperand":
        return cls(n, legs, dense=dense)

    @classmethod
    def identity(cls, n, legs) -> "TensorOperand":
        return cls.factored([np.eye(n)] * legs)

    @property
    def is_factored(self) -> bool:
        return self.terms is not None

    def to_dense(self) -> np.ndarray:
        """Materialize as an N^K x N^K matrix (guarded)."""
        if self.dense is not None:
            return self.dense
        if self.legs * math.log2(self.n) > DENSE_GUARD_BITS and self.n > 1:
            raise InvalidArgumentError("operand too large to densify")
        total = np.zeros((self.n ** self.legs, self.n ** self.legs),
                         dtype=np.complex128)
        for weight, factors in self.terms:
            acc = np.eye(1, dtype=np.complex128)
            for f in factors:
                acc = np.kron(acc, f)
            total += weight * acc
        return total

    def adjoint(self) -> "TensorOperand":
        """Legwise conjugate transpose (the *-operation of the tensor algebra)."""
        if self.dense is not None:
            return TensorOperand(self.n, self.legs, dense=self.dense.conj().T)
        return TensorOperand(self.n, self.legs, terms=[
            (np.conj(w), [f.conj().T for f in fs]) for w, fs in self.terms])

    def conjugated_by(self, u: np.ndarray) -> "TensorOperand":
        """Apply U^{x K} . U*^{x K} legwise (factored operands only)."""
        if self.terms is None:
            raise InvalidArgumentError("conjugation implemented for factored form")
        uh = u.conj().T
        return TensorOperand(self.n, self.legs, terms=[
            (w, [u @ f @ uh for f in fs]) for w, fs in self.terms])

    def scaled(self, weight) -> "TensorOperand":
        if self.dense is not None:
            return TensorOperand(self.n, self.legs, dense=weight * self.dense)
        return TensorOperand(self.n, self.legs,
                             terms=[(w * weight, fs) for w, fs in self.terms])

    def __add__(self, other: "TensorOperand") -> "TensorOperand":
        if (self.n, self.legs) != (other.n, other.legs):
            raise InvalidArgumentError("operand shape mismatch")
        if self.terms is None or other.terms is None:
            return TensorOperand(self.n, self.legs,
                                 dense=self.to_dense() + other.to_dense())
        return TensorOperand(self.n, self.legs, terms=self.terms + other.terms)


@dataclass
class StateSpec:
    """Description of a linear functional on the K-fold tensor matrix space.

    Kinds:
      tracial                 product of normalized traces, one per leg
      max_entangled_vector    vector state of the maximally entangled pairing
                              of adjacent legs (1,2), (3,4), ...; K even
      diagonal_uniform        uniform average of the full diagonal entries
      elementary_combination  an explicit combination of the permutation-
                              invariant elementary trace forms, indexed by
                              partitions of [2K]

    Only unitality is verified for elementary combinations; positivity is
    not decidable from the coefficients alone and is the caller's
    responsibility.
    """

    kind: str
    k: int
    n: int
    coeffs: dict = field(default_factory=dict)  # SetPartition -> complex

    KINDS = ("tracial", "max_entangled_vector", "diagonal_uniform",
             "elementary_combination")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidArgumentError(f"unknown state kind {self.kind!r}")
        if self.k < 1 or self.n < 1:
            raise InvalidArgumentError("need K >= 1 and N >= 1")
        if self.kind == "max_entangled_vector" and self.k % 2 != 0:
            raise InvalidArgumentError(
                "the entangled-pair state needs an even number of legs")
        if self.kind == "elementary_combination":
            if not self.coeffs:
                raise InvalidArgumentError("elementary_combination needs coefficients")
            for pi in self.coeffs:
                if not isinstance(pi, SetPartition) or pi.n != 2 * self.k:
                    raise InvalidArgumentError(
                        "coefficients must be indexed by partitions of [2K]")
            # unitality psi(1) = 1 is checked here; see traces.check_unital
            from .traces import state_unitality_defect
            defect = state_unitality_defect(self)
            if defect > 1e-9:
                raise InvalidArgumentError(
                    f"elementary combination is not unital: |psi(1)-1| = {defect:.2e}")
