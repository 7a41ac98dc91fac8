"""
Dense complex state vectors: construction, overlaps, Born-rule sampling and
discriminating measurements against an orthonormal set.

Composite registers (query ⊗ answer) use index = query_index * 2 + answer_bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from src.utils.logger import QStateException

EPS_NORM = 1e-9
EPS_ORTH = 1e-9

# Outcome index reported when none of the discriminated states is found
OTHER = -1


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable wrapper around a complex128 amplitude array."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if amps.size < 1:
            raise QStateException("state vector needs dim >= 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return int(self.amps.size)

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex], normalize: bool = False) -> "StateVector":
        state = cls(np.asarray(amps, dtype=np.complex128))
        return state.normalized() if normalize else state

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        if not 0 <= index < dim:
            raise QStateException(f"basis index {index} outside [0, {dim})")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def uniform(cls, dim: int) -> "StateVector":
        return cls(np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_normalized(self, eps: float = EPS_NORM) -> bool:
        return abs(self.norm() - 1.0) <= eps

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise QStateException("cannot normalize the zero vector")
        return StateVector(self.amps / n)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def with_answer_register(self, bit: int = 0) -> "StateVector":
        """|ψ⟩ -> |ψ⟩|bit⟩ on the composite query ⊗ answer register."""
        amps = np.zeros((self.dim, 2), dtype=np.complex128)
        amps[:, bit] = self.amps
        return StateVector(amps.reshape(-1))

    def answer_register_weight(self, bit: int = 1) -> float:
        """Total probability of the answer qubit being |bit⟩ (composite states only)."""
        if self.dim % 2:
            raise QStateException(f"dim {self.dim} is not a query ⊗ answer register")
        return float(np.sum(np.abs(self.amps.reshape(-1, 2)[:, bit]) ** 2))

    def query_register(self, bit: int = 0) -> "StateVector":
        """Query-register slice for answer value ``bit`` (no renormalization)."""
        if self.dim % 2:
            raise QStateException(f"dim {self.dim} is not a query ⊗ answer register")
        return StateVector(self.amps.reshape(-1, 2)[:, bit].copy())


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    index: int
    collapsed: StateVector
    probability: float


def _require_normalized(s: StateVector):
    if not s.is_normalized():
        raise QStateException(f"state is not normalized (norm={s.norm():.12g})")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """⟨a|b⟩ with conjugation on a."""
    if a.dim != b.dim:
        raise QStateException(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2


def measure_computational(s: StateVector, rng: np.random.Generator) -> MeasurementOutcome:
    _require_normalized(s)
    probs = s.probabilities()
    probs = probs / probs.sum()  # drift below EPS_NORM
    index = int(rng.choice(s.dim, p=probs))
    return MeasurementOutcome(index, StateVector.basis(s.dim, index), float(probs[index]))


def check_orthonormal(basis: Sequence[StateVector], eps: float = EPS_ORTH):
    if not basis:
        raise QStateException("empty measurement basis")
    dim = basis[0].dim
    if any(v.dim != dim for v in basis):
        raise QStateException("basis vectors have mismatched dimensions")
    mat = np.stack([v.amps for v in basis])
    gram = mat.conj() @ mat.T
    err = np.max(np.abs(gram - np.eye(len(basis))))
    if err > eps:
        raise QStateException(f"basis is not orthonormal (max Gram error {err:.3g})")


def probabilities(s: StateVector, basis: Sequence[StateVector]) -> Tuple[np.ndarray, float]:
    """Exact outcome probabilities: one per basis vector plus the OTHER remainder."""
    check_orthonormal(basis)
    if basis[0].dim != s.dim:
        raise QStateException(f"dimension mismatch: {s.dim} vs {basis[0].dim}")
    _require_normalized(s)
    probs = np.array([fidelity(v, s) for v in basis])
    other = max(0.0, 1.0 - float(probs.sum()))
    return probs, other


def discriminate(s: StateVector, basis: Sequence[StateVector], rng: np.random.Generator) -> MeasurementOutcome:
    probs, other = probabilities(s, basis)
    u = rng.random()
    acc = 0.0
    for k, p in enumerate(probs):
        acc += p
        if u < acc:
            return MeasurementOutcome(k, basis[k], float(p))

    # OTHER: collapse onto the orthogonal complement of span(basis)
    residual = s.amps.copy()
    for v in basis:
        residual = residual - np.vdot(v.amps, s.amps) * v.amps
    if np.linalg.norm(residual) > 0.0:
        collapsed = StateVector(residual).normalized()
    else:
        collapsed = s
    return MeasurementOutcome(OTHER, collapsed, other)
