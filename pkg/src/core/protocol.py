"""
Honest two-round private query protocol, basic and randomized forms.

The user superposes the true query j with rhetoric queries T, the database
answers through the data-retrieving oracle |i⟩|b⟩ -> |i⟩|b ⊕ A_i⟩, the user
kicks the answer back into a phase with a controlled-⊕ on an ancilla in
(|0⟩ - |1⟩)/√2, the database uncomputes the answer qubit and the user
discriminates the two expected final states.

The ancilla factors out unchanged, so controlled_xor is a phase flip on
|j⟩|1⟩; it is still counted where qubits are transmitted.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from src.core.qstate import (
    OTHER,
    MeasurementOutcome,
    StateVector,
    discriminate,
    inner_product,
    probabilities,
)
from src.utils.logger import ProtocolException

# Residual weight tolerated on |1⟩ of the answer qubit after uncomputation
ANSWER_RESIDUAL_TOL = 1e-12


def query_qubits(N: int) -> int:
    """⌈log₂N⌉, the width of the query register."""
    return max(1, (N - 1).bit_length())


@dataclass(frozen=True)
class DatabaseTable:
    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) < 2:
            raise ProtocolException(f"database needs N >= 2 items, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ProtocolException("database items must be bits")
        object.__setattr__(self, "bits", bits)

    @property
    def N(self) -> int:
        return len(self.bits)

    def __getitem__(self, i: int) -> int:
        return self.bits[i]

    @classmethod
    def random(cls, N: int, rng: np.random.Generator) -> "DatabaseTable":
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=N)))

    @classmethod
    def zeros(cls, N: int) -> "DatabaseTable":
        return cls((0,) * N)


class QueryMode(enum.Enum):
    BASIC = "basic"
    RANDOMIZED = "randomized"


@dataclass(frozen=True)
class QuerySpec:
    j: int
    T: FrozenSet[int]
    mode: QueryMode = QueryMode.RANDOMIZED

    def __post_init__(self):
        object.__setattr__(self, "T", frozenset(int(i) for i in self.T))

    @property
    def t(self) -> int:
        return len(self.T)

    @classmethod
    def basic(cls, j: int, N: int) -> "QuerySpec":
        return cls(j, frozenset(i for i in range(N) if i != j), QueryMode.BASIC)

    @classmethod
    def randomized(cls, j: int, T: Iterable[int]) -> "QuerySpec":
        return cls(j, frozenset(T), QueryMode.RANDOMIZED)

    @classmethod
    def random(cls, N: int, rng: np.random.Generator, t: Optional[int] = None, j: Optional[int] = None) -> "QuerySpec":
        """Uniform j; T uniform over subsets of size t, or over all nonempty subsets when t is None."""
        if j is None:
            j = int(rng.integers(N))
        others = np.array([i for i in range(N) if i != j])
        if t is None:
            while True:
                T = others[rng.random(N - 1) < 0.5]
                if T.size:
                    break
        else:
            if not 1 <= t <= N - 1:
                raise ProtocolException(f"t must lie in [1, {N - 1}], got {t}")
            T = rng.choice(others, size=t, replace=False)
        mode = QueryMode.BASIC if t == N - 1 else QueryMode.RANDOMIZED
        return cls(j, frozenset(int(i) for i in T), mode)

    def validate(self, N: int):
        if N < 2:
            raise ProtocolException(f"N must be >= 2, got {N}")
        if not 0 <= self.j < N:
            raise ProtocolException(f"query index {self.j} outside [0, {N})")
        if not self.T:
            raise ProtocolException("rhetoric set T is empty")
        if self.j in self.T:
            raise ProtocolException(f"true query {self.j} is listed as rhetoric")
        if any(not 0 <= i < N for i in self.T):
            raise ProtocolException(f"rhetoric set has indices outside [0, {N})")
        if self.mode is QueryMode.BASIC and self.t != N - 1:
            raise ProtocolException(f"basic mode needs |T| = N-1 = {N - 1}, got {self.t}")


@dataclass(frozen=True)
class Transmission:
    direction: str  # "user->db" or "db->user"
    query_qubits: int
    answer_qubits: int = 0
    carries_answer: bool = False


@dataclass
class Transcript:
    transmissions: List[Transmission] = field(default_factory=list)
    states: Dict[str, StateVector] = field(default_factory=dict)

    def send(self, direction: str, query_qubits: int, answer_qubits: int = 0,
             carries_answer: bool = False, label: str = None, state: StateVector = None):
        self.transmissions.append(Transmission(direction, query_qubits, answer_qubits, carries_answer))
        if label is not None and state is not None:
            self.states[label] = state

    @property
    def query_transmissions(self) -> int:
        return sum(1 for t in self.transmissions if t.query_qubits)

    @property
    def answer_transmissions(self) -> int:
        return sum(1 for t in self.transmissions if t.answer_qubits)

    @property
    def total_qubits(self) -> int:
        return sum(t.query_qubits + t.answer_qubits for t in self.transmissions)

    @property
    def round_trips(self) -> int:
        return sum(1 for t in self.transmissions if t.direction == "db->user")

    @property
    def answer_bits_to_user(self) -> int:
        """Upper bound on database bits a user can extract deterministically (one per answer-carrying transmission)."""
        return sum(1 for t in self.transmissions if t.direction == "db->user" and t.carries_answer)


@dataclass(frozen=True)
class AnswerResult:
    answer: Optional[int]
    detected_cheat: bool


def interpret(outcome: MeasurementOutcome) -> AnswerResult:
    """Outcome 0 (|ψ₃⁺⟩) means A_j = 0, outcome 1 (|ψ₃⁻⟩) means A_j = 1, OTHER flags cheating."""
    if outcome.index == OTHER:
        return AnswerResult(None, True)
    return AnswerResult(outcome.index, False)


def prepare_initial(q: QuerySpec, N: int) -> StateVector:
    q.validate(N)
    amps = np.zeros(N, dtype=np.complex128)
    amps[sorted(q.T)] = 1.0 / math.sqrt(2 * q.t)
    amps[q.j] = 1.0 / math.sqrt(2)
    return StateVector(amps)


def _query_size(s: StateVector) -> int:
    if s.dim % 2 or s.dim < 4:
        raise ProtocolException(f"state of dim {s.dim} is not on a query ⊗ answer register")
    return s.dim // 2


def oracle_retrieve(s: StateVector, A: DatabaseTable) -> StateVector:
    if s.dim != 2 * A.N:
        raise ProtocolException(f"oracle expects dim 2N = {2 * A.N}, got {s.dim}")
    amps = s.amps.reshape(A.N, 2).copy()
    flip = np.asarray(A.bits, dtype=bool)
    amps[flip] = amps[flip][:, ::-1]
    return StateVector(amps.reshape(-1))


def controlled_xor(s: StateVector, j: int) -> StateVector:
    N = _query_size(s)
    if not 0 <= j < N:
        raise ProtocolException(f"control index {j} outside [0, {N})")
    amps = s.amps.copy()
    amps[2 * j + 1] *= -1
    return StateVector(amps)


def expected_finals(q: QuerySpec, N: int) -> Tuple[StateVector, StateVector]:
    q.validate(N)
    rhetoric = np.zeros(N, dtype=np.complex128)
    rhetoric[sorted(q.T)] = 1.0 / math.sqrt(q.t)
    marker = np.zeros(N, dtype=np.complex128)
    marker[q.j] = 1.0
    plus = (rhetoric + marker) / math.sqrt(2)
    minus = (rhetoric - marker) / math.sqrt(2)
    return StateVector(plus), StateVector(minus)


def initial_state_overlap(j1: int, j2: int, N: int) -> complex:
    return inner_product(prepare_initial(QuerySpec.basic(j1, N), N),
                         prepare_initial(QuerySpec.basic(j2, N), N))


def basic_overlap_closed_form(N: int) -> float:
    return 1.0 / math.sqrt(N - 1) + (N - 2) / (2.0 * (N - 1))


class User:
    """User side: prepares the query, applies controlled-⊕, decodes the final state."""

    def __init__(self, q: QuerySpec, N: int):
        q.validate(N)
        self.q = q
        self.N = N
        self.finals = expected_finals(q, N)

    def initial_state(self) -> StateVector:
        return prepare_initial(self.q, self.N)

    def apply_controlled_xor(self, s: StateVector) -> StateVector:
        return controlled_xor(s, self.q.j)

    def decode_probabilities(self, final: StateVector) -> Tuple[float, float, float]:
        """(p⁺, p⁻, p_cheat) for a returned query-register state."""
        if final.dim != self.N:
            raise ProtocolException(f"final state must live on the query register (dim {self.N}), got {final.dim}")
        probs, other = probabilities(final, self.finals)
        return float(probs[0]), float(probs[1]), other

    def decode(self, final: StateVector, rng: np.random.Generator) -> AnswerResult:
        if final.dim != self.N:
            raise ProtocolException(f"final state must live on the query register (dim {self.N}), got {final.dim}")
        return interpret(discriminate(final, self.finals, rng))


class Database:
    """Honest database side: answers through the oracle, then uncomputes and keeps the answer qubit."""

    def __init__(self, A: DatabaseTable):
        self.A = A

    def retrieve(self, query: StateVector) -> StateVector:
        return oracle_retrieve(query.with_answer_register(0), self.A)

    def release(self, s: StateVector) -> StateVector:
        uncomputed = oracle_retrieve(s, self.A)
        residual = uncomputed.answer_register_weight(1)
        if residual > ANSWER_RESIDUAL_TOL:
            raise ProtocolException(f"answer qubit not returned to |0⟩ (weight {residual:.3g} on |1⟩)")
        return uncomputed.query_register(0)


def run_honest(A: DatabaseTable, q: QuerySpec, rng: np.random.Generator) -> Tuple[AnswerResult, Transcript]:
    N = A.N
    user, db = User(q, N), Database(A)
    n = query_qubits(N)
    transcript = Transcript()

    psi0 = user.initial_state()
    transcript.send("user->db", n, label="psi0", state=psi0)

    psi1 = db.retrieve(psi0)
    transcript.send("db->user", n, 1, carries_answer=True, label="Psi1", state=psi1)

    psi2 = user.apply_controlled_xor(psi1)
    transcript.send("user->db", n, 1, label="Psi2", state=psi2)

    psi3 = db.release(psi2)
    transcript.send("db->user", n, label="psi3", state=psi3)

    return user.decode(psi3, rng), transcript
