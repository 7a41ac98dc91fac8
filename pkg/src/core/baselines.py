"""
Simplified state-vector models of two earlier private query schemes and the
cross-protocol comparison table.

QPQ: the user sends |j⟩ and (|j⟩ + |0⟩)/√2 in random order, one per round
trip, through the same oracle as our protocol, reads A_j from the first and
checks the second against (|j⟩|A_j⟩ + |0⟩|A_0⟩)/√2.

Phase-encoded: the user sends (|j⟩ + |0⟩)/√2, the database applies
(-1)^{A_i} phases, the user discriminates (±|j⟩ + |0⟩)/√2.

Query 0 carries the known standard answer A_0 = 0, so j = 0 is never a real query.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.core import adversary
from src.core.montecarlo import run_indexed
from src.core.protocol import (
    DatabaseTable,
    QuerySpec,
    Transcript,
    oracle_retrieve,
    query_qubits,
    run_honest,
)
from src.core.qstate import (
    OTHER,
    StateVector,
    discriminate,
    fidelity,
    measure_computational,
    probabilities,
)
from src.core.interrogation import InitialKind, InterrogationSpec, data_leakage_bits
from src.utils.logger import BaselineException, QLogger

STANDARD_ANSWER = 0


class BaselineKind(enum.Enum):
    QPQ = "qpq"
    PHASE_ENCODED = "phase-encoded"


@dataclass(frozen=True)
class BaselineResult:
    answer: int
    verified: bool
    transcript: Transcript


@dataclass(frozen=True)
class BaselineAttackReport:
    identified_j: bool
    detected: bool
    user_answer: Optional[int] = None


def _check(A: DatabaseTable, j: int, A0: int = STANDARD_ANSWER):
    if A[0] != A0:
        raise BaselineException(f"A_0 must hold the standard answer {A0}, got {A[0]}")
    if not 0 < j < A.N:
        raise BaselineException(f"query index must lie in [1, {A.N}), got {j}")


def _superposed(N: int, j: int) -> StateVector:
    amps = np.zeros(N, dtype=np.complex128)
    amps[[0, j]] = 1.0 / math.sqrt(2)
    return StateVector(amps)


# --- QPQ --------------------------------------------------------------------

def _qpq_expected(A: DatabaseTable, j: int) -> StateVector:
    return oracle_retrieve(_superposed(A.N, j).with_answer_register(0), A)


def qpq_honest(A: DatabaseTable, j: int, rng: np.random.Generator) -> BaselineResult:
    _check(A, j)
    N, n = A.N, query_qubits(A.N)
    plain = StateVector.basis(N, j).with_answer_register(0)
    superposed = _superposed(N, j).with_answer_register(0)
    order = [plain, superposed] if rng.random() < 0.5 else [superposed, plain]

    transcript = Transcript()
    answer, verified = None, None
    for sent in order:
        transcript.send("user->db", n, 1)
        returned = oracle_retrieve(sent, A)
        transcript.send("db->user", n, 1, carries_answer=True)
        if sent is plain:
            idx = measure_computational(returned, rng).index
            if idx // 2 != j:
                raise BaselineException(f"readout landed on query {idx // 2}, expected {j}")
            answer = idx % 2
        else:
            verified = discriminate(returned, [_qpq_expected(A, j)], rng).index == 0
    return BaselineResult(answer, verified, transcript)


def qpq_attack(A: DatabaseTable, j: int, rng: np.random.Generator) -> BaselineAttackReport:
    """The database measures both queries in the computational basis before answering."""
    _check(A, j)
    N = A.N
    seen = {measure_computational(StateVector.basis(N, j), rng).index}
    k = measure_computational(_superposed(N, j), rng).index
    seen.add(k)
    returned = oracle_retrieve(StateVector.basis(N, k).with_answer_register(0), A)
    detected = discriminate(returned, [_qpq_expected(A, j)], rng).index == OTHER
    return BaselineAttackReport(seen - {0} == {j}, detected)


def qpq_detection_probability(A: DatabaseTable, j: int) -> float:
    """Exact detection of the computational-basis attack, from amplitudes."""
    _check(A, j)
    sent = _superposed(A.N, j)
    expected = _qpq_expected(A, j)
    p = 0.0
    for k, w in enumerate(sent.probabilities()):
        if w > 0:
            returned = oracle_retrieve(StateVector.basis(A.N, k).with_answer_register(0), A)
            p += w * (1.0 - fidelity(expected, returned))
    return p


# --- phase-encoded ----------------------------------------------------------

def _phase_oracle(s: StateVector, A: DatabaseTable) -> StateVector:
    signs = 1.0 - 2.0 * np.asarray(A.bits, dtype=float)
    return StateVector(s.amps * signs)


def _phase_basis(N: int, j: int):
    plus = _superposed(N, j)
    minus_amps = plus.amps.copy()
    minus_amps[j] *= -1
    return [plus, StateVector(minus_amps)]


def phase_encoded_honest(A: DatabaseTable, j: int, A0: int = STANDARD_ANSWER,
                         rng: np.random.Generator = None) -> BaselineResult:
    _check(A, j, A0)
    rng = rng if rng is not None else np.random.default_rng()
    n = query_qubits(A.N)
    transcript = Transcript()
    transcript.send("user->db", n)
    returned = _phase_oracle(_superposed(A.N, j), A)
    transcript.send("db->user", n, carries_answer=True)
    outcome = discriminate(returned, _phase_basis(A.N, j), rng)
    if outcome.index == OTHER:
        raise BaselineException("honest phase-encoded run left the discrimination basis")
    return BaselineResult(outcome.index ^ A0, True, transcript)


def phase_encoded_attack(A: DatabaseTable, j: int, rng: np.random.Generator) -> BaselineAttackReport:
    """The database measures the query and sends the outcome state back."""
    _check(A, j)
    k = measure_computational(_superposed(A.N, j), rng).index
    returned = _phase_oracle(StateVector.basis(A.N, k), A)
    outcome = discriminate(returned, _phase_basis(A.N, j), rng)
    detected = outcome.index == OTHER
    return BaselineAttackReport(k == j, detected, None if detected else outcome.index ^ STANDARD_ANSWER)


def phase_encoded_detection_probability(A: DatabaseTable, j: int) -> float:
    _check(A, j)
    basis = _phase_basis(A.N, j)
    p = 0.0
    for k, w in enumerate(_superposed(A.N, j).probabilities()):
        if w > 0:
            _, other = probabilities(_phase_oracle(StateVector.basis(A.N, k), A), basis)
            p += w * other
    return p


# --- comparison table ---------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    protocol: str
    cheat_sensitive: bool
    identified_j_rate: float
    identified_j_analytic: float
    detection_rate: float
    detection_analytic: float
    leakage_bits: float
    data_bits: int
    interrogation_gain: Optional[float]


def baseline_instance(N: int, rng: np.random.Generator):
    bits = rng.integers(0, 2, size=N)
    bits[0] = STANDARD_ANSWER
    return DatabaseTable(tuple(int(b) for b in bits)), int(rng.integers(1, N))


def _qpq_trial(i: int, rng: np.random.Generator, N: int):
    A, j = baseline_instance(N, rng)
    r = qpq_attack(A, j, rng)
    return r.identified_j, r.detected


def _phase_trial(i: int, rng: np.random.Generator, N: int):
    A, j = baseline_instance(N, rng)
    r = phase_encoded_attack(A, j, rng)
    return r.identified_j, r.detected


def _ours_trial(i: int, rng: np.random.Generator, N: int, t: int, policy: str):
    A = DatabaseTable.random(N, rng)
    q = QuerySpec.random(N, rng, t=t)
    r = adversary.full_attack(A, q, policy, rng)
    return r.measured_k == q.j, r.detected


def _rates(results) -> tuple:
    trials = len(results)
    return sum(1 for ident, _ in results if ident) / trials, sum(1 for _, det in results if det) / trials


def comparison_table(N: int, trials: int, seed: int, workers: int = 1) -> List[ComparisonRow]:
    """Rows for QPQ, phase-encoded, ours-basic and ours-randomized at the optimal t."""
    if N < 3:
        raise BaselineException(f"comparison needs N >= 3 (query 0 is reserved), got {N}")
    if trials < 1:
        raise BaselineException(f"trials must be >= 1, got {trials}")

    ref = np.random.default_rng(seed)
    A_ref, j_ref = baseline_instance(N, ref)
    qpq_bits = qpq_honest(A_ref, j_ref, ref).transcript.answer_bits_to_user
    phase_bits = phase_encoded_honest(A_ref, j_ref, rng=ref).transcript.answer_bits_to_user
    ours_bits = run_honest(A_ref, QuerySpec.basic(j_ref, N), ref)[1].answer_bits_to_user

    t_star = adversary.optimal_t_integer(N)
    ours_leak = adversary.query_leakage_bits(N, True)
    scenarios = [
        ("QPQ", _qpq_trial, (N,), 1.0, 0.5, math.log2(N), qpq_bits,
         data_leakage_bits(InterrogationSpec(InitialKind.QPQ_STATE, N, j=1))),
        ("PhaseEncoded", _phase_trial, (N,), 0.5, 0.0, 0.5 * math.log2(N), phase_bits, None),
        ("ours-basic", _ours_trial, (N, N - 1, "uniform"), 0.5, adversary.policy_detection("uniform", N, N - 1),
         ours_leak, ours_bits, data_leakage_bits(InterrogationSpec(InitialKind.PSI_PRIME_0, N, j=0))),
        (f"ours-randomized(t={t_star})", _ours_trial, (N, t_star, "random-alpha"), 0.5,
         adversary.policy_detection("random-alpha", N, t_star), ours_leak, ours_bits,
         data_leakage_bits(InterrogationSpec(InitialKind.PSI_PRIME_0, N, j=0))),
    ]

    rows = []
    for n, (name, fn, args, ident_p, det_p, leak, bits, gain) in enumerate(scenarios):
        QLogger.message("comparison: ", name, " (", trials, " trials)")
        results = run_indexed(fn, trials, seed + n, workers, args=args, label=name)
        ident_rate, det_rate = _rates(results)
        rows.append(ComparisonRow(name, det_p > 0.0, ident_rate, ident_p, det_rate, det_p, leak, bits, gain))
    return rows
