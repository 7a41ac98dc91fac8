"""
Dishonest-database strategies and the closed-form detection / leakage quantities.

Attack model: the database measures the received query state in the
computational basis (outcome k), abuses the first round trip to send the
confirmation probe (|k⟩|1⟩ + |l⟩|0⟩)/√2, learns from the user's phase flip
whether k = j, and finally returns a concealing fake state in place of ψ₃.
"""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.stats import binom

from src.core.montecarlo import three_sigma, within_sigma
from src.core.protocol import DatabaseTable, QuerySpec, User, prepare_initial
from src.core.qstate import EPS_NORM, OTHER, StateVector, discriminate, measure_computational
from src.utils.information import mutual_information
from src.utils.logger import AdversaryException


# --- fake states ------------------------------------------------------------

class FakeState(abc.ABC):
    """A state the database returns instead of the honest one."""

    @abc.abstractmethod
    def state(self, N: int) -> StateVector:
        ...

    def validate(self, N: int):
        pass


@dataclass(frozen=True)
class Uniform(FakeState):
    def state(self, N: int) -> StateVector:
        return StateVector.uniform(N)


@dataclass(frozen=True)
class OutcomeState(FakeState):
    k: int

    def validate(self, N: int):
        if not 0 <= self.k < N:
            raise AdversaryException(f"outcome {self.k} outside [0, {N})")

    def state(self, N: int) -> StateVector:
        self.validate(N)
        return StateVector.basis(N, self.k)


@dataclass(frozen=True)
class ConfirmationProbe(FakeState):
    """(|k⟩|1⟩ + |l⟩|0⟩)/√2 on the query ⊗ answer register."""
    k: int
    l: int

    def validate(self, N: int):
        if self.k == self.l:
            raise AdversaryException("confirmation probe needs k != l")
        if not (0 <= self.k < N and 0 <= self.l < N):
            raise AdversaryException(f"probe indices ({self.k}, {self.l}) outside [0, {N})")

    def state(self, N: int) -> StateVector:
        self.validate(N)
        amps = np.zeros(2 * N, dtype=np.complex128)
        amps[2 * self.k + 1] = amps[2 * self.l] = 1.0 / math.sqrt(2)
        return StateVector(amps)

    def flipped(self, N: int) -> StateVector:
        """The probe after the user's phase flip when k = j."""
        amps = self.state(N).amps.copy()
        amps[2 * self.k + 1] *= -1
        return StateVector(amps)


@dataclass(frozen=True)
class ParamFake(FakeState):
    """a|k⟩ + b Σ_{k'≠k} |k'⟩ with real a, b and a² + (N-1)b² = 1."""
    a: float
    b: float
    k: int

    @classmethod
    def from_alpha(cls, alpha: float, N: int, k: int) -> "ParamFake":
        return cls(math.cos(alpha), math.sin(alpha) / math.sqrt(N - 1), k)

    def validate(self, N: int):
        if not 0 <= self.k < N:
            raise AdversaryException(f"index {self.k} outside [0, {N})")
        norm = self.a ** 2 + (N - 1) * self.b ** 2
        if abs(norm - 1.0) > EPS_NORM:
            raise AdversaryException(f"a^2 + (N-1) b^2 = {norm:.12g}, expected 1")

    def state(self, N: int) -> StateVector:
        self.validate(N)
        amps = np.full(N, self.b, dtype=np.complex128)
        amps[self.k] = self.a
        return StateVector(amps)


@dataclass(frozen=True)
class GeneralFake(FakeState):
    alpha: Tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(complex(x) for x in self.alpha))

    def validate(self, N: int):
        if len(self.alpha) != N:
            raise AdversaryException(f"fake has {len(self.alpha)} amplitudes, expected {N}")
        norm = math.fsum(abs(x) ** 2 for x in self.alpha)
        if abs(norm - 1.0) > EPS_NORM:
            raise AdversaryException(f"fake state is not normalized (sum |alpha|^2 = {norm:.12g})")

    def state(self, N: int) -> StateVector:
        self.validate(N)
        return StateVector(np.asarray(self.alpha, dtype=np.complex128))


def random_general_fake(N: int, rng: np.random.Generator, support: Sequence[int] = None) -> GeneralFake:
    """Haar-like random fake, optionally restricted to ``support``."""
    amps = rng.normal(size=N) + 1j * rng.normal(size=N)
    if support is not None:
        mask = np.zeros(N, dtype=bool)
        mask[list(support)] = True
        amps[~mask] = 0.0
    amps = amps / np.linalg.norm(amps)
    return GeneralFake(tuple(amps))


# --- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class AttackReport:
    measured_k: int
    confirmed_j: Optional[bool]
    detected: bool
    user_answer: Optional[int]


@dataclass(frozen=True)
class DetectionStats:
    trials: int
    detections: int
    p_hat: float
    analytic_p: float
    three_sigma: float
    z: float = 3.0

    @classmethod
    def from_counts(cls, detections: int, trials: int, analytic_p: float, z: float = 3.0) -> "DetectionStats":
        return cls(trials, detections, detections / trials if trials else 0.0,
                   analytic_p, three_sigma(analytic_p, trials), z)

    @property
    def deviation(self) -> float:
        return abs(self.p_hat - self.analytic_p)

    @property
    def bound(self) -> float:
        """z-sigma half width; three_sigma when z = 3."""
        return self.z / 3.0 * self.three_sigma

    @property
    def within_bound(self) -> bool:
        return within_sigma(self.p_hat, self.analytic_p, self.trials, self.z)


# --- exact detection ----------------------------------------------------------

def detection_probability(fake: FakeState, q: QuerySpec, N: int) -> float:
    """1 - |⟨φ|ψ₃'⁺⟩|² - |⟨φ|ψ₃'⁻⟩|², from amplitudes."""
    fake.validate(N)
    phi = fake.state(N)
    if phi.dim != N:
        raise AdversaryException(f"{type(fake).__name__} does not live on the query register")
    _, _, p = User(q, N).decode_probabilities(phi)
    return min(1.0, max(0.0, p))


def detection_prob_param(t: int, a: float, b: float, N: int = None) -> float:
    """p_{t,a,b} = 1 - 2ab + b² - b²t - (a² + b² - 2ab)/t."""
    if t < 1:
        raise AdversaryException(f"t must be >= 1, got {t}")
    if N is not None:
        ParamFake(a, b, 0).validate(N)
    return 1.0 - 2 * a * b + b * b - b * b * t - (a * a + b * b - 2 * a * b) / t


def p_t_alpha(N: int, t: int, alpha: float) -> float:
    """p_{t,a,b} under a = cos α, b = sin α / √(N-1)."""
    return detection_prob_param(t, math.cos(alpha), math.sin(alpha) / math.sqrt(N - 1))


def detection_from_alpha(alpha: Sequence[complex], q: QuerySpec) -> float:
    """1 - |Σ_{j'∈T} α_{j'}|²/t - |α_j|²."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    s = alpha[sorted(q.T)].sum()
    return float(1.0 - abs(s) ** 2 / q.t - abs(alpha[q.j]) ** 2)


def cauchy_schwarz_bound(alpha: Sequence[complex], q: QuerySpec) -> float:
    """1 - Σ_{j'∈T}|α_{j'}|² - |α_j|², a lower bound of detection_from_alpha."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    return float(1.0 - np.sum(np.abs(alpha[sorted(q.T)]) ** 2) - abs(alpha[q.j]) ** 2)


def has_concealing_structure(alpha: Sequence[complex], q: QuerySpec, tol: float = 1e-9) -> bool:
    """Zero-detection structure: supported on {j} ∪ T with equal amplitudes on T."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    outside = np.ones(alpha.size, dtype=bool)
    outside[[q.j, *q.T]] = False
    on_t = alpha[sorted(q.T)]
    return bool(np.all(np.abs(alpha[outside]) <= tol) and np.max(np.abs(on_t - on_t.mean())) <= tol)


# --- simulated attacks --------------------------------------------------------

def _confirmation_round(q: QuerySpec, N: int, rng: np.random.Generator) -> Tuple[User, int, bool]:
    user = User(q, N)
    k = measure_computational(user.initial_state(), rng).index
    l = int(rng.integers(N - 1))
    if l >= k:
        l += 1
    probe = ConfirmationProbe(k, l)
    returned = user.apply_controlled_xor(probe.state(N))
    outcome = discriminate(returned, [probe.flipped(N), probe.state(N)], rng)
    return user, k, outcome.index == 0


def confirmation_attack(A: DatabaseTable, q: QuerySpec, rng: np.random.Generator) -> AttackReport:
    """Measure, probe, and learn whether k = j; the session is not concealed."""
    _, k, confirmed = _confirmation_round(q, A.N, rng)
    return AttackReport(k, confirmed, False, None)


Policy = Callable[[int, bool, int, np.random.Generator], FakeState]


def uniform_policy(k: int, confirmed: bool, N: int, rng: np.random.Generator) -> FakeState:
    return Uniform()


def outcome_policy(k: int, confirmed: bool, N: int, rng: np.random.Generator) -> FakeState:
    return OutcomeState(k)


def optimal_policy(k: int, confirmed: bool, N: int, rng: np.random.Generator) -> FakeState:
    return OutcomeState(k) if confirmed else optimal_fake(N, k)


def random_alpha_policy(k: int, confirmed: bool, N: int, rng: np.random.Generator) -> FakeState:
    if confirmed:
        return OutcomeState(k)
    return ParamFake.from_alpha(rng.uniform(0.0, math.pi / 2), N, k)


CONCEALMENT_POLICIES: Dict[str, Policy] = {
    "uniform": uniform_policy,
    "outcome": outcome_policy,
    "optimal": optimal_policy,
    "random-alpha": random_alpha_policy,
}


def resolve_policy(policy: Union[str, Policy]) -> Policy:
    if callable(policy):
        return policy
    try:
        return CONCEALMENT_POLICIES[policy]
    except KeyError:
        raise AdversaryException(f"unknown concealment policy {policy!r}; choose from {sorted(CONCEALMENT_POLICIES)}")


def full_attack(A: DatabaseTable, q: QuerySpec, concealment: Union[str, Policy],
                rng: np.random.Generator) -> AttackReport:
    policy = resolve_policy(concealment)
    N = A.N
    user, k, confirmed = _confirmation_round(q, N, rng)
    result = user.decode(policy(k, confirmed, N, rng).state(N), rng)
    return AttackReport(k, confirmed, result.detected_cheat, result.answer)


def policy_detection(name: str, N: int, t: int) -> float:
    """Exact expected detection of a named concealment policy for |T| = t."""
    if name == "uniform":
        return 1.0 - (t + 1) / N
    if name == "outcome":
        return 0.5 * (1.0 - 1.0 / t)
    if name == "optimal":
        fake = optimal_fake(N, 0)
        return 0.5 * detection_prob_param(t, fake.a, fake.b)
    if name == "random-alpha":
        return 0.5 * expected_detection_over_alpha(N, t)
    raise AdversaryException(f"no closed form for policy {name!r}")


# --- optimal concealment ------------------------------------------------------

def optimal_fake(N: int, k: int) -> ParamFake:
    if N < 2:
        raise AdversaryException(f"N must be >= 2, got {N}")
    c = 1.0 / math.sqrt(N + 3)
    return ParamFake(2 * c, c, k)


def subset_size_weights(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """t = 1..N-1 and C(N-1, t)/(2^(N-1) - 1): the size law of a uniform nonempty subset."""
    t = np.arange(1, N)
    w = binom.pmf(t, N - 1, 0.5)
    return t, w / w.sum()


def expected_detection_over_T(N: int, a: float, b: float) -> float:
    ParamFake(a, b, 0).validate(N)
    t, w = subset_size_weights(N)
    return math.fsum(wi * detection_prob_param(int(ti), a, b) for ti, wi in zip(t, w))


def expected_detection_over_T_approx(N: int, a: float, b: float) -> float:
    return 0.5 + 0.5 * (a - 2 * b) ** 2 - b ** 2 - (a - b) ** 2 * 4.0 / N


def detection_argmin_over_a(N: int, step: float = 0.005) -> float:
    """Grid minimizer of expected_detection_over_T over a ∈ [0, 1], b = √((1-a²)/(N-1))."""
    grid = np.arange(0.0, 1.0 + step / 2, step)
    grid = grid[grid <= 1.0]
    values = [expected_detection_over_T(N, float(a), math.sqrt(max(0.0, 1.0 - a * a) / (N - 1))) for a in grid]
    return float(grid[int(np.argmin(values))])


# --- optimal number of rhetoric queries ---------------------------------------

def _check_t(N: int, t: int):
    if N < 2:
        raise AdversaryException(f"N must be >= 2, got {N}")
    if not 1 <= t <= N - 1:
        raise AdversaryException(f"t must lie in [1, {N - 1}], got {t}")


def expected_detection_over_alpha(N: int, t: int) -> float:
    """p̄_t: mean of p_{t,α} for α uniform on [0, π/2], closed form."""
    _check_t(N, t)
    r = math.sqrt(N - 1)
    inner = (2 * N - 1) * math.pi / (4 * (N - 1)) - 1 / r \
        - ((N * math.pi / (4 * (N - 1)) - 1 / r) / t + math.pi * t / (4 * (N - 1)))
    return 2.0 / math.pi * inner


def expected_detection_over_alpha_quad(N: int, t: int) -> float:
    _check_t(N, t)
    value, _ = integrate.quad(lambda alpha: p_t_alpha(N, t, alpha), 0.0, math.pi / 2,
                              epsabs=1e-13, epsrel=1e-13)
    return 2.0 / math.pi * value


def optimal_t(N: int) -> float:
    if N < 2:
        raise AdversaryException(f"N must be >= 2, got {N}")
    return math.sqrt(N - 4.0 / math.pi * math.sqrt(N - 1))


def optimal_t_integer(N: int) -> int:
    """Best integer neighbour of optimal_t, clamped to [1, N-1]."""
    t_star = optimal_t(N)
    candidates = {min(max(c, 1), N - 1) for c in (math.floor(t_star), math.ceil(t_star))}
    return max(sorted(candidates), key=lambda t: expected_detection_over_alpha(N, t))


def p_maxi(N: int) -> float:
    if N < 2:
        raise AdversaryException(f"N must be >= 2, got {N}")
    r = math.sqrt(N - 1)
    return 0.5 - 1.0 / (math.pi * r) - (2 * optimal_t(N) - 1) / (4 * (N - 1))


# --- recovery and leakage -----------------------------------------------------

def recovery_probability(N: int) -> float:
    if N < 2:
        raise AdversaryException(f"N must be >= 2, got {N}")
    return 1 / (2 * (2 ** (N - 1) - 1)) + 1 / ((N - 1) * 2 ** (N - 1))


RECOVERY_ENUMERATION_CAP = 12


def recovery_probability_enumerated(N: int) -> float:
    """Exhaustive (j, T, k) enumeration.

    The database observes k and whether k = j, then guesses uniformly among
    every (j', T') consistent with that observation.
    """
    if not 2 <= N <= RECOVERY_ENUMERATION_CAP:
        raise AdversaryException(f"enumeration supports 2 <= N <= {RECOVERY_ENUMERATION_CAP}, got {N}")
    candidates = []
    for j in range(N):
        others = [i for i in range(N) if i != j]
        for t in range(1, N):
            for T in combinations(others, t):
                q = QuerySpec.randomized(j, T)
                candidates.append((j, prepare_initial(q, N).probabilities()))

    consistent = np.zeros((N, 2), dtype=np.int64)
    for j, probs in candidates:
        for k in np.flatnonzero(probs > 0):
            consistent[k, int(k == j)] += 1

    prior = 1.0 / len(candidates)
    total = []
    for j, probs in candidates:
        for k in np.flatnonzero(probs > 0):
            total.append(prior * probs[k] / consistent[k, int(k == j)])
    return math.fsum(total)


def query_leakage_bits(N: int, with_confirmation: bool) -> float:
    """I(j; observation) for uniform j against the basic-form initial state."""
    if N < 2:
        raise AdversaryException(f"N must be >= 2, got {N}")
    width = 2 * N if with_confirmation else N
    joint = np.zeros((N, width))
    for j in range(N):
        probs = prepare_initial(QuerySpec.basic(j, N), N).probabilities() / N
        for k in range(N):
            col = 2 * k + int(k == j) if with_confirmation else k
            joint[j, col] += probs[k]
    return mutual_information(joint)


def query_leakage_closed_form(N: int, with_confirmation: bool) -> float:
    base = math.log2(N) - 0.5 * math.log2(N - 1)
    return base if with_confirmation else base - 1.0
