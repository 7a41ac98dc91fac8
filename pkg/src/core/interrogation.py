"""
Quantum interrogation of the database by a dishonest user.

The user prepares a superposition over N-bit strings, lets the database apply
the phase oracle (-1)^{x·A} once and reads H^{⊗N} of the result in the
computational basis; the outcome y is taken as the guess for A. Bit i of a
basis index is position i of the string, and x_i = 1 << i.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.stats import binom

import config
from src.utils.logger import InterrogationException, QLogger


class InitialKind(enum.Enum):
    PSI_PRIME_0 = "psi-prime-0"
    QPQ_STATE = "qpq-state"
    UNIFORM = "uniform"


class ZerosMethod(enum.Enum):
    BRUTE_FORCE = "brute-force"
    ANALYTIC = "analytic"


@dataclass(frozen=True)
class InterrogationSpec:
    initial: InitialKind
    N: int
    j: int = 0
    A: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.N < 2:
            raise InterrogationException(f"N must be >= 2, got {self.N}")
        if not 0 <= self.j < self.N:
            raise InterrogationException(f"query index {self.j} outside [0, {self.N})")
        if self.A is not None:
            A = tuple(int(b) for b in self.A)
            if len(A) != self.N or any(b not in (0, 1) for b in A):
                raise InterrogationException(f"A must be {self.N} bits")
            object.__setattr__(self, "A", A)

    @property
    def bits(self) -> Tuple[int, ...]:
        return self.A if self.A is not None else (0,) * self.N

    @property
    def mask(self) -> int:
        return sum(1 << i for i, b in enumerate(self.bits) if b)


@dataclass(frozen=True)
class ZerosResult:
    expected_zeros: float
    method: ZerosMethod
    distribution_mass: float = 1.0


def walsh_hadamard(amps) -> np.ndarray:
    """Normalized H^{⊗n} on a length-2^n vector; its own inverse."""
    a = np.array(amps, dtype=np.complex128).reshape(-1)
    n = a.size
    if n < 1 or n & (n - 1):
        raise InterrogationException(f"length {n} is not a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1)
        h *= 2
    return a.reshape(-1) / math.sqrt(n)


def _popcount(idx: np.ndarray, width: int) -> np.ndarray:
    counts = np.zeros_like(idx)
    for i in range(width):
        counts += (idx >> i) & 1
    return counts


def initial_state(spec: InterrogationSpec) -> np.ndarray:
    N = spec.N
    amps = np.zeros(1 << N, dtype=np.complex128)
    if spec.initial is InitialKind.PSI_PRIME_0:
        for i in range(N):
            amps[1 << i] = 1.0 / math.sqrt(2 * (N - 1))
        amps[1 << spec.j] = 1.0 / math.sqrt(2)
    elif spec.initial is InitialKind.QPQ_STATE:
        amps[0] = amps[1 << spec.j] = 1.0 / math.sqrt(2)
    else:
        amps[0] = 1.0 / math.sqrt(2)
        for i in range(N):
            amps[1 << i] = 1.0 / math.sqrt(2 * N)
    return amps


def interrogate_bruteforce(spec: InterrogationSpec, cap: int = None) -> ZerosResult:
    """Σ_y P(y)·matches(y, A) on the full 2^N-dimensional state."""
    cap = config.BRUTE_CAP if cap is None else cap
    if spec.N > cap:
        raise InterrogationException(
            f"N={spec.N} exceeds the brute-force cap {cap} (2^{cap} amplitudes); raise QPQLAB_BRUTE_CAP to allow it")

    idx = np.arange(1 << spec.N, dtype=np.int64)
    parity = _popcount(idx & spec.mask, spec.N) & 1
    oracled = initial_state(spec) * (1 - 2 * parity)
    probs = np.abs(walsh_hadamard(oracled)) ** 2

    matches = spec.N - _popcount(idx ^ spec.mask, spec.N)
    mass = float(probs.sum())
    QLogger.log("interrogation brute force N=", spec.N, " ", spec.initial.value, " mass=", mass)
    return ZerosResult(float(np.dot(probs, matches)), ZerosMethod.BRUTE_FORCE, mass)


def _scaled_coefficients(spec: InterrogationSpec) -> Tuple[np.ndarray, np.ndarray]:
    """√(2^N)·(a_t, b_t) for t = 0..N."""
    N = spec.N
    t = np.arange(N + 1, dtype=float)
    if spec.initial is InitialKind.PSI_PRIME_0:
        r = math.sqrt(N - 1)
        a = 1 / math.sqrt(2) - (N + 1) / math.sqrt(2 * (N - 1)) + math.sqrt(2) * t / r
        b = -1 / math.sqrt(2) - r / math.sqrt(2) + math.sqrt(2) * t / r
        return a, b
    if spec.initial is InitialKind.QPQ_STATE:
        return np.full(N + 1, math.sqrt(2)), np.zeros(N + 1)
    raise InterrogationException(f"no analytic coefficients for {spec.initial.value}")


def _check_analytic(spec: InterrogationSpec):
    if spec.initial is InitialKind.UNIFORM:
        raise InterrogationException("uniform superposition is only available by brute force")
    if any(spec.bits):
        raise InterrogationException("the analytic path assumes A is all zeros")


def interrogation_coefficients(spec: InterrogationSpec) -> Tuple[np.ndarray, np.ndarray]:
    """(a_t, b_t) for t = 0..N: amplitudes of outcomes with t zeros and bit j clear (a) or set (b)."""
    _check_analytic(spec)
    a, b = _scaled_coefficients(spec)
    scale = 2.0 ** (-spec.N / 2)
    return a * scale, b * scale


def expected_zeros_analytic(spec: InterrogationSpec) -> ZerosResult:
    """Σ_t t·C(N-1,t-1)·a_t² + t·C(N-1,t)·b_t², with C(N-1,·)/2^N as binomial weights."""
    _check_analytic(spec)
    N = spec.N
    a, b = _scaled_coefficients(spec)
    t = np.arange(N + 1)
    wa = 0.5 * binom.pmf(t - 1, N - 1, 0.5)
    wb = 0.5 * binom.pmf(t, N - 1, 0.5)
    zeros = math.fsum(t * wa * a ** 2) + math.fsum(t * wb * b ** 2)
    mass = math.fsum(wa * a ** 2) + math.fsum(wb * b ** 2)
    return ZerosResult(zeros, ZerosMethod.ANALYTIC, mass)


@dataclass
class BinomialIdentityReport:
    N: int
    checks: Dict[str, Tuple[int, Fraction]] = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(lhs == rhs for lhs, rhs in self.checks.values())

    def failures(self):
        return [name for name, (lhs, rhs) in self.checks.items() if lhs != rhs]


def verify_binomial_identities(N: int) -> BinomialIdentityReport:
    """Exact integer check of the power sums Σ t^k·C(N-1, t-1) and Σ t^k·C(N-1, t), k = 1..3."""
    if N < 2:
        raise InterrogationException(f"N must be >= 2, got {N}")
    def shifted(k):
        return sum(t ** k * math.comb(N - 1, t - 1) for t in range(1, N + 1))

    def plain(k):
        return sum(t ** k * math.comb(N - 1, t) for t in range(N))

    def p(e):
        return Fraction(2) ** (N - e)

    report = BinomialIdentityReport(N)
    report.checks = {
        "t*C(N-1,t-1)": (shifted(1), (N + 1) * p(2)),
        "t*C(N-1,t)": (plain(1), (N - 1) * p(2)),
        "t^2*C(N-1,t-1)": (shifted(2), N * (N + 3) * p(3)),
        "t^2*C(N-1,t)": (plain(2), N * (N - 1) * p(3)),
        "t^3*C(N-1,t-1)": (shifted(3), (N + 1) * (N * N + 5 * N - 2) * p(4)),
        "t^3*C(N-1,t)": (plain(3), (N - 1) ** 2 * (N + 2) * p(4)),
    }
    return report


def random_guess_baseline(N: int) -> float:
    """Expected correct bits of a uniformly random N-bit guess."""
    return N / 2


def data_leakage_bits(spec: InterrogationSpec) -> float:
    """Expected correct bits beyond random guessing."""
    if spec.initial is InitialKind.UNIFORM:
        result = interrogate_bruteforce(spec)
    else:
        result = expected_zeros_analytic(spec)
    return result.expected_zeros - random_guess_baseline(spec.N)
