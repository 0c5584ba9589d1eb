"""Closed-form distributions for K-repetition random access.

From the point of view of one tagged user U that is active together with
N - 1 other users (N - 1 ~ Poisson(lambda)):

* K' -- how many of U's K replicas land on subchannels nobody else uses,
* L' -- how many foreign packets share one given subchannel of U,

for random (DSA) and Steiner-coded patterns, plus the outage probability of
a receiver that combines only the K' clean replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .access_codes import steiner_counts
from .errors import InvalidParameters, PopulationExceeded
from .special import gammainc_lower

CodeKind = Literal["dsa", "steiner"]

TAIL_EPS = 1e-12
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioParams:
    M: int
    K: int
    lam: float
    code_kind: CodeKind = "dsa"
    C: int | None = None
    D: int | None = None

    def __post_init__(self):
        if self.K < 1 or self.M < self.K:
            raise InvalidParameters(f"need 1 <= K <= M, got M={self.M}, K={self.K}")
        if not self.lam >= 0:
            raise InvalidParameters(f"arrival intensity must be >= 0, got {self.lam}")
        if self.code_kind == "steiner":
            C, D = steiner_counts(self.M, self.K)
            if self.C is None:
                object.__setattr__(self, "C", C)
            if self.D is None:
                object.__setattr__(self, "D", D)
            if (self.C, self.D) != (C, D):
                raise InvalidParameters(f"S(2,{self.K},{self.M}) has C={C}, D={D}, got C={self.C}, D={self.D}")
        elif self.code_kind == "dsa":
            if self.C is not None or self.D is not None:
                raise InvalidParameters("C and D only apply to steiner codes")
        else:
            raise InvalidParameters(f"unknown code kind {self.code_kind!r}")

    @classmethod
    def dsa(cls, M, K, lam=0.0):
        return cls(M, K, lam, "dsa")

    @classmethod
    def steiner(cls, M, K, lam=0.0):
        return cls(M, K, lam, "steiner")

    def with_lam(self, lam) -> "ScenarioParams":
        return ScenarioParams(self.M, self.K, lam, self.code_kind, self.C, self.D)

    @property
    def max_users(self) -> int | None:
        return self.C if self.code_kind == "steiner" else None


@dataclass
class DiversityDistribution:
    """P(K' = k) for k = 0..K."""

    probabilities: np.ndarray
    discarded_tail: float = 0.0

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)

    def __getitem__(self, k):
        return self.probabilities[k]

    @property
    def K(self) -> int:
        return len(self.probabilities) - 1


@dataclass
class InterfererDistribution:
    """P(L' = l) for l = 0..max_interferers."""

    probabilities: np.ndarray
    discarded_tail: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)

    def __getitem__(self, l):
        if l >= len(self.probabilities):
            return 0.0
        return self.probabilities[l]

    @property
    def max_interferers(self) -> int:
        return len(self.probabilities) - 1


def binom(a: int, b: int) -> int:
    """Binomial coefficient with C(a, b) = 0 whenever a < 0, b < 0 or a < b."""
    if a < 0 or b < 0 or a < b:
        return 0
    return math.comb(a, b)


def _clamp(p: float) -> float:
    if p < -CLAMP_TOL or p > 1 + CLAMP_TOL:
        raise ArithmeticError(f"probability {p!r} outside [0, 1] beyond rounding")
    return min(max(p, 0.0), 1.0)


def _check_diversity_args(K, K_prime, N):
    if N < 1:
        raise InvalidParameters(f"need N >= 1, got {N}")
    if not 0 <= K_prime <= K:
        raise InvalidParameters(f"need 0 <= K' <= K, got K'={K_prime}, K={K}")


def p_dsa_diversity_given_n(M: int, K: int, K_prime: int, N: int) -> float:
    """P(K' clean replicas | N active users) for uniform random patterns.

    Inclusion-exclusion over which of U's subchannels stay free: a fixed set of
    j of them is avoided by one interferer with probability C(M-j, K)/C(M, K).
    """
    if K < 1 or M < K:
        raise InvalidParameters(f"need 1 <= K <= M, got M={M}, K={K}")
    _check_diversity_args(K, K_prime, N)
    if N == 1:
        return 1.0 if K_prime == K else 0.0
    k_diff = K - K_prime
    # Exact integer numerator over the common denominator C(M, K)^(N-1).
    acc = sum((-1) ** n * binom(k_diff, n) * binom(M - K_prime - n, K) ** (N - 1) for n in range(k_diff + 1))
    return _clamp(binom(K, k_diff) * acc / binom(M, K) ** (N - 1))


def p_det_diversity_given_n(params: ScenarioParams, K_prime: int, N: int) -> float:
    """P(K' clean replicas | N active users) for a Steiner codebook.

    Each subchannel of U is shared with exactly D other patterns and no pattern
    meets U twice, so j of U's subchannels are avoided iff none of D*j specific
    patterns is active.
    """
    C, D, K = params.C, params.D, params.K
    _check_diversity_args(K, K_prime, N)
    if N > C:
        raise PopulationExceeded(f"N={N} exceeds codebook capacity {C}")
    if N == 1:
        return 1.0 if K_prime == K else 0.0
    k_diff = K - K_prime
    acc = sum((-1) ** n * binom(k_diff, n) * binom((C - 1) - D * (n + K_prime), N - 1) for n in range(k_diff + 1))
    return _clamp(binom(K, k_diff) * acc / binom(C - 1, N - 1))


def poisson_weights(lam: float, tail_eps: float = TAIL_EPS, max_others: int | None = None):
    """Poisson(lam) pmf over the number of *other* active users j = N - 1.

    The sum runs until the remaining tail is below ``tail_eps``.  If
    ``max_others`` caps j (a codebook holds at most C users), the pmf is
    conditioned on j <= max_others.  Returns (weights, discarded_mass), the
    latter being the Poisson mass left out before renormalization.
    """
    if lam < 0:
        raise InvalidParameters(f"intensity must be >= 0, got {lam}")
    if lam == 0:
        return np.array([1.0]), 0.0
    log_lam = math.log(lam)
    weights = []
    j = 0
    while True:
        weights.append(math.exp(-lam + j * log_lam - math.lgamma(j + 1)))
        tail = gammainc_lower(j + 1, lam)  # P(X > j)
        if max_others is not None and j >= max_others:
            w = np.array(weights)
            return w / math.fsum(weights), tail
        if j >= lam and tail < tail_eps:
            return np.array(weights), tail
        j += 1


def marginalize_poisson(
    conditional: Callable[[int], float],
    lam: float,
    tail_eps: float = TAIL_EPS,
    max_users: int | None = None,
) -> float:
    """Sum conditional(N) * P(N - 1 others) over N >= 1."""
    max_others = None if max_users is None else max_users - 1
    w, _ = poisson_weights(lam, tail_eps, max_others)
    return math.fsum(conditional(j + 1) * wj for j, wj in enumerate(w))


def _conditional_diversity(params: ScenarioParams):
    if params.code_kind == "steiner":
        return lambda kp, n: p_det_diversity_given_n(params, kp, n)
    return lambda kp, n: p_dsa_diversity_given_n(params.M, params.K, kp, n)


def diversity_distribution(params: ScenarioParams, tail_eps: float = TAIL_EPS) -> DiversityDistribution:
    max_others = None if params.max_users is None else params.max_users - 1
    w, discarded = poisson_weights(params.lam, tail_eps, max_others)
    cond = _conditional_diversity(params)
    probs = [
        _clamp(math.fsum(cond(kp, j + 1) * wj for j, wj in enumerate(w)))
        for kp in range(params.K + 1)
    ]
    return DiversityDistribution(np.array(probs), discarded)


def p_dsa_interferers_given_n(M: int, K: int, L_prime: int, N: int) -> float:
    """P(L' foreign packets in one given subchannel of U | N active users).

    Each interferer independently occupies that subchannel with probability
    C(M-1, K-1)/C(M, K) = K/M.
    """
    if K < 1 or M < K:
        raise InvalidParameters(f"need 1 <= K <= M, got M={M}, K={K}")
    if N < 1 or not 0 <= L_prime <= N - 1:
        raise InvalidParameters(f"need 0 <= L' <= N-1, got L'={L_prime}, N={N}")
    hit, miss, total = binom(M - 1, K - 1), binom(M - 1, K), binom(M, K)
    return binom(N - 1, L_prime) * hit**L_prime * miss ** (N - 1 - L_prime) / total ** (N - 1)


def p_det_interferers_given_n(params: ScenarioParams, L_prime: int, N: int) -> float:
    """Hypergeometric: L' of the N-1 other active patterns are among the D
    that share the given subchannel with U."""
    C, D = params.C, params.D
    if N < 1:
        raise InvalidParameters(f"need N >= 1, got {N}")
    if N > C:
        raise PopulationExceeded(f"N={N} exceeds codebook capacity {C}")
    if L_prime < 0:
        raise InvalidParameters(f"need L' >= 0, got {L_prime}")
    return binom(D, L_prime) * binom(C - 1 - D, N - 1 - L_prime) / binom(C - 1, N - 1)


def interferer_distribution(params: ScenarioParams, tail_eps: float = TAIL_EPS) -> InterfererDistribution:
    if params.code_kind == "steiner":
        w, discarded = poisson_weights(params.lam, tail_eps, params.C - 1)
        l_max = min(params.D, len(w) - 1)
        probs = [
            math.fsum(p_det_interferers_given_n(params, l, j + 1) * wj for j, wj in enumerate(w))
            for l in range(l_max + 1)
        ]
    else:
        w, discarded = poisson_weights(params.lam, tail_eps)
        l_max = len(w) - 1
        probs = [
            math.fsum(
                p_dsa_interferers_given_n(params.M, params.K, l, j + 1) * wj
                for j, wj in enumerate(w)
                if j >= l
            )
            for l in range(l_max + 1)
        ]
    return InterfererDistribution(np.array([_clamp(p) for p in probs]), discarded)


def gamma_mixture_outage(weights, theta: float, gamma_bar: float) -> float:
    """P(SNR < theta) when SNR ~ Gamma(K', gamma_bar) with K' ~ ``weights``.

    The K' = 0 component has SNR identically 0 and is always in outage.
    """
    if not theta > 0 or not gamma_bar > 0:
        raise InvalidParameters("theta and gamma_bar must be positive")
    weights = np.asarray(weights, dtype=float)
    x = theta / gamma_bar
    terms = [weights[0]] + [weights[k] * gammainc_lower(k, x) for k in range(1, len(weights))]
    return _clamp(math.fsum(terms))


def collision_outage(params: ScenarioParams, theta: float, gamma_bar: float, tail_eps: float = TAIL_EPS) -> float:
    """Outage of the receiver that discards every collided replica."""
    dist = diversity_distribution(params, tail_eps)
    return gamma_mixture_outage(dist.probabilities, theta, gamma_bar)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))
