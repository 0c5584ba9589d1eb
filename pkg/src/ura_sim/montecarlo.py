"""Monte-Carlo outage estimation for a tagged user.

Each trial draws the number of other active users, everybody's repetition
pattern and every packet's fading gain, then evaluates all receivers on that
same realization.  Trials are simulated in fixed-size blocks; block b uses a
Philox generator keyed by (seed, b), so results do not depend on how blocks
are spread over worker processes.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .access_codes import SteinerCode, allocate_indices, build_steiner_code, sample_dsa_subsets
from .analytics import ScenarioParams, poisson_weights
from .channel_mrc import RECEIVERS, collision_sinr, rayleigh_gains, weighted_mrc_sinr, wn_mf_sinr
from .errors import InvalidParameters

log = logging.getLogger(__name__)

BLOCK_SIZE = 1 << 15
WILSON_Z = 1.959963984540054  # two-sided 95%
FLAG_Z = 4.0


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[block, seed & 0xFFFFFFFFFFFFFFFF]))


@lru_cache(maxsize=None)
def _default_code(M: int, K: int) -> SteinerCode:
    return build_steiner_code(M, K)


@dataclass
class TrialBlock:
    """Per-trial arrays for ``size`` trials."""

    n_others: np.ndarray  # (B,)
    interferers: np.ndarray  # (B, K) packets from other users per branch
    desired: np.ndarray  # (B, K) |h_k|^2
    interference: np.ndarray  # (B, K) sum_l |g_lk|^2
    gamma: dict[str, np.ndarray]

    @property
    def collided(self) -> np.ndarray:
        return self.interferers > 0

    @property
    def k_prime(self) -> np.ndarray:
        return np.sum(~self.collided, axis=1)

    def __len__(self):
        return len(self.n_others)


def _draw_others(scenario: ScenarioParams, rng, size):
    if scenario.code_kind == "steiner":
        w, _ = poisson_weights(scenario.lam, max_others=scenario.C - 1)
        if len(w) == 1:
            return np.zeros(size, dtype=np.int64)
        # Inverse-CDF draw from the Poisson conditioned on at most C - 1 others.
        return np.minimum(np.searchsorted(np.cumsum(w), rng.random(size), side="right"), len(w) - 1)
    return rng.poisson(scenario.lam, size)


def simulate_block(
    scenario: ScenarioParams,
    gamma_bar: float,
    rng: np.random.Generator,
    size: int,
    code: SteinerCode | None = None,
    noise_power: float = 1.0,
) -> TrialBlock:
    M, K = scenario.M, scenario.K
    n_others = _draw_others(scenario, rng, size)
    T = int(n_others.sum())
    owner = np.repeat(np.arange(size), n_others)

    if scenario.code_kind == "steiner":
        code = code if code is not None else _default_code(M, K)
        if (code.M, code.K) != (M, K):
            raise InvalidParameters("code does not match scenario")
        if code.C != scenario.C:
            raise InvalidParameters(f"code holds {code.C} patterns, expected {scenario.C}")
        inc = code.incidence()
        blocks = code.as_array()
        perm = allocate_indices(code.C, code.C, rng, size)
        mine = blocks[perm[:, 0]]
        starts = np.cumsum(n_others) - n_others
        rank = np.arange(T) - np.repeat(starts, n_others)
        other_mask = inc[perm[owner, 1 + rank]]
    else:
        mine = sample_dsa_subsets(M, K, rng, size)
        other_subs = sample_dsa_subsets(M, K, rng, T)
        other_mask = np.zeros((T, M), dtype=bool)
        other_mask[np.arange(T)[:, None], other_subs] = True

    hits = other_mask[np.arange(T)[:, None], mine[owner]]  # (T, K)
    mean = gamma_bar * noise_power
    desired = np.abs(rayleigh_gains(rng, (size, K), mean)) ** 2
    foreign = np.abs(rayleigh_gains(rng, (T, K), mean)) ** 2 * hits

    interferers = np.empty((size, K), dtype=np.int64)
    interference = np.empty((size, K))
    for k in range(K):
        interferers[:, k] = np.bincount(owner, weights=hits[:, k], minlength=size).astype(np.int64)
        interference[:, k] = np.bincount(owner, weights=foreign[:, k], minlength=size)

    gamma = {
        "collision_mrc": collision_sinr(desired, interferers > 0, noise_power),
        "weighted_mrc": weighted_mrc_sinr(desired, interference, noise_power),
        "wn_mf": wn_mf_sinr(desired, interference, noise_power),
    }
    return TrialBlock(n_others, interferers, desired, interference, gamma)


@dataclass
class TrialResult:
    n_active: int
    k_prime: int
    interferers: np.ndarray
    gamma: dict[str, float]


def run_trial(scenario: ScenarioParams, gamma_bar: float, rng: np.random.Generator, code=None) -> TrialResult:
    b = simulate_block(scenario, gamma_bar, rng, 1, code)
    return TrialResult(
        int(b.n_others[0]) + 1,
        int(b.k_prime[0]),
        b.interferers[0],
        {r: float(g[0]) for r, g in b.gamma.items()},
    )


# -- configuration and results -------------------------------------------------


@dataclass
class SimConfig:
    scenario: ScenarioParams
    gamma_bar: float
    theta_grid: np.ndarray
    trials: int = 1_000_000
    seed: int = 0
    receivers: tuple[str, ...] = RECEIVERS
    workers: int = 1
    code: SteinerCode | None = None
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=float).reshape(-1)
        if self.trials < 1:
            raise InvalidParameters("trials must be >= 1")
        if not self.gamma_bar > 0:
            raise InvalidParameters("gamma_bar must be positive")
        if len(self.theta_grid) == 0 or np.any(self.theta_grid <= 0):
            raise InvalidParameters("thresholds must be positive")
        if np.any(np.diff(self.theta_grid) <= 0):
            raise InvalidParameters("threshold grid must be strictly increasing")
        unknown = set(self.receivers) - set(RECEIVERS)
        if unknown or not self.receivers:
            raise InvalidParameters(f"unknown receivers {sorted(unknown)}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameters("seed must fit in 64 bits")
        if self.workers < 1:
            raise InvalidParameters("workers must be >= 1")


def wilson_interval(successes, n, z=WILSON_Z):
    """Wilson score interval; returns (center, half_width)."""
    successes = np.asarray(successes, dtype=float)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z / denom * np.sqrt(p * (1 - p) / n + z * z / (4.0 * n * n))
    return center, half


@dataclass
class OutageCurve:
    theta: np.ndarray
    outages: np.ndarray  # trial counts with gamma < theta
    trials: int
    scheme: str
    receiver: str
    seed: int
    discarded_tail: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def p_hat(self) -> np.ndarray:
        return self.outages / self.trials

    @property
    def half_width(self) -> np.ndarray:
        return wilson_interval(self.outages, self.trials)[1]


def _tally_blocks(args):
    scenario, gamma_bar, theta, receivers, code, seed, block_size, trials, block_ids = args
    counts = np.zeros((len(receivers), len(theta)), dtype=np.int64)
    for b in block_ids:
        size = min(block_size, trials - b * block_size)
        blk = simulate_block(scenario, gamma_bar, block_rng(seed, b), size, code)
        for i, r in enumerate(receivers):
            counts[i] += np.sum(blk.gamma[r][:, None] < theta[None, :], axis=0)
    return counts


def _split(items, parts):
    return [items[i::parts] for i in range(parts) if items[i::parts]]


def estimate_outage(config: SimConfig) -> list[OutageCurve]:
    """Fraction of trials with post-combining SINR below each threshold."""
    sc = config.scenario
    code = config.code
    if sc.code_kind == "steiner" and code is None:
        code = _default_code(sc.M, sc.K)
    n_blocks = math.ceil(config.trials / config.block_size)
    blocks = list(range(n_blocks))
    receivers = tuple(config.receivers)
    base = (sc, config.gamma_bar, config.theta_grid, receivers, code, config.seed, config.block_size, config.trials)
    workers = min(config.workers, n_blocks)
    if workers == 1:
        counts = _tally_blocks(base + (blocks,))
    else:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_tally_blocks, [base + (ids,) for ids in _split(blocks, workers)]))
        counts = np.sum(parts, axis=0)
    discarded = poisson_weights(sc.lam, max_others=sc.C - 1)[1] if sc.code_kind == "steiner" else 0.0
    log.info("simulated %d trials (%s, lam=%g) in %d blocks", config.trials, sc.code_kind, sc.lam, n_blocks)
    return [
        OutageCurve(config.theta_grid.copy(), counts[i], config.trials, sc.code_kind, r, config.seed, discarded)
        for i, r in enumerate(receivers)
    ]


def simulate_trials(scenario, gamma_bar, trials, seed, code=None, block_size=BLOCK_SIZE) -> TrialBlock:
    """All per-trial arrays for ``trials`` trials (same blocks as ``estimate_outage``)."""
    parts = []
    for b in range(math.ceil(trials / block_size)):
        size = min(block_size, trials - b * block_size)
        parts.append(simulate_block(scenario, gamma_bar, block_rng(seed, b), size, code))
    return TrialBlock(
        np.concatenate([p.n_others for p in parts]),
        np.concatenate([p.interferers for p in parts]),
        np.concatenate([p.desired for p in parts]),
        np.concatenate([p.interference for p in parts]),
        {r: np.concatenate([p.gamma[r] for p in parts]) for r in RECEIVERS},
    )


def default_workers() -> int:
    return os.cpu_count() or 1


# -- comparison against closed forms -----------------------------------------------


@dataclass
class ConvergenceReport:
    z_scores: np.ndarray
    flagged: list[int]

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores))) if len(self.z_scores) else 0.0

    @property
    def ok(self) -> bool:
        return not self.flagged


def convergence_report(curve: OutageCurve, reference, flag_z: float = FLAG_Z) -> ConvergenceReport:
    """z-scores of the simulated outage against reference probabilities.

    The binomial standard error is taken at the reference value; a reference
    of exactly 0 or 1 gives z = 0 on agreement and infinity otherwise.
    """
    ref = np.asarray(reference, dtype=float)
    p = curve.p_hat
    se = np.sqrt(ref * (1 - ref) / curve.trials)
    diff = p - ref
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf * np.sign(diff)))
    flagged = [int(i) for i in np.flatnonzero(np.abs(z) > flag_z)]
    return ConvergenceReport(z, flagged)
