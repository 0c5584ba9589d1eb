"""Rayleigh-fading channel draws and post-combining SINR of three receivers.

* collision MRC: drops every replica that overlaps another packet and
  combines the rest (SNR = sum of clean branch powers over N0),
* weighted MRC: keeps all replicas, weighting branch k by 1/(I_k + N0),
* WN-MF: keeps all replicas with unit weights (ignores interference levels).

Only branch powers enter the SINR, so symbols are never drawn.  The array
functions take ``desired`` and ``interference`` power arrays whose last axis
runs over the K branches; they are what the Monte-Carlo engine uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .access_codes import AccessPattern
from .errors import InvalidParameters

Receiver = Literal["collision_mrc", "weighted_mrc", "wn_mf"]
RECEIVERS: tuple[Receiver, ...] = ("collision_mrc", "weighted_mrc", "wn_mf")


def rayleigh_gains(rng: np.random.Generator, shape, mean_power: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian gains with E|g|^2 = mean_power."""
    scale = np.sqrt(mean_power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass
class ChannelRealization:
    desired_gains: np.ndarray
    interferer_gains: list[np.ndarray]
    noise_power: float = 1.0
    subchannels: tuple[int, ...] | None = None

    def __post_init__(self):
        self.desired_gains = np.asarray(self.desired_gains, dtype=complex)
        K = len(self.desired_gains)
        if len(self.interferer_gains) != K:
            raise InvalidParameters("need one interferer list per branch")
        self.interferer_gains = [np.asarray(g, dtype=complex).reshape(-1) for g in self.interferer_gains]
        if not self.noise_power > 0:
            raise InvalidParameters("noise power must be positive")
        if self.subchannels is None:
            self.subchannels = tuple(range(K))
        elif len(self.subchannels) != K:
            raise InvalidParameters("need one subchannel index per branch")

    @property
    def K(self) -> int:
        return len(self.desired_gains)

    @property
    def desired_power(self) -> np.ndarray:
        return np.abs(self.desired_gains) ** 2

    @property
    def interference_power(self) -> np.ndarray:
        return np.array([np.sum(np.abs(g) ** 2) for g in self.interferer_gains])

    def collided(self) -> set[int]:
        """Subchannels of the tagged user hit by at least one other packet."""
        return {s for s, g in zip(self.subchannels, self.interferer_gains) if len(g)}


@dataclass
class SinrResult:
    gamma: float
    branches_used: int
    receiver: Receiver
    extra: dict = field(default_factory=dict)


def draw_channel(
    patterns: Sequence[AccessPattern],
    user_index: int,
    gamma_bar: float,
    rng: np.random.Generator,
    noise_power: float = 1.0,
) -> ChannelRealization:
    """Fade every packet independently, seen from ``patterns[user_index]``.

    All users share the same mean received power gamma_bar * N0, so the mean
    per-packet SNR is gamma_bar.
    """
    if not 0 <= user_index < len(patterns):
        raise InvalidParameters(f"user index {user_index} out of range")
    if not gamma_bar > 0:
        raise InvalidParameters("gamma_bar must be positive")
    me = patterns[user_index]
    mean = gamma_bar * noise_power
    h = rayleigh_gains(rng, me.K, mean)
    others = [p for i, p in enumerate(patterns) if i != user_index]
    interferers = []
    for s in me.subchannels:
        n_hit = sum(1 for p in others if s in p)
        interferers.append(rayleigh_gains(rng, n_hit, mean))
    return ChannelRealization(h, interferers, noise_power, me.subchannels)


# -- array forms ---------------------------------------------------------------


def combined_sinr(desired, interference, weights, noise_power=1.0):
    """Post-combining SINR for real branch weights w:

        (sum_k w_k |h_k|^2)^2 / sum_k w_k^2 |h_k|^2 (I_k + N0)
    """
    desired = np.asarray(desired, dtype=float)
    ipn = np.asarray(interference, dtype=float) + noise_power
    weights = np.asarray(weights, dtype=float)
    num = np.sum(weights * desired, axis=-1) ** 2
    den = np.sum(weights**2 * desired * ipn, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return np.where(den > 0, out, 0.0)


def weighted_mrc_sinr(desired, interference, noise_power=1.0):
    """Closed form with w_k = 1/(I_k + N0): sum_k |h_k|^2 / (I_k + N0)."""
    return np.sum(np.asarray(desired, dtype=float) / (np.asarray(interference, dtype=float) + noise_power), axis=-1)


def weighted_mrc_sinr_general(desired, interference, noise_power=1.0):
    w = 1.0 / (np.asarray(interference, dtype=float) + noise_power)
    return combined_sinr(desired, interference, w, noise_power)


def wn_mf_sinr(desired, interference, noise_power=1.0):
    """Unit-weight combining, (sum |h|^2)^2 / sum |h|^2 (I + N0).

    Evaluated as the weighted-MRC SINR times its Cauchy-Schwarz efficiency
    (<= 1, clipped against rounding) so the two receivers stay exactly
    ordered in floating point when all branches are equally disturbed.
    """
    desired = np.asarray(desired, dtype=float)
    ipn = np.asarray(interference, dtype=float) + noise_power
    mrc = np.sum(desired / ipn, axis=-1)
    num = np.sum(desired, axis=-1) ** 2
    den = np.sum(desired * ipn, axis=-1) * mrc
    with np.errstate(invalid="ignore", divide="ignore"):
        eff = np.minimum(num / den, 1.0)
    return np.where(den > 0, mrc * eff, 0.0)


def collision_sinr(desired, collided, noise_power=1.0):
    """SNR of the clean branches only; zero when every branch collided."""
    desired = np.asarray(desired, dtype=float)
    return np.sum(np.where(collided, 0.0, desired), axis=-1) / noise_power


# -- single-realization API ------------------------------------------------------


def sinr_weighted_mrc(ch: ChannelRealization) -> SinrResult:
    g = weighted_mrc_sinr(ch.desired_power, ch.interference_power, ch.noise_power)
    general = weighted_mrc_sinr_general(ch.desired_power, ch.interference_power, ch.noise_power)
    return SinrResult(float(g), ch.K, "weighted_mrc", {"general_form": float(general)})


def sinr_wn_mf(ch: ChannelRealization) -> SinrResult:
    return SinrResult(float(wn_mf_sinr(ch.desired_power, ch.interference_power, ch.noise_power)), ch.K, "wn_mf")


def sinr_collision_model(ch: ChannelRealization, collided=None) -> SinrResult:
    """``collided`` holds subchannel indices of the tagged user; by default
    every subchannel with at least one interferer."""
    collided = ch.collided() if collided is None else set(collided)
    if not collided <= set(ch.subchannels):
        raise InvalidParameters(f"collided {sorted(collided)} not within {ch.subchannels}")
    mask = np.array([s in collided for s in ch.subchannels])
    g = collision_sinr(ch.desired_power, mask, ch.noise_power)
    return SinrResult(float(g), ch.K - int(mask.sum()), "collision_mrc")
