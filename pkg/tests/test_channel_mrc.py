import numpy as np
import pytest
import scipy.stats as stats

from ura_sim.access_codes import AccessPattern
from ura_sim.channel_mrc import (
    ChannelRealization,
    collision_sinr,
    combined_sinr,
    draw_channel,
    rayleigh_gains,
    sinr_collision_model,
    sinr_weighted_mrc,
    sinr_wn_mf,
    weighted_mrc_sinr,
    weighted_mrc_sinr_general,
    wn_mf_sinr,
)
from ura_sim.errors import InvalidParameters


def realization(desired_pow, interferer_pows, n0=1.0):
    h = np.sqrt(np.asarray(desired_pow, float)) * np.exp(1j * 0.3)
    g = [np.sqrt(np.asarray(p, float)) * np.exp(-1j * 1.1) for p in interferer_pows]
    return ChannelRealization(h, g, n0)


def random_powers(rng, n, K):
    desired = rng.exponential(10.0, (n, K))
    count = rng.poisson(0.8, (n, K))
    interference = np.where(count > 0, rng.gamma(np.maximum(count, 1), 10.0), 0.0)
    return desired, interference


def test_no_interferers_matches_snr_sum():
    ch = realization([1.5, 2.0, 0.25], [[], [], []])
    expected = 3.75
    for res in (sinr_weighted_mrc(ch), sinr_wn_mf(ch), sinr_collision_model(ch)):
        assert res.gamma == pytest.approx(expected, rel=1e-12)
    assert sinr_collision_model(ch).branches_used == 3


def test_single_branch_examples():
    ch = realization([2.0], [[3.0]])
    assert sinr_weighted_mrc(ch).gamma == pytest.approx(0.5)
    assert sinr_wn_mf(ch).gamma == pytest.approx(0.5)


def test_heavily_interfered_branch():
    ch = realization([1.0, 1.0], [[], [1e6]])
    mrc = sinr_weighted_mrc(ch).gamma
    wn = sinr_wn_mf(ch).gamma
    assert mrc == pytest.approx(1 + 1 / (1e6 + 1), rel=1e-12)
    assert wn == pytest.approx(4 / (1 + 1e6 + 1), rel=1e-12)
    assert wn < mrc


def test_collision_examples():
    ch = realization([4.0, 9.0], [[], [0.5]])
    res = sinr_collision_model(ch, collided={1})
    assert res.gamma == pytest.approx(4.0) and res.branches_used == 1
    assert sinr_collision_model(ch).gamma == pytest.approx(4.0)
    assert sinr_collision_model(ch, collided={0, 1}).gamma == 0.0
    with pytest.raises(InvalidParameters):
        sinr_collision_model(ch, collided={5})


def test_weighted_forms_agree(rng):
    desired, interference = random_powers(rng, 100_000, 4)
    simple = weighted_mrc_sinr(desired, interference)
    general = weighted_mrc_sinr_general(desired, interference)
    assert np.max(np.abs(general / simple - 1)) < 1e-9
    ch = realization([1.0, 2.0], [[3.0, 1.0], []])
    res = sinr_weighted_mrc(ch)
    assert res.extra["general_form"] == pytest.approx(res.gamma, rel=1e-9)


def test_wn_mf_equals_unit_weight_formula(rng):
    desired, interference = random_powers(rng, 100_000, 4)
    unit = combined_sinr(desired, interference, np.ones_like(desired))
    assert np.max(np.abs(wn_mf_sinr(desired, interference) / unit - 1)) < 1e-12


def test_receiver_ordering(rng):
    desired, interference = random_powers(rng, 100_000, 4)
    mrc = weighted_mrc_sinr(desired, interference)
    wn = wn_mf_sinr(desired, interference)
    coll = collision_sinr(desired, interference > 0)
    assert np.all(mrc >= wn)
    assert np.all(mrc >= coll)
    # equality iff every branch sees the same interference-plus-noise
    equal_ipn = np.all(interference == interference[:, :1], axis=1)
    assert np.all(wn[equal_ipn] == mrc[equal_ipn])
    assert np.all(wn[~equal_ipn] < mrc[~equal_ipn])


def test_all_receivers_identical_without_interference(rng):
    desired = rng.exponential(5.0, (10_000, 4))
    zero = np.zeros_like(desired)
    mrc = weighted_mrc_sinr(desired, zero)
    assert np.max(np.abs(wn_mf_sinr(desired, zero) / mrc - 1)) <= 1e-12
    assert np.max(np.abs(collision_sinr(desired, zero > 0) / mrc - 1)) <= 1e-12


def test_rayleigh_mean_power():
    g = rayleigh_gains(np.random.default_rng(3), 1_000_000, 1000.0)
    assert abs(np.mean(np.abs(g) ** 2) / 1000.0 - 1) < 0.005
    # circular symmetry: real and imaginary parts carry half the power each
    assert np.var(g.real) == pytest.approx(500.0, rel=0.01)
    assert np.var(g.imag) == pytest.approx(500.0, rel=0.01)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_collision_snr_is_gamma_distributed(k):
    rng = np.random.default_rng(100 + k)
    gamma_bar = 1000.0
    desired = np.abs(rayleigh_gains(rng, (100_000, 4), gamma_bar)) ** 2
    collided = np.zeros((100_000, 4), dtype=bool)
    collided[:, k:] = True
    snr = collision_sinr(desired, collided)
    ks = stats.kstest(snr, stats.gamma(k, scale=gamma_bar).cdf)
    n = len(snr)
    assert ks.statistic < 1.628 / np.sqrt(n)  # asymptotic 1% critical value


def test_draw_channel(rng, s2425):
    me = AccessPattern((0, 1, 2, 3), 25, 4)
    ch = draw_channel([me], 0, 1000.0, rng)
    assert all(len(g) == 0 for g in ch.interferer_gains)
    assert ch.subchannels == (0, 1, 2, 3)
    pats = [s2425.patterns[0], s2425.patterns[1]]
    for _ in range(20):
        ch = draw_channel(pats, 0, 1000.0, rng)
        assert sum(1 for g in ch.interferer_gains if len(g)) <= 1
    dup = draw_channel([me, me, AccessPattern((3, 4, 5, 6), 25, 4)], 0, 10.0, rng)
    assert [len(g) for g in dup.interferer_gains] == [1, 1, 1, 2]
    assert dup.collided() == {0, 1, 2, 3}
    with pytest.raises(InvalidParameters):
        draw_channel([me], 1, 10.0, rng)
    with pytest.raises(InvalidParameters):
        draw_channel([me], 0, 0.0, rng)


def test_realization_validation():
    with pytest.raises(InvalidParameters):
        ChannelRealization([1.0, 1.0], [[]])
    with pytest.raises(InvalidParameters):
        ChannelRealization([1.0], [[]], noise_power=0.0)
