from fractions import Fraction

import pytest

from ura_sim import analytics as an
from ura_sim import oracle
from ura_sim.access_codes import build_steiner_code
from ura_sim.errors import InstanceTooLarge

F = Fraction


def test_dsa_diversity_examples():
    assert oracle.enumerate_dsa_diversity(3, 2, 2) == [F(1, 3), F(2, 3), F(0)]
    assert oracle.enumerate_dsa_diversity(2, 1, 2) == [F(1, 2), F(1, 2)]
    assert oracle.enumerate_dsa_diversity(25, 4, 1) == [0, 0, 0, 0, 1]


@pytest.mark.parametrize("M,K,N", [(3, 2, 3), (4, 2, 4), (5, 3, 3), (6, 1, 4), (5, 5, 2)])
def test_grouped_matches_naive(M, K, N):
    assert oracle.enumerate_dsa_diversity(M, K, N) == oracle.enumerate_dsa_diversity_naive(M, K, N)


def test_steiner_diversity_examples(fano, s2425):
    assert oracle.enumerate_steiner_diversity(fano, 2) == [0, 0, 1, 0]
    assert oracle.enumerate_steiner_diversity(fano, 1) == [0, 0, 0, 1]
    assert oracle.enumerate_steiner_diversity(s2425, 2) == [0, 0, 0, F(28, 49), F(21, 49)]


def test_interferer_examples(fano):
    assert oracle.enumerate_steiner_interferers(fano, 2)[1] == F(1, 3)
    assert oracle.enumerate_interferers("dsa", 2, M=2, K=1)[1] == F(1, 2)
    assert oracle.enumerate_interferers("steiner", 1, code=fano) == [1]
    assert oracle.enumerate_interferers("dsa", 1, M=25, K=4) == [1]


def test_guards(s2425):
    with pytest.raises(InstanceTooLarge):
        oracle.enumerate_dsa_diversity(25, 4, 3)
    with pytest.raises(InstanceTooLarge):
        oracle.enumerate_steiner_diversity(s2425, 20)


def test_cross_check_exact():
    checked, worst, bad = oracle.cross_check()
    assert bad == []
    assert worst <= 1e-12
    assert checked == 234


@pytest.mark.parametrize("M,K", [(7, 3), (9, 3), (13, 4)])
def test_hypergeometric_by_direct_count(M, K):
    code = build_steiner_code(M, K)
    params = an.ScenarioParams.steiner(M, K)
    for N in range(1, code.C + 1):
        exact = oracle.enumerate_steiner_interferers(code, N)
        closed = [an.p_det_interferers_given_n(params, l, N) for l in range(N)]
        assert max(abs(float(e) - c) for e, c in zip(exact, closed)) <= 1e-12


def test_pair_coverage(s2425):
    cover = oracle.enumerate_pair_coverage(s2425)
    assert len(cover) == 300 and set(cover.values()) == {1}
