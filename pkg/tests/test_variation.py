import itertools

import numpy as np
import pytest

from conftest import random_micro_instance
from rebalance.encoding import Genome, RelocateMove, apply_relocate, enumerate_relocations, random_genome
from rebalance.variation import (
    CROSSOVERS, DOMAIN_MUTATIONS, PERM_MUTATIONS, OperatorConfig, bb1_move, block_move, block_swap,
    crossover, inversion, mutate_domain, mutate_perm, neighborhood_deltas, order_crossover, pmx,
    relocation_delta, roulette_probabilities, sample_index, swap,
)


def is_perm(p, n):
    return sorted(np.asarray(p).tolist()) == list(range(n))


def test_pmx_hand_trace():
    c1, c2 = pmx(np.array([1, 2, 3, 4, 5]) - 1, np.array([5, 4, 3, 2, 1]) - 1, 1, 3)
    assert (c1 + 1).tolist() == [5, 2, 3, 4, 1]
    assert (c2 + 1).tolist() == [1, 4, 3, 2, 5]


def test_pmx_chained_mapping():
    a = np.array([0, 1, 2, 3, 4, 5, 6, 7])
    b = np.array([2, 4, 6, 0, 7, 5, 1, 3])
    c1, _ = pmx(a, b, 2, 5)
    assert c1[2:5].tolist() == [2, 3, 4]
    assert is_perm(c1, 8)


def test_ox_keeps_slice_and_other_parent_order():
    a = np.arange(8)
    b = np.array([7, 6, 5, 4, 3, 2, 1, 0])
    c1, c2 = order_crossover(a, b, 2, 5)
    assert c1[2:5].tolist() == [2, 3, 4]
    assert is_perm(c1, 8) and is_perm(c2, 8)
    # fill begins after the slice, in parent b's cyclic order from position 5
    assert c1[5:].tolist() + c1[:2].tolist() == [1, 0, 7, 6, 5]


@pytest.mark.parametrize("kind", CROSSOVERS)
def test_crossover_identical_parents(kind):
    rng = np.random.default_rng(0)
    p = rng.permutation(12)
    c1, c2 = crossover(kind, p, p, rng)
    assert c1.tolist() == p.tolist() and c2.tolist() == p.tolist()


@pytest.mark.parametrize("kind", CROSSOVERS)
def test_crossover_yields_permutations(kind):
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 10, 31):
        for _ in range(50):
            c1, c2 = crossover(kind, rng.permutation(n), rng.permutation(n), rng)
            assert is_perm(c1, n) and is_perm(c2, n)


def test_erx_children_use_parent_edges_when_possible():
    rng = np.random.default_rng(2)
    a, b = rng.permutation(9), rng.permutation(9)
    edges = {frozenset(e) for p in (a, b) for e in zip(p[:-1].tolist(), p[1:].tolist())}
    c, _ = crossover("ERX", a, b, rng)
    inherited = sum(frozenset(e) in edges for e in zip(c[:-1].tolist(), c[1:].tolist()))
    assert inherited >= 5


def test_perm_mutation_primitives():
    p = np.arange(6)
    assert inversion(p, 1, 4).tolist() == [0, 4, 3, 2, 1, 5]
    assert swap(p, 0, 5).tolist() == [5, 1, 2, 3, 4, 0]
    assert block_move(p, 1, 2, 3).tolist() == [0, 3, 4, 1, 2, 5]
    assert block_swap(p, 0, 3, 2).tolist() == [3, 4, 2, 0, 1, 5]
    with pytest.raises(ValueError):
        block_swap(p, 0, 1, 2)


@pytest.mark.parametrize("kind", PERM_MUTATIONS)
def test_perm_mutation_validity(kind):
    rng = np.random.default_rng(3)
    for n in (0, 1, 2, 5, 23):
        for _ in range(100):
            assert is_perm(mutate_perm(kind, rng.permutation(n), rng), n)


def test_inversion_single_position_is_identity():
    p = np.arange(5)
    assert inversion(p, 2, 2).tolist() == p.tolist()


def test_presets():
    bb1max = OperatorConfig.preset("BB1-MAX")
    assert (bb1max.crossover, bb1max.perm_mutation, bb1max.pm_perm, bb1max.pc_perm, bb1max.pm_partition) == \
        ("PMX", "BSM", 0.01, 0.1, 0.25)
    assert OperatorConfig.preset("AB2").pm_partition == 0.15
    assert OperatorConfig.preset("BB1-MIN").pm_partition == 0.20
    assert OperatorConfig.preset("BB2-MIN", epsilon=2.0).epsilon == 2.0
    with pytest.raises(ValueError):
        OperatorConfig(crossover="CX")
    with pytest.raises(ValueError):
        OperatorConfig(pm_perm=1.5)
    with pytest.raises(ValueError):
        OperatorConfig.preset("nope")


def test_roulette_hand_case():
    p = roulette_probabilities([0, 2, 6], "MIN", 1.0)
    assert p == pytest.approx([21 / 31, 7 / 31, 3 / 31])
    assert p.round(4).tolist() == [0.6774, 0.2258, 0.0968]
    q = roulette_probabilities([0, 4, 6], "MAX", 1.0)
    assert q == pytest.approx(p[::-1])


def test_roulette_constant_neighbourhood_is_uniform():
    assert roulette_probabilities([3, 3, 3, 3], "MAX", 1.0) == pytest.approx([0.25] * 4)


def test_sample_index_distribution():
    rng = np.random.default_rng(4)
    p = np.array([0.5, 0.0, 0.3, 0.2])
    draws = np.bincount([sample_index(p, rng) for _ in range(20000)], minlength=4) / 20000
    assert draws[1] == 0
    assert draws == pytest.approx(p, abs=0.02)


def test_neighborhood_deltas_match_full_recompute():
    rng = np.random.default_rng(5)
    for _ in range(200):
        S, T = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        inst = random_micro_instance(rng, S, T)
        g = random_genome(rng, S, T)
        for src, dst in itertools.permutations(range(T + 1), 2):
            if g.seg_lengths[src] == 0:
                continue
            deltas = neighborhood_deltas(g, src, dst, inst.distances).ravel()
            moves = enumerate_relocations(g, src, dst)
            expect = [relocation_delta(g, m, inst.distances) for m in moves]
            assert deltas == pytest.approx(expect, abs=1e-9)


def test_bb1_tie_rule_first_occurrence():
    # all distances equal: every relocate into a route has the same delta
    d = np.ones((5, 5)) - np.eye(5)
    g = Genome([0, 1, 2, 3], [2, 2, 0])
    assert bb1_move(g, 0, 1, "MIN", d) == RelocateMove(0, 1, 0, 0)
    assert bb1_move(g, 0, 1, "MAX", d) == RelocateMove(0, 1, 0, 0)


def test_bb1_into_unvisited_picks_best_removal():
    d = np.array([[0, 1, 3, 1], [1, 0, 4, 1], [3, 4, 0, 4], [1, 1, 4, 0]], dtype=float)
    g = Genome([0, 1, 2], [3, 0])
    # removal deltas by position: 3-1-4 = -2, 1-4-4 = -7, 3-4-1 = -2
    m = bb1_move(g, 0, 1, "MIN", d)
    assert (m.src_pos, m.ins_pos) == (1, 0)
    assert relocation_delta(g, m, d) == -7
    assert bb1_move(g, 0, 1, "MAX", d).src_pos == 0


def test_bb1_rejects_bad_sense():
    with pytest.raises(ValueError):
        bb1_move(Genome([0, 1], [1, 1]), 0, 1, "MID", np.zeros((3, 3)))


@pytest.mark.parametrize("kind", DOMAIN_MUTATIONS)
@pytest.mark.parametrize("include_unvisited", [True, False])
def test_domain_mutation_validity(kind, include_unvisited):
    rng = np.random.default_rng(6)
    cfg = OperatorConfig(domain_mutation=kind, include_unvisited=include_unvisited)
    for _ in range(300):
        S, T = int(rng.integers(1, 10)), int(rng.integers(1, 4))
        inst = random_micro_instance(rng, S, T)
        g = random_genome(rng, S, T)
        out = mutate_domain(kind, g, rng, cfg, inst.distances)
        out.validate(S, T)
        changed = np.abs(out.seg_lengths - g.seg_lengths)
        assert changed.sum() in (0, 2)
        if not include_unvisited:
            assert out.seg_lengths[-1] == g.seg_lengths[-1]


def test_domain_mutation_single_truck_without_pool_is_noop():
    rng = np.random.default_rng(7)
    g = Genome([0, 1, 2], [2, 1])
    cfg = OperatorConfig(include_unvisited=False)
    for kind in DOMAIN_MUTATIONS:
        assert mutate_domain(kind, g, rng, cfg, np.ones((4, 4))) == g


def test_ab2_reaches_every_relocate():
    rng = np.random.default_rng(8)
    g = Genome([0, 1, 2], [1, 1, 1])
    cfg = OperatorConfig()
    seen = {mutate_domain("AB2", g, rng, cfg, None) for _ in range(3000)}
    expect = {apply_relocate(g, m) for s, t in itertools.permutations(range(3), 2)
              for m in enumerate_relocations(g, s, t)}
    assert seen == expect
