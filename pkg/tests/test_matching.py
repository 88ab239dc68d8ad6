import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from exclusive_qec.blossom import max_weight_matching, min_weight_perfect_matching
from exclusive_qec.code_model import PauliError, build_code, logical_sector, syndrome
from exclusive_qec.errors import InfeasibleSector, InvalidParameter
from exclusive_qec.matching import (
    MatchingGraph,
    abort_mask,
    batch_decode_mwpm,
    batch_sector_weights,
    build_parity_graph,
    decode_exclusive,
    min_weight_in_sector,
    mwpm_exact,
    sector_weights,
    should_abort,
    species_graphs,
    tolerance_fraction,
)
from exclusive_qec.matching import _weights_reference


def brute_force_weights(code, idx):
    """Least weight per (syndrome key, class) over all one-species errors."""
    sp = code.species[idx]
    n, m = code.n, sp.num_checks
    best = np.full((1 << m, 2), 10**9, np.int64)
    ints = np.arange(1 << n, dtype=np.int64)
    bits = ((ints[:, None] >> np.arange(n)) & 1).astype(np.int64)
    keys = ((bits @ sp.checks.T.astype(np.int64)) % 2) @ (1 << np.arange(m))
    cls = (bits @ sp.class_support.astype(np.int64)) % 2
    w = bits.sum(axis=1)
    np.minimum.at(best, (keys, cls), w)
    return best


def test_tolerance_fraction():
    assert tolerance_fraction(2 / 3) == Fraction(2, 3)
    assert tolerance_fraction("2/5") == Fraction(2, 5)
    with pytest.raises(InvalidParameter):
        tolerance_fraction(1.5)


def test_abort_rule_boundaries():
    # 1 - margin/d > c, exactly.
    assert should_abort(3, 0, Fraction(2, 3))
    assert not should_abort(3, 1, Fraction(2, 3))
    assert should_abort(5, 2, 0.4)
    assert not should_abort(5, 3, 0.4)
    assert not should_abort(5, 0, 1)
    assert should_abort(5, 4, 0)
    assert not should_abort(5, 5, 0)
    m = np.array([[5, 5], [5, 3]])
    assert list(abort_mask(5, m, 0, np.array([True, False]))) == [True, True]


def test_single_error_weights_d3():
    code = build_code(3)
    assert sector_weights(code, [1, 2], 0) == (1, 2)
    assert sector_weights(code, [3], 0) == (2, 1)
    assert sector_weights(code, [], 0) == (0, 3)
    out = decode_exclusive(code, syndrome(code, PauliError.on(9, [4], "X")), 1.0)
    assert out.accepted and out.margins == (1, 3)
    assert out.weights == ((1, 2), (0, 3))


@pytest.mark.parametrize("d", [3])
def test_sector_weights_match_brute_force(d):
    code = build_code(d)
    for idx in range(2):
        best = brute_force_weights(code, idx)
        m = code.species[idx].num_checks
        ints = np.arange(1 << m)
        syn = ((ints[:, None] >> np.arange(m)) & 1).astype(np.uint8)
        got = batch_sector_weights(code, idx, syn)
        assert np.array_equal(got, best)


def test_sector_weights_match_brute_force_d5_sampled():
    # Exhaustive over 2^25 errors is heavy; instead check a sample of
    # syndromes against least-weight errors found by growing weight.
    code = build_code(5)
    rng = np.random.default_rng(3)
    sp = code.species[0]
    H = sp.checks.astype(np.int64)
    for _ in range(25):
        e = (rng.random(25) < 0.12).astype(np.int64)
        s = H @ e % 2
        target = tuple(s)
        best = [None, None]
        for w in range(0, 8):
            for sup in itertools.combinations(range(25), w):
                v = np.zeros(25, np.int64)
                v[list(sup)] = 1
                if tuple(H @ v % 2) == target:
                    c = int(v @ sp.class_support % 2)
                    if best[c] is None:
                        best[c] = w
            if None not in best:
                break
        got = batch_sector_weights(code, 0, s.astype(np.uint8))[0]
        assert tuple(got) == tuple(best)


@pytest.mark.parametrize("d", [7, 9, 11])
def test_fast_weights_match_networkx(d):
    code = build_code(d)
    rng = np.random.default_rng(d)
    for idx in range(2):
        m = code.species[idx].num_checks
        syn = (rng.random((6, m)) < 0.25).astype(np.uint8)
        fast = batch_sector_weights(code, idx, syn)
        for s, row in zip(syn, fast):
            assert tuple(row) == _weights_reference(code, idx, np.flatnonzero(s))


def test_min_weight_in_sector_builds_correction():
    code = build_code(5)
    e = PauliError.on(25, [6, 7, 18], "X")
    syn = syndrome(code, e)
    dfs = np.flatnonzero(syn.z)
    w0, w1 = sector_weights(code, dfs, 0)
    for flag, w in ((0, w0), (1, w1)):
        corr, weight = min_weight_in_sector(code, dfs, flag, 0)
        assert weight == w == corr.weight
        assert np.array_equal(syndrome(code, corr).z, syn.z)


def test_parity_graph_infeasible():
    code = build_code(3)
    g = build_parity_graph(code, [1, 2], 0, 0)
    assert mwpm_exact(g).weight == 1
    bad = MatchingGraph(vertices=[0, 1, 2], edges={(0, 1): 1, (1, 2): 1}, parity=0, species=0)
    with pytest.raises(InfeasibleSector):
        mwpm_exact(bad)


def test_decode_residual_trivial_for_correctable():
    code = build_code(5)
    for q in range(25):
        for pauli in "XYZ":
            e = PauliError.on(25, [q], pauli)
            out = decode_exclusive(code, syndrome(code, e), 1.0)
            assert out.accepted
            assert logical_sector(code, e * out.correction) == "I"


def test_batch_agrees_with_single_decode():
    code = build_code(5)
    rng = np.random.default_rng(0)
    x = (rng.random((60, 25)) < 0.08).astype(np.uint8)
    z = (rng.random((60, 25)) < 0.08).astype(np.uint8)
    for c in (0, 0.5, 1):
        aborted, residual, _ = batch_decode_mwpm(code, x, z, c)
        for i in range(len(x)):
            e = PauliError(x[i], z[i])
            out = decode_exclusive(code, syndrome(code, e), c)
            assert out.aborted == bool(aborted[i])
            if out.accepted:
                assert "IXZY"[residual[i]] == logical_sector(code, e * out.correction)


def test_zero_and_full_tolerance():
    code = build_code(3)
    rng = np.random.default_rng(1)
    x = (rng.random((500, 9)) < 0.2).astype(np.uint8)
    z = (rng.random((500, 9)) < 0.2).astype(np.uint8)
    ab1, _, _ = batch_decode_mwpm(code, x, z, 1)
    assert not ab1.any()
    ab0, _, _ = batch_decode_mwpm(code, x, z, 0)
    nontrivial = np.array([not syndrome(code, PauliError(a, b)).trivial for a, b in zip(x, z)])
    assert np.array_equal(ab0, nontrivial)


def test_species_graph_logical_length():
    for d in (3, 5, 7):
        for g in species_graphs(build_code(d)):
            assert g.logical == d


def test_blossom_matches_networkx():
    rng = np.random.default_rng(7)
    for _ in range(200):
        nv = int(rng.integers(2, 12))
        pairs = [(i, j) for i in range(nv) for j in range(i + 1, nv) if rng.random() < 0.5]
        if not pairs:
            continue
        w = rng.integers(1, 20, len(pairs))
        ei = np.array([p[0] for p in pairs], np.int64)
        ej = np.array([p[1] for p in pairs], np.int64)
        ew = w.astype(np.int64)
        G = nx.Graph()
        G.add_nodes_from(range(nv))
        for (i, j), wt in zip(pairs, w):
            G.add_edge(i, j, weight=int(wt))
        ref = nx.max_weight_matching(G, maxcardinality=True)
        ref_w = sum(G[i][j]["weight"] for i, j in ref)
        mate = max_weight_matching(ei, ej, ew, nv, True)
        got = [(i, int(mate[i])) for i in range(nv) if mate[i] > i]
        assert len(got) == len(ref)
        assert sum(G[i][j]["weight"] for i, j in got) == ref_w


def test_min_weight_perfect_matching():
    ei = np.array([0, 1, 2, 0], np.int64)
    ej = np.array([1, 2, 3, 3], np.int64)
    ew = np.array([1, 5, 1, 5], np.int64)
    mate, w = min_weight_perfect_matching(ei, ej, ew, 4)
    assert w == 2 and mate[0] == 1 and mate[2] == 3
    _, w = min_weight_perfect_matching(ei[:1], ej[:1], ew[:1], 4)
    assert w == -1
