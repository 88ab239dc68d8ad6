import numpy as np
import pytest

from exclusive_qec.analysis import uf_bound_sweep
from exclusive_qec.code_model import PauliError, batch_syndromes, build_code, logical_sector, syndrome
from exclusive_qec.unionfind import (
    batch_decode_uf,
    decode_uf_exclusive,
    peel,
    survived_distance,
    syndrome_validation,
    uf_graphs,
)


def test_center_error_grows_one_qubit():
    code = build_code(3)
    e = PauliError.on(9, [4], "X")
    out = decode_uf_exclusive(code, [], syndrome(code, e), 1.0)
    assert out.accepted and out.sector == "I"
    assert out.extra["final_erasure"][0] == frozenset({4})
    assert out.margins == (2, 3)
    assert logical_sector(code, e * out.correction) == "I"
    assert syndrome_validation(code, [], [1, 2], 0) == frozenset({4})


def test_survived_distance():
    assert survived_distance(build_code(3), []) == 3
    c5 = build_code(5)
    assert survived_distance(c5, [], 0) == 5
    assert survived_distance(c5, [10, 11], 0) == 4
    assert survived_distance(c5, [10, 11]) == 3


def test_peeling_matches_defects():
    code = build_code(5)
    g = uf_graphs(code)[0]
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = (rng.random(25) < 0.15).astype(np.uint8)
        dfs = np.flatnonzero(syndrome(code, PauliError(x, np.zeros(25, np.uint8))).z)
        final = syndrome_validation(code, [], dfs, 0)
        corr = peel(g, final, dfs)
        assert set(corr) <= set(final)
        b = np.zeros(25, np.uint8)
        b[corr] = 1
        assert np.array_equal(syndrome(code, PauliError(b, np.zeros(25, np.uint8))).z, syndrome(code, PauliError(x, np.zeros(25, np.uint8))).z)


def test_erasure_only_is_corrected():
    code = build_code(5)
    rng = np.random.default_rng(4)
    for _ in range(40):
        er = rng.choice(25, 4, replace=False)
        k = rng.integers(0, 4, 4)
        x = np.zeros(25, np.uint8)
        z = np.zeros(25, np.uint8)
        x[er] = k & 1
        z[er] = k >> 1
        e = PauliError(x, z)
        out = decode_uf_exclusive(code, er.tolist(), syndrome(code, e), 1.0)
        assert out.accepted
        assert logical_sector(code, e * out.correction) == "I"


def test_weight_two_counterexample_at_half():
    # Two Z errors on a boundary row: growth reaches the boundary through the
    # middle qubit and the correction completes a logical.
    code = build_code(3)
    e = PauliError.from_string("ZIZIIIIII")
    out = decode_uf_exclusive(code, [], syndrome(code, e), 0.5)
    assert out.accepted
    assert logical_sector(code, e * out.correction) == "Z"


def test_batch_matches_single():
    code = build_code(3)
    rng = np.random.default_rng(9)
    x = (rng.random((200, 9)) < 0.15).astype(np.uint8)
    z = (rng.random((200, 9)) < 0.15).astype(np.uint8)
    for c in (0, 0.5, 1):
        aborted, residual, _ = batch_decode_uf(code, x, z, c)
        for i in range(len(x)):
            e = PauliError(x[i], z[i])
            out = decode_uf_exclusive(code, [], syndrome(code, e), c)
            assert out.aborted == bool(aborted[i])
            if out.accepted:
                assert "IXZY"[residual[i]] == logical_sector(code, e * out.correction)


def test_zero_tolerance_sweep_has_no_violations():
    res = uf_bound_sweep(3, 0, 2000, seed=1)
    assert res.accepted > 0 and res.violations == 0
