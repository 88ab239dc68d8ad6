import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from exclusive_qec.code_model import SpacetimeError, build_spacetime, ft_sector
from exclusive_qec.errors import InvalidParameter
from exclusive_qec.oracle import (
    ExactSectorTable,
    enumerate_code_capacity,
    enumerate_low_weight,
    enumerate_low_weight_ft,
)


@pytest.fixture(scope="module")
def zero_tol():
    return enumerate_code_capacity(3, "mwpm", 0)


@pytest.fixture(scope="module")
def full_tol():
    return enumerate_code_capacity(3, "mwpm", 1)


def brute_force_ft(d, max_weight):
    """Accepted spacetime faults by (weight, label), by direct enumeration."""
    st = build_spacetime(d)
    T, n, mx, mz = st.t, st.n, st.hx.shape[0], st.hz.shape[0]
    sites = (
        [("d", r, q) for r in range(T) for q in range(n)]
        + [("mx", r, s) for r in range(T) for s in range(mx)]
        + [("mz", r, s) for r in range(T) for s in range(mz)]
    )
    out = Counter()
    for w in range(1, max_weight + 1):
        for sup in itertools.combinations(sites, w):
            opts = [(1, 2, 3) if s[0] == "d" else (1,) for s in sup]
            for ch in itertools.product(*opts):
                x = np.zeros((T, n), np.uint8)
                z = np.zeros_like(x)
                a = np.zeros((T, mx), np.uint8)
                b = np.zeros((T, mz), np.uint8)
                for s, k in zip(sup, ch):
                    if s[0] == "d":
                        x[s[1], s[2]] = k & 1
                        z[s[1], s[2]] = k >> 1
                    elif s[0] == "mx":
                        a[s[1], s[2]] = 1
                    else:
                        b[s[1], s[2]] = 1
                ex, ez = st.detection_events(x, z, a, b)
                if not ex.any() and not ez.any():
                    out[(w, ft_sector(st, SpacetimeError(x, z, a, b)))] += 1
    return out


def test_totals(zero_tol, full_tol):
    assert zero_tol.check_totals() and full_tol.check_totals()
    assert zero_tol.exhaustive
    for p in (0.01, 0.2, 0.6):
        assert zero_tol.probabilities(p).sum() == pytest.approx(1.0)


def test_noiseless_limit(zero_tol):
    assert zero_tol.g(0.0) == 0.0
    assert zero_tol.h(0.0) == 1.0
    assert zero_tol.f(0.0) == 0.0


def test_symmetric_point(full_tol):
    # At p = 3/4 every Pauli is equally likely, so every class is too.
    pr = full_tol.probabilities(0.75).sum(axis=1)
    assert np.allclose(pr, 0.25)


def test_zero_tolerance_abort_leading_term(zero_tol):
    # The only weight-2 operators with trivial syndrome are the four
    # two-qubit boundary stabilizers.
    for p in (1e-3, 1e-4):
        diff = (1 - (1 - p) ** 9) - zero_tol.g(p)
        assert diff / p**2 == pytest.approx(4 / 9, rel=0.01)
    assert int(zero_tol.counts[0, 0, 2]) == 4


def test_minimal_weights(zero_tol, full_tol):
    assert zero_tol.minimal_weight("fail") == 3
    assert zero_tol.minimal_weight("abort") == 1
    assert full_tol.minimal_weight("fail") == 2
    assert full_tol.minimal_weight("abort") is None
    with pytest.raises(InvalidParameter):
        zero_tol.minimal_weight("other")


def test_frozen_values(zero_tol, full_tol):
    assert zero_tol.f(0.1) == pytest.approx(0.0012245, rel=1e-4)
    assert zero_tol.g(0.1) == pytest.approx(0.60996, rel=1e-4)
    assert full_tol.f(0.1) == pytest.approx(0.11385, rel=1e-4)
    assert full_tol.g(0.1) == 0.0


def test_low_weight_agrees_with_exhaustive(full_tol):
    lw = enumerate_low_weight(3, "mwpm", 1, max_weight=3)
    assert lw.complete_to == 3 and not lw.exhaustive
    assert lw.check_totals()
    assert np.array_equal(lw.counts[:, :, :4], full_tol.counts[:, :, :4])
    assert not lw.counts[:, :, 4:].any()


def test_json_roundtrip(full_tol):
    back = ExactSectorTable.from_json(full_tol.to_json())
    assert back.c == full_tol.c and back.complete_to == full_tol.complete_to
    assert np.array_equal(back.counts, full_tol.counts)


def test_exhaustive_refuses_large_codes():
    with pytest.raises(InvalidParameter):
        enumerate_code_capacity(5)


def test_ft_counts_match_brute_force_d2():
    got = enumerate_low_weight_ft(2)
    ref = brute_force_ft(2, 2)
    flat = Counter({(w, k): v for w, row in got.by_weight.items() for k, v in row.items()})
    assert flat == ref
    assert got.minimal_failure_weight() == 2


def test_ft_counts_d4():
    got = enumerate_low_weight_ft(4)
    assert got.minimal_failure_weight() == 4
    assert not any(got.failing(w) for w in range(1, 4))
    assert got.failing(4) == {
        "II01": 8, "II10": 8,
        "IX00": 48, "IZ00": 48, "XI00": 48, "ZI00": 48,
        "XX00": 16, "XZ00": 16, "ZX00": 16, "ZZ00": 16,
    }
    assert got.by_weight[4]["II00"] == 192
    assert got.leading_coefficient() == Fraction(512, 81)


def test_ft_requires_positive_weight():
    with pytest.raises(InvalidParameter):
        enumerate_low_weight_ft(2, max_weight=0)
