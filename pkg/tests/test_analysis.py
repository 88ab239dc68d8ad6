import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import OptimizeWarning

from exclusive_qec.analysis import (
    AnsatzParams,
    Estimate,
    MCResult,
    direct_mc,
    eval_ansatz,
    fit_critical_exponent,
    fit_decay,
)
from exclusive_qec.errors import FitError, InvalidParameter
from exclusive_qec.oracle import enumerate_code_capacity


def test_estimate_within():
    assert Estimate(0.10, 0.01, 100).within(0.12)
    assert not Estimate(0.10, 0.01, 100).within(0.14)
    assert Estimate(0.0, 0.0, 1000).within(0.0005)
    assert not Estimate(0.0, 0.0, 1000).within(0.01)


def test_noiseless_and_full_tolerance():
    r = direct_mc("mwpm", "cc", 5, 0.0, c=0, shots=1000)
    assert r.aborts == 0 and r.failures == 0 and r.accepts == 1000
    r = direct_mc("uf", "cc", 5, 0.1, c=1, shots=2000, seed=3)
    assert r.g.value == 0.0


def test_no_accepts_flags_f():
    r = MCResult(shots=10, accepts=0, aborts=10, failures=0, meta={})
    assert not r.f_defined
    assert math.isnan(r.f.value)


@pytest.mark.parametrize("decoder,c", [("mwpm", 0.5), ("uf", 0.5), ("mwpm", 0)])
def test_direct_mc_matches_oracle(decoder, c):
    exact = enumerate_code_capacity(3, decoder, c)
    r = direct_mc(decoder, "cc", 3, 0.1, c=c, shots=100_000, seed=8)
    assert r.g.within(exact.g(0.1), 4)
    assert r.f.within(exact.f(0.1), 4)


def test_direct_mc_is_deterministic():
    a = direct_mc("mwpm", "cc", 5, 0.08, c=0.4, shots=40_000, seed=5)
    b = direct_mc("mwpm", "cc", 5, 0.08, c=0.4, shots=40_000, seed=5)
    c = direct_mc("mwpm", "cc", 5, 0.08, c=0.4, shots=40_000, seed=6)
    assert (a.aborts, a.failures) == (b.aborts, b.failures)
    assert (a.aborts, a.failures) != (c.aborts, c.failures)


def test_direct_mc_validation():
    with pytest.raises(InvalidParameter):
        direct_mc("mwpm", "phenom", 4, 0.01, c=0.5, shots=10)
    with pytest.raises(InvalidParameter):
        direct_mc("bp", "cc", 3, 0.01)
    with pytest.raises(InvalidParameter):
        direct_mc("mwpm", "cc", 3, 0.01, shots=0)


def test_phenomenological_abort_rate():
    p = 1e-3
    r = direct_mc("mwpm", "phenom", 4, p, c=0, shots=40_000, seed=2)
    # Accepted means no detection events; undetectable faults are O(p^2).
    assert r.g.within(eval_ansatz("ztft_abort", None, p, 4), 4)
    assert r.meta["t"] == 4 and r.meta["p_m"] == pytest.approx(2 * p / 3)


def test_ansatz_values():
    assert eval_ansatz("ztft_abort", None, 1e-3, 4) == pytest.approx(0.10121633814031539, rel=1e-12)
    assert eval_ansatz("ztft_abort_first_order", None, 1e-3, 4) == pytest.approx(64 * (1e-3 + 2e-3 / 3))
    assert eval_ansatz("A_ft", None, 0, 4) == pytest.approx(float(Fraction(512, 81)))
    assert eval_ansatz("ztft_f", None, 1e-4, 4) == pytest.approx(512 / 81 * 1e-16)
    assert eval_ansatz("k", AnsatzParams(c=0.5), 0, 3) == 0.75
    assert eval_ansatz("k_tilde", AnsatzParams(c=0.5), 0, 3) == 0.25
    assert eval_ansatz("zero_tolerance_abort", None, 0.01, 3) == pytest.approx(1 - 0.99**9)
    f = eval_ansatz("f", AnsatzParams(C=2.0, A=3.0, c=0), 0.01, 5)
    assert f == pytest.approx(2.0 * 0.03**5)
    with pytest.raises(InvalidParameter):
        eval_ansatz("f", AnsatzParams(), 0.01, 5)
    with pytest.raises(InvalidParameter):
        eval_ansatz("nope", None, 0.01, 5)
    with pytest.raises(InvalidParameter):
        eval_ansatz("A_ft", None, 0, 3)


def test_critical_fit_recovers_synthetic_threshold():
    rng = np.random.default_rng(0)
    rows = []
    for d in (5, 7, 9, 11):
        for p in np.linspace(0.08, 0.12, 9):
            x = (p - 0.1) * d ** (1 / 1.5)
            v = 0.4 * x * x + 2.0 * x + 0.2
            rows.append((d, p, v + rng.normal(0, 1e-3), 1e-3))
    fit = fit_critical_exponent(rows)
    assert fit.params["p_th"] == pytest.approx(0.1, abs=3 * fit.errors["p_th"] + 1e-4)
    assert fit.params["nu"] == pytest.approx(-1 / 1.5, abs=0.05)
    assert not fit.degenerate and fit.r2 > 0.99


def test_critical_fit_needs_data():
    with pytest.raises(FitError):
        fit_critical_exponent([(3, 0.1, 0.1, 0.01), (5, 0.1, 0.1, 0.01)])


def test_critical_fit_flags_missing_crossing():
    rows = [(d, p, p * 0.1 * d, 1e-3) for d in (3, 5, 7) for p in np.linspace(0.1, 0.2, 6)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        fit = fit_critical_exponent(rows)
    assert fit.degenerate


def test_fit_decay_synthetic():
    rows = []
    for p in (1e-3, 3e-3, 1e-2):
        for d in (3, 5, 7, 9):
            v = 1.5 * (2.0 * p) ** (0.75 * d)
            rows.append((d, p, v, 0.01 * v))
    fit = fit_decay(rows, "d")
    assert fit.k == pytest.approx(0.75, rel=1e-9)
    assert fit.A == pytest.approx(2.0, rel=1e-9)
    for v in fit.per_p.values():
        assert v["C"] == pytest.approx(1.5) and v["r2"] == pytest.approx(1.0)
    fn = fit_decay([(d, 0.1, 0.9 ** (d * d), 0) for d in (3, 5, 7)], "n")
    assert fn.per_p[0.1]["Lambda"] == pytest.approx(0.9)
    with pytest.raises(FitError):
        fit_decay([(3, 0.1, 0.1, 0.01), (5, 0.1, 0.01, 0.001)])


def test_zero_tolerance_slope_from_oracle():
    # Oracle f at d = 3 decays with slope k d = 3 in log p.
    exact = enumerate_code_capacity(3, "mwpm", 0)
    ps = np.array([1e-3, 2e-3, 4e-3])
    slope = np.polyfit(np.log(ps), np.log([exact.f(p) for p in ps]), 1)[0]
    assert slope / 3 == pytest.approx(1.0, abs=0.05)
