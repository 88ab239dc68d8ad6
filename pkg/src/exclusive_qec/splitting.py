"""Rare-event estimation by splitting and by sector splitting.

Splitting estimates ``P_j(S)``, the probability of an event ``S`` at error
rate ``p_j``, as a product of ratios ``R_j = P_{j+1}(S) / P_j(S)`` along a
schedule ``p_0 > p_1 > ...``.  Each ratio is estimated from samples of the
conditional distributions ``P_j(E | S)`` drawn by Metropolis chains, using the
two-sided acceptance-ratio estimator.  Since ``log P_{j+1}(E) - log P_j(E)``
depends on ``E`` only through its weight, chains only need to report weights.

Sector splitting runs one splitting chain per logical class ``L`` of the
event "accepted with residual class L", starting at ``p = 3/4`` where every
Pauli is equally likely and therefore every class has the same probability.
This fixes all classes to a common unknown constant, so the post-selected
failure rate follows directly from the unnormalised products.

Chain moves
-----------
* single-site: pick a qubit and replace its Pauli by one of the other three;
* operator: multiply by a random stabilizer generator or by one of the two
  logical representatives.

All proposals are symmetric, so the Metropolis ratio is
``((p/3) / (1-p)) ** dw``.  Operator moves never change the syndrome; they
are what makes chains conditioned on a trivial syndrome mix at all, and the
logical ones connect the different nontrivial classes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import brentq

from .code_model import Code, PauliError, SECTOR_NAMES
from .decoders import ExclusiveDecoder
from .errors import InvalidParameter, OverlapError
from .matching import INF, _weights_one, species_graphs

log = logging.getLogger(__name__)

__all__ = [
    "Predicate",
    "ChainTarget",
    "ChainSamples",
    "SplitSchedule",
    "RatioEstimate",
    "SplitResult",
    "SectorEstimate",
    "mcmc_conditional",
    "ratio_estimate",
    "run_splitting",
    "run_sector_splitting",
    "normalize_acceptance",
    "log_weight_ratio",
]

_PRED_KINDS = {"all": 0, "fail": 1, "abort": 2, "accept": 3, "sector": 4}


@dataclass(frozen=True)
class Predicate:
    """Conditioning event for chains.

    ``kind`` is one of ``"all"``, ``"fail"`` (accepted, nontrivial residual),
    ``"abort"``, ``"accept"`` or ``"sector"`` (accepted with residual class
    ``sector``, given as 0-3 or a name in ``"IXZY"``).
    """

    kind: str
    sector: int = 0

    def __post_init__(self):
        if self.kind not in _PRED_KINDS:
            raise InvalidParameter(f"unknown predicate {self.kind!r}")
        sec = self.sector
        if isinstance(sec, str):
            if sec not in SECTOR_NAMES:
                raise InvalidParameter(f"unknown sector {sec!r}")
            object.__setattr__(self, "sector", SECTOR_NAMES.index(sec))
        elif not 0 <= int(sec) <= 3:
            raise InvalidParameter(f"unknown sector {sec!r}")

    @property
    def code(self) -> int:
        return _PRED_KINDS[self.kind]

    def evaluate(self, aborted: np.ndarray, residual: np.ndarray) -> np.ndarray:
        aborted = np.asarray(aborted, bool)
        residual = np.asarray(residual)
        if self.kind == "all":
            return np.ones_like(aborted)
        if self.kind == "fail":
            return ~aborted & (residual != 0)
        if self.kind == "abort":
            return aborted
        if self.kind == "accept":
            return ~aborted
        return ~aborted & (residual == self.sector)


# --------------------------------------------------------------------------
# Compiled Metropolis kernel
# --------------------------------------------------------------------------


@numba.njit(cache=True)
def _species_outcome(syn, ndef, key, mode, d, tab_m, tab_p, D, A, B, L, defs, best0, best1):
    if mode == 0:
        return (d if ndef == 0 else 0), 0
    if mode == 2:
        return tab_m[key], tab_p[key]
    nd = 0
    for c in range(syn.shape[0]):
        if syn[c]:
            defs[nd] = c
            nd += 1
    w0, w1 = _weights_one(defs, nd, D, A, B, L, best0, best1)
    return abs(w1 - w0), (1 if w1 < w0 else 0)


@numba.njit(cache=True)
def _holds(m0, p0, m1, p1, nontriv, ex, ez, d, cnum, cden, kind, sector):
    if kind == 0:
        return True
    abort = (d - m0) * cden > cnum * d or (d - m1) * cden > cnum * d or (cnum == 0 and nontriv)
    res = (ex ^ p0) | ((ez ^ p1) << 1)
    if kind == 1:
        return (not abort) and res != 0
    if kind == 2:
        return abort
    if kind == 3:
        return not abort
    return (not abort) and res == sector


@numba.njit(cache=True)
def _mcmc_kernel(
    x, z, burn_steps, n_samples, sweep, logr, stab_prob, seed,
    qx, qz, gen_sup, gen_kind, clsx, clsz,
    mode, d, cnum, cden, kind, sector,
    tab_m0, tab_p0, tab_m1, tab_p1,
    D0, A0, B0, L0, D1, A1, B1, L1,
):
    np.random.seed(seed)
    chains, n = x.shape
    mx = D1.shape[0]  # X checks see z bits (species 1)
    mz = D0.shape[0]  # Z checks see x bits (species 0)
    weights = np.empty((chains, n_samples), np.int64)
    stats = np.zeros(4, np.int64)  # site tries, site accepts, stab tries, stab accepts
    sx = np.zeros(mx, np.uint8)
    sz = np.zeros(mz, np.uint8)
    defs = np.empty(max(mx, mz) + 1, np.int64)
    best0 = np.empty(1 << 12, np.int64)
    best1 = np.empty(1 << 12, np.int64)
    ngen = gen_sup.shape[0]
    total = burn_steps + n_samples * sweep
    for ch in range(chains):
        sx[:] = 0
        sz[:] = 0
        ex = 0
        ez = 0
        w = 0
        key0 = 0
        key1 = 0
        for q in range(n):
            if x[ch, q]:
                ex ^= clsx[q]
                for t in range(2):
                    c = qz[q, t]
                    if c >= 0:
                        sz[c] ^= 1
            if z[ch, q]:
                ez ^= clsz[q]
                for t in range(2):
                    c = qx[q, t]
                    if c >= 0:
                        sx[c] ^= 1
            if x[ch, q] or z[ch, q]:
                w += 1
        n0 = 0
        n1 = 0
        for c in range(mz):
            if sz[c]:
                n0 += 1
                key0 |= 1 << c
        for c in range(mx):
            if sx[c]:
                n1 += 1
                key1 |= 1 << c
        m0, p0 = _species_outcome(sz, n0, key0, mode, d, tab_m0, tab_p0, D0, A0, B0, L0, defs, best0, best1)
        m1, p1 = _species_outcome(sx, n1, key1, mode, d, tab_m1, tab_p1, D1, A1, B1, L1, defs, best0, best1)
        if not _holds(m0, p0, m1, p1, (n0 + n1) > 0, ex, ez, d, cnum, cden, kind, sector):
            return weights, stats, ch  # chain started outside the event
        rec = 0
        for step in range(total):
            if ngen > 0 and np.random.random() < stab_prob:
                g = np.random.randint(0, ngen)
                dw = 0
                for t in range(gen_sup.shape[1]):
                    q = gen_sup[g, t]
                    if q < 0:
                        continue
                    before = x[ch, q] | z[ch, q]
                    if gen_kind[g] == 0:
                        after = (x[ch, q] ^ 1) | z[ch, q]
                    else:
                        after = x[ch, q] | (z[ch, q] ^ 1)
                    dw += np.int64(after) - np.int64(before)
                stats[2] += 1
                a = dw * logr
                dex = 0
                dez = 0
                if a < 0 and np.random.random() >= math.exp(a):
                    continue_ok = False
                else:
                    # Logical moves keep the syndrome but may leave the event.
                    for t in range(gen_sup.shape[1]):
                        q = gen_sup[g, t]
                        if q >= 0:
                            if gen_kind[g] == 0:
                                dex ^= clsx[q]
                            else:
                                dez ^= clsz[q]
                    continue_ok = _holds(m0, p0, m1, p1, (n0 + n1) > 0, ex ^ dex, ez ^ dez, d, cnum, cden, kind, sector)
                if continue_ok:
                    for t in range(gen_sup.shape[1]):
                        q = gen_sup[g, t]
                        if q < 0:
                            continue
                        if gen_kind[g] == 0:
                            x[ch, q] ^= 1
                        else:
                            z[ch, q] ^= 1
                    ex ^= dex
                    ez ^= dez
                    w += dw
                    stats[3] += 1
            else:
                q = np.random.randint(0, n)
                old = x[ch, q] | (z[ch, q] << 1)
                new = (old + np.random.randint(1, 4)) % 4
                dw = np.int64(new != 0) - np.int64(old != 0)
                stats[0] += 1
                a = dw * logr
                if a < 0 and np.random.random() >= math.exp(a):
                    pass
                else:
                    flip = old ^ new
                    dx = flip & 1
                    dz = flip >> 1
                    sv = (m0, p0, m1, p1, n0, n1, key0, key1, ex, ez)
                    if dx:
                        x[ch, q] ^= 1
                        ex ^= clsx[q]
                        for t in range(2):
                            c = qz[q, t]
                            if c >= 0:
                                sz[c] ^= 1
                                key0 ^= 1 << c
                                n0 += 1 if sz[c] else -1
                        m0, p0 = _species_outcome(sz, n0, key0, mode, d, tab_m0, tab_p0, D0, A0, B0, L0, defs, best0, best1)
                    if dz:
                        z[ch, q] ^= 1
                        ez ^= clsz[q]
                        for t in range(2):
                            c = qx[q, t]
                            if c >= 0:
                                sx[c] ^= 1
                                key1 ^= 1 << c
                                n1 += 1 if sx[c] else -1
                        m1, p1 = _species_outcome(sx, n1, key1, mode, d, tab_m1, tab_p1, D1, A1, B1, L1, defs, best0, best1)
                    if _holds(m0, p0, m1, p1, (n0 + n1) > 0, ex, ez, d, cnum, cden, kind, sector):
                        w += dw
                        stats[1] += 1
                    else:
                        if dx:
                            x[ch, q] ^= 1
                            for t in range(2):
                                c = qz[q, t]
                                if c >= 0:
                                    sz[c] ^= 1
                        if dz:
                            z[ch, q] ^= 1
                            for t in range(2):
                                c = qx[q, t]
                                if c >= 0:
                                    sx[c] ^= 1
                        m0, p0, m1, p1, n0, n1, key0, key1, ex, ez = sv
            if step >= burn_steps and (step - burn_steps + 1) % sweep == 0:
                weights[ch, rec] = w
                rec += 1
    return weights, stats, -1


# --------------------------------------------------------------------------
# Chain targets and sampling
# --------------------------------------------------------------------------


def _qubit_checks(h: np.ndarray) -> np.ndarray:
    n = h.shape[1]
    out = np.full((n, 2), -1, np.int64)
    for q in range(n):
        cs = np.flatnonzero(h[:, q])
        out[q, : len(cs)] = cs
    return out


@dataclass(frozen=True, eq=False)
class ChainTarget:
    """Everything the Metropolis kernel needs about a code, decoder and event.

    ``mode`` selects how the decoder is evaluated inside the chain: 0 when
    only the syndrome matters (zero tolerance), 2 for syndrome lookup tables,
    1 for on-the-fly matching.
    """

    code: Code
    decoder: str
    c: float
    predicate: Predicate
    arrays: tuple = field(repr=False, default=())
    mode: int = 0

    @classmethod
    def build(cls, code: Code, decoder: str, c, predicate: Predicate) -> "ChainTarget":
        dec = ExclusiveDecoder(code, decoder, c)
        frac = dec.fraction
        graphs = species_graphs(code)
        empty_i = np.zeros(1, np.int64)
        if frac == 0:
            mode = 0
            tabs = (empty_i, empty_i, empty_i, empty_i)
        elif dec.tabulated():
            mode = 2
            (m0, p0), (m1, p1) = dec.tables()
            tabs = (m0, p0, m1, p1)
        elif decoder == "mwpm":
            mode = 1
            tabs = (empty_i, empty_i, empty_i, empty_i)
        else:
            raise InvalidParameter("union-find chains need syndrome tables (at most 12 checks per type)")
        gens = list(code.stabilizer_generators())
        gens.append(PauliError(code.logical_x.astype(np.uint8), np.zeros(code.n, np.uint8)))
        gens.append(PauliError(np.zeros(code.n, np.uint8), code.logical_z.astype(np.uint8)))
        width = max(int(g.x.sum() + g.z.sum()) for g in gens)
        gen_sup = np.full((len(gens), width), -1, np.int64)
        gen_kind = np.zeros(len(gens), np.int64)
        for i, g in enumerate(gens):
            sup = np.flatnonzero(g.x | g.z)
            gen_sup[i, : len(sup)] = sup
            gen_kind[i] = 0 if g.x.any() else 1
        g0, g1 = graphs
        arrays = (
            _qubit_checks(code.hx),
            _qubit_checks(code.hz),
            gen_sup,
            gen_kind,
            code.x_species.class_support.astype(np.int64),
            code.z_species.class_support.astype(np.int64),
        ) + tabs + (g0.dist, g0.dist_a, g0.dist_b, g0.logical, g1.dist, g1.dist_a, g1.dist_b, g1.logical)
        return cls(code=code, decoder=decoder, c=c, predicate=predicate, arrays=arrays, mode=mode)

    @property
    def fraction(self):
        return ExclusiveDecoder(self.code, self.decoder, self.c).fraction

    def holds(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Vectorised predicate check for a batch of errors."""
        aborted, residual, _ = ExclusiveDecoder(self.code, self.decoder, self.c).decode_batch(
            np.atleast_2d(x), np.atleast_2d(z)
        )
        return self.predicate.evaluate(aborted, residual)


@dataclass
class ChainSamples:
    """Weights recorded once per sweep, plus final chain states."""

    p: float
    weights: np.ndarray
    x: np.ndarray
    z: np.ndarray
    site_acceptance: float
    stab_acceptance: float

    @property
    def n_chains(self) -> int:
        return self.weights.shape[0]


def log_weight_ratio(p_from: float, p_to: float, n: int, w) -> np.ndarray:
    """``log P_to(E) - log P_from(E)`` for errors of weight ``w`` on ``n`` qubits."""
    w = np.asarray(w, np.float64)

    def lpq(p):
        return math.log(p / 3.0) - math.log1p(-p)

    return n * (math.log1p(-p_to) - math.log1p(-p_from)) + w * (lpq(p_to) - lpq(p_from))


def mcmc_conditional(
    target: ChainTarget,
    p: float,
    x0: np.ndarray,
    z0: np.ndarray,
    n_samples: int,
    burn_in_sweeps: int | None = None,
    sweep: int | None = None,
    stab_move_prob: float | None = None,
    seed: int = 0,
) -> ChainSamples:
    """Run Metropolis chains targeting ``P_p(E | predicate)``.

    ``x0``/``z0`` are ``(chains, n)`` initial states, all of which must satisfy
    the predicate.  One sample (the error weight) is recorded per sweep of
    ``sweep`` steps (default ``n``); burn-in defaults to ``10 n`` sweeps.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    code = target.code
    n = code.n
    x = np.array(np.atleast_2d(x0), dtype=np.uint8, copy=True)
    z = np.array(np.atleast_2d(z0), dtype=np.uint8, copy=True)
    sweep = n if sweep is None else int(sweep)
    burn = (10 * n if burn_in_sweeps is None else int(burn_in_sweeps)) * sweep
    if stab_move_prob is None:
        stab_move_prob = 1.0 if target.fraction == 0 else 0.2
    frac = target.fraction
    logr = math.log(p / 3.0) - math.log1p(-p)
    weights, stats, bad = _mcmc_kernel(
        x, z, burn, int(n_samples), sweep, logr, float(stab_move_prob), int(seed) % (2**32),
        *target.arrays[:6],
        target.mode, code.d, frac.numerator, frac.denominator,
        target.predicate.code, target.predicate.sector,
        *target.arrays[6:],
    )
    if bad >= 0:
        raise InvalidParameter(f"initial state of chain {bad} violates the predicate")
    site_acc = stats[1] / stats[0] if stats[0] else float("nan")
    stab_acc = stats[3] / stats[2] if stats[2] else float("nan")
    if stats[0] and site_acc < 1e-3 and stab_move_prob < 1.0:
        log.info("single-site acceptance collapsed to %.2e at p=%g", site_acc, p)
    return ChainSamples(p=p, weights=weights, x=x, z=z, site_acceptance=site_acc, stab_acceptance=stab_acc)


# --------------------------------------------------------------------------
# Ratio estimation
# --------------------------------------------------------------------------


@dataclass
class RatioEstimate:
    """``R = P_{j+1}(S) / P_j(S)`` with a jackknife standard error."""

    log_r: float
    log_r_se: float
    ess: float

    @property
    def R(self) -> float:
        return math.exp(self.log_r)

    @property
    def R_se(self) -> float:
        return self.R * self.log_r_se


def _bar_log_ratio(d0: np.ndarray, d1: np.ndarray) -> float:
    """Solve the acceptance-ratio equation for ``r = log(Z1/Z0)``.

    ``d0`` are log-likelihood ratios ``log q1 - log q0`` on samples of level 0,
    ``d1`` the same quantity on samples of level 1.
    """
    n0, n1 = len(d0), len(d1)
    if n0 == 0 or n1 == 0:
        raise OverlapError("empty sample set")
    m = math.log(n0 / n1)

    def eq(r):
        lhs = np.sum(1.0 / (1.0 + np.exp(np.clip(m - d0 + r, -700, 700))))
        rhs = np.sum(1.0 / (1.0 + np.exp(np.clip(-m + d1 - r, -700, 700))))
        return lhs - rhs

    lo = float(min(d0.min(), d1.min())) - 50.0
    hi = float(max(d0.max(), d1.max())) + 50.0
    if not eq(lo) > 0 > eq(hi):
        raise OverlapError("acceptance-ratio equation has no bracketed root")
    return brentq(eq, lo, hi, xtol=1e-12, rtol=1e-12)


def _ess_fraction(logw: np.ndarray) -> float:
    if len(logw) == 0:
        return 0.0
    w = np.exp(logw - logw.max())
    return float(w.sum() ** 2 / (w**2).sum() / len(w))


def ratio_estimate(
    samples_j, samples_j1, p_j: float, p_j1: float, n: int, groups: int = 10
) -> RatioEstimate:
    """Two-sided acceptance-ratio estimate of ``P_{j+1}(S) / P_j(S)``.

    ``samples_j`` and ``samples_j1`` are weight arrays of shape
    ``(chains, samples)`` (or 1-d).  The standard error is a jackknife over
    ``groups`` blocks of chains, so correlations within a chain are respected.
    ``ess`` is the smaller of the two importance-sampling effective sample
    fractions between the levels.
    """
    w0 = np.atleast_2d(np.asarray(samples_j))
    w1 = np.atleast_2d(np.asarray(samples_j1))
    if w0.size == 0 or w1.size == 0:
        raise OverlapError("empty sample set")
    d0 = log_weight_ratio(p_j, p_j1, n, w0)
    d1 = log_weight_ratio(p_j, p_j1, n, w1)
    if p_j == p_j1:
        return RatioEstimate(0.0, 0.0, 1.0)
    ess = min(_ess_fraction(d0.ravel()), _ess_fraction(-d1.ravel()))
    if max(_ess_fraction(d0.ravel()) * d0.size, _ess_fraction(-d1.ravel()) * d1.size) < 1.5:
        raise OverlapError("likelihood ratios are degenerate; levels do not overlap")
    r = _bar_log_ratio(d0.ravel(), d1.ravel())
    # Jackknife over groups of chains (rows), or over contiguous blocks when
    # a single chain is supplied.
    def blocks(a):
        if a.shape[0] >= groups:
            return np.array_split(np.arange(a.shape[0]), groups), 0
        return np.array_split(np.arange(a.shape[1]), groups), 1

    b0, ax0 = blocks(d0)
    b1, ax1 = blocks(d1)
    g = min(len(b0), len(b1))
    reps = []
    for k in range(g):
        keep0 = np.delete(d0, b0[k], axis=ax0).ravel()
        keep1 = np.delete(d1, b1[k], axis=ax1).ravel()
        try:
            reps.append(_bar_log_ratio(keep0, keep1))
        except OverlapError:
            continue
    reps = np.array(reps)
    se = math.sqrt((len(reps) - 1) / len(reps) * np.sum((reps - reps.mean()) ** 2)) if len(reps) > 1 else float("inf")
    return RatioEstimate(log_r=float(r), log_r_se=float(se), ess=ess)


# --------------------------------------------------------------------------
# Splitting drivers
# --------------------------------------------------------------------------


@dataclass
class SplitSchedule:
    """Decreasing error rates plus sampling budgets.

    ``ps`` must be strictly decreasing.  ``chains`` run in parallel at every
    level; each records ``samples`` weights, one per sweep, after
    ``burn_in_sweeps`` sweeps (default ``10 n``).
    """

    ps: list
    chains: int = 64
    samples: int = 200
    burn_in_sweeps: int | None = None
    stab_move_prob: float | None = None
    min_ess: float = 0.1
    max_refinements: int = 6

    def __post_init__(self):
        ps = [float(p) for p in self.ps]
        if any(not 0 < p < 1 for p in ps):
            raise InvalidParameter("schedule probabilities must lie in (0, 1)")
        if any(b >= a for a, b in zip(ps, ps[1:])):
            raise InvalidParameter("schedule must be strictly decreasing")
        self.ps = ps

    @classmethod
    def geometric(cls, p0: float, p_end: float, ratio: float = 1.25, **kw) -> "SplitSchedule":
        """Geometric spacing with adjacent ratio at most ``ratio``."""
        if p_end >= p0:
            raise InvalidParameter("p_end must be below p0")
        steps = max(1, math.ceil(math.log(p0 / p_end) / math.log(ratio)))
        ps = list(np.geomspace(p0, p_end, steps + 1))
        return cls(ps=ps, **kw)


@dataclass
class SplitResult:
    """Per-level estimates ``log P_j`` and step records."""

    ps: list
    log_P: np.ndarray
    log_P_se: np.ndarray
    records: list
    inserted: list

    @property
    def P(self) -> np.ndarray:
        return np.exp(self.log_P)

    @property
    def P_se(self) -> np.ndarray:
        return self.P * self.log_P_se

    def at(self, p: float) -> tuple:
        i = int(np.argmin(np.abs(np.array(self.ps) - p)))
        return float(self.P[i]), float(self.P_se[i])


def _initial_states(target: ChainTarget, p: float, chains: int, rng, max_draws: int = 10**6):
    """Rejection-sample ``chains`` starting states from ``P_p`` conditioned on
    the predicate."""
    from .code_model import sample_errors

    got_x, got_z, drawn = [], [], 0
    need = chains
    while need > 0 and drawn < max_draws:
        batch = min(max(4 * need, 1000), max_draws - drawn)
        x, z = sample_errors(target.code.n, p, batch, rng)
        ok = target.holds(x, z)
        drawn += batch
        got_x.append(x[ok][:need])
        got_z.append(z[ok][:need])
        need -= int(min(ok.sum(), need))
    if need > 0:
        raise InvalidParameter(f"could not find {chains} starting states satisfying the predicate at p={p}")
    return np.concatenate(got_x), np.concatenate(got_z)


def run_splitting(
    target: ChainTarget,
    schedule: SplitSchedule,
    anchor: float,
    anchor_se: float = 0.0,
    seed: int = 0,
    init=None,
) -> SplitResult:
    """Chain ratios along ``schedule``: ``P_j = anchor * prod R``.

    Adjacent levels whose importance-sampling overlap falls below
    ``schedule.min_ess`` get a geometric midpoint inserted, up to
    ``schedule.max_refinements`` times.  Errors combine in log space in
    quadrature.
    """
    if anchor <= 0:
        raise InvalidParameter("anchor probability must be positive")
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss.spawn(1)[0])
    n = target.code.n
    ps = list(schedule.ps)
    if init is None:
        x0, z0 = _initial_states(target, ps[0], schedule.chains, rng)
    else:
        x0, z0 = (np.asarray(a, np.uint8) for a in init)
        if x0.shape[0] != schedule.chains:
            x0 = np.repeat(x0[:1], schedule.chains, axis=0)
            z0 = np.repeat(z0[:1], schedule.chains, axis=0)

    def sample(p, x, z, level_seed):
        return mcmc_conditional(
            target, p, x, z, schedule.samples,
            burn_in_sweeps=schedule.burn_in_sweeps,
            stab_move_prob=schedule.stab_move_prob,
            seed=level_seed,
        )

    seeds = iter(ss.generate_state(4096, dtype=np.uint32))
    cur = sample(ps[0], x0, z0, int(next(seeds)))
    log_p = [math.log(anchor)]
    var = [(anchor_se / anchor) ** 2]
    records, inserted = [], []
    j = 0
    refinements = 0
    while j + 1 < len(ps):
        nxt = sample(ps[j + 1], cur.x, cur.z, int(next(seeds)))
        try:
            est = ratio_estimate(cur.weights, nxt.weights, ps[j], ps[j + 1], n)
        except OverlapError as ex:
            raise OverlapError(f"step {j} (p={ps[j]:.4g} -> {ps[j + 1]:.4g}): {ex}") from ex
        if est.ess < schedule.min_ess and refinements < schedule.max_refinements:
            mid = math.sqrt(ps[j] * ps[j + 1])
            log.info("low overlap %.3f at step %d; inserting p=%.5g", est.ess, j, mid)
            ps.insert(j + 1, mid)
            inserted.append(mid)
            refinements += 1
            continue
        if est.ess < schedule.min_ess:
            log.warning("overlap %.3f below %.2f at step %d after refinement budget", est.ess, schedule.min_ess, j)
        log_p.append(log_p[-1] + est.log_r)
        var.append(var[-1] + est.log_r_se**2)
        records.append(
            {"j": j, "p_j": ps[j], "p_j1": ps[j + 1], "R_j": est.R, "R_j_se": est.R_se, "ess": est.ess}
        )
        cur = nxt
        j += 1
    return SplitResult(ps=ps, log_P=np.array(log_p), log_P_se=np.sqrt(var), records=records, inserted=inserted)


@dataclass
class SectorEstimate:
    """Unnormalised class probabilities along a sector-splitting schedule.

    ``log_Pt[L, j]`` is ``log P~_j(L)`` with ``P~_0(L) = 1``.  ``f`` is the
    post-selected failure rate; ``h`` (acceptance) is available once a
    normalisation constant ``c_norm`` has been set, with
    ``h_j = sum_L P~_j(L) / c_norm``.
    """

    ps: list
    log_Pt: np.ndarray
    log_Pt_se: np.ndarray
    records: list
    c_norm: float | None = None
    c_norm_rel_se: float = 0.0

    def _shifted(self):
        top = self.log_Pt.max(axis=0)
        return np.exp(self.log_Pt - top), top

    @property
    def f(self) -> np.ndarray:
        P, _ = self._shifted()
        return P[1:].sum(axis=0) / P.sum(axis=0)

    @property
    def f_se(self) -> np.ndarray:
        P, _ = self._shifted()
        S = P.sum(axis=0)
        grad = np.empty_like(P)
        grad[0] = -P[1:].sum(axis=0) / S**2
        grad[1:] = P[0] / S**2
        return np.sqrt(((grad * P * self.log_Pt_se) ** 2).sum(axis=0))

    @property
    def log_sum(self) -> np.ndarray:
        P, top = self._shifted()
        return np.log(P.sum(axis=0)) + top

    @property
    def log_sum_se(self) -> np.ndarray:
        P, _ = self._shifted()
        return np.sqrt(((P * self.log_Pt_se) ** 2).sum(axis=0)) / P.sum(axis=0)

    @property
    def h(self) -> np.ndarray:
        if self.c_norm is None:
            raise InvalidParameter("acceptance needs a normalisation; call normalize_acceptance")
        return np.exp(self.log_sum) / self.c_norm

    @property
    def h_se(self) -> np.ndarray:
        return self.h * np.sqrt(self.log_sum_se**2 + self.c_norm_rel_se**2)


def run_sector_splitting(
    code: Code,
    decoder: str,
    c,
    schedule: SplitSchedule,
    seed: int = 0,
) -> SectorEstimate:
    """Sector splitting anchored at the symmetric point ``p = 3/4``.

    Every class chain starts from a logical representative of that class
    (trivial syndrome, always accepted) and follows the same schedule.
    Adaptive refinement is disabled here so that all classes share a grid;
    the overlap of every step is still recorded.
    """
    if not math.isclose(schedule.ps[0], 0.75):
        raise InvalidParameter("sector splitting must start at p = 0.75")
    reps = []
    for s in range(4):
        xb = code.logical_x if s & 1 else np.zeros(code.n, np.uint8)
        zb = code.logical_z if s & 2 else np.zeros(code.n, np.uint8)
        reps.append((xb.astype(np.uint8), zb.astype(np.uint8)))
    fixed = SplitSchedule(
        ps=schedule.ps, chains=schedule.chains, samples=schedule.samples,
        burn_in_sweeps=schedule.burn_in_sweeps, stab_move_prob=schedule.stab_move_prob,
        min_ess=schedule.min_ess, max_refinements=0,
    )
    seeds = np.random.SeedSequence(seed).generate_state(4, dtype=np.uint32)
    log_pt, log_se, records = [], [], []
    for s, (xb, zb) in enumerate(reps):
        target = ChainTarget.build(code, decoder, c, Predicate("sector", s))
        res = run_splitting(target, fixed, anchor=1.0, seed=int(seeds[s]), init=(xb[None, :], zb[None, :]))
        log_pt.append(res.log_P)
        log_se.append(res.log_P_se)
        for r in res.records:
            records.append(dict(r, sector=SECTOR_NAMES[s]))
    return SectorEstimate(ps=list(fixed.ps), log_Pt=np.array(log_pt), log_Pt_se=np.array(log_se), records=records)


def normalize_acceptance(est: SectorEstimate, p_ref: float, h_ref: float, h_ref_se: float = 0.0) -> SectorEstimate:
    """Fix ``c_norm`` so that ``h`` at ``p_ref`` equals a direct estimate."""
    i = int(np.argmin(np.abs(np.array(est.ps) - p_ref)))
    if not math.isclose(est.ps[i], p_ref, rel_tol=1e-9):
        raise InvalidParameter(f"p_ref={p_ref} is not on the schedule")
    if h_ref <= 0:
        raise InvalidParameter("reference acceptance must be positive")
    est.c_norm = float(np.exp(est.log_sum[i]) / h_ref)
    est.c_norm_rel_se = math.sqrt((h_ref_se / h_ref) ** 2 + est.log_sum_se[i] ** 2)
    return est
